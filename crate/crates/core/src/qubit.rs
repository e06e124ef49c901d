//! Single-qubit polarization algebra over the {H, V} basis.
//!
//! States are kept modulo global phase as a weight on |H⟩ plus a relative
//! phase. Operators are dense 2×2 complex matrices; density matrices carry
//! their physicality invariants and expose a Stokes parameterization used by
//! the tomography code.

use std::f64::consts::TAU;
use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for invariants checked at construction time.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for checks on values produced by accumulated arithmetic.
pub const ACCUMULATED_TOL: f64 = 1e-10;
/// Images with squared norm below this are treated as annihilated.
pub const ANNIHILATION_THRESHOLD: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A pure polarization state `√α|H⟩ + e^{iφ}√(1−α)|V⟩`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PureState {
    alpha_weight: f64,
    phase: f64,
}

impl PureState {
    /// Builds a state from its |H⟩ weight and relative phase.
    ///
    /// The phase is reduced into `[0, 2π)`. Weights outside `[0, 1]` (or
    /// non-finite inputs) are rejected.
    pub fn new(alpha_weight: f64, phase: f64) -> Result<Self> {
        if !alpha_weight.is_finite() || !(0.0..=1.0).contains(&alpha_weight) {
            return Err(Error::domain("alpha_weight", "[0, 1]", alpha_weight));
        }
        if !phase.is_finite() {
            return Err(Error::domain("phase", "a finite angle", phase));
        }
        let mut phase = phase.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        if phase >= TAU {
            phase = 0.0;
        }
        Ok(Self {
            alpha_weight,
            phase,
        })
    }

    pub fn horizontal() -> Self {
        Self {
            alpha_weight: 1.0,
            phase: 0.0,
        }
    }

    pub fn vertical() -> Self {
        Self {
            alpha_weight: 0.0,
            phase: 0.0,
        }
    }

    /// Normalizes an arbitrary nonzero amplitude vector, dropping its global
    /// phase. Returns `None` when the squared norm is below
    /// [`ANNIHILATION_THRESHOLD`].
    pub fn from_amplitudes(amps: [Complex64; 2]) -> Option<Self> {
        let norm_sqr = amps[0].norm_sqr() + amps[1].norm_sqr();
        if norm_sqr.is_nan() || norm_sqr < ANNIHILATION_THRESHOLD {
            return None;
        }
        let alpha_weight = (amps[0].norm_sqr() / norm_sqr).clamp(0.0, 1.0);
        let phase = if amps[0].norm_sqr() > 0.0 && amps[1].norm_sqr() > 0.0 {
            amps[1].arg() - amps[0].arg()
        } else {
            0.0
        };
        Self::new(alpha_weight, phase).ok()
    }

    /// Probability weight on |H⟩.
    pub fn alpha_weight(&self) -> f64 {
        self.alpha_weight
    }

    /// Relative phase of the |V⟩ amplitude, in `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Unit-norm amplitude vector `(√α, e^{iφ}√(1−α))`.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        [
            Complex64::new(self.alpha_weight.sqrt(), 0.0),
            Complex64::from_polar((1.0 - self.alpha_weight).sqrt(), self.phase),
        ]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        inner(&self.amplitudes(), &other.amplitudes())
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Equality modulo global phase. Basis states ignore the stored phase.
    pub fn approx_eq(&self, other: &PureState, tol: f64) -> bool {
        if (self.alpha_weight - other.alpha_weight).abs() > tol {
            return false;
        }
        let endpoint = |a: f64| a <= tol || a >= 1.0 - tol;
        if endpoint(self.alpha_weight) {
            return true;
        }
        let diff = (self.phase - other.phase).rem_euclid(TAU);
        diff.min(TAU - diff) <= tol
    }

    pub fn density(&self) -> DensityMatrix {
        let [c0, c1] = self.amplitudes();
        DensityMatrix {
            m: [
                [c0 * c0.conj(), c0 * c1.conj()],
                [c1 * c0.conj(), c1 * c1.conj()],
            ],
        }
    }
}

/// `⟨u|v⟩` for raw amplitude vectors.
pub fn inner(u: &[Complex64; 2], v: &[Complex64; 2]) -> Complex64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

pub fn norm_sqr(v: &[Complex64; 2]) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// A 2×2 complex matrix in row-major order over {H, V}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    m: [[Complex64; 2]; 2],
}

impl Operator2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("operator entry"));
        }
        Ok(Self { m })
    }

    /// Real diagonal operator `diag(h, v)`.
    pub fn diag(h: f64, v: f64) -> Self {
        Self {
            m: [
                [Complex64::new(h, 0.0), ZERO],
                [ZERO, Complex64::new(v, 0.0)],
            ],
        }
    }

    pub fn identity() -> Self {
        Self {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    pub fn zero() -> Self {
        Self {
            m: [[ZERO, ZERO], [ZERO, ZERO]],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|z| *z *= s);
        Self { m }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Matrix-vector product.
    pub fn apply_to(&self, v: &[Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Largest singular value, from the closed-form eigenvalues of `A†A`.
    pub fn largest_singular_value(&self) -> f64 {
        let gram = self.adjoint() * *self;
        let tr = gram.trace().re;
        let det = self.determinant().norm_sqr();
        let disc = (tr * tr - 4.0 * det).max(0.0);
        (0.5 * (tr + disc.sqrt())).max(0.0).sqrt()
    }

    /// Whether this operator can appear as one Kraus branch of a physical
    /// instrument, i.e. it never increases norm.
    pub fn is_physical_kraus(&self) -> bool {
        self.largest_singular_value() <= 1.0 + CONSTRUCTION_TOL
    }

    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Operator2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Returns `c` when this operator equals `c·I` to within `tol`.
    pub fn identity_multiple(&self, tol: f64) -> Option<Complex64> {
        let c = 0.5 * self.trace();
        let candidate = Self {
            m: [[c, ZERO], [ZERO, c]],
        };
        self.approx_eq(&candidate, tol).then_some(c)
    }

    /// Acts on a pure state, returning the branch probability and the
    /// renormalized image.
    ///
    /// Fails if the operator is not a physical Kraus branch.
    pub fn apply(&self, state: &PureState) -> Result<Image> {
        if !self.is_physical_kraus() {
            return Err(Error::NotPhysical(self.largest_singular_value()));
        }
        Ok(self.apply_unchecked(state))
    }

    pub(crate) fn apply_unchecked(&self, state: &PureState) -> Image {
        let raw = self.apply_to(&state.amplitudes());
        let probability = norm_sqr(&raw);
        let post = PureState::from_amplitudes(raw);
        Image { probability, post }
    }
}

impl Mul for Operator2 {
    type Output = Operator2;

    fn mul(self, rhs: Operator2) -> Operator2 {
        let (a, b) = (&self.m, &rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, z) in row.iter_mut().enumerate() {
                *z = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Operator2 { m }
    }
}

impl Add for Operator2 {
    type Output = Operator2;

    fn add(self, rhs: Operator2) -> Operator2 {
        let mut m = self.m;
        for (z, w) in m.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *z += *w;
        }
        Operator2 { m }
    }
}

/// Result of applying an operator to a pure state.
#[derive(Debug, Clone, Copy)]
pub struct Image {
    /// Squared norm of the unnormalized image.
    pub probability: f64,
    /// Normalized image; `None` when the state was annihilated.
    pub post: Option<PureState>,
}

impl Image {
    pub fn is_annihilated(&self) -> bool {
        self.post.is_none()
    }
}

/// Stokes parameters: `s1 = p(H)−p(V)`, `s2 = p(D)−p(A)`, `s3 = p(R)−p(L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s1: f64, s2: f64, s3: f64) -> Result<Self> {
        for (name, s) in [("s1", s1), ("s2", s2), ("s3", s3)] {
            if !s.is_finite() || s.abs() > 1.0 + ACCUMULATED_TOL {
                return Err(Error::domain(name, "[-1, 1]", s));
            }
        }
        let v = Self { s1, s2, s3 };
        if v.norm() > 1.0 + ACCUMULATED_TOL {
            return Err(Error::domain("|s|", "[0, 1]", v.norm()));
        }
        Ok(v)
    }

    pub fn of_state(state: &PureState) -> Self {
        let a = state.alpha_weight;
        let coherence = 2.0 * (a * (1.0 - a)).sqrt();
        Self {
            s1: 2.0 * a - 1.0,
            s2: coherence * state.phase.cos(),
            s3: coherence * state.phase.sin(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn components(&self) -> [f64; 3] {
        [self.s1, self.s2, self.s3]
    }
}

/// A physical single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and the spectrum.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix entry"));
        }
        let herm_err = (m[0][1] - m[1][0].conj())
            .norm()
            .max(m[0][0].im.abs())
            .max(m[1][1].im.abs());
        if herm_err > CONSTRUCTION_TOL {
            return Err(Error::Unphysical(format!(
                "density matrix not Hermitian (deviation {herm_err:e})"
            )));
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > ACCUMULATED_TOL {
            return Err(Error::Unphysical(format!("density matrix trace {tr}")));
        }
        let rho = Self { m };
        let (lo, hi) = rho.eigenvalues();
        if lo < -ACCUMULATED_TOL || hi > 1.0 + ACCUMULATED_TOL {
            return Err(Error::Unphysical(format!(
                "density matrix eigenvalues ({lo}, {hi}) outside [0, 1]"
            )));
        }
        Ok(rho)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: [
                [Complex64::new(0.5, 0.0), ZERO],
                [ZERO, Complex64::new(0.5, 0.0)],
            ],
        }
    }

    /// `½(I + s1·σz + s2·σx + s3·σy)` in the {H, V} basis.
    pub fn from_stokes(s: &StokesVector) -> Self {
        Self {
            m: [
                [Complex64::new(0.5 * (1.0 + s.s1), 0.0), Complex64::new(0.5 * s.s2, -0.5 * s.s3)],
                [Complex64::new(0.5 * s.s2, 0.5 * s.s3), Complex64::new(0.5 * (1.0 - s.s1), 0.0)],
            ],
        }
    }

    /// Projects an arbitrary matrix onto the physical set: Hermitian part,
    /// eigenvalues clipped to `[0, 1]`, trace renormalized to 1.
    ///
    /// Returns the maximally mixed state when every eigenvalue clips to 0.
    pub fn project_physical(m: [[Complex64; 2]; 2]) -> Self {
        // Hermitian part written as a0·I + a·σ
        let d00 = m[0][0].re;
        let d11 = m[1][1].re;
        let off = 0.5 * (m[0][1] + m[1][0].conj());
        let a0 = 0.5 * (d00 + d11);
        let a = [0.5 * (d00 - d11), off.re, -off.im];
        let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
        let hi = (a0 + r).clamp(0.0, 1.0);
        let lo = (a0 - r).clamp(0.0, 1.0);
        let total = hi + lo;
        if total <= 0.0 {
            return Self::maximally_mixed();
        }
        let (hi, lo) = (hi / total, lo / total);
        // Bloch length of hi·P+ + lo·P− is hi − lo along the unit axis.
        let len = hi - lo;
        let s = if r > 0.0 {
            [a[0] / r * len, a[1] / r * len, a[2] / r * len]
        } else {
            [0.0; 3]
        };
        Self::from_stokes(&StokesVector {
            s1: s[0],
            s2: s[1],
            s3: s[2],
        })
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0].re + self.m[1][1].re
    }

    /// Eigenvalues `(low, high)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let s = self.stokes_raw();
        let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        let half_tr = 0.5 * self.trace();
        (half_tr - 0.5 * r, half_tr + 0.5 * r)
    }

    fn stokes_raw(&self) -> [f64; 3] {
        [
            self.m[0][0].re - self.m[1][1].re,
            2.0 * self.m[0][1].re,
            -2.0 * self.m[0][1].im,
        ]
    }

    pub fn stokes(&self) -> StokesVector {
        let [s1, s2, s3] = self.stokes_raw();
        StokesVector { s1, s2, s3 }
    }

    pub fn purity(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `⟨φ|ρ|φ⟩`, clamped into `[0, 1]`.
pub fn state_fidelity(pure: &PureState, rho: &DensityMatrix) -> f64 {
    let v = pure.amplitudes();
    let m = &rho.m;
    let rho_v = [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ];
    inner(&v, &rho_v).re.clamp(0.0, 1.0)
}
