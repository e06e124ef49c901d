//! Polarization-analyzer tomography by linear inversion.
//!
//! Counts are drawn in the H/V, D/A and R/L bases; each basis yields one
//! empirical Stokes component and the state is reconstructed as
//! `½(I + Σ s_k σ_k)`, then projected back onto the physical set.

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qubit::{state_fidelity, DensityMatrix, PureState, StokesVector};
use crate::rng::RngStream;

use super::counts::NoiseModel;

/// Fewest detected photons per basis accepted for sampled tomography.
pub const MIN_COUNTS_PER_BASIS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TomographySampling {
    /// Infinite-count limit: Stokes components are the exact expectations.
    Exact,
    /// Detected photons per analyzer basis.
    Counts(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct TomographyResult {
    pub reconstructed: DensityMatrix,
    pub fidelity_vs_input: f64,
    /// `None` in exact mode.
    pub counts_per_basis: Option<u64>,
}

/// Tomography of a pure input through a (possibly leaky) analyzer.
pub fn simulate_tomography(
    reversed_state: &PureState,
    sampling: TomographySampling,
    noise: &NoiseModel,
    stream: &RngStream,
) -> Result<TomographyResult> {
    tomograph(&reversed_state.density(), reversed_state, sampling, noise, stream)
}

/// Tomography of an arbitrary `source` state, scored against `reference`.
///
/// The analyzer PBS leaks with probability `noise.pbs_leakage`, which sends
/// a photon to the opposite output port of the basis being measured.
pub fn tomograph(
    source: &DensityMatrix,
    reference: &PureState,
    sampling: TomographySampling,
    noise: &NoiseModel,
    stream: &RngStream,
) -> Result<TomographyResult> {
    let leak = noise.pbs_leakage();
    let visibility = 1.0 - 2.0 * leak;
    let truth = source.stokes().components();
    let estimated: [f64; 3] = match sampling {
        TomographySampling::Exact => truth.map(|s| visibility * s),
        TomographySampling::Counts(n) => {
            if n < MIN_COUNTS_PER_BASIS {
                return Err(Error::domain("counts_per_basis", "[100, ∞)", n as f64));
            }
            let mut out = [0.0; 3];
            for (k, s) in truth.iter().enumerate() {
                let p_plus = (0.5 * (1.0 + visibility * s)).clamp(0.0, 1.0);
                let mut rng = stream.child(k as u64).rng();
                let plus = Binomial::new(n, p_plus)
                    .expect("probability in [0, 1]")
                    .sample(&mut rng);
                out[k] = (2.0 * plus as f64 - n as f64) / n as f64;
            }
            out
        }
    };
    let raw = DensityMatrix::from_stokes(&StokesVector {
        s1: estimated[0],
        s2: estimated[1],
        s3: estimated[2],
    });
    let reconstructed = DensityMatrix::project_physical(raw.entries());
    Ok(TomographyResult {
        reconstructed,
        fidelity_vs_input: state_fidelity(reference, &reconstructed),
        counts_per_basis: match sampling {
            TomographySampling::Exact => None,
            TomographySampling::Counts(n) => Some(n),
        },
    })
}

/// Normalizes a positive semidefinite matrix to unit trace. `None` for a
/// zero-trace input.
pub fn normalized_density(m: [[Complex64; 2]; 2]) -> Option<DensityMatrix> {
    let tr = m[0][0].re + m[1][1].re;
    if tr.is_nan() || tr <= 0.0 {
        return None;
    }
    let scaled = m.map(|row| row.map(|z| z / tr));
    Some(DensityMatrix::project_physical(scaled))
}
