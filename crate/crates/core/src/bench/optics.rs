//! Half-wave-plate parameterization of the two Sagnac interferometers.
//!
//! A HWP at angle θ inserted in one arm transmits a signed amplitude
//! `cos 2θ` for the polarization routed through that arm. The measuring
//! interferometer sets `(a, b)` for the first branch and `(π/4−a, 3π/4−b)`
//! for the second; the reversing interferometer uses the same angles with the
//! arms exchanged.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{Outcome, WeakMeasurement};
use crate::qubit::{Operator2, PureState, CONSTRUCTION_TOL};

/// HWP angles `(a, b)` of the measuring interferometer for the first branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HwpSettings {
    a: f64,
    b: f64,
}

impl HwpSettings {
    /// `a ∈ [0, π/4]`, `b ∈ [π/4, π/2]`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let slack = CONSTRUCTION_TOL;
        if !a.is_finite() || a < -slack || a > FRAC_PI_4 + slack {
            return Err(Error::domain("a", "[0, π/4]", a));
        }
        if !b.is_finite() || b < FRAC_PI_4 - slack || b > FRAC_PI_2 + slack {
            return Err(Error::domain("b", "[π/4, π/2]", b));
        }
        Ok(Self {
            a: a.clamp(0.0, FRAC_PI_4),
            b: b.clamp(FRAC_PI_4, FRAC_PI_2),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Raw HWP angles for the H-routed and V-routed arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmAngles {
    pub h_arm: f64,
    pub v_arm: f64,
}

impl ArmAngles {
    /// Signed transmitted amplitudes `(cos 2θ_H, cos 2θ_V)`.
    pub fn signed_amplitudes(&self) -> (f64, f64) {
        ((2.0 * self.h_arm).cos(), (2.0 * self.v_arm).cos())
    }

    /// Intensity transmissions of the two arms.
    pub fn transmissions(&self) -> (f64, f64) {
        let (h, v) = self.signed_amplitudes();
        (h * h, v * v)
    }

    pub fn operator(&self) -> Operator2 {
        let (h, v) = self.signed_amplitudes();
        Operator2::diag(h, v)
    }
}

pub fn wm_from_angles(s: &HwpSettings) -> WeakMeasurement {
    let eps = (2.0 * s.a).sin().powi(2).clamp(0.0, 1.0);
    let eta = (2.0 * s.b).sin().powi(2).clamp(0.0, 1.0);
    WeakMeasurement::new(eps, eta).expect("sin² lies in [0, 1]")
}

/// Inverse of [`wm_from_angles`] on the branch `a ∈ [0, π/4]`,
/// `b ∈ [π/4, π/2]`.
pub fn angles_from_wm(wm: &WeakMeasurement) -> HwpSettings {
    let a = 0.5 * wm.epsilon().sqrt().asin();
    let b = 0.5 * (PI - wm.eta().sqrt().asin());
    HwpSettings::new(a, b).expect("inverse branch stays in range")
}

pub fn primary_settings(s: &HwpSettings) -> ArmAngles {
    ArmAngles {
        h_arm: s.a,
        v_arm: s.b,
    }
}

/// `(π/4 − a, 3π/4 − b)`, realising the second Kraus branch.
pub fn complementary_settings(s: &HwpSettings) -> ArmAngles {
    ArmAngles {
        h_arm: FRAC_PI_4 - s.a,
        v_arm: 3.0 * FRAC_PI_4 - s.b,
    }
}

pub fn measurement_settings(s: &HwpSettings, r: Outcome) -> ArmAngles {
    match r {
        Outcome::First => primary_settings(s),
        Outcome::Second => complementary_settings(s),
    }
}

/// Reversing interferometer: the measuring angles with the arms exchanged.
pub fn reversal_settings(s: &HwpSettings, r: Outcome) -> ArmAngles {
    let m = measurement_settings(s, r);
    ArmAngles {
        h_arm: m.v_arm,
        v_arm: m.h_arm,
    }
}

/// Measurement followed by reversal for one outcome branch, with
/// probability-level PBS leakage.
///
/// At each pass a photon is routed to the arm of the other polarization with
/// probability `leakage`; leaked photons pick up that arm's transmission and
/// lose coherence with the correctly routed component.
#[derive(Debug, Clone, Copy)]
pub struct BranchChain {
    pub measure: ArmAngles,
    pub reverse: ArmAngles,
}

impl BranchChain {
    pub fn new(s: &HwpSettings, r: Outcome) -> Self {
        Self {
            measure: measurement_settings(s, r),
            reverse: reversal_settings(s, r),
        }
    }

    pub fn for_measurement(wm: &WeakMeasurement, r: Outcome) -> Self {
        Self::new(&angles_from_wm(wm), r)
    }

    /// Composite signed operator `R·A` with ideal routing.
    pub fn composite_operator(&self) -> Operator2 {
        self.reverse.operator() * self.measure.operator()
    }

    /// Probability that a photon in `state` leaves the measuring
    /// interferometer through this branch.
    pub fn measured_probability(&self, state: &PureState, leakage: f64) -> f64 {
        let w = [state.alpha_weight(), 1.0 - state.alpha_weight()];
        let t = pass_transmissions(&self.measure, leakage);
        (w[0] * t[0] + w[1] * t[1]).clamp(0.0, 1.0)
    }

    /// Probability of surviving both interferometers.
    pub fn reversed_probability(&self, state: &PureState, leakage: f64) -> f64 {
        let w = [state.alpha_weight(), 1.0 - state.alpha_weight()];
        let t1 = pass_transmissions(&self.measure, leakage);
        let t2 = pass_transmissions(&self.reverse, leakage);
        (w[0] * t1[0] * t2[0] + w[1] * t1[1] * t2[1]).clamp(0.0, 1.0)
    }

    /// Unnormalized output polarization matrix after both passes. Its trace
    /// equals [`Self::reversed_probability`].
    pub fn reversed_output(&self, state: &PureState, leakage: f64) -> [[Complex64; 2]; 2] {
        let keep = (1.0 - leakage) * (1.0 - leakage);
        let coherent = self.composite_operator().apply_to(&state.amplitudes());
        let (m, r) = (self.measure.transmissions(), self.reverse.transmissions());
        let m = [m.0, m.1];
        let r = [r.0, r.1];
        let w = [state.alpha_weight(), 1.0 - state.alpha_weight()];
        let leaked = |j: usize| {
            let k = 1 - j;
            (1.0 - leakage) * leakage * (m[j] * r[k] + m[k] * r[j]) + leakage * leakage * m[k] * r[k]
        };
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = keep * coherent[i] * coherent[j].conj();
            }
        }
        out[0][0] += w[0] * leaked(0);
        out[1][1] += w[1] * leaked(1);
        out
    }
}

/// Effective intensity transmission `[H, V]` of one pass with leakage.
fn pass_transmissions(arms: &ArmAngles, leakage: f64) -> [f64; 2] {
    let (th, tv) = arms.transmissions();
    [
        (1.0 - leakage) * th + leakage * tv,
        (1.0 - leakage) * tv + leakage * th,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{kraus_operator, outcome_record, reversal_operator};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn settings_range() {
        assert!(HwpSettings::new(-0.01, 1.0).is_err());
        assert!(HwpSettings::new(0.1, 0.5).is_err());
        assert!(HwpSettings::new(0.1, 1.6).is_err());
        assert!(HwpSettings::new(0.0, FRAC_PI_2).is_ok());
    }

    #[test]
    fn wm_from_angles_examples() {
        let w = wm_from_angles(&HwpSettings::new(0.0, FRAC_PI_2).unwrap());
        assert!(close(w.epsilon(), 0.0, 1e-15) && close(w.eta(), 0.0, 1e-15));

        let w = wm_from_angles(&HwpSettings::new(PI / 8.0, FRAC_PI_4).unwrap());
        assert!(close(w.epsilon(), 0.5, 1e-15) && close(w.eta(), 1.0, 1e-15));

        // b = 5π/12 gives η = sin²(5π/6) = 1/4, not 3/4
        let w = wm_from_angles(&HwpSettings::new(PI / 12.0, 5.0 * PI / 12.0).unwrap());
        assert!(close(w.epsilon(), 0.25, 1e-15) && close(w.eta(), 0.25, 1e-15));
    }

    #[test]
    fn angles_from_wm_examples() {
        let s = angles_from_wm(&WeakMeasurement::new(0.0, 0.0).unwrap());
        assert!(close(s.a(), 0.0, 1e-15) && close(s.b(), FRAC_PI_2, 1e-15));
        let s = angles_from_wm(&WeakMeasurement::new(1.0, 1.0).unwrap());
        assert!(close(s.a(), FRAC_PI_4, 1e-15) && close(s.b(), FRAC_PI_4, 1e-15));
        let w = WeakMeasurement::new(0.25, 0.75).unwrap();
        let s = angles_from_wm(&w);
        assert!(close(s.a(), PI / 12.0, 1e-15));
        assert!(close(s.b(), PI / 3.0, 1e-15));
        let back = wm_from_angles(&s);
        assert!(close(back.epsilon(), 0.25, 1e-12) && close(back.eta(), 0.75, 1e-12));
    }

    #[test]
    fn angle_round_trip_on_grid() {
        for i in 0..=20 {
            for j in 0..=20 {
                let w = WeakMeasurement::new(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                let back = wm_from_angles(&angles_from_wm(&w));
                assert!(close(back.epsilon(), w.epsilon(), 1e-12));
                assert!(close(back.eta(), w.eta(), 1e-12));
            }
        }
    }

    #[test]
    fn complementary_examples() {
        let c = complementary_settings(&HwpSettings::new(0.0, FRAC_PI_2).unwrap());
        assert!(close(c.h_arm, FRAC_PI_4, 1e-15) && close(c.v_arm, FRAC_PI_4, 1e-15));
        let c = complementary_settings(&HwpSettings::new(PI / 8.0, 3.0 * PI / 8.0).unwrap());
        assert!(close(c.h_arm, PI / 8.0, 1e-15) && close(c.v_arm, 3.0 * PI / 8.0, 1e-15));
    }

    #[test]
    fn signed_amplitudes_per_arm() {
        let s = HwpSettings::new(0.3, 1.2).unwrap();
        let (ph, pv) = primary_settings(&s).signed_amplitudes();
        let (ch, cv) = complementary_settings(&s).signed_amplitudes();
        assert!(close(ph, (0.6f64).cos(), 1e-15) && close(pv, (2.4f64).cos(), 1e-15));
        assert!(close(ch, (0.6f64).sin(), 1e-15) && close(cv, -(2.4f64).sin(), 1e-15));
        assert!(close(ph * ph + ch * ch, 1.0, 1e-15));
        assert!(close(pv * pv + cv * cv, 1.0, 1e-15));
    }

    #[test]
    fn optics_reproduce_kraus_magnitudes() {
        for i in 0..=10 {
            for j in 0..=10 {
                let w = WeakMeasurement::new(i as f64 / 10.0, j as f64 / 10.0).unwrap();
                let s = angles_from_wm(&w);
                for r in Outcome::BOTH {
                    let (h, v) = measurement_settings(&s, r).signed_amplitudes();
                    let k = kraus_operator(&w, r);
                    assert!(close(h.abs(), k.entry(0, 0).re, 1e-12));
                    assert!(close(v.abs(), k.entry(1, 1).re, 1e-12));
                    let (rh, rv) = reversal_settings(&s, r).signed_amplitudes();
                    let rev = reversal_operator(&w, r);
                    assert!(close(rh.abs(), rev.entry(0, 0).re, 1e-12));
                    assert!(close(rv.abs(), rev.entry(1, 1).re, 1e-12));
                }
            }
        }
    }

    #[test]
    fn reversal_settings_examples() {
        let s = HwpSettings::new(0.0, FRAC_PI_2).unwrap();
        let r2 = reversal_settings(&s, Outcome::Second);
        assert!(close(r2.h_arm, FRAC_PI_4, 1e-15) && close(r2.v_arm, FRAC_PI_4, 1e-15));

        let s = angles_from_wm(&WeakMeasurement::new(0.25, 0.75).unwrap());
        let r1 = reversal_settings(&s, Outcome::First);
        assert_eq!((r1.h_arm, r1.v_arm), (s.b(), s.a()));
        let prod = BranchChain::new(&s, Outcome::First).composite_operator();
        let c = prod.identity_multiple(1e-12).unwrap();
        assert!(close(c.norm(), 0.1875f64.sqrt(), 1e-12));
    }

    #[test]
    fn composite_is_identity_multiple_everywhere() {
        for i in 0..=20 {
            for j in 0..=20 {
                let w = WeakMeasurement::new(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                for r in Outcome::BOTH {
                    let c = BranchChain::for_measurement(&w, r).composite_operator();
                    assert!(c.identity_multiple(1e-12).is_some());
                }
            }
        }
    }

    #[test]
    fn noiseless_probabilities_match_engine() {
        let w = WeakMeasurement::new(0.25, 0.75).unwrap();
        for i in 0..=50 {
            let st = PureState::new(i as f64 / 50.0, 0.4).unwrap();
            for r in Outcome::BOTH {
                let chain = BranchChain::for_measurement(&w, r);
                let rec = outcome_record(&w, &st, r);
                assert!(close(chain.measured_probability(&st, 0.0), rec.probability, 1e-12));
                let direct = (reversal_operator(&w, r) * kraus_operator(&w, r))
                    .apply_to(&st.amplitudes());
                let direct = direct[0].norm_sqr() + direct[1].norm_sqr();
                assert!(close(chain.reversed_probability(&st, 0.0), direct, 1e-12));
            }
        }
    }

    #[test]
    fn reversed_output_trace_matches_probability() {
        let w = WeakMeasurement::new(0.3, 0.8).unwrap();
        let st = PureState::new(0.37, 1.1).unwrap();
        for r in Outcome::BOTH {
            let chain = BranchChain::for_measurement(&w, r);
            for leak in [0.0, 1e-3, 1e-2] {
                let m = chain.reversed_output(&st, leak);
                let tr = m[0][0].re + m[1][1].re;
                assert!(close(tr, chain.reversed_probability(&st, leak), 1e-14));
            }
        }
    }
}
