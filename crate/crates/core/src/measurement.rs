//! Two-outcome weak measurement on a polarization qubit.
//!
//! The instrument is the diagonal Kraus pair
//! `A₁ = diag(√(1−ε), √(1−η))`, `A₂ = diag(√ε, √η)`. Each outcome is paired
//! with a basis-state guess (the optimal strategy for this instrument) and a
//! reversal operator obtained by swapping the two diagonal coefficients, so
//! that `R⁽ʳ⁾A_r = √(det) · I`.
//!
//! Closed forms: `G_max = (3 + |η−ε|)/6`, `P_rev = 1 − ε − η + 2εη`, and
//! therefore `6G_max + P_rev = 4` on the boundary of the parameter square.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::{inner, Operator2, PureState, CONSTRUCTION_TOL};

/// Parameters `(ε, η)` of the Kraus pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakMeasurement {
    epsilon: f64,
    eta: f64,
}

impl WeakMeasurement {
    pub fn new(epsilon: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("eta", eta)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(name, "[0, 1]", v));
            }
        }
        Ok(Self { epsilon, eta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `ε = η` strictly inside the square: both Kraus operators are
    /// multiples of identity, so the apparatus is a plain beam splitter.
    pub fn is_diagonal_degenerate(&self) -> bool {
        (self.epsilon - self.eta).abs() < CONSTRUCTION_TOL
            && self.epsilon != 0.0
            && self.epsilon != 1.0
    }

    /// `|ε − η|` below the tie tolerance.
    pub fn is_tied(&self) -> bool {
        (self.epsilon - self.eta).abs() < CONSTRUCTION_TOL
    }

    /// Both parameters at a boundary of the square.
    pub fn is_on_boundary(&self) -> bool {
        [self.epsilon, self.eta]
            .iter()
            .any(|&v| v == 0.0 || v == 1.0)
    }
}

/// Measurement outcome index `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    First,
    Second,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::First, Outcome::Second];

    /// The 1-based index used in the physics notation.
    pub fn index(self) -> usize {
        match self {
            Outcome::First => 1,
            Outcome::Second => 2,
        }
    }
}

/// Statistics for one outcome branch applied to one input state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OutcomeRecord {
    pub outcome: Outcome,
    pub probability: f64,
    /// `None` when the branch annihilates the input.
    pub post_state: Option<PureState>,
    pub guess: PureState,
    /// `|⟨guess|φ⟩|²` against the input state.
    pub guess_fidelity: f64,
}

/// Maps `(wm, r)` to the reversal operator for that branch.
pub type ReversalRule = fn(&WeakMeasurement, Outcome) -> Operator2;

pub fn kraus_operator(wm: &WeakMeasurement, r: Outcome) -> Operator2 {
    match r {
        Outcome::First => Operator2::diag((1.0 - wm.epsilon).sqrt(), (1.0 - wm.eta).sqrt()),
        Outcome::Second => Operator2::diag(wm.epsilon.sqrt(), wm.eta.sqrt()),
    }
}

pub fn kraus_pair(wm: &WeakMeasurement) -> (Operator2, Operator2) {
    (
        kraus_operator(wm, Outcome::First),
        kraus_operator(wm, Outcome::Second),
    )
}

/// `A₁†A₁ + A₂†A₂`.
pub fn completeness_sum(wm: &WeakMeasurement) -> Operator2 {
    let (a1, a2) = kraus_pair(wm);
    a1.adjoint() * a1 + a2.adjoint() * a2
}

/// Basis-state guess for outcome `r`: the basis state the branch weights
/// more heavily. Ties pick |H⟩ for the first outcome.
pub fn optimal_guess(wm: &WeakMeasurement, r: Outcome) -> PureState {
    let first_favours_h = wm.is_tied() || wm.epsilon < wm.eta;
    match (r, first_favours_h) {
        (Outcome::First, true) | (Outcome::Second, false) => PureState::horizontal(),
        _ => PureState::vertical(),
    }
}

pub fn outcome_record(wm: &WeakMeasurement, state: &PureState, r: Outcome) -> OutcomeRecord {
    let image = kraus_operator(wm, r).apply_unchecked(state);
    let guess = optimal_guess(wm, r);
    OutcomeRecord {
        outcome: r,
        probability: image.probability.clamp(0.0, 1.0),
        post_state: image.post,
        guess,
        guess_fidelity: guess.overlap(state),
    }
}

pub fn outcome_distribution(
    wm: &WeakMeasurement,
    state: &PureState,
) -> (OutcomeRecord, OutcomeRecord) {
    (
        outcome_record(wm, state, Outcome::First),
        outcome_record(wm, state, Outcome::Second),
    )
}

/// `Σ_r p(r)·|⟨guess_r|φ⟩|²` for a single input state.
pub fn per_state_gain(wm: &WeakMeasurement, state: &PureState) -> f64 {
    let (o1, o2) = outcome_distribution(wm, state);
    o1.probability * o1.guess_fidelity + o2.probability * o2.guess_fidelity
}

/// Closed-form state-averaged estimation fidelity.
pub fn analytic_gmax(wm: &WeakMeasurement) -> f64 {
    (3.0 + (wm.eta - wm.epsilon).abs()) / 6.0
}

/// Coefficient-flipped partner of `A_r`. No rescaling is applied.
pub fn reversal_operator(wm: &WeakMeasurement, r: Outcome) -> Operator2 {
    match r {
        Outcome::First => Operator2::diag((1.0 - wm.eta).sqrt(), (1.0 - wm.epsilon).sqrt()),
        Outcome::Second => Operator2::diag(wm.eta.sqrt(), wm.epsilon.sqrt()),
    }
}

/// Per-branch contribution `p(r)·|⟨φ|R⁽ʳ⁾|φ_r⟩|²`, zero for annihilated
/// branches.
pub fn reversal_term(
    wm: &WeakMeasurement,
    state: &PureState,
    r: Outcome,
    rule: ReversalRule,
) -> f64 {
    let record = outcome_record(wm, state, r);
    let Some(post) = record.post_state else {
        return 0.0;
    };
    let reversed = rule(wm, r).apply_to(&post.amplitudes());
    record.probability * inner(&state.amplitudes(), &reversed).norm_sqr()
}

/// Reversal success probability summed over both branches.
pub fn per_state_reversal_prob(wm: &WeakMeasurement, state: &PureState) -> f64 {
    per_state_reversal_prob_with(wm, state, reversal_operator)
}

pub fn per_state_reversal_prob_with(
    wm: &WeakMeasurement,
    state: &PureState,
    rule: ReversalRule,
) -> f64 {
    Outcome::BOTH
        .iter()
        .map(|&r| reversal_term(wm, state, r, rule))
        .sum()
}

/// State after measuring outcome `r` and applying the reversal for `r`.
///
/// `None` when either step annihilates the state.
pub fn reversed_state(
    wm: &WeakMeasurement,
    state: &PureState,
    r: Outcome,
    rule: ReversalRule,
) -> Option<PureState> {
    let post = outcome_record(wm, state, r).post_state?;
    PureState::from_amplitudes(rule(wm, r).apply_to(&post.amplitudes()))
}

/// Closed-form reversibility `1 − ε − η + 2εη`.
pub fn analytic_prev(wm: &WeakMeasurement) -> f64 {
    1.0 - wm.epsilon - wm.eta + 2.0 * wm.epsilon * wm.eta
}

/// `6·G_max + P_rev`.
pub fn tradeoff_sum(wm: &WeakMeasurement) -> f64 {
    6.0 * analytic_gmax(wm) + analytic_prev(wm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::norm_sqr;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn wm(e: f64, n: f64) -> WeakMeasurement {
        WeakMeasurement::new(e, n).unwrap()
    }

    fn state(a: f64) -> PureState {
        PureState::new(a, 0.0).unwrap()
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(WeakMeasurement::new(-0.1, 0.5).is_err());
        assert!(WeakMeasurement::new(0.5, 1.5).is_err());
        assert!(WeakMeasurement::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn degenerate_flag() {
        assert!(wm(0.3, 0.3).is_diagonal_degenerate());
        assert!(!wm(0.0, 0.0).is_diagonal_degenerate());
        assert!(!wm(1.0, 1.0).is_diagonal_degenerate());
        assert!(!wm(0.3, 0.4).is_diagonal_degenerate());
    }

    #[test]
    fn kraus_pair_examples() {
        let (a1, a2) = kraus_pair(&wm(0.0, 0.0));
        assert_eq!(a1, Operator2::identity());
        assert_eq!(a2, Operator2::zero());

        let (a1, a2) = kraus_pair(&wm(0.0, 1.0));
        assert_eq!(a1, Operator2::diag(1.0, 0.0));
        assert_eq!(a2, Operator2::diag(0.0, 1.0));

        let (a1, _) = kraus_pair(&wm(0.25, 0.75));
        assert!(a1.approx_eq(&Operator2::diag(0.75f64.sqrt(), 0.5), 1e-15));
    }

    #[test]
    fn completeness_on_grid() {
        for i in 0..=20 {
            for j in 0..=20 {
                let w = wm(i as f64 / 20.0, j as f64 / 20.0);
                assert!(completeness_sum(&w).approx_eq(&Operator2::identity(), 1e-12));
            }
        }
    }

    #[test]
    fn distribution_examples() {
        let (o1, o2) = outcome_distribution(&wm(0.25, 0.75), &PureState::horizontal());
        assert!((o1.probability - 0.75).abs() < 1e-15);
        assert!((o2.probability - 0.25).abs() < 1e-15);
        assert!(o1.post_state.unwrap().approx_eq(&PureState::horizontal(), 1e-12));
        assert!(o2.post_state.unwrap().approx_eq(&PureState::horizontal(), 1e-12));

        let (o1, o2) = outcome_distribution(&wm(0.0, 1.0), &state(0.3));
        assert!((o1.probability - 0.3).abs() < 1e-15);
        assert!((o2.probability - 0.7).abs() < 1e-15);
        assert!(o1.post_state.unwrap().approx_eq(&PureState::horizontal(), 1e-12));
        assert!(o2.post_state.unwrap().approx_eq(&PureState::vertical(), 1e-12));
    }

    #[test]
    fn diagonal_state_probability_matches_brute_force() {
        for &(e, n) in &[(0.1f64, 0.9f64), (0.25, 0.75), (0.6, 0.2), (0.5, 0.5), (1.0, 0.0)] {
            // brute force: square the amplitudes of diag(√(1−ε),√(1−η))·(1,1)/√2
            let v = [
                Complex64::new((1.0 - e).sqrt() / 2f64.sqrt(), 0.0),
                Complex64::new((1.0 - n).sqrt() / 2f64.sqrt(), 0.0),
            ];
            let brute = norm_sqr(&v);
            let (o1, o2) = outcome_distribution(&wm(e, n), &state(0.5));
            assert!((o1.probability - (1.0 - (e + n) / 2.0)).abs() < 1e-12);
            assert!((o1.probability - brute).abs() < 1e-12);
            assert!((o1.probability + o2.probability - 1.0).abs() < 1e-12);
        }
    }

    /// Brute-force Haar average of `p(r)·|⟨g|φ⟩|²` for a fixed basis guess.
    fn haar_branch_score(w: &WeakMeasurement, r: Outcome, guess_h: bool, rng: &mut ChaCha8Rng) -> f64 {
        let (dh, dv) = match r {
            Outcome::First => ((1.0 - w.epsilon()).sqrt(), (1.0 - w.eta()).sqrt()),
            Outcome::Second => (w.epsilon().sqrt(), w.eta().sqrt()),
        };
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let alpha: f64 = rng.random();
            let p = dh * dh * alpha + dv * dv * (1.0 - alpha);
            let fid = if guess_h { alpha } else { 1.0 - alpha };
            acc += p * fid;
        }
        acc / n as f64
    }

    #[test]
    fn optimal_guess_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(e, n, r, expect_h) in &[
            (0.25, 0.75, Outcome::First, true),
            (0.75, 0.25, Outcome::First, false),
            (0.25, 0.75, Outcome::Second, false),
            (0.75, 0.25, Outcome::Second, true),
        ] {
            let w = wm(e, n);
            let h = haar_branch_score(&w, r, true, &mut rng);
            let v = haar_branch_score(&w, r, false, &mut rng);
            assert_eq!(h > v, expect_h);
            let g = optimal_guess(&w, r);
            assert_eq!(g.approx_eq(&PureState::horizontal(), 1e-12), expect_h);
        }
        assert!(optimal_guess(&wm(0.0, 1.0), Outcome::Second).approx_eq(&PureState::vertical(), 1e-12));
    }

    #[test]
    fn tie_convention() {
        let w = wm(0.4, 0.4);
        assert!(optimal_guess(&w, Outcome::First).approx_eq(&PureState::horizontal(), 1e-12));
        assert!(optimal_guess(&w, Outcome::Second).approx_eq(&PureState::vertical(), 1e-12));
    }

    #[test]
    fn per_state_gain_examples() {
        let w = wm(0.25, 0.75);
        assert!((per_state_gain(&w, &state(0.0)) - 0.75).abs() < 1e-12);
        assert!((per_state_gain(&w, &state(0.5)) - 0.5).abs() < 1e-12);
        for i in 0..=50 {
            let a = i as f64 / 50.0;
            let poly = 0.75 - a + a * a;
            assert!((per_state_gain(&w, &state(a)) - poly).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_gain_averages_to_half() {
        // pointwise (1−ε)α + ε(1−α); the grid mean of α is exactly 1/2
        for &e in &[0.0, 0.2, 0.5, 0.9] {
            let w = wm(e, e);
            let mean: f64 = (0..=50)
                .map(|i| per_state_gain(&w, &state(i as f64 / 50.0)))
                .sum::<f64>()
                / 51.0;
            assert!((mean - 0.5).abs() < 1e-12);
            assert!((mean - analytic_gmax(&w)).abs() < 1e-12);
        }
        let w = wm(0.0, 0.0);
        assert!((per_state_gain(&w, &state(0.3)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn analytic_gmax_examples() {
        assert!((analytic_gmax(&wm(0.0, 1.0)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((analytic_gmax(&wm(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!((analytic_gmax(&wm(0.25, 0.75)) - 3.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn reversal_operator_examples() {
        let w = wm(0.25, 0.75);
        let r1 = reversal_operator(&w, Outcome::First);
        assert!(r1.approx_eq(&Operator2::diag(0.5, 0.75f64.sqrt()), 1e-15));
        let prod = r1 * kraus_operator(&w, Outcome::First);
        let c = prod.identity_multiple(1e-15).unwrap();
        assert!((c.re - 0.1875f64.sqrt()).abs() < 1e-15);

        let w = wm(0.0, 1.0);
        let r1 = reversal_operator(&w, Outcome::First);
        assert_eq!(r1, Operator2::diag(0.0, 1.0));
        assert_eq!(r1 * kraus_operator(&w, Outcome::First), Operator2::zero());

        let w = wm(0.35, 0.35);
        assert!(reversal_operator(&w, Outcome::First).approx_eq(&kraus_operator(&w, Outcome::First), 0.0));
    }

    #[test]
    fn reversal_probability_examples() {
        for i in 0..=50 {
            let s = state(i as f64 / 50.0);
            assert!((per_state_reversal_prob(&wm(0.25, 0.75), &s) - 0.375).abs() < 1e-12);
            assert!((per_state_reversal_prob(&wm(0.0, 0.0), &s) - 1.0).abs() < 1e-12);
            assert!(per_state_reversal_prob(&wm(0.0, 1.0), &s).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_prev_examples() {
        assert_eq!(analytic_prev(&wm(0.0, 0.0)), 1.0);
        assert_eq!(analytic_prev(&wm(1.0, 0.0)), 0.0);
        assert_eq!(analytic_prev(&wm(0.5, 0.5)), 0.5);
    }

    #[test]
    fn tradeoff_examples() {
        for i in 0..=20 {
            let n = i as f64 / 20.0;
            assert!((tradeoff_sum(&wm(0.0, n)) - 4.0).abs() < 1e-12);
        }
        assert!((tradeoff_sum(&wm(0.5, 0.5)) - 3.5).abs() < 1e-12);
        assert!((tradeoff_sum(&wm(0.25, 0.75)) - 3.875).abs() < 1e-12);
    }

    #[test]
    fn reversal_exactness_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        for _ in 0..100 {
            let w = wm(rng.random(), rng.random());
            let s = PureState::new(rng.random(), rng.random_range(0.0..TAU)).unwrap();
            let r = if rng.random::<bool>() { Outcome::First } else { Outcome::Second };
            let prod = reversal_operator(&w, r) * kraus_operator(&w, r);
            if prod.largest_singular_value() < 1e-7 {
                continue;
            }
            let back = reversed_state(&w, &s, r, reversal_operator).unwrap();
            assert!((back.overlap(&s) - 1.0).abs() < 1e-12);
            checked += 1;
        }
        assert!(checked > 90);
    }

    proptest! {
        #[test]
        fn phase_invariance(e in 0.0f64..=1.0, n in 0.0f64..=1.0, a in 0.0f64..=1.0) {
            let w = wm(e, n);
            let g0 = per_state_gain(&w, &state(a));
            let p0 = per_state_reversal_prob(&w, &state(a));
            for ph in [0.0, PI / 3.0, PI / 2.0, PI, 1.7] {
                let s = PureState::new(a, ph).unwrap();
                prop_assert!((per_state_gain(&w, &s) - g0).abs() <= 1e-12);
                prop_assert!((per_state_reversal_prob(&w, &s) - p0).abs() <= 1e-12);
            }
        }

        #[test]
        fn parameter_symmetries(e in 0.0f64..=1.0, n in 0.0f64..=1.0) {
            let g = analytic_gmax(&wm(e, n));
            let p = analytic_prev(&wm(e, n));
            prop_assert!((g - analytic_gmax(&wm(n, e))).abs() <= 1e-15);
            prop_assert!((g - analytic_gmax(&wm(1.0 - e, 1.0 - n))).abs() <= 1e-15);
            prop_assert!((p - analytic_prev(&wm(n, e))).abs() <= 1e-15);
            prop_assert!((p - analytic_prev(&wm(1.0 - e, 1.0 - n))).abs() <= 1e-15);
        }

        #[test]
        fn reversal_prob_matches_closed_form(e in 0.0f64..=1.0, n in 0.0f64..=1.0,
                                             a in 0.0f64..=1.0, ph in 0.0f64..TAU) {
            let w = wm(e, n);
            let s = PureState::new(a, ph).unwrap();
            prop_assert!((per_state_reversal_prob(&w, &s) - analytic_prev(&w)).abs() <= 1e-12);
        }

        #[test]
        fn probabilities_sum_to_one(e in 0.0f64..=1.0, n in 0.0f64..=1.0,
                                    a in 0.0f64..=1.0, ph in 0.0f64..TAU) {
            let (o1, o2) = outcome_distribution(&wm(e, n), &PureState::new(a, ph).unwrap());
            prop_assert!((o1.probability + o2.probability - 1.0).abs() <= 1e-12);
            prop_assert!((o1.guess_fidelity - o1.guess.overlap(&PureState::new(a, ph).unwrap())).abs() <= 1e-12);
        }

        #[test]
        fn reversal_operators_are_physical(e in 0.0f64..=1.0, n in 0.0f64..=1.0) {
            let w = wm(e, n);
            for r in Outcome::BOTH {
                prop_assert!(reversal_operator(&w, r).is_physical_kraus());
                let prod = reversal_operator(&w, r) * kraus_operator(&w, r);
                prop_assert!(prod.identity_multiple(1e-15).is_some());
            }
        }
    }
}
