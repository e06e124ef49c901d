//! The invariant battery behind the `verify` command.

use std::f64::consts::{PI, TAU};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::Serialize;

use super::{
    axis_values, cross_section, estimate_cell, grid_sweep, haar_average_oracle,
    reversal_fidelity_sweep, Estimation, OperatorGrid, StateGrid, SweepConfig, TradeoffPoint,
    DEFAULT_LOW_STATS_FLOOR,
};
use crate::bench::{angles_from_wm, simulate_tomography, wm_from_angles, NoiseModel, TomographySampling};
use crate::error::Result;
use crate::measurement::{
    analytic_gmax, analytic_prev, completeness_sum, kraus_operator, per_state_gain,
    per_state_reversal_prob, per_state_reversal_prob_with, reversal_operator, reversed_state,
    tradeoff_sum, Outcome, ReversalRule, WeakMeasurement,
};
use crate::qubit::{Operator2, PureState};
use crate::rng::RngStream;

const EXACT: f64 = 1e-12;
const SYMMETRY: f64 = 1e-15;
/// Largest gap between the 51-point grid mean and the continuous average.
pub const DISCRETE_GAP_BOUND: f64 = 0.0067;

const VERIFY_STREAM: u64 = 0x7665_7269;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub verdict: Verdict,
    pub deviation: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn within(name: &'static str, deviation: f64, tolerance: f64) -> Self {
        let verdict = if deviation <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name,
            verdict,
            deviation,
            tolerance,
        }
    }

    fn flag(name: &'static str, ok: bool) -> Self {
        Self::within(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub seed: u64,
    pub photons_per_setting: u64,
    pub grid_size: usize,
    pub noise: NoiseModel,
    pub estimation: Estimation,
    pub estimator_seeds: u64,
    pub oracle_samples: u64,
    #[serde(skip)]
    pub started_unix_ms: u128,
    #[serde(skip)]
    pub elapsed_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub metadata: ReportMetadata,
    pub verdict: Verdict,
    pub checks: Vec<CheckResult>,
    pub rows: Vec<TradeoffPoint>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub sweep: SweepConfig,
    /// Instrument used for the estimator and reversal-fidelity checks.
    pub focus: WeakMeasurement,
    pub estimator_seeds: u64,
    pub oracle_samples: u64,
    pub oracle_cells: usize,
    pub counts_per_basis: u64,
    /// Multiplier on standard errors for statistical checks.
    pub k_sigma: f64,
    /// Negative control: replace the reversal operators with a corrupted
    /// rule. Every reversal check must then fail.
    pub mutate_reversal: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            sweep: SweepConfig::default(),
            focus: WeakMeasurement::new(0.25, 0.75).expect("valid"),
            estimator_seeds: 5,
            oracle_samples: 1_000_000,
            oracle_cells: 10,
            counts_per_basis: 10_000,
            k_sigma: 3.0,
            mutate_reversal: false,
        }
    }
}

/// Reversal rule that forgets to flip the coefficients.
pub fn corrupted_reversal(wm: &WeakMeasurement, r: Outcome) -> Operator2 {
    kraus_operator(wm, r)
}

fn step_grid(step_count: usize) -> impl Iterator<Item = WeakMeasurement> {
    let axis = axis_values(step_count + 1);
    let inner = axis.clone();
    axis.into_iter().flat_map(move |e| {
        inner
            .clone()
            .into_iter()
            .map(move |n| WeakMeasurement::new(e, n).expect("axis in [0, 1]"))
    })
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Runs every check and assembles the report.
pub fn verify(config: &VerifyConfig) -> Result<SweepReport> {
    let started = Instant::now();
    let started_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let rule: ReversalRule = if config.mutate_reversal {
        corrupted_reversal
    } else {
        reversal_operator
    };
    let lattice = OperatorGrid::new(config.sweep.grid_size)?;
    let states = StateGrid::new();

    let mut checks = vec![
        check_completeness(),
        check_boundary_law(&lattice),
        check_center_minimum(&lattice),
        check_pvnm_corners(),
        check_range_bounds(),
        check_symmetries(),
        check_phase_invariance(&lattice),
        check_reversal_exactness(config.sweep.seed, rule),
        check_reversal_constancy(&lattice, &states, rule),
        check_discrete_gap(&lattice, &states),
        check_angle_round_trip(),
        check_cross_section(config)?,
        check_oracle(config)?,
        check_exact_tomography(config.sweep.seed)?,
        check_exact_reversal_fidelity(config)?,
        check_determinism(config)?,
    ];
    if config.sweep.estimation != Estimation::Off {
        checks.extend(check_estimators(config)?);
    }

    let rows = grid_sweep(&config.sweep)?;
    let verdict = if checks.iter().all(CheckResult::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(SweepReport {
        metadata: ReportMetadata {
            seed: config.sweep.seed,
            photons_per_setting: config.sweep.photons_per_setting,
            grid_size: config.sweep.grid_size,
            noise: config.sweep.noise,
            estimation: config.sweep.estimation,
            estimator_seeds: config.estimator_seeds,
            oracle_samples: config.oracle_samples,
            started_unix_ms,
            elapsed_ms: started.elapsed().as_millis(),
        },
        verdict,
        checks,
        rows,
    })
}

fn check_completeness() -> CheckResult {
    let dev = max_of(step_grid(20).map(|w| completeness_sum(&w).max_abs_diff(&Operator2::identity())));
    CheckResult::within("kraus_completeness", dev, EXACT)
}

fn check_boundary_law(lattice: &OperatorGrid) -> CheckResult {
    let dev = max_of(
        lattice
            .cells()
            .iter()
            .filter(|w| w.is_on_boundary())
            .map(|w| (tradeoff_sum(w) - 4.0).abs()),
    );
    CheckResult::within("boundary_law", dev, EXACT)
}

fn check_center_minimum(lattice: &OperatorGrid) -> CheckResult {
    let center = WeakMeasurement::new(0.5, 0.5).expect("valid");
    let min = lattice
        .cells()
        .iter()
        .map(tradeoff_sum)
        .fold(f64::INFINITY, f64::min);
    let dev = (tradeoff_sum(&center) - 3.5).abs().max(3.5 - min);
    CheckResult::within("center_minimum", dev, EXACT)
}

fn check_pvnm_corners() -> CheckResult {
    let dev = max_of([(0.0, 1.0), (1.0, 0.0)].into_iter().map(|(e, n)| {
        let w = WeakMeasurement::new(e, n).expect("valid");
        (analytic_gmax(&w) - 2.0 / 3.0).abs().max(analytic_prev(&w).abs())
    }));
    CheckResult::within("pvnm_corners", dev, EXACT)
}

fn check_range_bounds() -> CheckResult {
    let dev = max_of(step_grid(100).map(|w| {
        let g = analytic_gmax(&w);
        let p = analytic_prev(&w);
        [0.5 - g, g - 2.0 / 3.0, -p, p - 1.0]
            .into_iter()
            .fold(0.0, f64::max)
    }));
    CheckResult::within("range_bounds", dev, EXACT)
}

fn check_symmetries() -> CheckResult {
    let dev = max_of(step_grid(20).map(|w| {
        let swapped = WeakMeasurement::new(w.eta(), w.epsilon()).expect("valid");
        let mirrored = WeakMeasurement::new(1.0 - w.epsilon(), 1.0 - w.eta()).expect("valid");
        let g = analytic_gmax(&w);
        let p = analytic_prev(&w);
        [
            (g - analytic_gmax(&swapped)).abs(),
            (g - analytic_gmax(&mirrored)).abs(),
            (p - analytic_prev(&swapped)).abs(),
            (p - analytic_prev(&mirrored)).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }));
    CheckResult::within("parameter_symmetries", dev, SYMMETRY)
}

fn check_phase_invariance(lattice: &OperatorGrid) -> CheckResult {
    let phases = [0.0, PI / 3.0, PI / 2.0, PI, 1.7];
    let dev = max_of(lattice.cells().iter().flat_map(|w| {
        (0..=10).map(move |i| {
            let a = i as f64 / 10.0;
            let base = PureState::new(a, 0.0).expect("valid");
            let g0 = per_state_gain(w, &base);
            let p0 = per_state_reversal_prob(w, &base);
            max_of(phases.iter().map(|&ph| {
                let s = PureState::new(a, ph).expect("valid");
                (per_state_gain(w, &s) - g0)
                    .abs()
                    .max((per_state_reversal_prob(w, &s) - p0).abs())
            }))
        })
    }));
    CheckResult::within("phase_invariance", dev, EXACT)
}

fn check_reversal_exactness(seed: u64, rule: ReversalRule) -> CheckResult {
    let mut rng = RngStream::from_seed(seed).child(VERIFY_STREAM).child(1).rng();
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let w = WeakMeasurement::new(rng.random(), rng.random()).expect("unit interval");
        let s = PureState::new(rng.random(), rng.random_range(0.0..TAU)).expect("valid");
        let r = if rng.random::<bool>() {
            Outcome::First
        } else {
            Outcome::Second
        };
        if (rule(&w, r) * kraus_operator(&w, r)).largest_singular_value() < 1e-7 {
            continue;
        }
        let fid = reversed_state(&w, &s, r, rule).map_or(0.0, |b| b.overlap(&s));
        dev = dev.max((1.0 - fid).abs());
    }
    CheckResult::within("reversal_exactness", dev, EXACT)
}

fn check_reversal_constancy(lattice: &OperatorGrid, states: &StateGrid, rule: ReversalRule) -> CheckResult {
    let dev = max_of(lattice.cells().iter().map(|w| {
        let target = analytic_prev(w);
        let pointwise = max_of(
            states
                .states()
                .iter()
                .map(|s| (per_state_reversal_prob_with(w, s, rule) - target).abs()),
        );
        let mean = states.mean(|s| per_state_reversal_prob_with(w, s, rule));
        pointwise.max((mean - target).abs())
    }));
    CheckResult::within("reversibility_state_constancy", dev, EXACT)
}

fn check_discrete_gap(lattice: &OperatorGrid, states: &StateGrid) -> CheckResult {
    let dev = max_of(lattice.cells().iter().map(|w| {
        let mean = states.mean(|s| per_state_gain(w, s));
        (mean - analytic_gmax(w)).abs()
    }));
    CheckResult::within("discrete_continuous_gap", dev, DISCRETE_GAP_BOUND)
}

fn check_angle_round_trip() -> CheckResult {
    let dev = max_of(step_grid(20).map(|w| {
        let back = wm_from_angles(&angles_from_wm(&w));
        (back.epsilon() - w.epsilon())
            .abs()
            .max((back.eta() - w.eta()).abs())
    }));
    CheckResult::within("angle_round_trip", dev, EXACT)
}

fn check_cross_section(config: &VerifyConfig) -> Result<CheckResult> {
    let etas = axis_values(config.sweep.grid_size);
    let rows = cross_section(&etas, 1, &NoiseModel::ideal(), 0, Estimation::Off)?;
    let mut dev = max_of(rows.iter().map(|r| {
        (r.six_gmax - (3.0 + r.eta))
            .abs()
            .max((r.prev - (1.0 - r.eta)).abs())
            .max((r.sum - 4.0).abs())
    }));
    let monotone = rows
        .windows(2)
        .all(|p| p[1].six_gmax > p[0].six_gmax && p[1].prev < p[0].prev);
    if !monotone {
        dev = f64::INFINITY;
    }
    Ok(CheckResult::within("cross_section_linearity", dev, EXACT))
}

/// Deviation reported in units of the allowed band, so the tolerance is 1.
fn check_oracle(config: &VerifyConfig) -> Result<CheckResult> {
    let mut rng = RngStream::from_seed(config.sweep.seed).child(VERIFY_STREAM).child(2).rng();
    let mut cells = vec![WeakMeasurement::new(0.25, 0.75).expect("valid")];
    while cells.len() < config.oracle_cells.max(1) {
        cells.push(WeakMeasurement::new(rng.random(), rng.random()).expect("unit interval"));
    }
    let mut worst: f64 = 0.0;
    for (k, w) in cells.iter().enumerate() {
        let est = haar_average_oracle(w, config.oracle_samples, config.sweep.seed ^ k as u64)?;
        let g_band = (config.k_sigma * est.gmax_std_error).max(EXACT);
        let p_band = (config.k_sigma * est.prev_std_error).max(EXACT);
        worst = worst
            .max((est.gmax - analytic_gmax(w)).abs() / g_band)
            .max((est.prev - analytic_prev(w)).abs() / p_band);
    }
    Ok(CheckResult::within("oracle_agreement", worst, 1.0))
}

fn check_exact_tomography(seed: u64) -> Result<CheckResult> {
    let mut rng = RngStream::from_seed(seed).child(VERIFY_STREAM).child(3).rng();
    let stream = RngStream::from_seed(seed);
    let mut dev: f64 = 0.0;
    for _ in 0..100 {
        let s = PureState::new(rng.random(), rng.random_range(0.0..TAU))?;
        let t = simulate_tomography(&s, TomographySampling::Exact, &NoiseModel::ideal(), &stream)?;
        dev = dev.max((1.0 - t.fidelity_vs_input).abs());
    }
    Ok(CheckResult::within("tomography_exact_identity", dev, EXACT))
}

fn check_exact_reversal_fidelity(config: &VerifyConfig) -> Result<CheckResult> {
    let rows = reversal_fidelity_sweep(
        &config.focus,
        config.counts_per_basis,
        &NoiseModel::ideal(),
        config.sweep.seed,
        true,
        DEFAULT_LOW_STATS_FLOOR,
    )?;
    let dev = max_of(
        rows.iter()
            .filter(|r| !r.low_stats)
            .map(|r| (1.0 - r.fidelity.unwrap_or(0.0)).abs()),
    );
    Ok(CheckResult::within("reversal_fidelity_exact", dev, EXACT))
}

fn check_determinism(config: &VerifyConfig) -> Result<CheckResult> {
    let base = SweepConfig {
        estimation: Estimation::Sampled,
        photons_per_setting: config.sweep.photons_per_setting.min(10_000),
        ..config.sweep
    };
    let serial = grid_sweep(&SweepConfig {
        parallel: false,
        ..base
    })?;
    let parallel = grid_sweep(&SweepConfig {
        parallel: true,
        ..base
    })?;
    let again = grid_sweep(&SweepConfig {
        parallel: true,
        ..base
    })?;
    let same = |a: &[TradeoffPoint], b: &[TradeoffPoint]| {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bits() == y.bits())
    };
    Ok(CheckResult::flag(
        "rng_determinism",
        same(&serial, &parallel) && same(&parallel, &again),
    ))
}

/// Seed-averaged estimates against their expected-count targets.
fn check_estimators(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let sweep = &config.sweep;
    let target = estimate_cell(
        &config.focus,
        sweep.photons_per_setting,
        &sweep.noise,
        &RngStream::from_seed(0),
        Estimation::Exact,
    )?
    .expect("exact estimation yields values");
    let tolerance = match sweep.estimation {
        Estimation::Sampled => 5.0 / (sweep.photons_per_setting as f64).sqrt(),
        _ => EXACT,
    };
    let seeds = config.estimator_seeds.max(1);
    let root = RngStream::from_seed(sweep.seed).child(VERIFY_STREAM).child(4);
    let (mut g_sum, mut p_sum) = (0.0, 0.0);
    for s in 0..seeds {
        let (g, p) = estimate_cell(
            &config.focus,
            sweep.photons_per_setting,
            &sweep.noise,
            &root.child(s),
            sweep.estimation,
        )?
        .expect("estimation enabled");
        g_sum += g;
        p_sum += p;
    }
    let n = seeds as f64;
    Ok(vec![
        CheckResult::within("estimator_gmax", (g_sum / n - target.0).abs(), tolerance),
        CheckResult::within("estimator_prev", (p_sum / n - target.1).abs(), tolerance),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> VerifyConfig {
        VerifyConfig {
            oracle_samples: 20_000,
            oracle_cells: 3,
            sweep: SweepConfig {
                photons_per_setting: 10_000,
                ..SweepConfig::default()
            },
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn default_battery_passes() {
        let report = verify(&quick()).unwrap();
        for c in &report.checks {
            assert!(c.passed(), "{c:?}");
        }
        assert!(report.passed());
        assert_eq!(report.rows.len(), 256);
    }

    #[test]
    fn corrupted_reversal_is_caught() {
        let report = verify(&VerifyConfig {
            mutate_reversal: true,
            ..quick()
        })
        .unwrap();
        assert!(!report.passed());
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        assert!(failed.contains(&"reversal_exactness"));
        assert!(failed.contains(&"reversibility_state_constancy"));
    }

    #[test]
    fn analytic_only_battery_passes() {
        let report = verify(&VerifyConfig {
            sweep: SweepConfig {
                estimation: Estimation::Off,
                ..quick().sweep
            },
            ..quick()
        })
        .unwrap();
        assert!(report.passed());
        assert!(report.checks.iter().all(|c| !c.name.starts_with("estimator")));
    }
}
