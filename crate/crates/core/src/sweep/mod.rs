//! Experimental campaigns: the 51-state traversal, the ε×η operator grid,
//! the ε = 0 cross-section and the reversal-fidelity sweep.
//!
//! Every cell draws randomness from its own [`RngStream`] path, so serial
//! and parallel runs produce identical rows.

mod oracle;
mod verify;

use rayon::prelude::*;
use serde::Serialize;

use crate::bench::counts::{expected_counts, gain_term, reversal_ratio, simulate_counts};
use crate::bench::tomography::normalized_density;
use crate::bench::{
    estimate_gmax_from_counts, estimate_prev_from_counts, tomograph, BranchChain, Counts,
    NoiseModel, TomographySampling,
};
use crate::error::{Error, Result};
use crate::measurement::{
    analytic_gmax, analytic_prev, per_state_gain, per_state_reversal_prob, Outcome,
    WeakMeasurement,
};
use crate::qubit::PureState;
use crate::rng::{tag, RngStream};

pub use oracle::{haar_average_oracle, OracleEstimate, MIN_ORACLE_SAMPLES};
pub use verify::{
    corrupted_reversal, verify, CheckResult, ReportMetadata, SweepReport, Verdict, VerifyConfig,
};

/// Number of points in the input-state traversal.
pub const STATE_GRID_LEN: usize = 51;
/// Default photon floor below which a reversal-fidelity point is LOW_STATS.
pub const DEFAULT_LOW_STATS_FLOOR: f64 = 100.0;

const GRID_STREAM: u64 = 0x6772_6964;
const CROSS_SECTION_STREAM: u64 = 0x6372_6f73;
const FIDELITY_STREAM: u64 = 0x6669_6465;

/// The 51 linear-polarization inputs `α = i/50`, zero phase.
#[derive(Debug, Clone)]
pub struct StateGrid {
    states: Vec<PureState>,
}

impl StateGrid {
    pub fn new() -> Self {
        let states = (0..STATE_GRID_LEN)
            .map(|i| PureState::new(i as f64 / 50.0, 0.0).expect("grid weight in [0, 1]"))
            .collect();
        Self { states }
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &PureState)> {
        self.states.iter().enumerate()
    }

    /// Mean of `f` over the grid.
    pub fn mean(&self, f: impl Fn(&PureState) -> f64) -> f64 {
        self.states.iter().map(f).sum::<f64>() / self.states.len() as f64
    }
}

impl Default for StateGrid {
    fn default() -> Self {
        Self::new()
    }
}

/// `size × size` lattice with ε and η each spanning `[0, 1]` inclusive.
#[derive(Debug, Clone)]
pub struct OperatorGrid {
    size: usize,
    cells: Vec<WeakMeasurement>,
}

impl OperatorGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::domain("grid_size", "[2, ∞)", size as f64));
        }
        let axis = axis_values(size);
        let cells = axis
            .iter()
            .flat_map(|&e| axis.iter().map(move |&n| (e, n)))
            .map(|(e, n)| WeakMeasurement::new(e, n).expect("axis values in [0, 1]"))
            .collect();
        Ok(Self { size, cells })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Cells in row-major order: ε outer, η inner.
    pub fn cells(&self) -> &[WeakMeasurement] {
        &self.cells
    }
}

/// `k/(size−1)` for `k = 0..size`.
pub fn axis_values(size: usize) -> Vec<f64> {
    let last = (size - 1) as f64;
    (0..size).map(|k| k as f64 / last).collect()
}

/// How Monte Carlo columns are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimation {
    /// Analytic columns only.
    Off,
    /// Binomial sampling replaced by expected counts.
    Exact,
    /// Binomial photon-count sampling.
    Sampled,
}

/// One row of the state traversal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateRow {
    pub alpha: f64,
    pub gain_analytic: f64,
    pub rev_analytic: f64,
    pub gain_mc: Option<f64>,
    pub rev_mc: Option<f64>,
}

/// One cell of the ε×η tradeoff map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub epsilon: f64,
    pub eta: f64,
    pub gmax_analytic: f64,
    pub prev_analytic: f64,
    pub sum_analytic: f64,
    pub gmax_estimated: Option<f64>,
    pub prev_estimated: Option<f64>,
    pub sum_estimated: Option<f64>,
    /// Beam-splitter diagonal; such cells are computed but should be masked
    /// when plotting.
    pub diagonal_flag: bool,
}

impl TradeoffPoint {
    pub fn analytic(wm: &WeakMeasurement) -> Self {
        let g = analytic_gmax(wm);
        let p = analytic_prev(wm);
        Self {
            epsilon: wm.epsilon(),
            eta: wm.eta(),
            gmax_analytic: g,
            prev_analytic: p,
            sum_analytic: 6.0 * g + p,
            gmax_estimated: None,
            prev_estimated: None,
            sum_estimated: None,
            diagonal_flag: wm.is_diagonal_degenerate(),
        }
    }

    fn with_estimates(mut self, gmax: f64, prev: f64) -> Self {
        self.gmax_estimated = Some(gmax);
        self.prev_estimated = Some(prev);
        self.sum_estimated = Some(6.0 * gmax + prev);
        self
    }

    /// Bitwise equality, used for determinism checks.
    pub fn bits(&self) -> [u64; 9] {
        let opt = |v: Option<f64>| v.map_or(u64::MAX, f64::to_bits);
        [
            self.epsilon.to_bits(),
            self.eta.to_bits(),
            self.gmax_analytic.to_bits(),
            self.prev_analytic.to_bits(),
            self.sum_analytic.to_bits(),
            opt(self.gmax_estimated),
            opt(self.prev_estimated),
            opt(self.sum_estimated),
            self.diagonal_flag as u64,
        ]
    }
}

/// One row of the ε = 0 cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossSectionRow {
    pub eta: f64,
    pub six_gmax: f64,
    pub prev: f64,
    pub sum: f64,
    pub six_gmax_mc: Option<f64>,
    pub prev_mc: Option<f64>,
    pub sum_mc: Option<f64>,
}

/// Tomographic fidelity of the reversed output for one input state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityRow {
    pub alpha: f64,
    /// `None` when flagged LOW_STATS.
    pub fidelity: Option<f64>,
    pub low_stats: bool,
    /// Measured-and-reversed photons over both branches.
    pub reversed_photons: f64,
}

/// Parameters shared by the grid and cross-section campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub grid_size: usize,
    pub photons_per_setting: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub estimation: Estimation,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid_size: 16,
            photons_per_setting: 100_000,
            noise: NoiseModel::default(),
            seed: 42,
            estimation: Estimation::Sampled,
            parallel: true,
        }
    }
}

/// Estimated `(gain, reversibility)` terms for each grid state.
fn state_terms(
    wm: &WeakMeasurement,
    n: u64,
    noise: &NoiseModel,
    stream: &RngStream,
    estimation: Estimation,
) -> Result<Option<Vec<(f64, f64)>>> {
    let grid = StateGrid::new();
    let terms = match estimation {
        Estimation::Off => return Ok(None),
        Estimation::Exact => grid
            .iter()
            .map(|(i, s)| terms_of(&expected_counts(i, s, wm, n, noise)?, wm))
            .collect::<Result<Vec<_>>>()?,
        Estimation::Sampled => grid
            .iter()
            .map(|(i, s)| terms_of(&simulate_counts(i, s, wm, n, noise, stream)?, wm))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(Some(terms))
}

fn terms_of<C: Counts>(record: &C, wm: &WeakMeasurement) -> Result<(f64, f64)> {
    Ok((gain_term(record, wm)?, reversal_ratio(record)?))
}

/// Grid-averaged `(G, P)` estimates from simulated counts.
pub fn estimate_cell(
    wm: &WeakMeasurement,
    n: u64,
    noise: &NoiseModel,
    stream: &RngStream,
    estimation: Estimation,
) -> Result<Option<(f64, f64)>> {
    let grid = StateGrid::new();
    match estimation {
        Estimation::Off => Ok(None),
        Estimation::Exact => {
            let recs = grid
                .iter()
                .map(|(i, s)| expected_counts(i, s, wm, n, noise))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((
                estimate_gmax_from_counts(&recs, wm)?,
                estimate_prev_from_counts(&recs)?,
            )))
        }
        Estimation::Sampled => {
            let recs = grid
                .iter()
                .map(|(i, s)| simulate_counts(i, s, wm, n, noise, stream))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((
                estimate_gmax_from_counts(&recs, wm)?,
                estimate_prev_from_counts(&recs)?,
            )))
        }
    }
}

/// Per-state traversal at a fixed instrument.
pub fn state_sweep(
    wm: &WeakMeasurement,
    n: u64,
    noise: &NoiseModel,
    seed: u64,
    estimation: Estimation,
) -> Result<Vec<StateRow>> {
    let grid = StateGrid::new();
    let terms = state_terms(wm, n, noise, &RngStream::from_seed(seed), estimation)?;
    Ok(grid
        .iter()
        .map(|(i, s)| {
            let mc = terms.as_ref().map(|t| t[i]);
            StateRow {
                alpha: s.alpha_weight(),
                gain_analytic: per_state_gain(wm, s),
                rev_analytic: per_state_reversal_prob(wm, s),
                gain_mc: mc.map(|t| t.0),
                rev_mc: mc.map(|t| t.1),
            }
        })
        .collect())
}

/// The ε×η tradeoff map, row-major by ε then η.
pub fn grid_sweep(config: &SweepConfig) -> Result<Vec<TradeoffPoint>> {
    let grid = OperatorGrid::new(config.grid_size)?;
    let root = RngStream::from_seed(config.seed).child(GRID_STREAM);
    let cell = |(k, wm): (usize, &WeakMeasurement)| -> Result<TradeoffPoint> {
        let point = TradeoffPoint::analytic(wm);
        let est = estimate_cell(
            wm,
            config.photons_per_setting,
            &config.noise,
            &root.child(k as u64),
            config.estimation,
        )?;
        Ok(match est {
            Some((g, p)) => point.with_estimates(g, p),
            None => point,
        })
    };
    if config.parallel {
        grid.cells().par_iter().enumerate().map(cell).collect()
    } else {
        grid.cells().iter().enumerate().map(cell).collect()
    }
}

/// Rows over `eta_values` at ε = 0.
pub fn cross_section(
    eta_values: &[f64],
    n: u64,
    noise: &NoiseModel,
    seed: u64,
    estimation: Estimation,
) -> Result<Vec<CrossSectionRow>> {
    let root = RngStream::from_seed(seed).child(CROSS_SECTION_STREAM);
    eta_values
        .iter()
        .enumerate()
        .map(|(k, &eta)| {
            let wm = WeakMeasurement::new(0.0, eta)?;
            let g = analytic_gmax(&wm);
            let p = analytic_prev(&wm);
            let est = estimate_cell(&wm, n, noise, &root.child(k as u64), estimation)?;
            Ok(CrossSectionRow {
                eta,
                six_gmax: 6.0 * g,
                prev: p,
                sum: 6.0 * g + p,
                six_gmax_mc: est.map(|e| 6.0 * e.0),
                prev_mc: est.map(|e| e.1),
                sum_mc: est.map(|e| 6.0 * e.0 + e.1),
            })
        })
        .collect()
}

/// Tomography of the pooled reversed output for each of the 51 inputs.
///
/// `counts_per_basis` is both the photon budget per setting for the count
/// run that decides LOW_STATS and the detected photons per analyzer basis.
pub fn reversal_fidelity_sweep(
    wm: &WeakMeasurement,
    counts_per_basis: u64,
    noise: &NoiseModel,
    seed: u64,
    exact: bool,
    low_stats_floor: f64,
) -> Result<Vec<FidelityRow>> {
    let root = RngStream::from_seed(seed).child(FIDELITY_STREAM);
    let sampling = if exact {
        TomographySampling::Exact
    } else {
        TomographySampling::Counts(counts_per_basis)
    };
    let grid = StateGrid::new();
    grid.states()
        .par_iter()
        .enumerate()
        .map(|(i, state)| {
            let reversed_photons = if exact {
                expected_counts(i, state, wm, counts_per_basis, noise)?.reversed_total()
            } else {
                simulate_counts(i, state, wm, counts_per_basis, noise, &root)?.reversed_total()
            };
            let pooled = Outcome::BOTH
                .iter()
                .map(|&r| BranchChain::for_measurement(wm, r).reversed_output(state, noise.pbs_leakage()))
                .reduce(|a, b| {
                    let mut out = a;
                    for (x, y) in out.iter_mut().flatten().zip(b.iter().flatten()) {
                        *x += *y;
                    }
                    out
                })
                .expect("two branches");
            let source = normalized_density(pooled);
            let low_stats = reversed_photons < low_stats_floor || source.is_none();
            let fidelity = match source {
                Some(rho) if !low_stats => {
                    let stream = root.path(&[i as u64, tag::TOMOGRAPHY]);
                    Some(tomograph(&rho, state, sampling, noise, &stream)?.fidelity_vs_input)
                }
                _ => None,
            };
            Ok(FidelityRow {
                alpha: state.alpha_weight(),
                fidelity,
                low_stats,
                reversed_photons,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wm(e: f64, n: f64) -> WeakMeasurement {
        WeakMeasurement::new(e, n).unwrap()
    }

    #[test]
    fn state_grid_layout() {
        let g = StateGrid::new();
        assert_eq!(g.len(), 51);
        for (i, s) in g.iter() {
            assert_eq!(s.alpha_weight(), i as f64 / 50.0);
            assert_eq!(s.phase(), 0.0);
        }
        assert!(g.states().windows(2).all(|w| w[1].alpha_weight() > w[0].alpha_weight()));
        assert!((g.states()[3].alpha_weight() - 0.06).abs() < 1e-17);
    }

    #[test]
    fn operator_grid_layout() {
        let g = OperatorGrid::new(16).unwrap();
        assert_eq!(g.cells().len(), 256);
        assert_eq!(g.cells()[0], wm(0.0, 0.0));
        assert_eq!(g.cells()[15], wm(0.0, 1.0));
        assert_eq!(g.cells()[240], wm(1.0, 0.0));
        assert_eq!(g.cells()[255], wm(1.0, 1.0));
        assert_eq!(g.cells()[1].eta(), 1.0 / 15.0);
        let diag = g.cells().iter().filter(|c| c.is_diagonal_degenerate()).count();
        assert_eq!(diag, 14);
        assert!(OperatorGrid::new(1).is_err());
    }

    #[test]
    fn state_sweep_fig2_shape() {
        let rows = state_sweep(&wm(0.25, 0.75), 1000, &NoiseModel::ideal(), 1, Estimation::Off).unwrap();
        for r in &rows {
            let a = r.alpha;
            assert!((r.gain_analytic - (0.75 - a + a * a)).abs() < 1e-12);
            assert!((r.rev_analytic - 0.375).abs() < 1e-12);
            assert!(r.gain_mc.is_none());
        }
        for r in &rows[..3] {
            assert!(r.gain_analytic >= 0.7112);
        }
    }

    #[test]
    fn state_sweep_identity_instrument() {
        let rows = state_sweep(&wm(0.0, 0.0), 1000, &NoiseModel::ideal(), 1, Estimation::Exact).unwrap();
        for r in &rows {
            assert!((r.gain_analytic - r.alpha).abs() < 1e-15);
            assert!((r.rev_analytic - 1.0).abs() < 1e-15);
            assert!((r.gain_mc.unwrap() - r.alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_sweep_boundary_and_corners() {
        let cfg = SweepConfig {
            estimation: Estimation::Off,
            ..SweepConfig::default()
        };
        let rows = grid_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 256);
        let boundary: Vec<_> = rows
            .iter()
            .filter(|p| [p.epsilon, p.eta].iter().any(|&v| v == 0.0 || v == 1.0))
            .collect();
        assert_eq!(boundary.len(), 60);
        assert!(boundary.iter().all(|p| (p.sum_analytic - 4.0).abs() <= 1e-12));
        for p in rows.iter().filter(|p| (p.epsilon - p.eta).abs() == 1.0) {
            assert!((p.gmax_analytic - 2.0 / 3.0).abs() < 1e-12);
            assert!(p.prev_analytic.abs() < 1e-12);
        }
        let min = rows.iter().map(|p| p.sum_analytic).fold(f64::INFINITY, f64::min);
        let expected = 3.0 + 1.0 - 14.0 / 15.0 + 2.0 * 49.0 / 225.0;
        assert!((min - expected).abs() < 1e-12);
        let argmins: Vec<_> = rows.iter().filter(|p| (p.sum_analytic - min).abs() < 1e-12).collect();
        assert_eq!(argmins.len(), 2);
        assert!(argmins.iter().any(|p| p.epsilon == 7.0 / 15.0 && p.eta == 7.0 / 15.0));
        assert!(argmins.iter().any(|p| p.epsilon == 8.0 / 15.0 && p.eta == 8.0 / 15.0));
    }

    #[test]
    fn tradeoff_point_sums() {
        let cfg = SweepConfig {
            photons_per_setting: 2000,
            ..SweepConfig::default()
        };
        for p in grid_sweep(&cfg).unwrap() {
            assert!((p.sum_analytic - (6.0 * p.gmax_analytic + p.prev_analytic)).abs() <= 1e-12);
            let s = p.sum_estimated.unwrap();
            assert!((s - (6.0 * p.gmax_estimated.unwrap() + p.prev_estimated.unwrap())).abs() <= 1e-12);
        }
    }

    #[test]
    fn cross_section_examples() {
        let rows = cross_section(&[0.0, 1.0, 0.4], 1000, &NoiseModel::ideal(), 1, Estimation::Off).unwrap();
        let expect = [(3.0, 1.0), (4.0, 0.0), (3.4, 0.6)];
        for (r, (g6, p)) in rows.iter().zip(expect) {
            assert!((r.six_gmax - g6).abs() < 1e-12);
            assert!((r.prev - p).abs() < 1e-12);
            assert!((r.sum - 4.0).abs() < 1e-12);
        }
        assert!(cross_section(&[1.2], 1000, &NoiseModel::ideal(), 1, Estimation::Off).is_err());
    }

    #[test]
    fn fidelity_sweep_exact_is_perfect() {
        let rows = reversal_fidelity_sweep(&wm(0.25, 0.75), 10_000, &NoiseModel::ideal(), 3, true, DEFAULT_LOW_STATS_FLOOR).unwrap();
        assert_eq!(rows.len(), 51);
        for r in rows {
            assert!(!r.low_stats);
            assert!((r.fidelity.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_sweep_flags_pvnm() {
        let rows = reversal_fidelity_sweep(&wm(0.0, 1.0), 10_000, &NoiseModel::ideal(), 3, false, DEFAULT_LOW_STATS_FLOOR).unwrap();
        assert!(rows.iter().all(|r| r.low_stats && r.fidelity.is_none()));
    }
}
