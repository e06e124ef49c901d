//! Photon-count simulation and the count-ratio estimators.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{Outcome, WeakMeasurement};
use crate::qubit::PureState;
use crate::rng::{tag, RngStream};

use super::optics::BranchChain;

/// Largest index of the 51-point input-state grid.
pub const MAX_STATE_INDEX: usize = 50;

/// Imperfections of the optical bench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    pbs_leakage: f64,
    detector_efficiency: f64,
}

impl NoiseModel {
    /// `pbs_leakage ∈ [0, 0.01]`, `detector_efficiency ∈ (0, 1]`.
    pub fn new(pbs_leakage: f64, detector_efficiency: f64) -> Result<Self> {
        if !pbs_leakage.is_finite() || !(0.0..=0.01).contains(&pbs_leakage) {
            return Err(Error::domain("pbs_leakage", "[0, 0.01]", pbs_leakage));
        }
        if !detector_efficiency.is_finite()
            || detector_efficiency <= 0.0
            || detector_efficiency > 1.0
        {
            return Err(Error::domain(
                "detector_efficiency",
                "(0, 1]",
                detector_efficiency,
            ));
        }
        Ok(Self {
            pbs_leakage,
            detector_efficiency,
        })
    }

    /// Leakage for a given PBS extinction ratio `n:1`.
    pub fn from_extinction_ratio(ratio: f64, detector_efficiency: f64) -> Result<Self> {
        Self::new(1.0 / (ratio + 1.0), detector_efficiency)
    }

    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn pbs_leakage(&self) -> f64 {
        self.pbs_leakage
    }

    pub fn detector_efficiency(&self) -> f64 {
        self.detector_efficiency
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pbs_leakage: 0.0,
            detector_efficiency: 1.0,
        }
    }
}

/// Per-photon detection probabilities for the four count channels of one
/// input state, indexed `[primary, complement]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelProbabilities {
    pub measured: [f64; 2],
    pub reversed: [f64; 2],
}

impl ChannelProbabilities {
    pub fn compute(state: &PureState, wm: &WeakMeasurement, noise: &NoiseModel) -> Self {
        let mut measured = [0.0; 2];
        let mut reversed = [0.0; 2];
        for (slot, r) in Outcome::BOTH.into_iter().enumerate() {
            let chain = BranchChain::for_measurement(wm, r);
            let eff = noise.detector_efficiency;
            measured[slot] = eff * chain.measured_probability(state, noise.pbs_leakage);
            reversed[slot] = eff * chain.reversed_probability(state, noise.pbs_leakage);
        }
        Self { measured, reversed }
    }
}

/// Count data consumed by the estimators.
pub trait Counts {
    fn state_index(&self) -> usize;
    fn m_primary(&self) -> f64;
    fn m_complement(&self) -> f64;
    fn r_primary(&self) -> f64;
    fn r_complement(&self) -> f64;

    fn measured_total(&self) -> f64 {
        self.m_primary() + self.m_complement()
    }

    fn reversed_total(&self) -> f64 {
        self.r_primary() + self.r_complement()
    }
}

/// Simulated detector counts for one input state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountRecord {
    pub state_index: usize,
    /// `C^M_i(a, b)`.
    pub counts_m_primary: u64,
    /// `C^M_i(π/4−a, 3π/4−b)`.
    pub counts_m_complement: u64,
    /// `C^R_i(b, a)`.
    pub counts_r_primary: u64,
    /// `C^R_i(3π/4−b, π/4−a)`.
    pub counts_r_complement: u64,
    pub photons_per_setting: u64,
}

impl Counts for CountRecord {
    fn state_index(&self) -> usize {
        self.state_index
    }
    fn m_primary(&self) -> f64 {
        self.counts_m_primary as f64
    }
    fn m_complement(&self) -> f64 {
        self.counts_m_complement as f64
    }
    fn r_primary(&self) -> f64 {
        self.counts_r_primary as f64
    }
    fn r_complement(&self) -> f64 {
        self.counts_r_complement as f64
    }
}

/// Expected counts; the sampling-free counterpart of [`CountRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedCounts {
    pub state_index: usize,
    pub m_primary: f64,
    pub m_complement: f64,
    pub r_primary: f64,
    pub r_complement: f64,
    pub photons_per_setting: u64,
}

impl Counts for ExpectedCounts {
    fn state_index(&self) -> usize {
        self.state_index
    }
    fn m_primary(&self) -> f64 {
        self.m_primary
    }
    fn m_complement(&self) -> f64 {
        self.m_complement
    }
    fn r_primary(&self) -> f64 {
        self.r_primary
    }
    fn r_complement(&self) -> f64 {
        self.r_complement
    }
}

fn check_photons(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("photons_per_setting", "[1, ∞)", 0.0));
    }
    Ok(())
}

fn binomial(n: u64, p: f64, rng: &mut impl rand::Rng) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability clamped into [0, 1]")
        .sample(rng)
}

/// Draws the four count channels for input state `state_index`.
///
/// Each measurement setting is an independent run of `n` photons. The
/// reversal channel thins the measured photons of the same setting with the
/// conditional survival probability, so `C^R ≤ C^M` always holds while the
/// marginal of `C^R` is `Binomial(n, p_reversed)`.
pub fn simulate_counts(
    state_index: usize,
    state: &PureState,
    wm: &WeakMeasurement,
    n: u64,
    noise: &NoiseModel,
    stream: &RngStream,
) -> Result<CountRecord> {
    check_photons(n)?;
    let probs = ChannelProbabilities::compute(state, wm, noise);
    let base = stream.child(state_index as u64);
    let mut measured = [0u64; 2];
    let mut reversed = [0u64; 2];
    let settings = [tag::PRIMARY_SETTING, tag::COMPLEMENT_SETTING];
    for slot in 0..2 {
        let setting = base.child(settings[slot]);
        let mut rng = setting.child(tag::MEASUREMENT).rng();
        measured[slot] = binomial(n, probs.measured[slot], &mut rng);
        let survival = if probs.measured[slot] > 0.0 {
            probs.reversed[slot] / probs.measured[slot]
        } else {
            0.0
        };
        let mut rng = setting.child(tag::REVERSAL).rng();
        reversed[slot] = binomial(measured[slot], survival, &mut rng);
    }
    Ok(CountRecord {
        state_index,
        counts_m_primary: measured[0],
        counts_m_complement: measured[1],
        counts_r_primary: reversed[0],
        counts_r_complement: reversed[1],
        photons_per_setting: n,
    })
}

pub fn expected_counts(
    state_index: usize,
    state: &PureState,
    wm: &WeakMeasurement,
    n: u64,
    noise: &NoiseModel,
) -> Result<ExpectedCounts> {
    check_photons(n)?;
    let probs = ChannelProbabilities::compute(state, wm, noise);
    let nf = n as f64;
    Ok(ExpectedCounts {
        state_index,
        m_primary: nf * probs.measured[0],
        m_complement: nf * probs.measured[1],
        r_primary: nf * probs.reversed[0],
        r_complement: nf * probs.reversed[1],
        photons_per_setting: n,
    })
}

/// Fidelity of the first-branch guess for grid state `i`: `0.02i` when the
/// first branch favours |H⟩ (`ε < η`, or a tie), else `1 − 0.02i`.
pub fn zeta(state_index: usize, wm: &WeakMeasurement) -> f64 {
    let alpha = state_index as f64 / MAX_STATE_INDEX as f64;
    if wm.is_tied() || wm.epsilon() < wm.eta() {
        alpha
    } else {
        1.0 - alpha
    }
}

fn denominator<C: Counts>(record: &C) -> Result<f64> {
    let d = record.measured_total();
    if d <= 0.0 {
        return Err(Error::ZeroDenominator {
            state_index: record.state_index(),
        });
    }
    Ok(d)
}

/// Count-weighted guess fidelity for a single state.
pub fn gain_term<C: Counts>(record: &C, wm: &WeakMeasurement) -> Result<f64> {
    if record.state_index() > MAX_STATE_INDEX {
        return Err(Error::domain(
            "state_index",
            "[0, 50]",
            record.state_index() as f64,
        ));
    }
    let d = denominator(record)?;
    let z = zeta(record.state_index(), wm);
    Ok((z * record.m_primary() + (1.0 - z) * record.m_complement()) / d)
}

/// Reversed-to-measured count ratio for a single state.
pub fn reversal_ratio<C: Counts>(record: &C) -> Result<f64> {
    Ok(record.reversed_total() / denominator(record)?)
}

/// Mean of [`gain_term`] over the records.
pub fn estimate_gmax_from_counts<C: Counts>(records: &[C], wm: &WeakMeasurement) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let sum = records
        .iter()
        .map(|r| gain_term(r, wm))
        .sum::<Result<f64>>()?;
    Ok(sum / records.len() as f64)
}

/// Mean of [`reversal_ratio`] over the records.
pub fn estimate_prev_from_counts<C: Counts>(records: &[C]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let sum = records.iter().map(reversal_ratio).sum::<Result<f64>>()?;
    Ok(sum / records.len() as f64)
}
