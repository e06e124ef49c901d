//! Monte Carlo average over Haar-random pure states.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{per_state_gain, per_state_reversal_prob, WeakMeasurement};
use crate::qubit::PureState;
use crate::rng::RngStream;

pub const MIN_ORACLE_SAMPLES: u64 = 10_000;
const BATCH: u64 = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub samples: u64,
    pub gmax: f64,
    pub gmax_std_error: f64,
    pub prev: f64,
    pub prev_std_error: f64,
    pub prev_sample_variance: f64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }

    fn std_error(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }
}

/// Draws a Haar-random pure state: `cos θ` uniform on `[−1, 1]`, phase
/// uniform on `[0, 2π)`.
pub fn haar_state(rng: &mut impl Rng) -> PureState {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phase: f64 = rng.random_range(0.0..TAU);
    PureState::new((0.5 * (1.0 + cos_theta)).clamp(0.0, 1.0), phase).expect("weight in [0, 1]")
}

/// Averages the per-state gain and reversal probability over Haar-random
/// inputs. Batches run in parallel on independent streams and are merged in
/// batch order.
pub fn haar_average_oracle(
    wm: &WeakMeasurement,
    n_samples: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    if n_samples < MIN_ORACLE_SAMPLES {
        return Err(Error::domain("n_samples", "[10000, ∞)", n_samples as f64));
    }
    let root = RngStream::from_seed(seed);
    let batches = n_samples.div_ceil(BATCH);
    let partial: Vec<(Moments, Moments)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH.min(n_samples - b * BATCH);
            let mut rng = root.child(b).rng();
            let mut gain = Moments::default();
            let mut rev = Moments::default();
            for _ in 0..len {
                let s = haar_state(&mut rng);
                gain.push(per_state_gain(wm, &s));
                rev.push(per_state_reversal_prob(wm, &s));
            }
            (gain, rev)
        })
        .collect();
    let (gain, rev) = partial
        .into_iter()
        .fold((Moments::default(), Moments::default()), |(g, r), (bg, br)| {
            (g.merge(bg), r.merge(br))
        });
    Ok(OracleEstimate {
        samples: n_samples,
        gmax: gain.mean,
        gmax_std_error: gain.std_error(),
        prev: rev.mean,
        prev_std_error: rev.std_error(),
        prev_sample_variance: rev.variance(),
    })
}
