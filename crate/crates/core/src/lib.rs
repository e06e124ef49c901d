//! Simulation of a two-outcome qubit weak measurement, its probabilistic
//! reversal, and the tradeoff between estimation fidelity and reversibility.
//!
//! - [`qubit`]: states, 2×2 operators, density matrices, Stokes vectors.
//! - [`measurement`]: the Kraus pair, optimal guesses, reversal operators and
//!   the closed-form `G_max`, `P_rev`, `6G_max + P_rev`.
//! - [`bench`]: half-wave-plate optics, photon-count Monte Carlo, the
//!   count-ratio estimators and tomography.
//! - [`sweep`]: state/operator-grid campaigns, the Haar oracle and the
//!   verification battery.

pub mod bench;
pub mod error;
pub mod measurement;
pub mod qubit;
pub mod rng;
pub mod sweep;

pub use error::{Error, Result};
pub use measurement::{Outcome, WeakMeasurement};
pub use qubit::{DensityMatrix, Operator2, PureState, StokesVector};
