//! Simulated two-interferometer optical bench.

pub mod counts;
pub mod optics;
pub mod tomography;

pub use counts::{
    estimate_gmax_from_counts, estimate_prev_from_counts, expected_counts, simulate_counts, zeta,
    ChannelProbabilities, CountRecord, Counts, ExpectedCounts, NoiseModel,
};
pub use optics::{
    angles_from_wm, complementary_settings, reversal_settings, wm_from_angles, ArmAngles,
    BranchChain, HwpSettings,
};
pub use tomography::{simulate_tomography, tomograph, TomographyResult, TomographySampling};
