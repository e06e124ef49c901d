//! Hierarchical, order-independent random streams.
//!
//! A master seed is folded with a path of tags (cell, state index, setting,
//! configuration, ...) into a 64-bit key that seeds a ChaCha8 generator.
//! The same path always yields the same stream no matter which thread asks
//! for it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tags for the second level of the path inside one simulated state.
pub mod tag {
    pub const PRIMARY_SETTING: u64 = 0;
    pub const COMPLEMENT_SETTING: u64 = 1;

    pub const MEASUREMENT: u64 = 10;
    pub const REVERSAL: u64 = 11;
    pub const TOMOGRAPHY: u64 = 12;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    key: u64,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    /// Derives the sub-stream addressed by `tag`.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(tag.wrapping_add(0x632B_E59B_D9B4_E019))),
        }
    }

    pub fn path(&self, tags: &[u64]) -> Self {
        tags.iter().fold(*self, |s, &t| s.child(t))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}
