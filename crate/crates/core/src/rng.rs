//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`RandomStream`], a ChaCha8
//! generator keyed by a 64-bit seed and a stream id. Seeds for replication
//! cells are derived with the SplitMix64 finalizer:
//!
//! ```text
//! splitmix64(x):
//!     z = x + 0x9E3779B97F4A7C15
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!     return z ^ (z >> 31)                      (all arithmetic mod 2^64)
//!
//! replication_seed(base, cell, rep) =
//!     splitmix64(splitmix64(splitmix64(base) ^ cell) ^ rep)
//! ```
//!
//! A trajectory seed is split into two ChaCha streams over the same key:
//! stream [`ACTION_STREAM`] drives the policy and stream [`REWARD_STREAM`]
//! drives reward sampling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ACTION_STREAM: u64 = 0;
pub const REWARD_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Stream `stream_id` of the ChaCha key expanded from `seed`.
    pub fn substream(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomStream(rng)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(base_seed: u64, cell: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ cell) ^ rep)
}
