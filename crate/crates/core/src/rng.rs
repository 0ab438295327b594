//! Seeded random streams.
//!
//! Every stochastic stage derives its generator from a master seed, a stage
//! tag and a stream index, so a session chunk can be regenerated on any
//! thread and the parallel and sequential paths agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used across the crate.
pub type SimRng = ChaCha8Rng;

/// Stage tags keep the streams of different pipeline stages disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    Session = 1,
    Reconciliation = 2,
    Amplification = 3,
    Sampling = 4,
}

/// Master seed for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedTree(pub u64);

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    /// Independent generator for `(stage, index)`.
    pub fn stream(&self, stage: Stage, index: u64) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.0 ^ splitmix(stage as u64)));
        rng.set_stream(index);
        rng
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
