//! Run seeds and named random sub-streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Top-level run seed. Components draw from named sub-streams so adding draws
/// in one component never shifts another component's randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Stable 64-bit hash of `(seed, name)`.
    pub fn derive(self, name: &str) -> u64 {
        // FNV-1a over the name, then mixed with the seed through splitmix64.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in name.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        splitmix64(splitmix64(self.0) ^ h)
    }

    pub fn child(self, name: &str) -> Seed {
        Seed(self.derive(name))
    }

    pub fn stream(self, name: &str) -> StreamRng {
        StreamRng::seed_from_u64(self.derive(name))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
