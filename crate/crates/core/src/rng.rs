//! Seedable, splittable random streams.
//!
//! Every random choice made by the counters is drawn from a stream derived
//! from a master seed and a path of integer labels (for example
//! `(level, iteration)`). Two streams with different paths are independent
//! for all practical purposes, and the stream for a given path does not
//! depend on the order in which other streams were consumed. This makes runs
//! reproducible no matter how oracle calls are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Random generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// A node in the tree of derived seeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    /// Draws a fresh master seed from system entropy.
    pub fn from_entropy() -> Self {
        Seed(rand::random())
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// Child seed for one label.
    pub fn child(self, label: u64) -> Seed {
        Seed(splitmix(splitmix(self.0) ^ splitmix(label.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d)))
    }

    /// Child seed for a path of labels, applied left to right.
    pub fn derive(self, path: &[u64]) -> Seed {
        path.iter().fold(self, |s, &l| s.child(l))
    }

    /// Opens the generator for this node.
    pub fn rng(self) -> StreamRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Stream-domain labels, so that unrelated consumers never share a path.
pub mod domain {
    pub const LOWER: u64 = 0x4c4f_5745;
    pub const AUGMENT: u64 = 0x4155_474d;
    pub const COUNT: u64 = 0x434f_554e;
    pub const NESTED: u64 = 0x4e45_5354;
    pub const BOOST_MC: u64 = 0x424f_4f53;
}
