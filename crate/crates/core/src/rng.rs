//! Deterministic, hierarchical random streams.
//!
//! A [`RandomStream`] is a root seed plus a path of integers. Every distinct
//! path maps to an independent ChaCha8 generator, so a sub-channel, a Monte
//! Carlo realization or a GA generation can each own a disjoint substream
//! without any shared mutable state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Draw sites used inside a single sub-channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum DrawSite {
    LargeScale = 0,
    ClusterDelays = 1,
    ClusterPowers = 2,
    AzimuthAngles = 3,
    ZenithAngles = 4,
    CrossPolarization = 5,
    InitialPhases = 6,
    ExcessDelay = 7,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    root_seed: u64,
    path: Vec<u64>,
}

impl RandomStream {
    pub fn new(root_seed: u64) -> Self {
        Self {
            root_seed,
            path: Vec::new(),
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Substream one level below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut path = self.path.clone();
        path.push(index);
        Self {
            root_seed: self.root_seed,
            path,
        }
    }

    pub fn site(&self, site: DrawSite) -> Self {
        self.child(site as u64)
    }

    /// Generator seeded from the full path. Calling this twice yields two
    /// generators producing the same sequence.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut state = splitmix64(self.root_seed ^ 0x5851_f42d_4c95_7f2d);
        // Length is mixed in so that [a] and [a, 0] differ.
        state = splitmix64(state ^ (self.path.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        for &step in &self.path {
            state = splitmix64(state ^ splitmix64(step.wrapping_add(0x632b_e59b_d9b4_e019)));
        }
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
