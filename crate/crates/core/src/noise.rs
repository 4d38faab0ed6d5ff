//! Reproducible Brownian increments with bridge refinement.
//!
//! Seeding is counter based. A path's key is
//!
//! ```text
//! key(master, index) = mix64(master XOR (index * 0x9E3779B97F4A7C15))
//! ```
//!
//! where `mix64` is the SplitMix64 finalizer
//!
//! ```text
//! z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//! z ^= z >> 27; z *= 0x94D049BB133111EB;
//! z ^= z >> 31;
//! ```
//!
//! (all multiplications wrapping). The increments of refinement level `ℓ`
//! (ℓ = 0 for the base path) come from a ChaCha8 stream seeded with
//! `mix64(key XOR (ℓ * 0xD1B54A32D192ED03))`, and standard normals are drawn
//! with the ziggurat sampler of `rand_distr::StandardNormal`. A path is
//! therefore a pure function of `(master_seed, path_index, dt, steps, level)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier recorded in run manifests for the pinned sampling method.
pub const GENERATOR_ID: &str = "splitmix64-key/chacha8/ziggurat-standard-normal/v1";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const LEVEL_MIX: u64 = 0xD1B5_4A32_D192_ED03;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn path_key(master_seed: u64, path_index: u64) -> u64 {
    mix64(master_seed ^ path_index.wrapping_mul(GOLDEN))
}

fn level_stream(key: u64, level: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(key ^ (level as u64).wrapping_mul(LEVEL_MIX)))
}

/// Scalar Brownian path sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub dt: f64,
    pub steps: usize,
    pub increments: Vec<f64>,
    pub master_seed: u64,
    pub path_index: u64,
    /// Number of bridge refinements applied to the base path.
    pub level: u32,
}

/// Metadata describing a path, as recorded in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub master_seed: u64,
    pub path_index: u64,
    pub dt: f64,
    pub steps: usize,
    pub level: u32,
    pub generator: String,
}

impl BrownianPath {
    /// Base path with i.i.d. N(0, dt) increments.
    pub fn sample(master_seed: u64, path_index: u64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        let mut rng = level_stream(path_key(master_seed, path_index), 0);
        let sd = dt.sqrt();
        let increments = (0..steps)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                sd * z
            })
            .collect();
        Ok(BrownianPath { dt, steps, increments, master_seed, path_index, level: 0 })
    }

    /// All-zero path (used for deterministic runs).
    pub fn zero(dt: f64, steps: usize) -> Self {
        BrownianPath { dt, steps, increments: vec![0.0; steps], master_seed: 0, path_index: 0, level: 0 }
    }

    /// Halves `dt` by inserting Brownian-bridge midpoints. Each coarse
    /// increment `ΔW` splits into `ΔW/2 + ½√dt·Z` and the remainder, so the
    /// pair sums back to `ΔW`.
    pub fn refine(&self) -> BrownianPath {
        let level = self.level + 1;
        let mut rng = level_stream(path_key(self.master_seed, self.path_index), level);
        let half_sd = 0.5 * self.dt.sqrt();
        let mut increments = Vec::with_capacity(2 * self.steps);
        for &dw in &self.increments {
            let z: f64 = rng.sample(StandardNormal);
            let first = 0.5 * dw + half_sd * z;
            increments.push(first);
            increments.push(dw - first);
        }
        BrownianPath {
            dt: 0.5 * self.dt,
            steps: 2 * self.steps,
            increments,
            master_seed: self.master_seed,
            path_index: self.path_index,
            level,
        }
    }

    pub fn refine_times(&self, times: u32) -> BrownianPath {
        (0..times).fold(self.clone(), |p, _| p.refine())
    }

    /// Sums adjacent pairs of increments, doubling `dt`.
    pub fn coarsen(&self) -> Result<BrownianPath> {
        if self.steps % 2 != 0 {
            return Err(Error::InvalidArgument("cannot coarsen an odd number of steps".into()));
        }
        Ok(BrownianPath {
            dt: 2.0 * self.dt,
            steps: self.steps / 2,
            increments: self.increments.chunks(2).map(|c| c[0] + c[1]).collect(),
            master_seed: self.master_seed,
            path_index: self.path_index,
            level: self.level.saturating_sub(1),
        })
    }

    /// Increments aggregated over blocks of `factor` steps.
    pub fn aggregate(&self, factor: usize) -> Result<Vec<f64>> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::ConfigMismatch(format!(
                "path with {} steps cannot be grouped in blocks of {factor}",
                self.steps
            )));
        }
        Ok(self.increments.chunks(factor).map(|c| c.iter().sum()).collect())
    }

    /// `W(t_k)` for `k = 0..=steps`, with `W(0) = 0`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.steps + 1);
        let mut acc = 0.0;
        w.push(0.0);
        for &d in &self.increments {
            acc += d;
            w.push(acc);
        }
        w
    }

    pub fn terminal(&self) -> f64 {
        self.increments.iter().sum()
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn meta(&self) -> PathMeta {
        PathMeta {
            master_seed: self.master_seed,
            path_index: self.path_index,
            dt: self.dt,
            steps: self.steps,
            level: self.level,
            generator: GENERATOR_ID.to_string(),
        }
    }
}
