//! Reproducible random sampling masks with a fixed number of sampled nodes
//! per time step.
//!
//! Masks come from a ChaCha8 stream seeded with a 64-bit seed. Each column is
//! an independent partial Fisher-Yates shuffle of `0..N` that keeps the first
//! `s` positions. Trial seeds are derived from a master seed with SplitMix64,
//! so any single trial can be regenerated on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::tv_signal::{SamplingMask, TvSignal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPlan {
    density: f64,
    per_step_count: usize,
    seed: u64,
}

impl SamplingPlan {
    /// `s = round(density · N)`, rounding half away from zero.
    pub fn new(density: f64, n_nodes: usize, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return invalid(format!("density {density} outside (0, 1]"));
        }
        let per_step_count = (density * n_nodes as f64).round() as usize;
        if per_step_count == 0 {
            return invalid(format!(
                "density {density} on {n_nodes} nodes samples no node per step"
            ));
        }
        Ok(Self {
            density,
            per_step_count,
            seed,
        })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn per_step_count(&self) -> usize {
        self.per_step_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Binary mask in `vec(J)` order with exactly `s` ones per column.
pub fn draw_mask(plan: &SamplingPlan, n_nodes: usize, n_steps: usize) -> Result<Vec<bool>> {
    let s = plan.per_step_count;
    if s == 0 || s > n_nodes {
        return invalid(format!("cannot sample {s} of {n_nodes} nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut mask = vec![false; n_nodes * n_steps];
    let mut idx: Vec<usize> = Vec::with_capacity(n_nodes);
    for t in 0..n_steps {
        idx.clear();
        idx.extend(0..n_nodes);
        for k in 0..s {
            let j = rng.gen_range(k..n_nodes);
            idx.swap(k, j);
        }
        let col = &mut mask[t * n_nodes..(t + 1) * n_nodes];
        for &i in &idx[..s] {
            col[i] = true;
        }
    }
    Ok(mask)
}

/// `Y = J ∘ X`.
pub fn observe<T: Real>(mask: Vec<bool>, truth: &TvSignal<T>) -> Result<SamplingMask<T>> {
    if mask.len() != truth.as_slice().len() {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries, signal {:?}",
            mask.len(),
            truth.shape()
        )));
    }
    SamplingMask::new(mask, truth.clone())
}

/// Independent seed streams, so parameter search never sees evaluation masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    GridSearch,
    Final,
}

impl SeedStream {
    fn tag(self) -> u64 {
        match self {
            SeedStream::GridSearch => 0x6772_6964,
            SeedStream::Final => 0x6669_6e61,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial, a pure function of its coordinates.
pub fn trial_seed(master: u64, stream: SeedStream, density: f64, trial: usize) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ stream.tag());
    h = splitmix64(h ^ density.to_bits());
    splitmix64(h ^ trial as u64)
}
