//! Finite-size Monte Carlo simulation of the relay chain.

mod channel;
mod detect;
mod sim;

pub use channel::{sample_realization, ChannelRealization};
pub use detect::{detect, gpme, map_symbols, Enumeration, LinearFilter, ENUMERATION_LIMIT};
pub use sim::{
    mc_ber, mc_ber_with, mc_decoupling, mc_lower_bound, mc_mi_discrete, mc_mi_discrete_controlled,
    mc_mi_gaussian, mc_trace, mi_discrete, mi_gaussian, DecouplingReport, McOptions, BER_VECTORS,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sample mean of per-trial values with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = pairwise_sum(samples) / n.max(1) as f64;
        let sq: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
        let var = if n > 1 {
            pairwise_sum(&sq) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n.max(1) as f64).sqrt(),
            trials: n,
            seed,
        }
    }

    /// `|mean - x|` in units of the standard error.
    pub fn z_score(&self, x: f64) -> f64 {
        let d = (self.mean - x).abs();
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Summation by recursive halving; the result does not depend on how the
/// values were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Generator of trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs `f` on every trial in parallel and returns the results in trial
/// order.
pub(crate) fn run_trials<T: Send>(
    trials: usize,
    seed: u64,
    f: impl Fn(&mut ChaCha8Rng) -> T + Sync,
) -> Vec<T> {
    (0..trials)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(seed, i)))
        .collect()
}
