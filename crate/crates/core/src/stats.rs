//! Sample statistics and reproducible random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Mean of a Monte Carlo (or repeated-measurement) quantity with its
/// standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    /// Sample mean and standard error of the mean (n − 1 denominator).
    /// Returns `None` for an empty slice.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let n = samples.len();
        if n == 0 {
            return None;
        }
        let mean = mean(samples);
        let stderr = if n > 1 {
            (variance(samples, mean) / n as f64).sqrt()
        } else {
            0.0
        };
        Some(Self {
            value: mean,
            stderr,
            n,
        })
    }

    /// Number of standard errors separating the estimate from `target`.
    /// Infinite when the standard error is zero and the values differ.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Sequential left-to-right mean; the fixed order keeps results independent
/// of how the samples were produced.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance about a given mean.
pub fn variance(xs: &[f64], mean: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs, mean(xs)).sqrt()
}

/// Independent generator for work unit `index` under a global `seed`.
///
/// ChaCha streams give counter-based splitting, so unit `k` draws the same
/// numbers no matter which thread runs it or in which order.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
