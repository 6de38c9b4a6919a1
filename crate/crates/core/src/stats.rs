//! Bootstrap intervals and binomial confidence bounds.
//!
//! Bootstraps use 400 resamples with percentile intervals. Inputs longer
//! than [`MAX_ATOMS`] are first grouped into that many contiguous batches;
//! resampling batches is equivalent to resampling observations for i.i.d.
//! data and keeps every interval O(400 * MAX_ATOMS).

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::rng;

pub const BOOTSTRAP_RESAMPLES: usize = 400;
pub const MAX_ATOMS: usize = 10_000;

/// Closed interval `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { low: x, high: x }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    /// Widens the interval so that it contains `x`.
    pub fn cover(self, x: f64) -> Self {
        Self { low: self.low.min(x), high: self.high.max(x) }
    }
}

/// `ln((1/N) sum_j exp(a_j))`; `-inf` entries are zero terms.
pub fn log_mean_exp(logs: &[f64]) -> f64 {
    log_sum_exp(logs) - (logs.len() as f64).ln()
}

pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    m + logs.iter().map(|&a| (a - m).exp()).sum::<f64>().ln()
}

fn percentile_interval(mut stats: Vec<f64>) -> Interval {
    stats.sort_by(|a, b| a.total_cmp(b));
    let at = |q: f64| {
        let pos = q * (stats.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = pos - lo as f64;
        stats[lo] * (1.0 - w) + stats[hi] * w
    };
    Interval { low: at(0.025), high: at(0.975) }
}

fn batch_bounds(len: usize) -> Vec<(usize, usize)> {
    let atoms = len.min(MAX_ATOMS);
    (0..atoms)
        .map(|b| (b * len / atoms, (b + 1) * len / atoms))
        .collect()
}

/// Sample mean with a 95% bootstrap interval.
pub fn mean_with_ci(values: &[f64], seed: u64) -> (f64, Interval) {
    assert!(!values.is_empty(), "mean of empty sample");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() == 1 {
        return (mean, Interval::point(mean));
    }
    let atoms: Vec<(f64, f64)> = batch_bounds(values.len())
        .into_iter()
        .map(|(a, b)| (values[a..b].iter().sum(), (b - a) as f64))
        .collect();
    let mut r = rng::stream(rng::derive_seed(seed, rng::tags::BOOTSTRAP), 0);
    let stats = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let (mut s, mut c) = (0.0, 0.0);
            for _ in 0..atoms.len() {
                let (bs, bc) = atoms[r.random_range(0..atoms.len())];
                s += bs;
                c += bc;
            }
            s / c
        })
        .collect();
    (mean, percentile_interval(stats).cover(mean))
}

/// `ln((1/N) sum exp(a_j))` with a 95% bootstrap interval on the log scale.
pub fn log_mean_exp_with_ci(logs: &[f64], seed: u64) -> (f64, Interval) {
    assert!(!logs.is_empty(), "log-mean-exp of empty sample");
    let value = log_mean_exp(logs);
    if logs.len() == 1 || !value.is_finite() {
        return (value, Interval::point(value));
    }
    let atoms: Vec<(f64, f64)> = batch_bounds(logs.len())
        .into_iter()
        .map(|(a, b)| (log_sum_exp(&logs[a..b]), (b - a) as f64))
        .collect();
    let mut r = rng::stream(rng::derive_seed(seed, rng::tags::BOOTSTRAP), 0);
    let mut buf = vec![0.0; atoms.len()];
    let stats = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            let mut c = 0.0;
            for slot in buf.iter_mut() {
                let (ls, bc) = atoms[r.random_range(0..atoms.len())];
                *slot = ls;
                c += bc;
            }
            log_sum_exp(&buf) - f64::ln(c)
        })
        .collect();
    (value, percentile_interval(stats).cover(value))
}

/// Two-sided Clopper-Pearson interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    Interval { low, high }
}
