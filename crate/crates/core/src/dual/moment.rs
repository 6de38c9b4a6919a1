//! Nested moments `(E ||X||_{Z_p(X)}^q)^(1/q)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_dual, solver, Backend, DualSolveOptions, MpNorm};
use crate::dists::{sample, DistributionSpec};
use crate::error::{invalid, Result};
use crate::norms::{euclidean_norm, Method, NormEstimate};
use crate::rng;
use crate::stats::{self, Interval};

/// Outer samples solved in parallel between warm-start bank updates.
const CHUNK: usize = 32;
/// Number of previous optimal directions kept for warm starts.
const BANK_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostic {
    pub iterations: usize,
    /// `(upper - witness) / witness` for the certifying norm.
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZpMomentReport {
    pub family: String,
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub outer_samples: usize,
    pub backend: Backend,
    pub sample_budget: usize,
    pub seed: u64,
    /// `(mean_j ||x_j||^q)^(1/q)` with a log-domain bootstrap interval.
    pub estimate: NormEstimate,
    /// The same statistic over the per-sample certified lower bounds.
    pub witness_estimate: f64,
    /// `estimate.value / sqrt((n + p) / p)`.
    pub ratio_to_conjecture: f64,
    pub lower_bound_only_fraction: f64,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    pub max_gap: f64,
    pub diagnostics: Vec<SampleDiagnostic>,
}

/// Normalization in the conjectured bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// `C sqrt((n + p) / p)`.
    One,
    /// `C sqrt(n / p)`.
    Two,
}

/// `estimate / sqrt((n+p)/p)` or `estimate / sqrt(n/p)`.
pub fn conjecture_ratio(report: &ZpMomentReport, problem: Problem) -> f64 {
    let (n, p) = (report.n as f64, report.p);
    let scale = match problem {
        Problem::One => ((n + p) / p).sqrt(),
        Problem::Two => (n / p).sqrt(),
    };
    report.estimate.value / scale
}

fn q_mean(values: &[f64], q: f64, seed: u64) -> (f64, Interval) {
    let logs: Vec<f64> = values.iter().map(|v| q * v.ln()).collect();
    let (lme, ci) = stats::log_mean_exp_with_ci(&logs, seed);
    let back = |x: f64| (x / q).exp();
    (back(lme), Interval { low: back(ci.low), high: back(ci.high) })
}

/// Estimates `(E ||X||_{Z_p(X)}^q)^(1/q)`.
///
/// The norm is frozen once (exact, or SAA on its own sample stream); the
/// `outer` realizations come from an independent stream. Realizations are
/// processed in chunks of 32 solved in parallel; each solve starts from
/// whichever of `x/|x|` and the closest stored earlier optimum has the
/// larger objective. The stored optima only change between chunks, so
/// results do not depend on the number of threads.
pub fn zp_moment(
    spec: &DistributionSpec,
    p: f64,
    q: f64,
    outer: usize,
    opts: &DualSolveOptions,
    seed: u64,
) -> Result<ZpMomentReport> {
    opts.validate()?;
    if !(q >= 1.0 && q.is_finite()) {
        return Err(invalid(format!("q must be >= 1, got {q}")));
    }
    if outer < 100 {
        return Err(invalid(format!("outer must be >= 100, got {outer}")));
    }
    let norm = MpNorm::from_spec(spec, p, opts, seed)?;
    zp_moment_with_norm(&norm, q, outer, opts, seed)
}

/// [`zp_moment`] for an already frozen norm.
pub(crate) fn zp_moment_with_norm(
    norm: &MpNorm,
    q: f64,
    outer: usize,
    opts: &DualSolveOptions,
    seed: u64,
) -> Result<ZpMomentReport> {
    let n = norm.dim();
    let xs = sample(norm.spec(), outer, rng::derive_seed(seed, rng::tags::OUTER))?;
    let mut bank: Vec<Vec<f64>> = Vec::new();
    let mut solutions = Vec::with_capacity(outer);
    let rows: Vec<&[f64]> = xs.rows().collect();
    for (c, chunk) in rows.chunks(CHUNK).enumerate() {
        let results: Vec<Result<super::DualSolution>> = chunk
            .par_iter()
            .enumerate()
            .map(|(j, x)| {
                let starts = if opts.warm_start {
                    warm_starts(norm, x, &bank)
                } else {
                    let index = (c * CHUNK + j) as u64;
                    solver::start_directions(norm.oracle(), x, opts.starts, rng::derive_seed(seed, index))
                };
                solve_dual(norm, x, &starts, opts)
            })
            .collect();
        for r in results {
            let sol = r?;
            if opts.warm_start && sol.value > 0.0 {
                if bank.len() == BANK_SIZE {
                    bank.remove(0);
                }
                bank.push(sol.direction.clone());
            }
            solutions.push(sol);
        }
    }
    let values: Vec<f64> = solutions.iter().map(|s| s.value).collect();
    let witnesses: Vec<f64> = solutions.iter().map(|s| s.witness_value).collect();
    let boot_seed = rng::derive_seed(seed, rng::tags::BOOTSTRAP);
    let (value, ci) = q_mean(&values, q, boot_seed);
    let (witness_estimate, _) = q_mean(&witnesses, q, boot_seed);
    let method = if norm.is_exact() { Method::ExactEven } else { Method::MonteCarlo };
    let mut estimate = NormEstimate::with_interval(value, ci, method);
    let unconverged = solutions.iter().filter(|s| !s.converged).count();
    estimate.lower_bound_only = unconverged > 0;
    let diagnostics: Vec<SampleDiagnostic> = solutions
        .iter()
        .map(|s| SampleDiagnostic {
            iterations: s.iterations,
            gap: match s.gap_upper {
                Some(u) if s.witness_value > 0.0 => (u - s.witness_value) / s.witness_value,
                _ => f64::NAN,
            },
            converged: s.converged,
        })
        .collect();
    let pf = norm.p();
    Ok(ZpMomentReport {
        family: norm.spec().family_name().to_string(),
        n,
        p: pf,
        q,
        outer_samples: outer,
        backend: norm.backend(),
        sample_budget: norm.sample_budget(),
        seed,
        ratio_to_conjecture: value / ((n as f64 + pf) / pf).sqrt(),
        estimate,
        witness_estimate,
        lower_bound_only_fraction: unconverged as f64 / outer as f64,
        mean_iterations: diagnostics.iter().map(|d| d.iterations as f64).sum::<f64>() / outer as f64,
        max_iterations: diagnostics.iter().map(|d| d.iterations).max().unwrap_or(0),
        max_gap: diagnostics.iter().map(|d| d.gap).filter(|g| !g.is_nan()).fold(0.0, f64::max),
        diagnostics,
    })
}

/// `x/|x|` and the stored direction most aligned with `x`, best first.
fn warm_starts(norm: &MpNorm, x: &[f64], bank: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = euclidean_norm(x);
    if len == 0.0 {
        return vec![x.to_vec()];
    }
    let own: Vec<f64> = x.iter().map(|v| v / len).collect();
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for b in bank {
        let a: f64 = b.iter().zip(x).map(|(u, v)| u * v).sum();
        if a > 0.0 && best.is_none_or(|(ba, _)| a > ba) {
            best = Some((a, b));
        }
    }
    let Some((_, b)) = best else {
        return vec![own];
    };
    let o = norm.oracle();
    if solver::log_ratio(o, x, b) > solver::log_ratio(o, x, &own) {
        vec![b.clone()]
    } else {
        vec![own]
    }
}
