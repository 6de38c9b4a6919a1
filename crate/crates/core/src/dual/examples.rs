//! Witness bounds for exponential coordinates and the sparse/Euclidean
//! decomposition of `Z_p` norms of unconditional vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{solver, zp_norm, DualSolveOptions, MpNorm};
use crate::combi::binomial;
use crate::dists::{for_each_block, marginal_abs_moment, DistributionSpec, Family};
use crate::error::{invalid, Error, Result};
use crate::norms::{check_p, euclidean_norm, LocalModel, Method, MpOracle, NormEstimate};
use crate::special::laplace_abs_moment;
use crate::stats::{self, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub t: f64,
    /// `t sqrt(n/p)`.
    pub threshold: f64,
    /// Frequency of `(2/p)|X_1| >= threshold`.
    pub frequency: f64,
    pub successes: u64,
    pub trials: u64,
    /// 95% Clopper-Pearson interval for the frequency.
    pub ci: Interval,
    /// `exp(-t sqrt(n p) / sqrt(2))`.
    pub analytic_bound: f64,
    /// Whether the bound is at most the upper end of `ci`.
    pub consistent: bool,
}

fn require_exponential(spec: &DistributionSpec) -> Result<()> {
    match spec.family {
        Family::ExponentialProduct => Ok(()),
        _ => Err(invalid(format!("needs exponential_product, got {}", spec.family_name()))),
    }
}

/// Tail of the witness `(2/p) e_1`, a point of `M_p(X)` for i.i.d.
/// exponential coordinates: `||X||_{Z_p} >= (2/p)|X_1|`, so the frequencies
/// are lower estimates of `P(||X||_{Z_p} >= t sqrt(n/p))`.
pub fn exponential_witness_lower(
    spec: &DistributionSpec,
    p: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    require_exponential(spec)?;
    check_p(p, 1.0)?;
    let n = spec.dim() as f64;
    let thresholds: Vec<f64> = t_grid.iter().map(|t| t * (n / p).sqrt()).collect();
    let mut counts = vec![0u64; t_grid.len()];
    let dim = spec.dim();
    for_each_block(spec, samples, seed, |block| {
        for row in block.chunks_exact(dim) {
            let w = 2.0 / p * row[0].abs();
            for (c, th) in counts.iter_mut().zip(&thresholds) {
                if w >= *th {
                    *c += 1;
                }
            }
        }
    })?;
    Ok(t_grid
        .iter()
        .zip(thresholds)
        .zip(counts)
        .map(|((&t, threshold), successes)| {
            let ci = stats::clopper_pearson(successes, samples as u64, 0.95);
            let analytic_bound = (-t * (n * p).sqrt() / std::f64::consts::SQRT_2).exp();
            TailRow {
                t,
                threshold,
                frequency: successes as f64 / samples as f64,
                successes,
                trials: samples as u64,
                ci,
                analytic_bound,
                consistent: analytic_bound <= ci.high,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessMoment {
    pub q: f64,
    /// `(2/p) ||X_1||_q = (2/p) (Gamma(q+1) 2^(-q/2))^(1/q)`.
    pub analytic: f64,
    pub monte_carlo: NormEstimate,
    /// `analytic * p / q`, the constant `c` in `(2/p)||X_1||_q >= c q / p`.
    pub implied_c: f64,
}

/// `(E[((2/p)|X_1|)^q])^(1/q)`, exactly and by simulation.
pub fn exponential_witness_moment(
    spec: &DistributionSpec,
    p: f64,
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<WitnessMoment> {
    require_exponential(spec)?;
    check_p(p, 1.0)?;
    check_p(q, 1.0)?;
    let analytic = 2.0 / p * laplace_abs_moment(std::f64::consts::FRAC_1_SQRT_2, q).powf(1.0 / q);
    let mut logs = Vec::with_capacity(samples);
    let dim = spec.dim();
    for_each_block(spec, samples, seed, |block| {
        for row in block.chunks_exact(dim) {
            logs.push(q * (2.0 / p * row[0].abs()).ln());
        }
    })?;
    let (lme, ci) = stats::log_mean_exp_with_ci(&logs, seed);
    let back = |x: f64| (x / q).exp();
    let monte_carlo = NormEstimate::with_interval(
        back(lme),
        Interval { low: back(ci.low), high: back(ci.high) },
        Method::MonteCarlo,
    );
    Ok(WitnessMoment { q, analytic, monte_carlo, implied_c: analytic * p / q })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    /// `||s||_{Z_p}` of the rescaled vector.
    pub lhs: f64,
    /// `max_{|I| <= p} ||s 1_I||_{Z_p}`.
    pub term_sparse: f64,
    pub sparse_support: Vec<usize>,
    /// `sup { <t, s> : ||t||_{M_p} <= 1, |t| <= p^(-1/2) }`.
    pub term_euclid: f64,
    /// `(lhs - term_sparse) / term_euclid`.
    pub implied_c1: f64,
}

/// Largest number of supports enumerated for the sparse term.
pub const MAX_SUPPORTS: u64 = 1_000_000;

/// `F(t) = lambda H(t) + (1 - lambda) (|t|/r)^p`, whose `p`-th root is the
/// norm `(lambda ||t||_{M_p}^p + (1-lambda) (|t|/r)^p)^(1/p)`.
struct Capped<'a> {
    inner: &'a dyn MpOracle,
    lambda: f64,
    r: f64,
}

impl Capped<'_> {
    fn parts(&self, t: &[f64]) -> (f64, f64, f64) {
        let p = self.inner.p();
        let len = euclidean_norm(t);
        let a = self.lambda.ln() + self.inner.log_moment(t);
        let b = (1.0 - self.lambda).ln() + p * (len / self.r).ln();
        (a, b, crate::special::log_add_exp(a, b))
    }
}

impl MpOracle for Capped<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn p(&self) -> f64 {
        self.inner.p()
    }

    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }

    fn log_moment(&self, t: &[f64]) -> f64 {
        self.parts(t).2
    }

    fn local_model(&self, t: &[f64], hessian: bool) -> LocalModel {
        let p = self.p();
        let n = t.len();
        let (a, _, log_f) = self.parts(t);
        let w1 = if self.lambda > 0.0 { (a - log_f).exp() } else { 0.0 };
        let w2 = 1.0 - w1;
        let r2: f64 = t.iter().map(|x| x * x).sum();
        let v = DVector::from_column_slice(t);
        let inner = if w1 > 0.0 { Some(self.inner.local_model(t, hessian)) } else { None };
        let mut grad = &v * (w2 * p / r2);
        if let Some(m) = &inner {
            grad += &m.grad * w1;
        }
        let hess = hessian.then(|| {
            let mut h = (DMatrix::identity(n, n) + &v * v.transpose() * ((p - 2.0) / r2)) * (w2 * p / r2);
            if let Some(m) = &inner {
                h += m.hess.as_ref().expect("hessian requested") * w1;
            }
            h
        });
        LocalModel { log_h: log_f, grad, hess }
    }

    fn second_moment(&self) -> Option<&DMatrix<f64>> {
        None
    }
}

fn capped_dual(norm: &MpNorm, s: &[f64], lambda: f64, r: f64, opts: &DualSolveOptions) -> f64 {
    let len = euclidean_norm(s);
    if lambda <= 0.0 {
        return r * len;
    }
    let o = Capped { inner: norm.oracle(), lambda, r };
    let sh: Vec<f64> = s.iter().map(|x| x / len).collect();
    let starts = solver::start_directions(norm.oracle(), &sh, opts.starts, norm.seed());
    let out = solver::solve(&o, &sh, &starts, &opts.params());
    len * out.log_ratio.exp()
}

/// Evaluates both sides of the sparse plus Euclidean decomposition of
/// `||s||_{Z_p(X)}` for unconditional `X`, after rescaling coordinates to
/// `E|X_i| = 1`.
///
/// The Euclidean term is a support function of the intersection of two
/// balls. Writing `max(a^p, b^p) = max_lambda (lambda a^p + (1-lambda) b^p)`
/// and exchanging min and max (the inner problem is convex in `t`, linear
/// in `lambda`) turns it into `min_lambda` of the dual norm of
/// `(lambda ||t||_{M_p}^p + (1-lambda)(|t|/r)^p)^(1/p)`, a unimodal function
/// of `lambda` minimized by golden-section search.
pub fn unconditional_decomposition_check(
    spec: &DistributionSpec,
    p: f64,
    s: &[f64],
    opts: &DualSolveOptions,
    seed: u64,
) -> Result<DecompositionCheck> {
    check_p(p, 2.0)?;
    let n = spec.dim();
    if !spec.capabilities().is_unconditional {
        return Err(invalid(format!("{} is not unconditional", spec.family_name())));
    }
    if p > n as f64 {
        return Err(invalid(format!("need p <= n, got p={p}, n={n}")));
    }
    if s.len() != n {
        return Err(invalid("vector length differs from dimension"));
    }
    let m = p.floor() as usize;
    let supports = binomial(n as u64, m as u64);
    if supports > num_bigint::BigUint::from(MAX_SUPPORTS) {
        return Err(Error::ResourceGuard(format!("{supports} supports of size {m}")));
    }
    let scales: Vec<f64> = (0..n).map(|i| marginal_abs_moment(spec, i, 1.0)).collect::<Result<_>>()?;
    let normalized = if scales.iter().all(|&a| a == 1.0) {
        spec.clone()
    } else {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(n, scales.iter().map(|a| 1.0 / a)));
        DistributionSpec::linear_image(d, spec.clone())?
    };
    let norm = MpNorm::from_spec(&normalized, p, opts, seed)?;
    let lhs = zp_norm(&norm, s, opts)?.value;

    let mut term_sparse = 0.0;
    let mut sparse_support = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        if idx.iter().any(|&i| s[i] != 0.0) {
            let mut masked = vec![0.0; n];
            for &i in &idx {
                masked[i] = s[i];
            }
            let v = zp_norm(&norm, &masked, opts)?.value;
            if v > term_sparse {
                term_sparse = v;
                sparse_support = idx.clone();
            }
        }
        // Next m-subset in lexicographic order.
        let Some(pos) = (0..m).rev().find(|&j| idx[j] < n - m + j) else { break };
        idx[pos] += 1;
        for j in pos + 1..m {
            idx[j] = idx[j - 1] + 1;
        }
    }

    let r = p.powf(-0.5);
    let term_euclid = if euclidean_norm(s) == 0.0 {
        0.0
    } else {
        let f = |lambda: f64| {
            if lambda >= 1.0 {
                lhs
            } else {
                capped_dual(&norm, s, lambda, r, opts)
            }
        };
        golden_min(f, 0.0, 1.0, 60)
    };
    let implied_c1 = if term_euclid > 0.0 { (lhs - term_sparse) / term_euclid } else { 0.0 };
    Ok(DecompositionCheck { lhs, term_sparse, sparse_support, term_euclid, implied_c1 })
}

/// Minimum of a unimodal `f` on `[a, b]`, endpoints included.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = f(a).min(f(b));
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best
}
