//! `M_p` norms `||t||_{M_p(X)} = (E|<t, X>|^p)^(1/p)`, exact or by sample
//! average, and the Rademacher-sum machinery used for unconditional vectors.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::combi::enumerate_multiindices;
use crate::dists::{mixed_even_moment, DistributionSpec, SampleCache};
use crate::error::{invalid, Error, Result};
use crate::stats::{self, Interval};

pub use oracle::{EmpiricalOracle, ExactEvenOracle, LocalModel, MpOracle};
pub(crate) use oracle::check_dim;

/// How a [`NormEstimate`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactEven,
    MonteCarlo,
    Surrogate,
    BruteForce,
}

impl Method {
    pub fn is_exact(self) -> bool {
        matches!(self, Method::ExactEven | Method::BruteForce)
    }
}

/// A feasible point certifying a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub direction: Vec<f64>,
    pub value: f64,
}

/// An upper bound together with the argument that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lower_witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upper_bound: Option<UpperBound>,
}

/// A value with a 95% interval and optional certified bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: Method,
    #[serde(default)]
    pub certificates: Certificates,
    /// Set when an optimizer stopped before converging; `value` is then
    /// only known to be a lower bound.
    #[serde(default)]
    pub lower_bound_only: bool,
}

impl NormEstimate {
    /// Zero-width estimate.
    pub fn exact(value: f64, method: Method) -> Self {
        Self::with_interval(value, Interval::point(value), method)
    }

    pub fn with_interval(value: f64, ci: Interval, method: Method) -> Self {
        let ci = ci.cover(value);
        Self {
            value,
            ci_low: ci.low,
            ci_high: ci.high,
            method,
            certificates: Certificates::default(),
            lower_bound_only: false,
        }
    }

    pub fn interval(&self) -> Interval {
        Interval { low: self.ci_low, high: self.ci_high }
    }

    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    /// Multiplies value, interval and certificates by `c >= 0`.
    pub fn scaled(mut self, c: f64) -> Self {
        self.value *= c;
        self.ci_low *= c;
        self.ci_high *= c;
        if let Some(w) = &mut self.certificates.lower_witness {
            w.value *= c;
        }
        if let Some(u) = &mut self.certificates.upper_bound {
            u.value *= c;
        }
        self
    }
}

pub(crate) fn check_p(p: f64, min: f64) -> Result<()> {
    if !(p >= min && p.is_finite()) {
        return Err(invalid(format!("p must be a finite number >= {min}, got {p}")));
    }
    Ok(())
}

pub(crate) fn euclidean_norm(t: &[f64]) -> f64 {
    let m = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * t.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

/// `|y|^p` evaluated as `z^p` with `z = |y| / m <= 1`, exponent by repeated
/// multiplication when `p` is a small integer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Power {
    p: f64,
    int: Option<i32>,
}

impl Power {
    pub(crate) fn new(p: f64) -> Self {
        let int = (p.fract() == 0.0 && p <= 64.0).then_some(p as i32);
        Self { p, int }
    }

    #[inline]
    pub(crate) fn of(&self, z: f64) -> f64 {
        match self.int {
            Some(k) => z.powi(k),
            None => z.powf(self.p),
        }
    }
}

/// Per-sample values `|<u, x_j>|^p` scaled by `max_j |<u, x_j>|^p`,
/// returned with `ln` of that scale.
fn scaled_powers(cache: &SampleCache, p: f64, u: &[f64]) -> (Vec<f64>, f64) {
    let y: Vec<f64> = cache.rows().map(|x| dot(x, u)).collect();
    let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return (vec![0.0; y.len()], f64::NEG_INFINITY);
    }
    let pw = Power::new(p);
    (y.iter().map(|v| pw.of(v.abs() / m)).collect(), p * m.ln())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `||t||_{M_p}` of the empirical law of `cache`, with a bootstrap interval.
///
/// The direction `t/|t|` is evaluated and `|t|` multiplied back at the end;
/// the per-sample powers are scaled by their maximum so no intermediate
/// overflows for any `p`.
pub fn mp_norm_mc(cache: &SampleCache, p: f64, t: &[f64]) -> Result<NormEstimate> {
    check_p(p, 1.0)?;
    if t.len() != cache.dim() {
        return Err(invalid(format!("vector length {} differs from dimension {}", t.len(), cache.dim())));
    }
    let len = euclidean_norm(t);
    if len == 0.0 {
        return Ok(NormEstimate::exact(0.0, Method::MonteCarlo));
    }
    let u: Vec<f64> = t.iter().map(|x| x / len).collect();
    let (w, log_scale) = scaled_powers(cache, p, &u);
    if log_scale == f64::NEG_INFINITY {
        return Ok(NormEstimate::exact(0.0, Method::MonteCarlo));
    }
    let (mean, ci) = stats::mean_with_ci(&w, cache.seed());
    let root = |h: f64| len * ((h.ln() + log_scale) / p).exp();
    let ci = Interval { low: root(ci.low.max(0.0)), high: root(ci.high) };
    Ok(NormEstimate::with_interval(root(mean), ci, Method::MonteCarlo))
}

/// `||t||_{M_{2k}}` from the exact expansion
/// `E<t,X>^{2k} = sum_{|alpha| = k} binom(2k, 2 alpha) t^{2 alpha} E X^{2 alpha}`.
pub fn mp_norm_exact_even(spec: &DistributionSpec, k: u32, t: &[f64]) -> Result<NormEstimate> {
    let caps = spec.capabilities();
    if !(caps.is_unconditional && caps.has_exact_mixed_moments) {
        return Err(Error::NoExactOracle(format!(
            "{} is not unconditional with exact mixed moments; use mp_norm_mc",
            spec.family_name()
        )));
    }
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let n = spec.dim();
    if t.len() != n {
        return Err(invalid(format!("vector length {} differs from dimension {n}", t.len())));
    }
    let len = euclidean_norm(t);
    if len == 0.0 {
        return Ok(NormEstimate::exact(0.0, Method::ExactEven));
    }
    let terms = crate::combi::binomial(n as u64 + k as u64 - 1, k as u64);
    if terms > num_bigint::BigUint::from(crate::combi::MAX_TERMS) {
        return Err(Error::ResourceGuard(format!("{terms} multiindices for n={n}, k={k}")));
    }
    let u2: Vec<f64> = t.iter().map(|x| (x / len) * (x / len)).collect();
    let mut sum = 0.0;
    for alpha in enumerate_multiindices(n, k) {
        let mono = alpha.monomial(&u2);
        if mono == 0.0 {
            continue;
        }
        let moment = mixed_even_moment(spec, &alpha)?;
        if moment == 0.0 {
            continue;
        }
        let coef = num_traits::ToPrimitive::to_f64(&alpha.doubled_multinomial()).unwrap_or(f64::INFINITY);
        sum += coef * mono * moment;
    }
    let value = len * sum.powf(1.0 / (2.0 * k as f64));
    Ok(NormEstimate::exact(value, Method::ExactEven))
}

/// Gradient of `t -> ||t||_{M_p}` for the empirical law of `cache`.
pub fn mp_norm_gradient(cache: &SampleCache, p: f64, t: &[f64]) -> Result<Vec<f64>> {
    check_p(p, 2.0)?;
    let n = cache.dim();
    if t.len() != n {
        return Err(invalid(format!("vector length {} differs from dimension {n}", t.len())));
    }
    let len = euclidean_norm(t);
    if len == 0.0 {
        return Err(Error::Degenerate("the norm is not differentiable at 0".into()));
    }
    let u: Vec<f64> = t.iter().map(|x| x / len).collect();
    let y: Vec<f64> = cache.rows().map(|x| dot(x, &u)).collect();
    let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return Err(Error::Degenerate("<t, X> vanishes on every sample".into()));
    }
    // With z_j = |y_j|/m, W = sum z_j^p and r_j = sign(y_j) z_j^(p-1):
    // grad = (W/N)^(1/p) / W * sum_j r_j x_j.
    let pm1 = Power::new(p - 1.0);
    let mut w = 0.0;
    let mut acc = vec![0.0; n];
    for (x, &yj) in cache.rows().zip(&y) {
        let z = yj.abs() / m;
        let r = pm1.of(z);
        w += r * z;
        let r = r.copysign(yj);
        for (a, xi) in acc.iter_mut().zip(x) {
            *a += r * xi;
        }
    }
    let scale = (w / cache.count() as f64).powf(1.0 / p) / w;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// Largest length accepted by [`rademacher_norm_exact`].
pub const MAX_RADEMACHER_LEN: usize = 24;

/// Exact `|| sum_i a_i eps_i ||_p` over all sign patterns.
///
/// The sum is symmetric, so the first sign is fixed and the remaining
/// `2^(n-1)` patterns are visited in Gray-code order, one coordinate flip
/// per step.
pub fn rademacher_norm_exact(a: &[f64], p: f64) -> Result<NormEstimate> {
    check_p(p, 1.0)?;
    let n = a.len();
    if n > MAX_RADEMACHER_LEN {
        return Err(Error::ResourceGuard(format!(
            "2^{n} sign patterns (limit n <= {MAX_RADEMACHER_LEN})"
        )));
    }
    let scale: f64 = a.iter().map(|x| x.abs()).sum();
    if scale == 0.0 {
        return Ok(NormEstimate::exact(0.0, Method::BruteForce));
    }
    let a: Vec<f64> = a.iter().map(|x| x / scale).collect();
    let pw = Power::new(p);
    let mut signs = vec![1.0f64; n];
    let mut s: f64 = a.iter().sum();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut add = |v: f64| {
        // Neumaier summation
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    };
    add(pw.of(s.abs()));
    let patterns = 1u64 << (n - 1);
    for g in 1..patterns {
        let i = g.trailing_zeros() as usize + 1;
        s -= 2.0 * signs[i] * a[i];
        signs[i] = -signs[i];
        add(pw.of(s.abs()));
    }
    let mean = (sum + comp) / patterns as f64;
    Ok(NormEstimate::exact(scale * mean.powf(1.0 / p), Method::BruteForce))
}

/// `sum_{i <= floor(p)} a*_i + sqrt(p) (sum_{i > floor(p)} a*_i^2)^(1/2)`,
/// where `a*` is the nonincreasing rearrangement of `|a|`.
pub fn hitczenko_surrogate(a: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    let head = (p.floor().max(0.0) as usize).min(s.len());
    let h: f64 = s[..head].iter().sum();
    h + p.sqrt() * euclidean_norm(&s[head..])
}

/// `||<t,X>||_p / ||<t,X>||_q` on the empirical law of `cache`.
pub fn moment_growth_ratio(cache: &SampleCache, t: &[f64], p: f64, q: f64) -> Result<f64> {
    check_p(q, 1.0)?;
    if p < q {
        return Err(invalid(format!("need p >= q, got p={p}, q={q}")));
    }
    let lo = mp_norm_mc(cache, q, t)?;
    if lo.value == 0.0 {
        return Err(Error::Degenerate("<t, X> vanishes on the sample".into()));
    }
    if p == q {
        return Ok(1.0);
    }
    Ok(mp_norm_mc(cache, p, t)?.value / lo.value)
}
