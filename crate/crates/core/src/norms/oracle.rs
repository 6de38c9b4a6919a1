//! Second-order models of `H(t) = E|<t, X>|^p`.
//!
//! The dual solver needs `ln H`, `grad H / H` and `hess H / H` at a point.
//! Working with ratios keeps every quantity at unit scale regardless of `p`.

use nalgebra::{DMatrix, DVector};

use super::{check_p, dot, Power};
use crate::dists::{covariance, marginal_abs_moment, DistributionSpec, Family, SampleCache};
use crate::error::{invalid, Error, Result};

/// `ln H(t)`, `grad H(t) / H(t)` and optionally `hess H(t) / H(t)`.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub log_h: f64,
    pub grad: DVector<f64>,
    pub hess: Option<DMatrix<f64>>,
}

/// Evaluator of `H(t) = E|<t, X>|^p` for one law and one `p`.
pub trait MpOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn p(&self) -> f64;
    /// Whether `H` is the true moment rather than a sample average.
    fn is_exact(&self) -> bool;
    /// `ln H(t)`; `-inf` when `<t, X> = 0` almost surely.
    fn log_moment(&self, t: &[f64]) -> f64;
    fn local_model(&self, t: &[f64], hessian: bool) -> LocalModel;
    /// `E X X^T` for the same law, when known.
    fn second_moment(&self) -> Option<&DMatrix<f64>>;

    /// `||t||_{M_p}`.
    fn norm(&self, t: &[f64]) -> f64 {
        (self.log_moment(t) / self.p()).exp()
    }
}

/// `H` for the empirical law of a frozen sample.
#[derive(Debug, Clone)]
pub struct EmpiricalOracle {
    cache: SampleCache,
    p: f64,
    power: Power,
    second: DMatrix<f64>,
}

impl EmpiricalOracle {
    pub fn new(cache: SampleCache, p: f64) -> Result<Self> {
        check_p(p, 2.0)?;
        let second = cache.second_moment();
        Ok(Self { power: Power::new(p - 2.0), cache, p, second })
    }

    pub fn cache(&self) -> &SampleCache {
        &self.cache
    }

    fn projections(&self, t: &[f64]) -> (Vec<f64>, f64) {
        let y: Vec<f64> = self.cache.rows().map(|x| dot(x, t)).collect();
        let m = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (y, m)
    }

    fn quadratic(&self, t: &[f64]) -> f64 {
        let v = DVector::from_column_slice(t);
        v.dot(&(&self.second * &v))
    }
}

impl MpOracle for EmpiricalOracle {
    fn dim(&self) -> usize {
        self.cache.dim()
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn log_moment(&self, t: &[f64]) -> f64 {
        if self.p == 2.0 {
            return self.quadratic(t).ln();
        }
        let (y, m) = self.projections(t);
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        let pw = Power::new(self.p);
        let w: f64 = y.iter().map(|v| pw.of(v.abs() / m)).sum();
        self.p * m.ln() + (w / y.len() as f64).ln()
    }

    fn local_model(&self, t: &[f64], hessian: bool) -> LocalModel {
        let n = self.dim();
        let p = self.p;
        if p == 2.0 {
            let v = DVector::from_column_slice(t);
            let st = &self.second * &v;
            let h = v.dot(&st);
            return LocalModel {
                log_h: h.ln(),
                grad: st * (2.0 / h),
                hess: hessian.then(|| &self.second * (2.0 / h)),
            };
        }
        let (y, m) = self.projections(t);
        if m == 0.0 {
            return LocalModel { log_h: f64::NEG_INFINITY, grad: DVector::zeros(n), hess: None };
        }
        // z = |y|/m; weights z^p, z^(p-1) sign(y), z^(p-2).
        let mut w = 0.0;
        let mut g = vec![0.0; n];
        let mut hs = if hessian { vec![0.0; n * n] } else { Vec::new() };
        for (x, &yj) in self.cache.rows().zip(&y) {
            let z = yj.abs() / m;
            let q = self.power.of(z);
            let r = q * z;
            w += r * z;
            let r = r.copysign(yj);
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += r * xi;
            }
            if hessian && q != 0.0 {
                for a in 0..n {
                    let qa = q * x[a];
                    let row = &mut hs[a * n..a * n + a + 1];
                    for (hb, xb) in row.iter_mut().zip(&x[..=a]) {
                        *hb += qa * xb;
                    }
                }
            }
        }
        let count = y.len() as f64;
        let log_h = p * m.ln() + (w / count).ln();
        let gs = p / (m * w);
        let grad = DVector::from_iterator(n, g.into_iter().map(|v| v * gs));
        let hess = hessian.then(|| {
            let hsc = p * (p - 1.0) / (m * m * w);
            DMatrix::from_fn(n, n, |a, b| {
                let (a, b) = if a >= b { (a, b) } else { (b, a) };
                hs[a * n + b] * hsc
            })
        });
        LocalModel { log_h, grad, hess }
    }

    fn second_moment(&self) -> Option<&DMatrix<f64>> {
        Some(&self.second)
    }
}

#[derive(Debug, Clone)]
enum ExactKind {
    /// Independent coordinates; `coef[i][j] = E X_i^{2j} / (2j)!`.
    Product { coef: Vec<Vec<f64>> },
    /// `H(t) = kappa |t|^{2k}`.
    Rotational { kappa: f64 },
    /// `H(t) = n^{k-1} sum_i t_i^{2k}`.
    Sparse,
    /// `H(t) = H_base(A^T t)`.
    Linear { a: DMatrix<f64>, base: Box<ExactEvenOracle> },
}

/// Exact `H(t) = E<t, X>^{2k}` for families with closed-form even moments.
#[derive(Debug, Clone)]
pub struct ExactEvenOracle {
    n: usize,
    k: u32,
    kind: ExactKind,
    second: DMatrix<f64>,
    ln_fact: f64,
}

impl ExactEvenOracle {
    /// Available for product families, rotation-invariant families, the
    /// sparse family and linear images of any of these.
    pub fn new(spec: &DistributionSpec, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be positive"));
        }
        spec.validate()?;
        let n = spec.dim();
        let kind = match &spec.family {
            Family::GaussianIsotropic
            | Family::ExponentialProduct
            | Family::RademacherProduct
            | Family::UniformCube
            | Family::UnconditionalProduct { .. } => {
                let mut coef = Vec::with_capacity(n);
                for i in 0..n {
                    let mut row = vec![1.0];
                    let mut fact = 1.0f64;
                    for j in 1..=k {
                        fact *= ((2 * j - 1) * 2 * j) as f64;
                        row.push(marginal_abs_moment(spec, i, 2.0 * j as f64)? / fact);
                    }
                    coef.push(row);
                }
                ExactKind::Product { coef }
            }
            Family::UniformSphere { .. } => ExactKind::Rotational { kappa: marginal_abs_moment(spec, 0, 2.0 * k as f64)? },
            Family::SparseIsotropic => ExactKind::Sparse,
            Family::LinearImage { base, .. } => ExactKind::Linear {
                a: spec.matrix().expect("linear image"),
                base: Box::new(ExactEvenOracle::new(base, k)?),
            },
        };
        let ln_fact = (1..=2 * k).map(|j| (j as f64).ln()).sum();
        Ok(Self { n, k, kind, second: covariance(spec), ln_fact })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    fn model(&self, t: &[f64], hessian: bool) -> LocalModel {
        let n = self.n;
        let k = self.k as usize;
        let two_k = 2.0 * k as f64;
        match &self.kind {
            ExactKind::Rotational { kappa } => {
                let r2: f64 = t.iter().map(|x| x * x).sum();
                let v = DVector::from_column_slice(t);
                LocalModel {
                    log_h: kappa.ln() + 0.5 * two_k * r2.ln(),
                    grad: &v * (two_k / r2),
                    hess: hessian.then(|| {
                        (DMatrix::identity(n, n) + &v * v.transpose() * ((two_k - 2.0) / r2)) * (two_k / r2)
                    }),
                }
            }
            ExactKind::Sparse => {
                let m = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if m == 0.0 {
                    return LocalModel { log_h: f64::NEG_INFINITY, grad: DVector::zeros(n), hess: None };
                }
                let z: Vec<f64> = t.iter().map(|x| x / m).collect();
                let s: f64 = z.iter().map(|x| x.powi(2 * k as i32)).sum();
                let log_h = (k as f64 - 1.0) * (n as f64).ln() + two_k * m.ln() + s.ln();
                let grad = DVector::from_iterator(n, z.iter().map(|x| two_k * x.powi(2 * k as i32 - 1) / (s * m)));
                let hess = hessian.then(|| {
                    DMatrix::from_diagonal(&DVector::from_iterator(
                        n,
                        z.iter().map(|x| two_k * (two_k - 1.0) * x.powi(2 * k as i32 - 2) / (s * m * m)),
                    ))
                });
                LocalModel { log_h, grad, hess }
            }
            ExactKind::Linear { a, base } => {
                let at = a.tr_mul(&DVector::from_column_slice(t));
                let bm = base.model(at.as_slice(), hessian);
                LocalModel {
                    log_h: bm.log_h,
                    grad: a * bm.grad,
                    hess: bm.hess.map(|h| a * h * a.transpose()),
                }
            }
            ExactKind::Product { coef } => product_model(coef, t, k, hessian, self.ln_fact),
        }
    }
}

/// Truncated product of two polynomials in `z`, degree `<= k`.
fn poly_mul(a: &[f64], b: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k + 1];
    for (i, &ai) in a.iter().enumerate().take(k + 1) {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(k + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `[z^k] (a b)`.
fn top_coef(a: &[f64], b: &[f64], k: usize) -> f64 {
    (0..=k).map(|i| a[i] * b[k - i]).sum()
}

/// Product families: `H = (2k)! [z^k] prod_i phi_i(z)` with
/// `phi_i(z) = sum_j coef[i][j] t_i^{2j} z^j`. Derivatives in `t_i` act on one
/// factor at a time, so gradient and Hessian use products with one or two
/// factors left out.
fn product_model(coef: &[Vec<f64>], t: &[f64], k: usize, hessian: bool, ln_fact: f64) -> LocalModel {
    let n = t.len();
    let m = t.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return LocalModel { log_h: f64::NEG_INFINITY, grad: DVector::zeros(n), hess: None };
    }
    // Work with u = t/m and undo the scaling at the end.
    let u: Vec<f64> = t.iter().map(|x| x / m).collect();
    let powers = |x: f64, e: i32| if e < 0 { 0.0 } else { x.powi(e) };
    let phi: Vec<Vec<f64>> = (0..n).map(|i| (0..=k).map(|j| coef[i][j] * powers(u[i], 2 * j as i32)).collect()).collect();
    let dphi: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..=k).map(|j| coef[i][j] * 2.0 * j as f64 * powers(u[i], 2 * j as i32 - 1)).collect())
        .collect();
    let mut prefix = vec![vec![0.0; k + 1]; n + 1];
    prefix[0][0] = 1.0;
    for i in 0..n {
        prefix[i + 1] = poly_mul(&prefix[i], &phi[i], k);
    }
    let mut suffix = vec![vec![0.0; k + 1]; n + 1];
    suffix[n][0] = 1.0;
    for i in (0..n).rev() {
        suffix[i] = poly_mul(&suffix[i + 1], &phi[i], k);
    }
    let h = prefix[n][k];
    let log_h = ln_fact + h.ln() + 2.0 * k as f64 * m.ln();
    let without: Vec<Vec<f64>> = (0..n).map(|i| poly_mul(&prefix[i], &suffix[i + 1], k)).collect();
    let grad = DVector::from_iterator(n, (0..n).map(|i| top_coef(&dphi[i], &without[i], k) / (h * m)));
    let hess = hessian.then(|| {
        let d2phi: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..=k)
                    .map(|j| coef[i][j] * (2 * j * (2 * j).saturating_sub(1)) as f64 * powers(u[i], 2 * j as i32 - 2))
                    .collect()
            })
            .collect();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = top_coef(&d2phi[i], &without[i], k) / (h * m * m);
            // Products over the list with i removed, split around each l > i.
            let others: Vec<usize> = (0..n).filter(|&l| l != i).collect();
            let mut pre = vec![vec![0.0; k + 1]; others.len() + 1];
            pre[0][0] = 1.0;
            for (c, &l) in others.iter().enumerate() {
                pre[c + 1] = poly_mul(&pre[c], &phi[l], k);
            }
            let mut suf = vec![vec![0.0; k + 1]; others.len() + 1];
            suf[others.len()][0] = 1.0;
            for c in (0..others.len()).rev() {
                suf[c] = poly_mul(&suf[c + 1], &phi[others[c]], k);
            }
            for (c, &l) in others.iter().enumerate() {
                if l < i {
                    continue;
                }
                let rest = poly_mul(&pre[c], &suf[c + 1], k);
                let dd = poly_mul(&dphi[i], &dphi[l], k);
                let v = top_coef(&dd, &rest, k) / (h * m * m);
                out[(i, l)] = v;
                out[(l, i)] = v;
            }
        }
        out
    });
    LocalModel { log_h, grad, hess }
}

impl MpOracle for ExactEvenOracle {
    fn dim(&self) -> usize {
        self.n
    }

    fn p(&self) -> f64 {
        2.0 * self.k as f64
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn log_moment(&self, t: &[f64]) -> f64 {
        self.model(t, false).log_h
    }

    fn local_model(&self, t: &[f64], hessian: bool) -> LocalModel {
        self.model(t, hessian)
    }

    fn second_moment(&self) -> Option<&DMatrix<f64>> {
        Some(&self.second)
    }
}

/// Checks that an oracle built for `spec` matches its dimension.
pub(crate) fn check_dim(oracle: &dyn MpOracle, v: &[f64]) -> Result<()> {
    if v.len() != oracle.dim() {
        return Err(Error::InvalidArgument(format!(
            "vector length {} differs from dimension {}",
            v.len(),
            oracle.dim()
        )));
    }
    Ok(())
}
