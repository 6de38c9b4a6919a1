//! Covering and packing numbers of convex bodies.
//!
//! Bodies are described by their gauge. Nets are computed on a finite
//! candidate cloud drawn from the body (gauge-normalized random directions
//! plus interior dilations), so greedy counts are statements about the
//! cloud, not exact covering numbers. Certified lower bounds on
//! `N(T, eps B_2^n)` come from packings of points of `T` and from volume.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dists::DistributionSpec;
use crate::dual::{DualSolveOptions, MpNorm};
use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::special::ln_unit_ball_volume;
use crate::stats::{self, Interval};

/// Membership tolerance on the gauge.
pub const GAUGE_TOL: f64 = 1e-9;

/// A convex body containing the origin, given by its gauge.
pub trait BodyOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Minkowski functional `inf { r > 0 : x in r T }`; `inf` when no
    /// dilation of `T` contains `x`.
    fn gauge(&self, x: &[f64]) -> f64;

    fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0 + GAUGE_TOL
    }

    /// The boundary point on the ray through `dir` (the origin if the body
    /// has no extent in that direction).
    fn boundary_point(&self, dir: &[f64]) -> Vec<f64> {
        let g = self.gauge(dir);
        if g.is_infinite() {
            return vec![0.0; dir.len()];
        }
        dir.iter().map(|x| x / g).collect()
    }

    /// `ln vol(T)` when known in closed form.
    fn ln_volume(&self) -> Option<f64> {
        None
    }

    /// An upper bound on `max_{x in T} |x|`.
    fn circumradius(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanBall {
    pub n: usize,
    pub radius: f64,
}

impl BodyOracle for EuclideanBall {
    fn dim(&self) -> usize {
        self.n
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        crate::norms::euclidean_norm(x) / self.radius
    }

    fn ln_volume(&self) -> Option<f64> {
        Some(self.n as f64 * self.radius.ln() + ln_unit_ball_volume(self.n))
    }

    fn circumradius(&self) -> f64 {
        self.radius
    }
}

/// `{ x : max_i |x_i| <= half_side }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub n: usize,
    pub half_side: f64,
}

impl BodyOracle for Cube {
    fn dim(&self) -> usize {
        self.n
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.half_side
    }

    fn ln_volume(&self) -> Option<f64> {
        Some(self.n as f64 * (2.0 * self.half_side).ln())
    }

    fn circumradius(&self) -> f64 {
        self.half_side * (self.n as f64).sqrt()
    }
}

/// The segment `[low, high]` in dimension one, `low <= 0 <= high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub low: f64,
    pub high: f64,
}

impl BodyOracle for Segment {
    fn dim(&self) -> usize {
        1
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        let v = x[0];
        if v > 0.0 {
            if self.high > 0.0 {
                v / self.high
            } else {
                f64::INFINITY
            }
        } else if v < 0.0 {
            if self.low < 0.0 {
                v / self.low
            } else {
                f64::INFINITY
            }
        } else {
            0.0
        }
    }

    fn ln_volume(&self) -> Option<f64> {
        Some((self.high - self.low).ln())
    }

    fn circumradius(&self) -> f64 {
        self.high.max(-self.low)
    }
}

/// `factor * T`.
pub struct Scaled<B> {
    pub inner: B,
    pub factor: f64,
}

impl<B: BodyOracle> BodyOracle for Scaled<B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        self.inner.gauge(x) / self.factor
    }

    fn boundary_point(&self, dir: &[f64]) -> Vec<f64> {
        self.inner.boundary_point(dir).into_iter().map(|v| v * self.factor).collect()
    }

    fn ln_volume(&self) -> Option<f64> {
        self.inner.ln_volume().map(|v| v + self.dim() as f64 * self.factor.ln())
    }

    fn circumradius(&self) -> f64 {
        self.inner.circumradius() * self.factor
    }
}

/// The unit ball `M_p(X)` of a frozen norm.
pub struct MpBall {
    pub norm: MpNorm,
}

impl BodyOracle for MpBall {
    fn dim(&self) -> usize {
        self.norm.dim()
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        self.norm.mp_norm(x)
    }

    /// `||t||_{M_p} >= ||t||_{M_2} >= sqrt(lambda_min(E X X^T)) |t|`.
    fn circumradius(&self) -> f64 {
        match self.norm.oracle().second_moment() {
            Some(s) => {
                let lmin = s.clone().symmetric_eigenvalues().min();
                if lmin > 0.0 {
                    1.0 / lmin.sqrt()
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    /// Farthest-point traversal stopped at covering radius `eps`: an upper
    /// bound on `N(cloud, eps)`, and its centers are `eps`-separated.
    GreedyCover,
    /// Points of the body with pairwise distances `> 2 eps`: certifies
    /// `N(T, eps) >= count`.
    PackingLower,
    VolumeLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetMetadata {
    pub seed: u64,
    pub cloud_size: usize,
    pub boundary_points: usize,
    pub interior_points: usize,
    /// Minimum pairwise distance guaranteed between centers.
    pub separation: f64,
    /// Largest distance from a cloud point to its nearest center.
    pub achieved_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetResult {
    pub eps: f64,
    pub centers: Vec<Vec<f64>>,
    pub count: usize,
    pub kind: NetKind,
    pub metadata: NetMetadata,
}

/// Default cloud: 2 * 10^4 boundary and 10^4 interior points.
pub const DEFAULT_CANDIDATES: usize = 30_000;
/// Smallest cloud accepted by [`greedy_net`] and [`packing_lower`].
pub const MIN_CANDIDATES: usize = 1000;
const CLOUD_BLOCK: usize = 4096;

/// Points drawn from a body, stored row-major.
#[derive(Debug, Clone)]
pub struct Cloud {
    n: usize,
    points: Vec<f64>,
    boundary: usize,
    seed: u64,
}

impl Cloud {
    /// `2/3` of the points on the boundary (gauge-normalized Gaussian
    /// directions), the rest at radius `U^(1/n)` of a fresh boundary point.
    pub fn new(body: &dyn BodyOracle, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("cloud needs at least one point"));
        }
        let n = body.dim();
        let boundary = (2 * count).div_ceil(3);
        let stream_seed = rng::derive_seed(seed, rng::tags::CANDIDATES);
        let mut points = vec![0.0; count * n];
        points.par_chunks_mut(CLOUD_BLOCK * n).enumerate().for_each(|(b, chunk)| {
            let mut r = rng::stream(stream_seed, b as u64);
            for (j, out) in chunk.chunks_exact_mut(n).enumerate() {
                let index = b * CLOUD_BLOCK + j;
                let dir: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
                let mut x = body.boundary_point(&dir);
                if index >= boundary {
                    let u: f64 = r.random();
                    let scale = u.powf(1.0 / n as f64);
                    x.iter_mut().for_each(|v| *v *= scale);
                }
                out.copy_from_slice(&x);
            }
        });
        Ok(Self { n, points, boundary, seed })
    }

    /// Uses the given points as the cloud.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let n = points.first().ok_or_else(|| invalid("empty point set"))?.len();
        if points.iter().any(|p| p.len() != n) {
            return Err(invalid("points have different dimensions"));
        }
        Ok(Self { n, points: points.concat(), boundary: points.len(), seed: 0 })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.n..(j + 1) * self.n]
    }

    /// Farthest-point traversal from the point of least norm, stopping when
    /// every point lies within `threshold` of a center. Ties go to the
    /// lowest index, so the center sequence does not depend on `threshold`.
    fn traversal(&self, threshold: f64) -> (Vec<usize>, f64) {
        let n = self.n;
        let m = self.len();
        let norm2 = |j: usize| self.point(j).iter().map(|v| v * v).sum::<f64>();
        let mut start = 0;
        let mut best = f64::INFINITY;
        for j in 0..m {
            let v = norm2(j);
            if v < best {
                best = v;
                start = j;
            }
        }
        let mut d2 = vec![f64::INFINITY; m];
        let mut centers = Vec::new();
        let mut next = start;
        let t2 = threshold * threshold;
        loop {
            centers.push(next);
            let c = self.point(next).to_vec();
            d2.par_chunks_mut(CLOUD_BLOCK).enumerate().for_each(|(b, chunk)| {
                for (i, d) in chunk.iter_mut().enumerate() {
                    let j = b * CLOUD_BLOCK + i;
                    let x = &self.points[j * n..(j + 1) * n];
                    let v: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                    if v < *d {
                        *d = v;
                    }
                }
            });
            let (mut arg, mut far) = (0, f64::NEG_INFINITY);
            for (j, &v) in d2.iter().enumerate() {
                if v > far {
                    far = v;
                    arg = j;
                }
            }
            if far <= t2 {
                return (centers, far.max(0.0).sqrt());
            }
            next = arg;
        }
    }

    fn net(&self, eps: f64, threshold: f64, kind: NetKind) -> NetResult {
        let (idx, achieved) = self.traversal(threshold);
        NetResult {
            eps,
            centers: idx.iter().map(|&j| self.point(j).to_vec()).collect(),
            count: idx.len(),
            kind,
            metadata: NetMetadata {
                seed: self.seed,
                cloud_size: self.len(),
                boundary_points: self.boundary,
                interior_points: self.len() - self.boundary,
                separation: threshold,
                achieved_radius: achieved,
            },
        }
    }

    /// Greedy `eps`-cover of the cloud.
    pub fn greedy_net(&self, eps: f64) -> NetResult {
        self.net(eps, eps, NetKind::GreedyCover)
    }

    /// Points with pairwise distances `> 2 eps`, so `N(T, eps) >= count`
    /// for any `T` containing the cloud.
    pub fn packing(&self, eps: f64) -> NetResult {
        self.net(eps, 2.0 * eps, NetKind::PackingLower)
    }
}

fn check_net_args(eps: f64, candidates: usize) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if candidates < MIN_CANDIDATES {
        return Err(invalid(format!("need at least {MIN_CANDIDATES} candidates, got {candidates}")));
    }
    Ok(())
}

/// Farthest-point `eps`-net of a candidate cloud drawn from `body`.
pub fn greedy_net(body: &dyn BodyOracle, eps: f64, metric: Metric, candidates: usize, seed: u64) -> Result<NetResult> {
    let Metric::Euclidean = metric;
    check_net_args(eps, candidates)?;
    Ok(Cloud::new(body, candidates, seed)?.greedy_net(eps))
}

/// A `2 eps`-separated subset of a candidate cloud drawn from `body`.
pub fn packing_lower(body: &dyn BodyOracle, eps: f64, candidates: usize, seed: u64) -> Result<NetResult> {
    check_net_args(eps, candidates)?;
    Ok(Cloud::new(body, candidates, seed)?.packing(eps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBound {
    /// `vol(T) / vol(eps B_2^n)`.
    pub value: f64,
    pub ln_value: f64,
    /// 95% interval from the Monte Carlo volume; a point when exact.
    pub ci: Interval,
    pub exact: bool,
}

/// Largest dimension for Monte Carlo volumes.
pub const MAX_MC_VOLUME_DIM: usize = 8;

/// `vol(T) / vol(eps B_2^n)`, a lower bound on `N(T, eps B_2^n)`.
///
/// Uses the closed-form volume when the body has one, otherwise the hit
/// rate of uniform points in the circumscribed ball.
pub fn volume_lower_bound(body: &dyn BodyOracle, eps: f64, mc_points: usize, seed: u64) -> Result<VolumeBound> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let n = body.dim();
    let ln_ball = n as f64 * eps.ln() + ln_unit_ball_volume(n);
    if let Some(lv) = body.ln_volume() {
        let ln_value = lv - ln_ball;
        let value = ln_value.exp();
        return Ok(VolumeBound { value, ln_value, ci: Interval::point(value), exact: true });
    }
    if n > MAX_MC_VOLUME_DIM {
        return Err(Error::Unsupported(format!(
            "Monte Carlo volume needs n <= {MAX_MC_VOLUME_DIM}, got {n}"
        )));
    }
    let radius = body.circumradius();
    if !radius.is_finite() {
        return Err(invalid("the body is unbounded"));
    }
    if mc_points == 0 {
        return Err(invalid("mc_points must be positive"));
    }
    let stream_seed = rng::derive_seed(seed, rng::tags::VOLUME);
    let blocks = mc_points.div_ceil(CLOUD_BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(stream_seed, b as u64);
            let rows = CLOUD_BLOCK.min(mc_points - b * CLOUD_BLOCK);
            let mut h = 0u64;
            for _ in 0..rows {
                let mut x: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
                let len = crate::norms::euclidean_norm(&x);
                let u: f64 = r.random();
                let scale = radius * u.powf(1.0 / n as f64) / len;
                x.iter_mut().for_each(|v| *v *= scale);
                if body.contains(&x) {
                    h += 1;
                }
            }
            h
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .sum();
    let ln_outer = n as f64 * radius.ln() + ln_unit_ball_volume(n) - ln_ball;
    let frac = hits as f64 / mc_points as f64;
    let cp = stats::clopper_pearson(hits, mc_points as u64, 0.95);
    let to_value = |f: f64| (f.ln() + ln_outer).exp();
    let ln_value = frac.ln() + ln_outer;
    Ok(VolumeBound {
        value: to_value(frac),
        ln_value,
        ci: Interval { low: to_value(cp.low), high: to_value(cp.high) },
        exact: false,
    })
}

/// `eps sqrt(n) + (e lambda / p) max(p, ln N)` with `N = net.count`, the
/// entropy bound on `(E ||X||_{Z_p}^2)^(1/2)` for isotropic `X` whose
/// one-dimensional marginals satisfy `||<t,X>||_r <= lambda (r/q) ||<t,X>||_q`.
pub fn entropy_to_zp_bound(spec: &DistributionSpec, p: f64, eps: f64, net: &NetResult, lambda: f64) -> Result<f64> {
    if !spec.capabilities().is_isotropic {
        return Err(invalid(format!("{} is not isotropic", spec.family_name())));
    }
    if !(p >= 1.0 && eps >= 0.0 && lambda > 0.0) {
        return Err(invalid("need p >= 1, eps >= 0 and lambda > 0"));
    }
    let n = spec.dim() as f64;
    let ln_n = (net.count.max(1) as f64).ln();
    Ok(eps * n.sqrt() + std::f64::consts::E * lambda / p * p.max(ln_n))
}

/// Budgets for cloud-based computations on `M_p` balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoverOptions {
    pub candidates: usize,
    pub dual: DualSolveOptions,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self { candidates: DEFAULT_CANDIDATES, dual: DualSolveOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop36Report {
    pub p: f64,
    pub cx: f64,
    /// `e cx / sqrt(p)`.
    pub radius: f64,
    pub net_count: usize,
    /// Size of a `2 radius`-separated subset of the cloud; exceeding the
    /// bound refutes the covering estimate for this `cx`.
    pub packing_count: usize,
    /// `e^p`.
    pub bound: f64,
    pub pass: bool,
    pub refuted: bool,
}

/// Checks `N(M_p(X), e cx / sqrt(p) B_2^n) <= e^p` on a candidate cloud.
pub fn prop36_check(spec: &DistributionSpec, p: f64, cx: f64, opts: &CoverOptions, seed: u64) -> Result<Prop36Report> {
    if !(cx > 0.0) {
        return Err(invalid("cx must be positive"));
    }
    let norm = MpNorm::from_spec(spec, p, &opts.dual, seed)?;
    let body = MpBall { norm };
    let radius = std::f64::consts::E * cx / p.sqrt();
    check_net_args(radius, opts.candidates)?;
    let cloud = Cloud::new(&body, opts.candidates, seed)?;
    let net = cloud.greedy_net(radius);
    let packing = cloud.packing(radius);
    let bound = p.exp();
    Ok(Prop36Report {
        p,
        cx,
        radius,
        net_count: net.count,
        packing_count: packing.count,
        bound,
        pass: (net.count as f64) <= bound,
        refuted: (packing.count as f64) > bound,
    })
}

/// `M_p(X)` as a body, for callers that build their own clouds.
pub fn mp_ball(spec: &DistributionSpec, p: f64, opts: &DualSolveOptions, seed: u64) -> Result<MpBall> {
    Ok(MpBall { norm: MpNorm::from_spec(spec, p, opts, seed)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::euclidean_norm;
    use crate::special::gaussian_abs_moment;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn gauges_and_membership() {
        let ball = EuclideanBall { n: 3, radius: 2.0 };
        assert_eq!(ball.gauge(&[0.0, 2.0, 0.0]), 1.0);
        assert!(ball.contains(&[1.0, 1.0, 1.0]) && !ball.contains(&[2.0, 1.0, 0.0]));
        let cube = Cube { n: 2, half_side: 0.5 };
        assert_eq!(cube.gauge(&[0.25, -0.5]), 1.0);
        let seg = Segment { low: 0.0, high: 1.0 };
        assert_eq!(seg.gauge(&[-1.0]), f64::INFINITY);
        assert_eq!(seg.boundary_point(&[-3.0]), vec![0.0]);
        assert_eq!(seg.boundary_point(&[3.0]), vec![1.0]);
        let scaled = Scaled { inner: cube, factor: 4.0 };
        assert_eq!(scaled.gauge(&[1.0, 2.0]), 1.0);
        assert!((scaled.ln_volume().unwrap() - 16f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cloud_points_lie_in_the_body() {
        let cube = Cube { n: 3, half_side: 1.0 };
        let cloud = Cloud::new(&cube, 3000, 1).unwrap();
        assert_eq!(cloud.len(), 3000);
        let on_boundary = (0..cloud.len()).filter(|&j| (cube.gauge(cloud.point(j)) - 1.0).abs() < 1e-12).count();
        assert_eq!(on_boundary, 2000);
        assert!((0..cloud.len()).all(|j| cube.contains(cloud.point(j))));
        let again = Cloud::new(&cube, 3000, 1).unwrap();
        assert_eq!(cloud.points, again.points);
    }

    #[test]
    fn ball_with_large_eps_needs_one_center() {
        let ball = EuclideanBall { n: 5, radius: 1.0 };
        for eps in [2.0, 3.0] {
            assert_eq!(greedy_net(&ball, eps, Metric::Euclidean, 2000, 0).unwrap().count, 1);
        }
    }

    #[test]
    fn segment_example() {
        let seg = Segment { low: 0.0, high: 1.0 };
        let net = greedy_net(&seg, 0.25, Metric::Euclidean, 2000, 0).unwrap();
        assert!((2..=4).contains(&net.count), "{}", net.count);
        // The optimal cover {1/4, 3/4} of the same cloud.
        let cloud = Cloud::new(&seg, 2000, 0).unwrap();
        assert!((0..cloud.len()).all(|j| {
            let x = cloud.point(j)[0];
            (x - 0.25).abs().min((x - 0.75).abs()) <= 0.25
        }));
    }

    #[test]
    fn disc_example_respects_volume_sandwich() {
        let disc = EuclideanBall { n: 2, radius: 1.0 };
        let net = greedy_net(&disc, 0.5, Metric::Euclidean, 5000, 2).unwrap();
        assert!((4..=25).contains(&net.count), "{}", net.count);
        let vol = volume_lower_bound(&disc, 0.5, 0, 0).unwrap();
        assert!((vol.value - 4.0).abs() < 1e-12 && vol.exact);
    }

    #[test]
    fn net_and_packing_properties() {
        let cube = Cube { n: 3, half_side: 1.0 };
        let cloud = Cloud::new(&cube, 4000, 3).unwrap();
        let mut last = usize::MAX;
        for eps in [0.3, 0.5, 0.8, 1.2, 2.0, 4.0] {
            let net = cloud.greedy_net(eps);
            let pack = cloud.packing(eps);
            assert!(pack.count <= net.count);
            assert!(net.count <= last);
            last = net.count;
            assert!(net.metadata.achieved_radius <= eps);
            assert!((0..cloud.len()).all(|j| net.centers.iter().any(|c| dist(c, cloud.point(j)) <= eps + 1e-12)));
            for (a, ca) in pack.centers.iter().enumerate() {
                for cb in &pack.centers[..a] {
                    assert!(dist(ca, cb) > 2.0 * eps);
                }
            }
            let vol = volume_lower_bound(&cube, eps, 0, 0).unwrap();
            assert!(net.count as f64 >= vol.value, "eps={eps}: {} < {}", net.count, vol.value);
        }
        assert_eq!(last, 1);
    }

    #[test]
    fn scale_equivariance() {
        let ball = EuclideanBall { n: 3, radius: 1.0 };
        for factor in [2.0, 0.5, 3.0] {
            let scaled = Scaled { inner: ball, factor };
            for eps in [0.4, 0.9] {
                let a = greedy_net(&ball, eps, Metric::Euclidean, 2000, 5).unwrap();
                let b = greedy_net(&scaled, factor * eps, Metric::Euclidean, 2000, 5).unwrap();
                assert_eq!(a.count, b.count, "factor {factor}, eps {eps}");
            }
        }
    }

    #[test]
    fn volume_examples() {
        let cube = Cube { n: 4, half_side: 0.5 };
        let v = volume_lower_bound(&cube, 0.25, 0, 0).unwrap();
        assert!((v.value - 512.0 / std::f64::consts::PI.powi(2)).abs() < 1e-9);
        let ball = EuclideanBall { n: 6, radius: 1.0 };
        assert!((volume_lower_bound(&ball, 1.0, 0, 0).unwrap().value - 1.0).abs() < 1e-12);
        assert!(volume_lower_bound(&cube, 0.0, 0, 0).is_err());
    }

    #[test]
    fn monte_carlo_volume_of_gaussian_mp_ball() {
        let spec = DistributionSpec::gaussian(3);
        let body = mp_ball(&spec, 4.0, &DualSolveOptions::default(), 0).unwrap();
        let g4 = gaussian_abs_moment(4.0).powf(0.25);
        let truth = (g4 * 0.5f64).powi(-3);
        let v = volume_lower_bound(&body, 0.5, 200_000, 1).unwrap();
        assert!(!v.exact);
        assert!(v.ci.low <= truth && truth <= v.ci.high, "{truth} not in {:?}", v.ci);
        assert!((body.circumradius() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_bound_examples() {
        let spec = DistributionSpec::gaussian(8);
        let ball = EuclideanBall { n: 8, radius: 1.0 };
        let one = greedy_net(&ball, 2.0, Metric::Euclidean, 1000, 0).unwrap();
        let b = entropy_to_zp_bound(&spec, 4.0, 0.5, &one, 2.0).unwrap();
        assert!((b - (0.5 * 8f64.sqrt() + std::f64::consts::E * 2.0)).abs() < 1e-12);
        let not_iso = DistributionSpec::linear_image(nalgebra::DMatrix::from_diagonal_element(8, 8, 2.0), spec).unwrap();
        assert!(entropy_to_zp_bound(&not_iso, 4.0, 0.5, &one, 2.0).is_err());
    }

    #[test]
    fn prop36_examples() {
        let spec = DistributionSpec::gaussian(6);
        let opts = CoverOptions { candidates: 2000, ..Default::default() };
        let r = prop36_check(&spec, 4.0, 2.0, &opts, 0).unwrap();
        assert_eq!(r.net_count, 1);
        assert!(r.pass && !r.refuted);
        let sparse = DistributionSpec::sparse(16);
        let r = prop36_check(&sparse, 2.0, 0.1, &opts, 0).unwrap();
        assert!(r.refuted && !r.pass, "{r:?}");
    }

    #[test]
    fn mp_ball_boundary_points_have_unit_norm() {
        let body = mp_ball(&DistributionSpec::exponential(3), 4.0, &DualSolveOptions::default(), 0).unwrap();
        let x = body.boundary_point(&[0.3, -1.0, 2.0]);
        assert!((body.gauge(&x) - 1.0).abs() < 1e-12);
        assert!(euclidean_norm(&x) <= body.circumradius());
    }
}
