//! Expected suprema `E sup_{t in T} <t, X>` and lower estimates of the
//! `L_2`-Sudakov constant
//!
//! ```text
//! C_X >= max_eps eps sqrt(ln N(T, eps B_2^n)) / E sup_{t in T} <t, X>.
//! ```
//!
//! Entropy enters only through certified lower bounds on `N`: the volume
//! ratio for cubes and balls, explicit packings otherwise.

use serde::{Deserialize, Serialize};

use crate::cover::{BodyOracle, Cloud, Cube, EuclideanBall, MpBall, DEFAULT_CANDIDATES};
use crate::dists::{for_each_block, marginal_abs_moment, DistributionSpec};
use crate::dual::{zp_moment, DualSolveOptions, MpNorm};
use crate::error::{invalid, Error, Result};
use crate::norms::{euclidean_norm, Method, NormEstimate};
use crate::rng;
use crate::stats;

/// Largest finite index set accepted.
pub const MAX_FINITE: usize = 1_000_000;
/// Points in the default eps grid.
pub const GRID_POINTS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexSet {
    Finite { points: Vec<Vec<f64>> },
    /// `{ t : ||t||_inf <= radius }`.
    Cube { radius: f64 },
    /// `{ t : |t| <= radius }`.
    Ball { radius: f64 },
    /// The unit ball of `M_p(X)` for the law under study.
    MpBall { p: f64 },
}

impl IndexSet {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            IndexSet::Finite { points } => {
                if points.is_empty() {
                    return Err(invalid("empty index set"));
                }
                if points.len() > MAX_FINITE {
                    return Err(Error::ResourceGuard(format!("{} points (limit {MAX_FINITE})", points.len())));
                }
                if points.iter().any(|t| t.len() != n) {
                    return Err(invalid("index set dimension differs from the law"));
                }
                Ok(())
            }
            IndexSet::Cube { radius } | IndexSet::Ball { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(invalid("radius must be positive and finite"))
            }
            IndexSet::MpBall { p } if !(*p >= 2.0) => Err(invalid("p must be >= 2")),
            _ => Ok(()),
        }
    }
}

/// Sample sizes for the estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    /// Realizations of `X` for the supremum.
    pub samples: usize,
    /// Cloud size for packings of implicit bodies.
    pub candidates: usize,
    pub dual: DualSolveOptions,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { samples: 20_000, candidates: DEFAULT_CANDIDATES, dual: DualSolveOptions::default() }
    }
}

/// Monte Carlo `E sup_{t in T} <t, X>` with default dual options.
pub fn sup_over_set(spec: &DistributionSpec, set: &IndexSet, samples: usize, seed: u64) -> Result<NormEstimate> {
    sup_over_set_with(spec, set, samples, seed, &DualSolveOptions::default())
}

/// Monte Carlo `E sup_{t in T} <t, X>`.
///
/// Per realization the supremum is `r ||x||_1` for cubes, `r |x|` for
/// balls, a scan for finite sets and `||x||_{Z_p}` for `M_p` balls. The
/// realizations are the outer stream of [`zp_moment`] for the same seed.
pub fn sup_over_set_with(
    spec: &DistributionSpec,
    set: &IndexSet,
    samples: usize,
    seed: u64,
    opts: &DualSolveOptions,
) -> Result<NormEstimate> {
    let n = spec.dim();
    set.validate(n)?;
    if samples == 0 {
        return Err(invalid("samples must be positive"));
    }
    if let IndexSet::MpBall { p } = set {
        return Ok(zp_moment(spec, *p, 1.0, samples, opts, seed)?.estimate);
    }
    let mut values = Vec::with_capacity(samples);
    for_each_block(spec, samples, rng::derive_seed(seed, rng::tags::OUTER), |block| {
        for x in block.chunks_exact(n) {
            values.push(match set {
                IndexSet::Cube { radius } => radius * x.iter().map(|v| v.abs()).sum::<f64>(),
                IndexSet::Ball { radius } => radius * euclidean_norm(x),
                IndexSet::Finite { points } => points
                    .iter()
                    .map(|t| t.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max),
                IndexSet::MpBall { .. } => unreachable!(),
            });
        }
    })?;
    let (mean, ci) = stats::mean_with_ci(&values, seed);
    Ok(NormEstimate::with_interval(mean, ci, Method::MonteCarlo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyRoute {
    Volume,
    Packing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub eps: f64,
    /// Certified lower bound on `ln N(T, eps B_2^n)`.
    pub log_n_lower: f64,
    pub route: EntropyRoute,
    /// `eps sqrt(log_n_lower) / sup_estimate`.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorationReport {
    pub sup_estimate: NormEstimate,
    pub entropy_profile: Vec<ProfileEntry>,
    pub cx_lower: f64,
    pub best_eps: f64,
}

/// `GRID_POINTS` log-spaced values on `[diam / 10^3, diam]`.
pub fn default_eps_grid(diam: f64) -> Vec<f64> {
    let lo = (diam / 1e3).ln();
    let hi = diam.ln();
    (0..GRID_POINTS)
        .map(|i| (lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64).exp())
        .collect()
}

enum Entropy {
    Volume(Box<dyn BodyOracle>),
    Packing(Cloud),
}

impl Entropy {
    fn log_n_lower(&self, eps: f64) -> (f64, EntropyRoute) {
        match self {
            Entropy::Volume(body) => {
                let n = body.dim();
                let ln_ratio = body.ln_volume().expect("closed-form volume") - n as f64 * eps.ln()
                    - crate::special::ln_unit_ball_volume(n);
                (ln_ratio.max(0.0), EntropyRoute::Volume)
            }
            Entropy::Packing(cloud) => ((cloud.packing(eps).count as f64).ln(), EntropyRoute::Packing),
        }
    }
}

fn entropy_source(
    spec: &DistributionSpec,
    set: &IndexSet,
    budgets: &Budgets,
    seed: u64,
) -> Result<(Entropy, f64)> {
    let n = spec.dim();
    Ok(match set {
        IndexSet::Cube { radius } => {
            (Entropy::Volume(Box::new(Cube { n, half_side: *radius })), 2.0 * radius * (n as f64).sqrt())
        }
        IndexSet::Ball { radius } => (Entropy::Volume(Box::new(EuclideanBall { n, radius: *radius })), 2.0 * radius),
        IndexSet::Finite { points } => {
            let r = points.iter().map(|t| euclidean_norm(t)).fold(0.0, f64::max);
            (Entropy::Packing(Cloud::from_points(points)?), 2.0 * r)
        }
        IndexSet::MpBall { p } => {
            let body = MpBall { norm: MpNorm::from_spec(spec, *p, &budgets.dual, seed)? };
            let r = body.circumradius();
            (Entropy::Packing(Cloud::new(&body, budgets.candidates, seed)?), 2.0 * r)
        }
    })
}

/// Lower estimate of `C_X` from one index set.
pub fn minoration_constant_lower(
    spec: &DistributionSpec,
    set: &IndexSet,
    eps_grid: Option<&[f64]>,
    budgets: &Budgets,
    seed: u64,
) -> Result<MinorationReport> {
    set.validate(spec.dim())?;
    let sup = sup_over_set_with(spec, set, budgets.samples, seed, &budgets.dual)?;
    if !(sup.value > 1e-300) {
        return Err(Error::Degenerate(format!("E sup is {}", sup.value)));
    }
    let (entropy, diam) = entropy_source(spec, set, budgets, seed)?;
    let grid = match eps_grid {
        Some(g) => g.to_vec(),
        None => default_eps_grid(diam),
    };
    if grid.iter().any(|e| !(*e > 0.0)) {
        return Err(invalid("eps values must be positive"));
    }
    let profile: Vec<ProfileEntry> = grid
        .iter()
        .map(|&eps| {
            let (log_n_lower, route) = entropy.log_n_lower(eps);
            ProfileEntry { eps, log_n_lower, route, contribution: eps * log_n_lower.sqrt() / sup.value }
        })
        .collect();
    let (mut cx_lower, mut best_eps) = (0.0, grid.first().copied().unwrap_or(0.0));
    for e in &profile {
        if e.contribution > cx_lower {
            cx_lower = e.contribution;
            best_eps = e.eps;
        }
    }
    Ok(MinorationReport { sup_estimate: sup, entropy_profile: profile, cx_lower, best_eps })
}

/// `cx_lower * min_i E|X_i| / sqrt(ln(n + 1))` for unconditional `X`.
pub fn unconditional_minoration_ratio(
    spec: &DistributionSpec,
    set: &IndexSet,
    budgets: &Budgets,
    seed: u64,
) -> Result<f64> {
    let n = spec.dim();
    if !spec.capabilities().is_unconditional {
        return Err(invalid(format!("{} is not unconditional", spec.family_name())));
    }
    let min_abs = (0..n)
        .map(|i| marginal_abs_moment(spec, i, 1.0))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !(min_abs > 0.0) {
        return Err(Error::Degenerate("min E|X_i| is zero".into()));
    }
    let report = minoration_constant_lower(spec, set, None, budgets, seed)?;
    Ok(report.cx_lower * min_abs / ((n as f64 + 1.0).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_gamma;

    fn small() -> Budgets {
        Budgets { samples: 4000, candidates: 2000, dual: DualSolveOptions::default() }
    }

    #[test]
    fn sparse_cube_supremum_is_exactly_one() {
        for n in [4, 16] {
            let set = IndexSet::Cube { radius: 1.0 / (n as f64).sqrt() };
            let est = sup_over_set(&DistributionSpec::sparse(n), &set, 1000, 3).unwrap();
            assert_eq!((est.ci_low, est.value, est.ci_high), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn two_point_set_gives_first_absolute_moment() {
        let s = vec![0.6, -0.8];
        let set = IndexSet::Finite { points: vec![s.clone(), s.iter().map(|v| -v).collect()] };
        let est = sup_over_set(&DistributionSpec::rademacher(2), &set, 20_000, 0).unwrap();
        // |0.6 e1 - 0.8 e2| takes the values 0.2 and 1.4 with equal odds.
        assert!(est.ci_low <= 0.8 && 0.8 <= est.ci_high, "{est:?}");
    }

    #[test]
    fn gaussian_ball_supremum_is_chi_mean() {
        let est = sup_over_set(&DistributionSpec::gaussian(16), &IndexSet::Ball { radius: 1.0 }, 20_000, 1).unwrap();
        let chi = 2f64.sqrt() * (ln_gamma(8.5) - ln_gamma(8.0)).exp();
        assert!((est.value / chi - 1.0).abs() < 0.01, "{} vs {chi}", est.value);
    }

    #[test]
    fn scaling_is_exact_for_closed_forms() {
        let spec = DistributionSpec::exponential(5);
        for (a, b) in [
            (IndexSet::Cube { radius: 1.0 }, IndexSet::Cube { radius: 2.0 }),
            (IndexSet::Ball { radius: 1.0 }, IndexSet::Ball { radius: 2.0 }),
        ] {
            let x = sup_over_set(&spec, &a, 500, 9).unwrap().value;
            let y = sup_over_set(&spec, &b, 500, 9).unwrap().value;
            assert_eq!(2.0 * x, y);
        }
    }

    #[test]
    fn mp_ball_supremum_matches_zp_moment() {
        let spec = DistributionSpec::exponential(3);
        let opts = DualSolveOptions::default();
        let a = sup_over_set_with(&spec, &IndexSet::MpBall { p: 4.0 }, 200, 2, &opts).unwrap();
        let b = zp_moment(&spec, 4.0, 1.0, 200, &opts, 2).unwrap();
        assert_eq!(a.value, b.estimate.value);
    }

    #[test]
    fn invalid_sets_are_rejected() {
        let spec = DistributionSpec::gaussian(2);
        assert!(sup_over_set(&spec, &IndexSet::Finite { points: vec![] }, 10, 0).is_err());
        assert!(sup_over_set(&spec, &IndexSet::Finite { points: vec![vec![1.0]] }, 10, 0).is_err());
        assert!(sup_over_set(&spec, &IndexSet::Ball { radius: -1.0 }, 10, 0).is_err());
        assert!(sup_over_set(&spec, &IndexSet::Ball { radius: 1.0 }, 0, 0).is_err());
    }

    #[test]
    fn sparse_minoration_grows_like_sqrt_n() {
        let mut last = 0.0;
        for n in [16, 64] {
            let set = IndexSet::Cube { radius: 1.0 / (n as f64).sqrt() };
            let r = minoration_constant_lower(&DistributionSpec::sparse(n), &set, None, &small(), 0).unwrap();
            assert_eq!(r.entropy_profile.len(), GRID_POINTS);
            assert!(r.entropy_profile.iter().all(|e| e.route == EntropyRoute::Volume && e.log_n_lower >= 0.0));
            assert!(r.cx_lower / (n as f64).sqrt() >= 0.2, "n={n}: {}", r.cx_lower);
            assert!(r.cx_lower >= 1.5 * last);
            last = r.cx_lower;
        }
    }

    #[test]
    fn eps_beyond_diameter_contributes_nothing() {
        let set = IndexSet::Ball { radius: 1.0 };
        let r = minoration_constant_lower(&DistributionSpec::gaussian(4), &set, Some(&[1.0, 2.0, 5.0]), &small(), 0).unwrap();
        assert_eq!(r.entropy_profile[1].contribution, 0.0);
        assert_eq!(r.entropy_profile[2].contribution, 0.0);
        assert_eq!(r.cx_lower, r.entropy_profile[0].contribution);
    }

    #[test]
    fn gaussian_ball_constant_is_moderate() {
        let set = IndexSet::Ball { radius: 1.0 };
        let r = minoration_constant_lower(&DistributionSpec::gaussian(8), &set, None, &small(), 0).unwrap();
        assert!(r.cx_lower > 0.0 && r.cx_lower <= 10.0, "{}", r.cx_lower);
    }

    #[test]
    fn finite_sets_use_packings() {
        let points = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let set = IndexSet::Finite { points };
        let r = minoration_constant_lower(&DistributionSpec::rademacher(2), &set, None, &small(), 0).unwrap();
        assert!(r.entropy_profile.iter().all(|e| e.route == EntropyRoute::Packing));
        // Four points at mutual distance >= sqrt(2): N(T, eps) >= 4 below sqrt(2)/2.
        let small_eps = r.entropy_profile.first().unwrap();
        assert!((small_eps.log_n_lower - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unconditional_ratio() {
        let set = IndexSet::Finite { points: vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]] };
        let r = unconditional_minoration_ratio(&DistributionSpec::rademacher(3), &set, &small(), 0).unwrap();
        assert!(r.is_finite() && r >= 0.0);
        let not_unc = DistributionSpec::linear_image(
            nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DistributionSpec::gaussian(2),
        )
        .unwrap();
        let set2 = IndexSet::Ball { radius: 1.0 };
        assert!(unconditional_minoration_ratio(&not_unc, &set2, &small(), 0).is_err());
    }
}
