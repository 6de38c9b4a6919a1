//! `Z_p` norms: `||s||_{Z_p(X)} = sup { <t, s> : ||t||_{M_p(X)} <= 1 }`.
//!
//! The supremum equals the maximum over directions of the scale-free ratio
//! `<t, s> / ||t||_{M_p}`, solved by [`solver`] on either an exact moment
//! oracle (even `p`) or a frozen sample (sample average approximation).
//! Every returned direction is a certified lower bound for the norm it was
//! evaluated with; upper bounds come from the Cauchy-Schwarz expansion for
//! unconditional laws or from a first-order gap bound.

mod examples;
mod moment;
mod solver;

use std::sync::Arc;

use nalgebra::DVector;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combi::{binomial, enumerate_multiindices, MAX_TERMS};
use crate::dists::{mixed_even_moment, sample, DistributionSpec, SampleCache};
use crate::error::{invalid, Error, Result};
use crate::norms::{check_p, euclidean_norm, EmpiricalOracle, ExactEvenOracle, Method, MpOracle, NormEstimate, UpperBound, Witness};
use crate::rng;
use crate::stats::Interval;

pub use examples::{
    exponential_witness_lower, exponential_witness_moment, unconditional_decomposition_check, DecompositionCheck,
    TailRow, WitnessMoment,
};
pub use moment::{conjecture_ratio, zp_moment, Problem, SampleDiagnostic, ZpMomentReport};
pub use solver::{Solver, StepRule};

/// Which evaluator of `||.||_{M_p}` defines the dual problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Exact moments when `p` is even and the family has them, else SAA.
    Auto,
    /// Sample average over `sample_budget` frozen draws.
    Saa,
    ExactEven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DualSolveOptions {
    pub starts: usize,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Stopping threshold on the estimated relative objective gap.
    pub tolerance: f64,
    pub sample_budget: usize,
    pub solver: Solver,
    pub backend: Backend,
    /// Start outer solves in [`zp_moment`] from earlier optima.
    pub warm_start: bool,
}

impl Default for DualSolveOptions {
    fn default() -> Self {
        Self {
            starts: 1,
            max_iters: 500,
            step_rule: StepRule::Backtracking,
            tolerance: 1e-10,
            sample_budget: 100_000,
            solver: Solver::Newton,
            backend: Backend::Auto,
            warm_start: true,
        }
    }
}

impl DualSolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(invalid("starts must be >= 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be >= 1"));
        }
        Ok(())
    }

    fn params(&self) -> solver::Params {
        solver::Params {
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            step_rule: self.step_rule,
            solver: self.solver,
        }
    }
}

/// A frozen `M_p` norm together with what is known exactly about it.
#[derive(Clone)]
pub struct MpNorm {
    spec: DistributionSpec,
    p: f64,
    oracle: Arc<dyn MpOracle>,
    exact: Option<Arc<ExactEvenOracle>>,
    cache: Option<SampleCache>,
    seed: u64,
    sample_budget: usize,
}

impl std::fmt::Debug for MpNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MpNorm")
            .field("family", &self.spec.family_name())
            .field("n", &self.spec.dim())
            .field("p", &self.p)
            .field("exact", &self.is_exact())
            .field("sample_budget", &self.sample_budget)
            .finish()
    }
}

fn even_order(p: f64) -> Option<u32> {
    ((2.0..=512.0).contains(&p) && p.fract() == 0.0 && (p as u32).is_multiple_of(2)).then_some(p as u32 / 2)
}

impl MpNorm {
    /// The norm of the empirical law of `cache`.
    pub fn empirical(cache: SampleCache, p: f64) -> Result<Self> {
        check_p(p, 2.0)?;
        let spec = cache.spec().clone();
        let exact = even_order(p).and_then(|k| ExactEvenOracle::new(&spec, k).ok()).map(Arc::new);
        let (seed, budget) = (cache.seed(), cache.count());
        let oracle = Arc::new(EmpiricalOracle::new(cache.clone(), p)?);
        Ok(Self { spec, p, oracle, exact, cache: Some(cache), seed, sample_budget: budget })
    }

    /// The exact norm for `p = 2k`.
    pub fn exact_even(spec: &DistributionSpec, k: u32) -> Result<Self> {
        let oracle = Arc::new(ExactEvenOracle::new(spec, k)?);
        Ok(Self {
            spec: spec.clone(),
            p: 2.0 * k as f64,
            oracle: oracle.clone(),
            exact: Some(oracle),
            cache: None,
            seed: 0,
            sample_budget: 0,
        })
    }

    /// Chooses the backend from `opts`; SAA samples use a stream derived
    /// from `seed`.
    pub fn from_spec(spec: &DistributionSpec, p: f64, opts: &DualSolveOptions, seed: u64) -> Result<Self> {
        check_p(p, 2.0)?;
        let exact = || {
            let k = even_order(p).ok_or_else(|| Error::NoExactOracle(format!("p = {p} is not an even integer")))?;
            Self::exact_even(spec, k)
        };
        match opts.backend {
            Backend::ExactEven => exact(),
            Backend::Auto => match exact() {
                Ok(norm) => Ok(norm),
                Err(Error::NoExactOracle(_)) => Self::saa(spec, p, opts, seed),
                Err(e) => Err(e),
            },
            Backend::Saa => Self::saa(spec, p, opts, seed),
        }
    }

    fn saa(spec: &DistributionSpec, p: f64, opts: &DualSolveOptions, seed: u64) -> Result<Self> {
        let cache = sample(spec, opts.sample_budget, rng::derive_seed(seed, rng::tags::SAA))?;
        Self::empirical(cache, p)
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn oracle(&self) -> &dyn MpOracle {
        self.oracle.as_ref()
    }

    /// Whether the dual problem itself is exact (not a sample average).
    pub fn is_exact(&self) -> bool {
        self.oracle.is_exact()
    }

    pub fn backend(&self) -> Backend {
        if self.is_exact() {
            Backend::ExactEven
        } else {
            Backend::Saa
        }
    }

    /// Number of SAA samples; 0 for exact norms.
    pub fn sample_budget(&self) -> usize {
        self.sample_budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `||t||_{M_p}` under this norm.
    pub fn mp_norm(&self, t: &[f64]) -> f64 {
        self.oracle.norm(t)
    }

    /// The norm that witnesses and upper bounds refer to: exact when known.
    fn certifying_oracle(&self) -> &dyn MpOracle {
        match &self.exact {
            Some(e) => e.as_ref(),
            None => self.oracle.as_ref(),
        }
    }

    fn cauchy_schwarz_available(&self) -> bool {
        let caps = self.spec.capabilities();
        self.exact.is_some() && caps.is_unconditional && caps.has_exact_mixed_moments
    }
}

/// Result of one dual solve before it is packaged as a [`NormEstimate`].
#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub value: f64,
    pub direction: Vec<f64>,
    pub witness_value: f64,
    pub gap_upper: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Rounding allowance applied to computed upper bounds.
const BOUND_SLACK: f64 = 1e-12;

/// First-order upper bound at direction `u` for the norm of `o`.
///
/// With `g` the gradient of `||.||_{M_p}` at `u` one has `||g||_{Z_p} = 1`,
/// and `||v||_{Z_p} <= ||v||_{Z_2} = (v^T S^{-1} v)^(1/2)` because
/// `||.||_{M_p} >= ||.||_{M_2}`. Splitting `s = c g + (s - c g)` gives
/// `||s||_{Z_p} <= |c| + ||s - c g||_{Z_2}`, tight at the optimum.
pub(crate) fn gap_upper_bound(o: &dyn MpOracle, s: &[f64], u: &[f64]) -> Option<f64> {
    let chol = o.second_moment()?.clone().cholesky()?;
    let model = o.local_model(u, false);
    if !model.log_h.is_finite() {
        return None;
    }
    let g = &model.grad * ((model.log_h / o.p()).exp() / o.p());
    let sv = DVector::from_column_slice(s);
    let sinv_g = chol.solve(&g);
    let gg = g.dot(&sinv_g);
    if !(gg > 0.0) {
        return None;
    }
    let c = sv.dot(&sinv_g) / gg;
    let r = &sv - &g * c;
    let rr = r.dot(&chol.solve(&r)).max(0.0);
    Some((c.abs() + rr.sqrt()) * (1.0 + BOUND_SLACK))
}

/// `(sum_alpha [binom(k,alpha)^2 / binom(2k,2alpha)] s^{2alpha} / E X^{2alpha})^{1/2k}`,
/// an upper bound on `||s||_{Z_{2k}}` for unconditional `X`. `None` when some
/// term is infinite or the expansion is too long.
pub fn cauchy_schwarz_bound(spec: &DistributionSpec, k: u32, s: &[f64]) -> Result<Option<f64>> {
    let n = spec.dim();
    let caps = spec.capabilities();
    if !(caps.is_unconditional && caps.has_exact_mixed_moments) {
        return Err(Error::NoExactOracle("the bound needs an unconditional law with exact moments".into()));
    }
    if s.len() != n {
        return Err(invalid("vector length differs from dimension"));
    }
    let terms = binomial(n as u64 + k as u64 - 1, k as u64);
    if terms.to_u64().is_none_or(|t| t > MAX_TERMS) {
        return Ok(None);
    }
    let len = euclidean_norm(s);
    if len == 0.0 {
        return Ok(Some(0.0));
    }
    let s2: Vec<f64> = s.iter().map(|x| (x / len) * (x / len)).collect();
    let mut sum = 0.0;
    for alpha in enumerate_multiindices(n, k) {
        let mono = alpha.monomial(&s2);
        if mono == 0.0 {
            continue;
        }
        let moment = mixed_even_moment(spec, &alpha)?;
        if moment == 0.0 {
            return Ok(None);
        }
        let m = alpha.multinomial().to_f64().unwrap_or(f64::INFINITY);
        let d = alpha.doubled_multinomial().to_f64().unwrap_or(f64::INFINITY);
        sum += m * m / d * mono / moment;
    }
    Ok(Some(len * sum.powf(1.0 / (2.0 * k as f64)) * (1.0 + BOUND_SLACK)))
}

pub(crate) fn solve_dual(norm: &MpNorm, s: &[f64], starts: &[Vec<f64>], opts: &DualSolveOptions) -> Result<DualSolution> {
    let len = euclidean_norm(s);
    if len == 0.0 {
        return Ok(DualSolution {
            value: 0.0,
            direction: vec![0.0; s.len()],
            witness_value: 0.0,
            gap_upper: Some(0.0),
            iterations: 0,
            converged: true,
        });
    }
    let sh: Vec<f64> = s.iter().map(|x| x / len).collect();
    let out = solver::solve(norm.oracle(), &sh, starts, &opts.params());
    if out.log_ratio == f64::INFINITY {
        return Err(Error::Degenerate(format!(
            "the {} norm vanishes on a direction, so the dual norm is unbounded",
            if norm.is_exact() { "M_p" } else { "empirical M_p" }
        )));
    }
    let value = len * out.log_ratio.exp();
    let cert = norm.certifying_oracle();
    let witness_value = if norm.is_exact() {
        value
    } else {
        len * solver::log_ratio(cert, &sh, &out.direction).exp()
    };
    let gap_upper = gap_upper_bound(cert, &sh, &out.direction).map(|b| b * len);
    Ok(DualSolution {
        value,
        direction: out.direction,
        witness_value,
        gap_upper,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// `||s||_{Z_p}` for the frozen norm.
///
/// The value is that of the exact or empirical problem. For SAA norms the
/// interval comes from bootstrapping `||t*||_{M_p}` at the fixed optimizer
/// `t*` (the envelope theorem makes the optimizer's own variability second
/// order).
pub fn zp_norm(norm: &MpNorm, s: &[f64], opts: &DualSolveOptions) -> Result<NormEstimate> {
    opts.validate()?;
    crate::norms::check_dim(norm.oracle(), s)?;
    let method = if norm.is_exact() { Method::ExactEven } else { Method::MonteCarlo };
    if euclidean_norm(s) == 0.0 {
        return Ok(NormEstimate::exact(0.0, method));
    }
    let starts = solver::start_directions(norm.oracle(), s, opts.starts, norm.seed());
    let sol = solve_dual(norm, s, &starts, opts)?;
    let ci = if norm.is_exact() {
        Interval::point(sol.value)
    } else {
        saa_interval(norm, s, &sol.direction, sol.value)
    };
    let mut est = NormEstimate::with_interval(sol.value, ci, method);
    est.lower_bound_only = !sol.converged;
    est.certificates.lower_witness = Some(Witness { direction: sol.direction.clone(), value: sol.witness_value });
    let k = even_order(norm.p());
    let cs = match k {
        Some(k) if norm.cauchy_schwarz_available() => cauchy_schwarz_bound(norm.spec(), k, s)?,
        _ => None,
    };
    est.certificates.upper_bound = match (cs, sol.gap_upper) {
        (Some(v), _) => Some(UpperBound { value: v, provenance: "cauchy_schwarz".into() }),
        (None, Some(v)) => Some(UpperBound { value: v, provenance: "gradient_gap".into() }),
        (None, None) => None,
    };
    Ok(est)
}

fn saa_interval(norm: &MpNorm, s: &[f64], t: &[f64], value: f64) -> Interval {
    let Some(cache) = &norm.cache else {
        return Interval::point(value);
    };
    match crate::norms::mp_norm_mc(cache, norm.p(), t) {
        Ok(m) if m.ci_low > 0.0 => {
            let a: f64 = t.iter().zip(s).map(|(x, y)| x * y).sum();
            Interval { low: a / m.ci_high, high: a / m.ci_low }
        }
        _ => Interval::point(value),
    }
}

/// Convenience wrapper: builds the norm from `spec` and solves once.
pub fn zp_norm_for_spec(spec: &DistributionSpec, p: f64, s: &[f64], opts: &DualSolveOptions, seed: u64) -> Result<NormEstimate> {
    zp_norm(&MpNorm::from_spec(spec, p, opts, seed)?, s, opts)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gaussian_abs_moment;
    use nalgebra::DMatrix;
    use rand::Rng;

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    fn saa(budget: usize) -> DualSolveOptions {
        DualSolveOptions { backend: Backend::Saa, sample_budget: budget, ..Default::default() }
    }

    #[test]
    fn gaussian_dual_is_a_scaled_euclidean_norm() {
        let spec = DistributionSpec::gaussian(8);
        let gp = gaussian_abs_moment(6.0).powf(1.0 / 6.0);
        for seed in 0..5 {
            let s = random_vec(8, seed);
            let truth = euclidean_norm(&s) / gp;
            let exact = zp_norm_for_spec(&spec, 6.0, &s, &DualSolveOptions::default(), seed).unwrap();
            assert_eq!(exact.method, Method::ExactEven);
            assert!((exact.value / truth - 1.0).abs() < 1e-9, "{} vs {truth}", exact.value);
            let up = exact.certificates.upper_bound.as_ref().unwrap();
            assert_eq!(up.provenance, "cauchy_schwarz");
            assert!(up.value >= exact.value);
            let mc = zp_norm_for_spec(&spec, 6.0, &s, &saa(50_000), seed).unwrap();
            assert!((mc.value / truth - 1.0).abs() < 0.02, "{} vs {truth}", mc.value);
            assert!(mc.ci_low <= mc.value && mc.value <= mc.ci_high);
        }
    }

    #[test]
    fn p2_dual_of_isotropic_law_is_euclidean() {
        for spec in [DistributionSpec::exponential(5), DistributionSpec::rademacher(5), DistributionSpec::sphere(5)] {
            let scale = if matches!(spec.family, crate::dists::Family::UniformSphere { .. }) { 5f64.sqrt() } else { 1.0 };
            let s = random_vec(5, 3);
            let z = zp_norm_for_spec(&spec, 2.0, &s, &DualSolveOptions::default(), 0).unwrap();
            assert!((z.value - scale * euclidean_norm(&s)).abs() < 1e-9 * scale, "{}", spec.family_name());
        }
    }

    #[test]
    fn linear_invariance_with_exact_oracle() {
        let base = DistributionSpec::exponential(3);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, -0.3, 1.0, 0.4, 0.1, 0.2, 1.5]);
        let image = DistributionSpec::linear_image(a.clone(), base.clone()).unwrap();
        let opts = DualSolveOptions::default();
        let x = random_vec(3, 11);
        let ax: Vec<f64> = (&a * nalgebra::DVector::from_column_slice(&x)).as_slice().to_vec();
        let lhs = zp_norm_for_spec(&image, 4.0, &ax, &opts, 0).unwrap().value;
        let rhs = zp_norm_for_spec(&base, 4.0, &x, &opts, 0).unwrap().value;
        assert!((lhs / rhs - 1.0).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn sandwich_and_homogeneity() {
        let spec = DistributionSpec::rademacher(4);
        let opts = DualSolveOptions::default();
        let s = random_vec(4, 5);
        let z = zp_norm_for_spec(&spec, 4.0, &s, &opts, 0).unwrap();
        let w = z.certificates.lower_witness.as_ref().unwrap().value;
        let u = z.certificates.upper_bound.as_ref().unwrap().value;
        assert!(w <= z.value * (1.0 + 1e-12) && z.value <= u, "{w} {} {u}", z.value);
        let s2: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let z2 = zp_norm_for_spec(&spec, 4.0, &s2, &opts, 0).unwrap();
        assert!((z2.value - 2.0 * z.value).abs() < 1e-12 * z2.value);
    }

    #[test]
    fn trivial_inputs() {
        let spec = DistributionSpec::gaussian(3);
        let opts = DualSolveOptions::default();
        let z = zp_norm_for_spec(&spec, 4.0, &[0.0; 3], &opts, 0).unwrap();
        assert_eq!((z.value, z.ci_low, z.ci_high), (0.0, 0.0, 0.0));
        assert!(zp_norm_for_spec(&spec, 1.5, &[1.0, 0.0, 0.0], &opts, 0).is_err());
        assert!(zp_norm_for_spec(&spec, 4.0, &[1.0, 0.0], &opts, 0).is_err());
        let bad = DualSolveOptions { starts: 0, ..Default::default() };
        assert!(zp_norm_for_spec(&spec, 4.0, &[1.0, 0.0, 0.0], &bad, 0).is_err());
    }

    #[test]
    fn gradient_ascent_agrees_with_newton() {
        let spec = DistributionSpec::exponential(4);
        let s = random_vec(4, 9);
        let newton = zp_norm_for_spec(&spec, 4.0, &s, &DualSolveOptions::default(), 0).unwrap();
        let ga_opts = DualSolveOptions { solver: Solver::GradientAscent, max_iters: 20_000, starts: 4, ..Default::default() };
        let ga = zp_norm_for_spec(&spec, 4.0, &s, &ga_opts, 0).unwrap();
        assert!(ga.value <= newton.value * (1.0 + 1e-9));
        assert!((ga.value / newton.value - 1.0).abs() < 1e-4, "{} vs {}", ga.value, newton.value);
    }

    #[test]
    fn nonincreasing_in_p_on_fixed_cache() {
        let cache = crate::dists::sample(&DistributionSpec::exponential(3), 20_000, 4).unwrap();
        let s = random_vec(3, 2);
        let opts = DualSolveOptions::default();
        let mut last = f64::INFINITY;
        for p in [2.0, 3.0, 4.0, 6.0] {
            let z = zp_norm(&MpNorm::empirical(cache.clone(), p).unwrap(), &s, &opts).unwrap().value;
            assert!(z <= last * (1.0 + 1e-9), "p={p}: {z} > {last}");
            last = z;
        }
    }

    #[test]
    fn sphere_moment_matches_closed_form() {
        let spec = DistributionSpec::sphere(8);
        let r = zp_moment(&spec, 4.0, 4.0, 200, &DualSolveOptions::default(), 1).unwrap();
        let truth = crate::special::sphere_coordinate_abs_moment(8, 4.0).powf(-0.25);
        assert!((r.estimate.value / truth - 1.0).abs() < 1e-8);
        assert_eq!(r.lower_bound_only_fraction, 0.0);
        assert!((r.ratio_to_conjecture - conjecture_ratio(&r, Problem::One)).abs() < 1e-15);
    }

    #[test]
    fn warm_starts_do_not_change_values() {
        let spec = DistributionSpec::exponential(4);
        let warm = DualSolveOptions::default();
        let cold = DualSolveOptions { warm_start: false, starts: 2, ..Default::default() };
        let a = zp_moment(&spec, 4.0, 4.0, 100, &warm, 3).unwrap();
        let b = zp_moment(&spec, 4.0, 4.0, 100, &cold, 3).unwrap();
        assert!((a.estimate.value / b.estimate.value - 1.0).abs() < 1e-8);
        assert!(a.mean_iterations <= b.mean_iterations);
    }

    #[test]
    fn moment_rejects_bad_arguments() {
        let spec = DistributionSpec::gaussian(2);
        let opts = DualSolveOptions::default();
        assert!(zp_moment(&spec, 4.0, 0.5, 200, &opts, 0).is_err());
        assert!(zp_moment(&spec, 4.0, 2.0, 99, &opts, 0).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let spec = DistributionSpec::rademacher(6);
        let opts = DualSolveOptions::default();
        let single = [0.0, 0.7, 0.0, 0.0, 0.0, 0.0];
        let d = unconditional_decomposition_check(&spec, 2.0, &single, &opts, 0).unwrap();
        assert!((d.lhs - d.term_sparse).abs() < 1e-9);
        assert!(d.implied_c1 <= 1e-9);
        let s = vec![1.0 / 6f64.sqrt(); 6];
        let d = unconditional_decomposition_check(&spec, 2.0, &s, &opts, 0).unwrap();
        assert!((d.lhs - 1.0).abs() < 1e-9);
        assert!(d.implied_c1 <= 8.0);
        let s2: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let d2 = unconditional_decomposition_check(&spec, 2.0, &s2, &opts, 0).unwrap();
        for (a, b) in [(d.lhs, d2.lhs), (d.term_sparse, d2.term_sparse), (d.term_euclid, d2.term_euclid)] {
            assert!((2.0 * a - b).abs() < 1e-6 * b, "{a} {b}");
        }
    }

    #[test]
    fn exponential_witness_examples() {
        let spec = DistributionSpec::exponential(16);
        let rows = exponential_witness_lower(&spec, 4.0, &[0.0, 1.0], 20_000, 0).unwrap();
        assert_eq!(rows[0].frequency, 1.0);
        assert!(rows.iter().all(|r| r.consistent));
        let m = exponential_witness_moment(&spec, 4.0, 8.0, 20_000, 0).unwrap();
        let exact = 0.5 * (40320.0f64 / 16.0).powf(1.0 / 8.0);
        assert!((m.analytic / exact - 1.0).abs() < 1e-12);
        assert!(exponential_witness_lower(&DistributionSpec::gaussian(2), 4.0, &[1.0], 10, 0).is_err());
    }
}
