//! Maximization of `R(u) = <u, s> / ||u||_{M_p}` over directions `u`.
//!
//! `R` is homogeneous of degree 0 and quasi-concave on `{<u, s> > 0}`, so
//! every local maximum is global. The Newton solver minimizes the convex
//! function `phi(t) = H(t)/p - <t, s>`, `H(t) = ||t||_{M_p}^p`, whose
//! minimizer satisfies `grad H(t*) = s` and lies on the ray of the maximizer
//! of `R`. Each iterate is first moved to the minimizer of `phi` along its
//! ray, where `H(t) = <t, s>`; the Newton step is then independent of the
//! scale of `t`, and `phi` decreases exactly when `ln R` increases.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::norms::MpOracle;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Damped Newton on the convex reformulation.
    Newton,
    /// Normalized gradient ascent on the unit sphere.
    GradientAscent,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub direction: Vec<f64>,
    pub log_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct Params {
    pub max_iters: usize,
    pub tolerance: f64,
    pub step_rule: StepRule,
    pub solver: Solver,
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = crate::norms::euclidean_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `ln R(u)`, `-inf` off the half-space `<u, s> > 0`.
pub(crate) fn log_ratio(o: &dyn MpOracle, s: &[f64], u: &[f64]) -> f64 {
    let a = dot(u, s);
    if !(a > 0.0) {
        return f64::NEG_INFINITY;
    }
    a.ln() - o.log_moment(u) / o.p()
}

/// Default starting directions, most promising first: `S^{-1} s`, `s`,
/// the signed coordinate vectors of the four largest `|s_i|`, then random
/// directions reflected into `<u, s> > 0`.
pub(crate) fn start_directions(o: &dyn MpOracle, s: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = s.len();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    if let Some(chol) = o.second_moment().and_then(|m| m.clone().cholesky()) {
        let mut v = chol.solve(&DVector::from_column_slice(s)).as_slice().to_vec();
        if normalize(&mut v) > 0.0 {
            out.push(v);
        }
    }
    let mut v = s.to_vec();
    normalize(&mut v);
    out.push(v);
    let mut order: Vec<usize> = (0..n).filter(|&i| s[i] != 0.0).collect();
    order.sort_by(|&a, &b| s[b].abs().total_cmp(&s[a].abs()).then(a.cmp(&b)));
    for &i in order.iter().take(4) {
        let mut e = vec![0.0; n];
        e[i] = s[i].signum();
        out.push(e);
    }
    let mut r = rng::stream(rng::derive_seed(seed, rng::tags::STARTS), 0);
    while out.len() < count {
        let mut g: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
        if dot(&g, s) < 0.0 {
            g.iter_mut().for_each(|x| *x = -*x);
        }
        if normalize(&mut g) > 0.0 {
            out.push(g);
        }
    }
    out.truncate(count);
    out
}

/// Runs the configured solver from each start; returns the best outcome,
/// ties going to the earliest start.
pub(crate) fn solve(o: &dyn MpOracle, s: &[f64], starts: &[Vec<f64>], params: &Params) -> Outcome {
    let mut best: Option<Outcome> = None;
    for start in starts {
        let out = match params.solver {
            Solver::Newton => newton(o, s, start, params),
            Solver::GradientAscent => gradient_ascent(o, s, start, params),
        };
        let better = match &best {
            None => true,
            Some(b) => out.log_ratio > b.log_ratio + params.tolerance,
        };
        if better {
            best = Some(out);
        }
    }
    best.expect("at least one start")
}

fn initial(o: &dyn MpOracle, s: &[f64], start: &[f64]) -> (Vec<f64>, f64) {
    let mut u = start.to_vec();
    normalize(&mut u);
    let lr = log_ratio(o, s, &u);
    if lr.is_finite() || lr == f64::INFINITY {
        return (u, lr);
    }
    let mut u = s.to_vec();
    normalize(&mut u);
    let lr = log_ratio(o, s, &u);
    (u, lr)
}

fn newton(o: &dyn MpOracle, s: &[f64], start: &[f64], params: &Params) -> Outcome {
    let p = o.p();
    let n = s.len();
    let (mut u, mut lr) = initial(o, s, start);
    let sv = DVector::from_column_slice(s);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iters && lr.is_finite() {
        let model = o.local_model(&u, true);
        let hess = model.hess.expect("hessian requested");
        let a = dot(&u, s);
        // Residual and Newton system in scale-free form:
        // (a Hhat) delta = -(a ghat - p s).
        let r = &model.grad * a - &sv * p;
        let k = hess * a;
        let delta = damped_solve(&k, &(-&r), n);
        let dec = -r.dot(&delta) / (a * p);
        iterations += 1;
        if !(dec > params.tolerance) {
            converged = dec <= params.tolerance;
            break;
        }
        let mut eta: f64 = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let mut cand: Vec<f64> = u.iter().zip(delta.iter()).map(|(ui, di)| ui + eta * di).collect();
            normalize(&mut cand);
            let lc = log_ratio(o, s, &cand);
            if lc >= lr + ARMIJO * eta * dec {
                u = cand;
                lr = lc;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // No representable improvement left along the Newton direction.
            converged = dec < params.tolerance.sqrt();
            break;
        }
    }
    Outcome { direction: u, log_ratio: lr, iterations, converged }
}

/// Solves `k x = b` by Cholesky, adding a growing multiple of the identity
/// when `k` is not numerically positive definite.
fn damped_solve(k: &DMatrix<f64>, b: &DVector<f64>, n: usize) -> DVector<f64> {
    if let Some(c) = k.clone().cholesky() {
        return c.solve(b);
    }
    let scale = (k.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut mu = 1e-12 * scale;
    loop {
        let damped = k + DMatrix::identity(n, n) * mu;
        if let Some(c) = damped.cholesky() {
            return c.solve(b);
        }
        mu *= 10.0;
        if !mu.is_finite() {
            return b.clone() / scale;
        }
    }
}

fn gradient_ascent(o: &dyn MpOracle, s: &[f64], start: &[f64], params: &Params) -> Outcome {
    let p = o.p();
    let (mut u, mut lr) = initial(o, s, start);
    let mut iterations = 0;
    let mut converged = false;
    let mut eta: f64 = 0.5;
    while iterations < params.max_iters && lr.is_finite() {
        iterations += 1;
        let model = o.local_model(&u, false);
        let a = dot(&u, s);
        // grad ln R = s/a - ghat/p, projected on the tangent space at u.
        let mut g: Vec<f64> = s.iter().zip(model.grad.iter()).map(|(si, gi)| si / a - gi / p).collect();
        let radial = dot(&g, &u);
        g.iter_mut().zip(&u).for_each(|(gi, ui)| *gi -= radial * ui);
        let gn = normalize(&mut g);
        if !(gn > 0.0) {
            converged = true;
            break;
        }
        let step = |eta: f64| {
            let mut c: Vec<f64> = u.iter().zip(&g).map(|(ui, gi)| ui + eta * gi).collect();
            normalize(&mut c);
            let l = log_ratio(o, s, &c);
            (c, l)
        };
        let (cand, lc) = match params.step_rule {
            StepRule::Fixed => step(0.5 / (iterations as f64).sqrt()),
            StepRule::Backtracking => {
                eta = (2.0 * eta).min(1.0);
                let mut found = None;
                for _ in 0..MAX_HALVINGS {
                    let (c, l) = step(eta);
                    if l >= lr + ARMIJO * eta * gn {
                        found = Some((c, l));
                        break;
                    }
                    eta *= 0.5;
                }
                match found {
                    Some(f) => f,
                    None => {
                        converged = true;
                        break;
                    }
                }
            }
        };
        let change = lc - lr;
        if lc > lr {
            u = cand;
            lr = lc;
        }
        if change.abs() <= params.tolerance && params.step_rule == StepRule::Backtracking {
            converged = true;
            break;
        }
        if params.step_rule == StepRule::Fixed && gn * 0.5 / (iterations as f64).sqrt() <= params.tolerance {
            converged = true;
            break;
        }
    }
    Outcome { direction: u, log_ratio: lr, iterations, converged }
}
