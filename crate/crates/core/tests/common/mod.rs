//! Reference values computed independently of the library: composite
//! Simpson quadrature, brute-force enumeration and plain simulation.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Composite Simpson rule with `m` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `E|g|^p` for a standard Gaussian.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    2.0 * simpson(|x| x.powf(p) * phi(x), 0.0, 40.0, 200_000)
}

/// `||g||_p`.
pub fn gaussian_norm(p: f64) -> f64 {
    gaussian_abs_moment(p).powf(1.0 / p)
}

/// `E|X_1|^p` for the density `2^(-1/2) exp(-sqrt(2)|x|)`.
pub fn exponential_abs_moment(p: f64) -> f64 {
    2.0 * simpson(|x| x.powf(p) * (-(2f64.sqrt()) * x).exp() / 2f64.sqrt(), 0.0, 200.0, 400_000)
}

/// `||U_1||_p` for `U` uniform on the unit sphere of `R^n`, via the
/// density of `U_1 = sin(theta)`, proportional to `cos^(n-2)(theta)`.
pub fn sphere_coordinate_norm(n: usize, p: f64) -> f64 {
    let w = |th: f64| th.cos().max(0.0).powi(n as i32 - 2);
    let num = simpson(|th| th.sin().abs().powf(p) * w(th), -FRAC_PI_2, FRAC_PI_2, 100_000);
    let den = simpson(w, -FRAC_PI_2, FRAC_PI_2, 100_000);
    (num / den).powf(1.0 / p)
}

/// `E|G|` for a standard Gaussian vector in `R^n`.
pub fn chi_mean(n: usize) -> f64 {
    let w = |r: f64| r.powi(n as i32 - 1) * (-0.5 * r * r).exp();
    simpson(|r| r * w(r), 0.0, 40.0, 200_000) / simpson(w, 0.0, 40.0, 200_000)
}

/// `E min(|g_1|, |g_2|)` by two-dimensional Simpson quadrature.
pub fn gaussian_min_abs() -> f64 {
    let inner = |x: f64| simpson(|y| x.min(y) * phi(y), 0.0, 10.0, 2000);
    4.0 * simpson(|x| inner(x) * phi(x), 0.0, 10.0, 2000)
}

/// `ln vol(B_2^n)` for even `n`: `pi^(n/2) / (n/2)!`.
pub fn ln_ball_volume_even(n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let m = n / 2;
    m as f64 * PI.ln() - (1..=m).map(|i| (i as f64).ln()).sum::<f64>()
}

/// The sparse-example minoration constant from the cube volume bound,
/// maximized over 24 log-spaced eps in `[2e-3, 2]`, with `E sup = 1`.
pub fn sparse_cx_oracle(n: usize) -> f64 {
    let nf = n as f64;
    let ln_cube = nf * (2.0 / nf.sqrt()).ln();
    (0..24)
        .map(|i| {
            let eps = (2e-3f64.ln() + (1000f64.ln()) * i as f64 / 23.0).exp();
            let ln_n = (ln_cube - nf * eps.ln() - ln_ball_volume_even(n)).max(0.0);
            eps * ln_n.sqrt()
        })
        .fold(0.0, f64::max)
}

/// `(E|sum a_i eps_i|^p)^(1/p)` over all sign patterns.
pub fn rademacher_brute_force(a: &[f64], p: f64) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        let s: f64 = a
            .iter()
            .enumerate()
            .map(|(i, v)| if mask >> i & 1 == 1 { *v } else { -*v })
            .sum();
        total += s.abs().powf(p);
    }
    (total / (1u64 << n) as f64).powf(1.0 / p)
}
