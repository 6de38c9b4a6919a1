//! Closed-form moments built from the Gamma function.

use std::f64::consts::{LN_2, PI};

pub use statrs::function::gamma::ln_gamma;

/// `E|g|^p` for a standard Gaussian `g`, `p > -1`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    (0.5 * p * LN_2 + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln()).exp()
}

/// `E|X|^p` for the Laplace law with density `exp(-|x|/b) / (2b)`.
pub fn laplace_abs_moment(scale: f64, p: f64) -> f64 {
    (p * scale.ln() + ln_gamma(p + 1.0)).exp()
}

/// `E|X|^p` for the density proportional to `exp(-|x/s|^beta)`.
pub fn laplace_power_abs_moment(scale: f64, power: f64, p: f64) -> f64 {
    (p * scale.ln() + ln_gamma((p + 1.0) / power) - ln_gamma(1.0 / power)).exp()
}

/// `E|U_1|^p` for `U` uniform on the unit sphere `S^{n-1}`.
pub fn sphere_coordinate_abs_moment(n: usize, p: f64) -> f64 {
    let n = n as f64;
    (ln_gamma(0.5 * n) + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln() - ln_gamma(0.5 * (n + p))).exp()
}

/// `(2m - 1)!! = 1 * 3 * ... * (2m - 1)`, with `(-1)!! = 1`.
pub fn odd_double_factorial(m: u32) -> f64 {
    (1..=m).map(|j| (2 * j - 1) as f64).product()
}

/// `ln vol(B_2^n) = (n/2) ln(pi) - ln Gamma(n/2 + 1)`.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let n = n as f64;
    0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
}

/// Numerically stable `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
