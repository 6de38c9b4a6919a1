//! Acceptance criteria, one PASS/FAIL line each. Reference values come
//! from the quadrature and closed-form oracles below, not from the library.

use std::time::{Duration, Instant};

use centroidkit::dists::sample;
use centroidkit::dual::{zp_norm_for_spec, Backend};
use centroidkit::norms::moment_growth_ratio;
use centroidkit::rng::{derive_seed, tags};
use centroidkit::{DistributionSpec, DualSolveOptions};
use centroidkit_cli::report::{to_json, Cell, ExperimentReport};
use centroidkit_cli::{run, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const SEED: u64 = 20261016;

// ---------------------------------------------------------------- oracles

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let m = m + m % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `E|g|^p` for a standard Gaussian.
fn gaussian_abs_moment(p: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    c * simpson(|x| x.powf(p) * (-x * x / 2.0).exp(), 0.0, 40.0, 200_000)
}

/// `||U_1||_p` for `U` uniform on `S^{n-1}`: `U_1 = cos(theta)` with
/// density proportional to `sin^{n-2}(theta)`.
fn sphere_coordinate_norm(n: usize, p: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let w = |t: f64| t.sin().powi(n as i32 - 2);
    let num = simpson(|t| t.cos().abs().powf(p) * w(t), 0.0, pi, 200_000);
    let den = simpson(w, 0.0, pi, 200_000);
    (num / den).powf(1.0 / p)
}

/// `c_{2k}^{2k}` from the generating function `sum_l C(2l,l) x^l =
/// (1-4x)^(-1/2)`: the coefficient of `x^k` in `(1-4x)^(-n/2)` divided by
/// `C(2k,k)`.
fn c2k_pow(n: usize, k: u32) -> f64 {
    let mut v = 1.0;
    for j in 0..k {
        v *= 4.0 * (n as f64 / 2.0 + j as f64) / (j as f64 + 1.0);
    }
    let mut central = 1.0;
    for j in 0..k {
        central *= (2 * k - j) as f64 / (j + 1) as f64;
    }
    v / central
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `E|sum a_i eps_i|^p` over all `2^n` sign patterns.
fn rademacher_brute_force(a: &[f64], p: f64) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for mask in 0u64..(1 << n) {
        let s: f64 = a.iter().enumerate().map(|(i, x)| if mask >> i & 1 == 1 { -x } else { *x }).sum();
        total += s.abs().powf(p);
    }
    (total / (1u64 << n) as f64).powf(1.0 / p)
}

fn surrogate(a: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = a.iter().map(|x| x.abs()).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let head = (p.floor() as usize).min(s.len());
    s[..head].iter().sum::<f64>() + p.sqrt() * s[head..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|j| (j as f64).ln()).sum()
}

/// Volume-entropy lower estimate of the sparse-law Sudakov constant for
/// `T = n^{-1/2} B_inf^n`, where every realization gives `sup = 1`:
/// `max_eps eps sqrt(max(0, ln vol T - n ln eps - ln vol B_2^n))` over 24
/// log-spaced `eps` in `[diam/1000, diam]`, `diam = 2`.
fn sparse_cx_oracle(n: usize) -> f64 {
    let nf = n as f64;
    let ln_cube = nf * (2.0 / nf.sqrt()).ln();
    let ln_ball = nf / 2.0 * std::f64::consts::PI.ln() - ln_factorial(n / 2);
    let (lo, hi) = ((2.0f64 / 1e3).ln(), 2f64.ln());
    (0..24)
        .map(|i| {
            let eps = (lo + (hi - lo) * i as f64 / 23.0).exp();
            eps * (ln_cube - nf * eps.ln() - ln_ball).max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- harness

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!("seed = {SEED}\n{text}")).expect("valid config")
}

fn experiment(name: &str, extra: &str) -> (ExperimentReport, Duration) {
    let start = Instant::now();
    let (report, _) = run(name, &config(extra), None).expect("experiment runs");
    (report, start.elapsed())
}

fn f(c: &Cell, key: &str) -> f64 {
    c.get_f64(key).unwrap_or_else(|| panic!("{} has no {key}", c.label))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// --------------------------------------------------------------- criteria

fn rotation_invariant() -> Outcome {
    let (r, t) = experiment("verify-rotinv", "");
    let mut worst: f64 = 0.0;
    for c in &r.cells {
        let oracle = 1.0 / sphere_coordinate_norm(f(c, "n") as usize, f(c, "p"));
        worst = worst.max(rel(f(c, "estimate"), oracle));
    }
    let ok = r.cells.len() == 3 && worst <= 0.05 && t <= Duration::from_secs(300);
    outcome(ok, format!("sphere n=8 p in {{2,4,8}}: max rel err {worst:.2e} (tol 0.05), {:.0} s (limit 300)", t.as_secs_f64()))
}

fn z2_identity() -> Outcome {
    let (r, _) = experiment("verify-z2", "");
    let errs: Vec<f64> = r.cells.iter().map(|c| rel(f(c, "second_moment"), 16.0)).collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    outcome(r.cells.len() == 2 && worst <= 0.03, format!("gaussian, exponential n=16: max |E||X||^2 - 16|/16 = {worst:.2e} (tol 0.03)"))
}

fn large_p() -> Outcome {
    let (r, _) = experiment("remark-largep", "");
    let worst = r.cells.iter().map(|c| f(c, "ci_high")).fold(0.0, f64::max);
    outcome(r.cells.len() == 4 && worst <= 10.0, format!("n=4, p in {{4,8}}: max upper CI end {worst:.3} (bound 10)"))
}

fn prop21() -> Outcome {
    let (table, t) = experiment("c2k-table", "");
    let mut sandwich = true;
    let mut agree: f64 = 0.0;
    for c in &table.cells {
        let (n, k) = (f(c, "n") as usize, f(c, "k") as u32);
        let exact = c2k_pow(n, k);
        let count = binom((n + k as usize - 1) as u64, k as u64);
        let four = 4f64.powi(k as i32);
        sandwich &= c.values["sandwich"].as_bool() == Some(true);
        sandwich &= count / four <= exact * (1.0 + 1e-12) && exact <= count * four * (1.0 + 1e-12);
        agree = agree.max(rel(f(c, "c2k"), exact.powf(1.0 / (2.0 * k as f64))));
    }
    let (m, _) = experiment("verify-prop21", "");
    let mut worst: f64 = 0.0;
    let mut ok_b = m.cells.len() == 12;
    for c in &m.cells {
        let (n, k) = (f(c, "n") as usize, f(c, "k") as u32);
        let ck = c2k_pow(n, k).powf(1.0 / (2.0 * k as f64));
        let limit = ck * (1.0 + 0.05 + f(c, "relative_ci_width"));
        ok_b &= f(c, "estimate") <= limit;
        worst = worst.max(f(c, "estimate") / ck);
    }
    let ok = table.cells.len() == 100 && sandwich && agree < 1e-10 && t <= Duration::from_secs(10) && ok_b;
    outcome(
        ok,
        format!(
            "(a) sandwich on 100 cells: {sandwich}, c2k vs generating function {agree:.1e}, {:.2} s (limit 10); (b) max estimate/c2k {worst:.3}",
            t.as_secs_f64()
        ),
    )
}

fn gaussian_closed_forms() -> Outcome {
    let g6 = gaussian_abs_moment(6.0).powf(1.0 / 6.0);
    let opts = DualSolveOptions { backend: Backend::Saa, sample_budget: 100_000, ..Default::default() };
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    let s: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let est = zp_norm_for_spec(&DistributionSpec::gaussian(8), 6.0, &s, &opts, SEED).expect("solve").value;
    let target = s.iter().map(|v| v * v).sum::<f64>().sqrt() / g6;
    let err = rel(est, target);

    let cache = sample(&DistributionSpec::gaussian(6), 200_000, SEED).expect("sample");
    let mut worst: f64 = 0.0;
    let mut ok_growth = true;
    for _ in 0..20 {
        let t: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = rng.random_range(2.0..6.0);
        let p = q + rng.random_range(0.0..6.0);
        let ratio = moment_growth_ratio(&cache, &t, p, q).expect("ratio");
        let bound = (p / q).sqrt();
        ok_growth &= ratio <= bound;
        worst = worst.max(ratio / bound);
    }
    outcome(
        err <= 0.02 && ok_growth,
        format!("zp_norm p=6 n=8 rel err {err:.2e} (tol 0.02); growth ratio / sqrt(p/q) max {worst:.3} over 20 draws (bound 1)"),
    )
}

fn hitczenko() -> Outcome {
    let (r, t) = experiment("hitczenko", "");
    let ps: Vec<f64> = (1..=10).map(f64::from).collect();
    let (mut lo, mut hi, mut mismatch) = (f64::INFINITY, 0.0f64, 0.0f64);
    for c in &r.cells {
        let a: Vec<f64> = serde_json::from_value(c.values["a"].clone()).unwrap();
        let reported: Vec<f64> = serde_json::from_value(c.values["ratios"].clone()).unwrap();
        assert!(a.len() <= 14);
        for (p, rep) in ps.iter().zip(&reported) {
            let ratio = rademacher_brute_force(&a, *p) / surrogate(&a, *p);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            mismatch = mismatch.max(rel(*rep, ratio));
        }
    }
    let ok = r.cells.len() == 200 && lo >= 0.125 && hi <= 8.0 && mismatch < 1e-9 && t <= Duration::from_secs(120);
    outcome(ok, format!("200 instances, p=1..10: ratio in [{lo:.3}, {hi:.3}] (band [1/8, 8]), report vs brute force {mismatch:.1e}, {:.1} s", t.as_secs_f64()))
}

fn exponential_example() -> Outcome {
    let (r, _) = experiment("exp-example", "");
    let c = &r.cells[0];
    let (n, p) = (16.0f64, 4.0f64);
    let q = (n * p).sqrt();
    let rows = c.values["tails"].as_array().unwrap();
    let table = &r.tables[0];
    let mut ok = rows.len() == 3 && table.rows.len() == 3;
    for (row, t) in table.rows.iter().zip([0.5, 1.0, 2.0]) {
        let bound = (-t * (n * p).sqrt() / 2f64.sqrt()).exp();
        let hi = row[4].as_f64().unwrap();
        ok &= rel(row[5].as_f64().unwrap(), bound) < 1e-12 && bound <= hi;
    }
    let fact8: f64 = (1..=8).map(f64::from).product();
    let formula = 2.0 / p * (fact8 * 2f64.powf(-q / 2.0)).powf(1.0 / q);
    let analytic = c.values["witness_moment"]["analytic"].as_f64().unwrap();
    ok &= analytic >= formula * (1.0 - 1e-12);
    ok &= f(c, "min_zp_over_witness") >= 1.0 - 1e-9;
    outcome(ok, format!("tails within simultaneous binomial CI at 1e6 samples; witness moment {analytic:.6} vs (2/p)(8! 2^-4)^(1/8) = {formula:.6}"))
}

fn entropy_bound() -> Outcome {
    let (r, _) = experiment("entropy-zp", "");
    let c = &r.cells[0];
    let measured = f(c, "measured");
    let closed = 8f64.sqrt() / gaussian_abs_moment(4.0).powf(0.25);
    let mut ok = rel(measured, closed) < 0.05;
    let mut margin = f64::INFINITY;
    for e in c.values["profile"].as_array().unwrap() {
        let eps = e["eps"].as_f64().unwrap();
        let count = e["net_count"].as_f64().unwrap();
        let bound = eps * 8f64.sqrt() + std::f64::consts::E / 4.0 * count.ln().max(4.0);
        ok &= rel(e["bound"].as_f64().unwrap(), bound) < 1e-12 && bound >= measured;
        margin = margin.min(bound - measured);
    }
    outcome(ok, format!("gaussian n=8 p=4: measured {measured:.4} (closed form {closed:.4}); min bound - measured {margin:.4}"))
}

fn sparse_sudakov() -> Outcome {
    let (r, _) = experiment("sudakov-sparse", "");
    let sparse: Vec<&Cell> = r.cells.iter().filter(|c| c.values["family"] == "sparse_isotropic").collect();
    let mut ok = sparse.len() == 3;
    let mut cx = Vec::new();
    for c in &sparse {
        let n = f(c, "n") as usize;
        ok &= f(c, "sup") == 1.0 && f(c, "sup_ci_low") == 1.0 && f(c, "sup_ci_high") == 1.0;
        let oracle = sparse_cx_oracle(n);
        ok &= rel(f(c, "cx_lower"), oracle) < 1e-9 && oracle / (n as f64).sqrt() >= 0.2;
        cx.push(oracle);
    }
    let growth = cx[1] / cx[0];
    ok &= growth >= 1.5;
    outcome(ok, format!("cx_lower/sqrt(n) = {:?}, growth(64/16) = {growth:.3}", cx.iter().zip([16.0f64, 64.0, 256.0]).map(|(c, n)| format!("{:.3}", c / n.sqrt())).collect::<Vec<_>>()))
}

fn sweep() -> Outcome {
    let (r, _) = experiment("sweep-conjecture", "");
    let mut ok = r.cells.len() == 60;
    let max_ratio = r.cells.iter().map(|c| f(c, "ratio_to_conjecture")).fold(0.0, f64::max);
    ok &= max_ratio <= 5.0;
    let outer = r.parameters["outer_samples"].as_u64().unwrap() as usize;
    let (mut sphere_err, mut gauss_err): (f64, f64) = (0.0, 0.0);
    for c in &r.cells {
        let (n, p, q) = (f(c, "n") as usize, f(c, "p"), f(c, "q"));
        let est = f(c, "estimate");
        match c.values["family"].as_str().unwrap() {
            "uniform_sphere" => sphere_err = sphere_err.max(rel(est, 1.0 / sphere_coordinate_norm(n, p))),
            "gaussian_isotropic" => {
                // ||x||_{Z_p} = |x| / ||g||_p on every realization.
                let xs = sample(&DistributionSpec::gaussian(n), outer, derive_seed(c.seed, tags::OUTER)).unwrap();
                let m = xs.rows().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(q)).sum::<f64>() / outer as f64;
                let oracle = m.powf(1.0 / q) / gaussian_abs_moment(p).powf(1.0 / p);
                gauss_err = gauss_err.max(rel(est, oracle));
            }
            _ => {}
        }
    }
    ok &= sphere_err <= 0.05 && gauss_err <= 0.05;
    ok &= r.verdicts.iter().filter(|v| v.hard).all(|v| v.pass);
    outcome(ok, format!("60 cells: max ratio {max_ratio:.3} (bound 5); sphere rel err {sphere_err:.1e}, gaussian rel err {gauss_err:.1e} (tol 0.05)"))
}

fn determinism() -> Outcome {
    let cfg = config("budget_scale = 0.1");
    let (a, _) = run("suite", &cfg, Some(1)).expect("suite runs");
    let (b, _) = run("suite", &cfg, Some(2)).expect("suite runs");
    let (ja, jb) = (to_json(&a), to_json(&b));
    let dir = tempfile::tempdir().unwrap();
    centroidkit_cli::report::write_outputs(&a, &dir.path().join("a")).unwrap();
    centroidkit_cli::report::write_outputs(&b, &dir.path().join("b")).unwrap();
    let fa = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let fb = std::fs::read(dir.path().join("b/report.json")).unwrap();
    outcome(ja == jb && fa == fb, format!("suite at budget_scale 0.1 with 1 and 2 threads: {} bytes, identical = {}", fa.len(), fa == fb))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("1 rotation-invariant closed form", rotation_invariant),
        ("2 isotropic p=2 identity", z2_identity),
        ("3 bound for p >= n", large_p),
        ("4 c_2k sandwich and moment bound", prop21),
        ("5 gaussian closed forms", gaussian_closed_forms),
        ("6 rademacher sums", hitczenko),
        ("7 exponential example", exponential_example),
        ("8 entropy bound", entropy_bound),
        ("9 sparse sudakov example", sparse_sudakov),
        ("10 conjecture sweep", sweep),
        ("11 determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        println!("criterion {name}: {} ({:.1} s) {}", if o.pass { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
        failed += !o.pass as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
