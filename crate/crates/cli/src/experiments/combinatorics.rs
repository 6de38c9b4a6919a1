//! The constants `c_{2k}`, their moment bound and Rademacher sums.

use centroidkit::combi::{c2k, c2k_bounds, c2k_direct};
use centroidkit::dual::zp_moment;
use centroidkit::norms::{hitczenko_surrogate, rademacher_norm_exact, MAX_RADEMACHER_LEN};
use centroidkit::{DistributionSpec, DualSolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::closed::{moment_cell, row};
use super::{core_err, spec_label, Ctx};
use crate::config::FamilyName;
use crate::report::{Cell, Plot, Series, Table, Verdict};
use crate::CliError;

/// Lengths of random coefficient vectors when `grid.n` is unset.
const RANDOM_MAX_N: usize = 14;

/// Cells with both `n` and `k` at most this also evaluate the direct sum.
const DIRECT_MAX: u32 = 5;

pub(crate) fn c2k_table(ctx: &mut Ctx) -> Result<(), CliError> {
    let ns = ctx.grid_n(&(1..=10).collect::<Vec<_>>());
    let ks = ctx.cfg.grid.k.clone().unwrap_or_else(|| (1..=10).collect());
    ctx.param("k", &ks);
    let items: Vec<(usize, u32)> = ns.iter().flat_map(|&n| ks.iter().map(move |&k| (n, k))).collect();
    let cells = ctx.run_cells(&items, |&(n, k), seed| {
        let c = c2k(n, k).map_err(core_err)?;
        let (lo, hi) = c2k_bounds(n, k);
        let mut cell = Cell::new(format!("n={n} k={k}"), seed);
        cell.set("n", n)
            .set("k", k)
            .set("c2k_pow_2k", c.exact.to_string())
            .set("c2k", c.value)
            .set("lower", lo.to_string())
            .set("upper", hi.to_string())
            .set("sandwich", lo <= c.exact && c.exact <= hi)
            .set("asymptotic", ((n as f64 + k as f64) / k as f64).sqrt())
            .set("ratio_to_asymptotic", c.value / ((n as f64 + k as f64) / k as f64).sqrt());
        if n as u32 <= DIRECT_MAX && k <= DIRECT_MAX {
            cell.set("direct_agrees", c2k_direct(n, k).map_err(core_err)? == c.exact);
        }
        Ok(cell)
    })?;
    let flag = |c: &Cell, key: &str| c.values.get(key).and_then(|v| v.as_bool());
    let broken = cells.iter().filter(|c| flag(c, "sandwich") != Some(true)).count();
    ctx.check(Verdict::new(
        "4^-k C(n+k-1,k) <= c_2k^2k <= 4^k C(n+k-1,k) in exact arithmetic",
        broken == 0,
        broken as f64,
        0.0,
        format!("{broken} of {} cells violate the sandwich", cells.len()),
    ));
    let direct: Vec<&Cell> = cells.iter().filter(|c| flag(c, "direct_agrees").is_some()).collect();
    let disagree = direct.iter().filter(|c| flag(c, "direct_agrees") != Some(true)).count();
    ctx.check(Verdict::new(
        "product formula equals the definition",
        disagree == 0,
        disagree as f64,
        0.0,
        format!("{disagree} of {} cells disagree", direct.len()),
    ));
    let cols = ["n", "k", "c2k_pow_2k", "c2k", "lower", "upper", "sandwich", "ratio_to_asymptotic"];
    let mut table = Table::new("c2k", &cols);
    for c in &cells {
        table.push(row(c, &cols));
    }
    let mut plot = Plot {
        name: "c2k".into(),
        title: "c_2k / sqrt((n+k)/k)".into(),
        x_label: "k".into(),
        y_label: "ratio".into(),
        log_x: false,
        series: Vec::new(),
    };
    for &n in &ns {
        plot.series.push(Series {
            label: format!("n={n}"),
            points: cells
                .iter()
                .filter(|c| c.get_f64("n") == Some(n as f64))
                .map(|c| (c.get_f64("k").unwrap(), c.get_f64("ratio_to_asymptotic").unwrap()))
                .collect(),
            reference: false,
        });
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    ctx.plots.push(plot);
    Ok(())
}

pub(crate) fn verify_prop21(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Exponential, FamilyName::Rademacher], &[2, 4])?;
    if let Some(s) = specs.iter().find(|s| !s.capabilities().is_unconditional) {
        return Err(CliError::Config(format!("{} is not unconditional", spec_label(s))));
    }
    let ks = ctx.cfg.grid.k.clone().unwrap_or_else(|| vec![1, 2, 3]);
    ctx.param("k", &ks);
    let outer = ctx.outer(2000);
    let opts = ctx.dual(DualSolveOptions::default(), 100_000);
    let slack = ctx.tol("slack", 0.05);
    let items: Vec<(DistributionSpec, u32)> =
        specs.iter().flat_map(|s| ks.iter().map(move |&k| (s.clone(), k))).collect();
    let cells = ctx.run_cells(&items, |(spec, k), seed| {
        let p = 2.0 * *k as f64;
        let r = zp_moment(spec, p, p, outer, &opts, seed).map_err(core_err)?;
        let c = c2k(spec.dim(), *k).map_err(core_err)?;
        let rel_width = r.estimate.ci_width() / r.estimate.value;
        let mut cell = moment_cell(format!("{} k={k}", spec_label(spec)), seed, &r);
        cell.set("k", k)
            .set("c2k", c.value)
            .set("relative_ci_width", rel_width)
            .set("threshold", c.value * (1.0 + slack + rel_width))
            .set("ratio_to_c2k", r.estimate.value / c.value);
        Ok(cell)
    })?;
    let cols = ["family", "n", "k", "estimate", "ci_high", "c2k", "threshold", "ratio_to_c2k"];
    let mut table = Table::new("prop21", &cols);
    for c in &cells {
        ctx.check(Verdict::at_most(
            format!("{}: estimate vs c_2k (1 + slack + CI width)", c.label),
            c.get_f64("estimate").unwrap(),
            c.get_f64("threshold").unwrap(),
        ));
        table.push(row(c, &cols));
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}

/// Coefficients with magnitudes spread over several orders so that both
/// the head and the tail of the rearrangement matter.
fn random_coefficients(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            let w: f64 = rng.sample(StandardNormal);
            g * (1.5 * w).exp()
        })
        .collect()
}

pub(crate) fn hitczenko(ctx: &mut Ctx) -> Result<(), CliError> {
    let dims = ctx.cfg.grid.n.clone();
    if let Some(n) = dims.as_ref().and_then(|d| d.iter().find(|&&n| n > MAX_RADEMACHER_LEN)) {
        return Err(CliError::Config(format!("hitczenko needs n <= {MAX_RADEMACHER_LEN}, got {n}")));
    }
    ctx.param("n", &dims);
    let ps = ctx.grid_f64("p", &ctx.cfg.grid.p.clone(), &(1..=10).map(f64::from).collect::<Vec<_>>());
    if ps.iter().any(|&p| p < 1.0) {
        return Err(CliError::Config("hitczenko needs p >= 1".into()));
    }
    let instances = ctx.instances(200);
    let band = ctx.tol("band", 8.0);
    let idx: Vec<usize> = (0..instances).collect();
    let cells = ctx.run_cells(&idx, |&i, seed| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = match &dims {
            Some(d) => d[i % d.len()],
            None => rng.random_range(1..=RANDOM_MAX_N),
        };
        let a = random_coefficients(n, &mut rng);
        let mut ratios = Vec::with_capacity(ps.len());
        for &p in &ps {
            let exact = rademacher_norm_exact(&a, p).map_err(core_err)?.value;
            ratios.push(exact / hitczenko_surrogate(&a, p));
        }
        let mut cell = Cell::new(format!("instance {i} n={n}"), seed);
        cell.set("n", n).set("a", &a).set("ratios", &ratios);
        Ok(cell)
    })?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut table = Table::new("hitczenko", &["instance", "n", "p", "ratio"]);
    let mut by_p: Vec<(f64, f64, f64)> = ps.iter().map(|&p| (p, f64::INFINITY, 0.0)).collect();
    for (i, c) in cells.iter().enumerate() {
        let rs: Vec<f64> = serde_json::from_value(c.values["ratios"].clone()).expect("ratios");
        for (j, r) in rs.iter().enumerate() {
            lo = lo.min(*r);
            hi = hi.max(*r);
            by_p[j].1 = by_p[j].1.min(*r);
            by_p[j].2 = by_p[j].2.max(*r);
            table.push(vec![i.into(), c.values["n"].clone(), ps[j].into(), (*r).into()]);
        }
    }
    let constant = hi.max(1.0 / lo);
    ctx.param("min_ratio", lo);
    ctx.param("max_ratio", hi);
    ctx.param("equivalence_constant", constant);
    ctx.check(Verdict::at_least("min ratio exact / surrogate", lo, 1.0 / band));
    ctx.check(Verdict::at_most("max ratio exact / surrogate", hi, band));
    ctx.plots.push(Plot {
        name: "hitczenko".into(),
        title: "range of exact / surrogate".into(),
        x_label: "p".into(),
        y_label: "ratio".into(),
        log_x: false,
        series: vec![
            Series { label: "min".into(), points: by_p.iter().map(|t| (t.0, t.1)).collect(), reference: false },
            Series { label: "max".into(), points: by_p.iter().map(|t| (t.0, t.2)).collect(), reference: false },
        ],
    });
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}
