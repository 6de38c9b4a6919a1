//! Closed-form identities for `Z_p` moments: rotation invariance, the
//! `p = 2` identity and the bound for `p >= n`.

use centroidkit::dists::Family;
use centroidkit::dual::{zp_moment, Backend, ZpMomentReport};
use centroidkit::special::sphere_coordinate_abs_moment;
use centroidkit::{DistributionSpec, DualSolveOptions};
use serde_json::json;

use super::{core_err, json, rel_err, spec_label, Ctx};
use crate::config::FamilyName;
use crate::report::{Cell, Plot, Series, Table, Verdict};
use crate::CliError;

/// The report without its per-sample diagnostics.
pub(crate) fn summary(r: &ZpMomentReport) -> serde_json::Value {
    let mut r = r.clone();
    r.diagnostics.clear();
    let mut v = json(&r);
    if let serde_json::Value::Object(m) = &mut v {
        m.remove("diagnostics");
    }
    v
}

/// `||U_1||_p^{-1}` for `U` uniform on `S^{n-1}`.
pub(crate) fn sphere_oracle(n: usize, p: f64) -> f64 {
    sphere_coordinate_abs_moment(n, p).powf(-1.0 / p)
}

fn is_rotation_invariant(spec: &DistributionSpec) -> bool {
    matches!(spec.family, Family::GaussianIsotropic | Family::UniformSphere { .. })
}

pub(crate) fn moment_cell(label: String, seed: u64, r: &ZpMomentReport) -> Cell {
    let mut c = Cell::new(label, seed);
    c.set("family", &r.family)
        .set("n", r.n)
        .set("p", r.p)
        .set("q", r.q)
        .set("estimate", r.estimate.value)
        .set("ci_low", r.estimate.ci_low)
        .set("ci_high", r.estimate.ci_high)
        .set("witness_estimate", r.witness_estimate)
        .set("ratio_to_conjecture", r.ratio_to_conjecture)
        .set("report", summary(r));
    c
}

pub(crate) fn verify_rotinv(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Sphere], &[8])?;
    if let Some(s) = specs.iter().find(|s| !is_rotation_invariant(s)) {
        return Err(CliError::Config(format!("{} is not rotationally invariant", spec_label(s))));
    }
    let ps = ctx.grid_f64("p", &ctx.cfg.grid.p.clone(), &[2.0, 4.0, 8.0]);
    let outer = ctx.outer(2000);
    let opts = ctx.dual(DualSolveOptions { backend: Backend::Saa, ..Default::default() }, 100_000);
    let tol = ctx.tol("rel_tol", 0.05);
    let items: Vec<(DistributionSpec, f64)> =
        specs.iter().flat_map(|s| ps.iter().map(move |&p| (s.clone(), p))).collect();
    let cells = ctx.run_cells(&items, |(spec, p), seed| {
        let r = zp_moment(spec, *p, *p, outer, &opts, seed).map_err(core_err)?;
        let oracle = sphere_oracle(spec.dim(), *p);
        let mut c = moment_cell(format!("{} p={p}", spec_label(spec)), seed, &r);
        c.set("oracle", oracle).set("rel_err", rel_err(r.estimate.value, oracle));
        Ok(c)
    })?;
    let mut table = Table::new("rotinv", &["family", "n", "p", "estimate", "ci_low", "ci_high", "oracle", "rel_err"]);
    let mut plot = Plot {
        name: "rotinv".into(),
        title: "(E||X||^p)^(1/p) against ||U_1||_p^(-1)".into(),
        x_label: "p".into(),
        y_label: "moment".into(),
        log_x: true,
        series: Vec::new(),
    };
    for spec in &specs {
        let label = spec_label(spec);
        let mine: Vec<&Cell> = cells.iter().filter(|c| c.label.starts_with(&format!("{label} "))).collect();
        plot.series.push(Series {
            label: label.clone(),
            points: mine.iter().map(|c| (c.get_f64("p").unwrap(), c.get_f64("estimate").unwrap())).collect(),
            reference: false,
        });
        plot.series.push(Series {
            label: format!("{label} oracle"),
            points: mine.iter().map(|c| (c.get_f64("p").unwrap(), c.get_f64("oracle").unwrap())).collect(),
            reference: true,
        });
    }
    for c in &cells {
        let err = c.get_f64("rel_err").unwrap();
        ctx.check(Verdict::at_most(format!("{}: relative error", c.label), err, tol));
        table.push(row(c, &["family", "n", "p", "estimate", "ci_low", "ci_high", "oracle", "rel_err"]));
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    ctx.plots.push(plot);
    Ok(())
}

pub(crate) fn row(c: &Cell, keys: &[&str]) -> Vec<serde_json::Value> {
    keys.iter().map(|k| c.values.get(*k).cloned().unwrap_or(serde_json::Value::Null)).collect()
}

pub(crate) fn verify_z2(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Gaussian, FamilyName::Exponential], &[16])?;
    let outer = ctx.outer(10_000);
    let opts = ctx.dual(DualSolveOptions::default(), 100_000);
    let tol = ctx.tol("rel_tol", 0.03);
    let cells = ctx.run_cells(&specs, |spec, seed| {
        let r = zp_moment(spec, 2.0, 2.0, outer, &opts, seed).map_err(core_err)?;
        let n = spec.dim() as f64;
        let second = r.estimate.value.powi(2);
        let mut c = moment_cell(spec_label(spec), seed, &r);
        c.set("second_moment", second)
            .set("second_moment_ci", json!([r.estimate.ci_low.powi(2), r.estimate.ci_high.powi(2)]))
            .set("target", n)
            .set("rel_err", rel_err(second, n));
        Ok(c)
    })?;
    let cols = ["family", "n", "second_moment", "target", "rel_err"];
    let mut table = Table::new("z2", &cols);
    for c in &cells {
        ctx.check(Verdict::at_most(format!("{}: |E||X||^2 - n| / n", c.label), c.get_f64("rel_err").unwrap(), tol));
        table.push(row(c, &cols));
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}

pub(crate) fn remark_largep(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Gaussian, FamilyName::Exponential], &[4])?;
    let ps = ctx.grid_f64("p", &ctx.cfg.grid.p.clone(), &[4.0, 8.0]);
    let outer = ctx.outer(2000);
    let opts = ctx.dual(DualSolveOptions::default(), 100_000);
    let bound = ctx.tol("bound", 10.0);
    for s in &specs {
        if let Some(p) = ps.iter().find(|&&p| p < s.dim() as f64) {
            return Err(CliError::Config(format!("remark-largep needs p >= n, got p={p} for {}", spec_label(s))));
        }
    }
    let items: Vec<(DistributionSpec, f64)> =
        specs.iter().flat_map(|s| ps.iter().map(move |&p| (s.clone(), p))).collect();
    let cells = ctx.run_cells(&items, |(spec, p), seed| {
        let r = zp_moment(spec, *p, *p, outer, &opts, seed).map_err(core_err)?;
        let mut c = moment_cell(format!("{} p={p}", spec_label(spec)), seed, &r);
        c.set("net_bound", 2.0 * 5f64.powf(spec.dim() as f64 / p));
        Ok(c)
    })?;
    let cols = ["family", "n", "p", "estimate", "ci_high", "net_bound"];
    let mut table = Table::new("largep", &cols);
    for c in &cells {
        let hi = c.get_f64("ci_high").unwrap();
        ctx.check(Verdict::at_most(format!("{}: upper CI end", c.label), hi, bound));
        let nb = c.get_f64("net_bound").unwrap();
        ctx.check(Verdict::at_most(format!("{}: estimate vs 2*5^(n/p)", c.label), c.get_f64("estimate").unwrap(), nb).soft());
        table.push(row(c, &cols));
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}
