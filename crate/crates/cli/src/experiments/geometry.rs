//! Covering numbers of `M_p` balls and Sudakov-type minoration.

use std::collections::BTreeMap;

use centroidkit::cover::{entropy_to_zp_bound, mp_ball, prop36_check, Cloud, CoverOptions};
use centroidkit::dual::zp_moment;
use centroidkit::sudakov::{minoration_constant_lower, unconditional_minoration_ratio, Budgets, IndexSet};
use centroidkit::{BodyOracle, DistributionSpec, DualSolveOptions};

use super::closed::row;
use super::{core_err, json, spec_label, Ctx};
use crate::config::FamilyName;
use crate::report::{Cell, Plot, Series, Table, Verdict};
use crate::CliError;

/// Default `eps` values as multiples of the circumradius of `M_p(X)`.
const ENTROPY_EPS_FACTORS: [f64; 6] = [0.25, 0.35, 0.5, 0.7, 1.0, 1.5];

pub(crate) fn entropy_zp(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Gaussian], &[8])?;
    if let Some(s) = specs.iter().find(|s| !s.capabilities().is_isotropic) {
        return Err(CliError::Config(format!("entropy-zp needs an isotropic law, got {}", spec_label(s))));
    }
    let ps = ctx.grid_f64("p", &ctx.cfg.grid.p.clone(), &[4.0]);
    let eps_given = ctx.cfg.grid.eps.clone();
    ctx.param("eps", eps_given.clone().map(json).unwrap_or_else(|| json(ENTROPY_EPS_FACTORS.map(|f| format!("{f} R")))));
    let lambda = ctx.cfg.lambda.unwrap_or(1.0);
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(CliError::Config("lambda must be positive".into()));
    }
    ctx.param("lambda", lambda);
    let outer = ctx.outer(2000);
    let candidates = ctx.candidates(centroidkit::cover::DEFAULT_CANDIDATES);
    let opts = ctx.dual(DualSolveOptions::default(), 100_000);
    let items: Vec<(DistributionSpec, f64)> =
        specs.iter().flat_map(|s| ps.iter().map(move |&p| (s.clone(), p))).collect();
    let cells = ctx.run_cells(&items, |(spec, p), seed| {
        let measured = zp_moment(spec, *p, 2.0, outer, &opts, seed).map_err(core_err)?;
        let body = mp_ball(spec, *p, &opts, seed).map_err(core_err)?;
        let radius = body.circumradius();
        let eps: Vec<f64> = match &eps_given {
            Some(e) => e.clone(),
            None => ENTROPY_EPS_FACTORS.iter().map(|f| f * radius).collect(),
        };
        let cloud = Cloud::new(&body, candidates, seed).map_err(core_err)?;
        let mut profile = Vec::new();
        for &e in &eps {
            let net = cloud.greedy_net(e);
            let bound = entropy_to_zp_bound(spec, *p, e, &net, lambda).map_err(core_err)?;
            profile.push(serde_json::json!({
                "eps": e,
                "net_count": net.count,
                "log_count": (net.count as f64).ln(),
                "achieved_radius": net.metadata.achieved_radius,
                "bound": bound,
            }));
        }
        let mut c = Cell::new(format!("{} p={p}", spec_label(spec)), seed);
        c.set("family", spec.family_name())
            .set("n", spec.dim())
            .set("p", p)
            .set("circumradius", radius)
            .set("measured", measured.estimate.value)
            .set("measured_ci_high", measured.estimate.ci_high)
            .set("profile", &profile);
        Ok(c)
    })?;
    let mut table = Table::new("entropy_zp", &["label", "eps", "net_count", "bound", "measured"]);
    for c in &cells {
        let measured = c.get_f64("measured").unwrap();
        let profile = c.values["profile"].as_array().unwrap().clone();
        for e in &profile {
            let bound = e["bound"].as_f64().unwrap();
            ctx.check(Verdict::at_least(
                format!("{} eps={}: entropy bound >= (E||X||^2)^(1/2)", c.label, e["eps"]),
                bound,
                measured,
            ));
            table.push(vec![c.label.clone().into(), e["eps"].clone(), e["net_count"].clone(), e["bound"].clone(), measured.into()]);
        }
        let pts = |key: &str| -> Vec<(f64, f64)> {
            profile.iter().map(|e| (e["eps"].as_f64().unwrap(), e[key].as_f64().unwrap())).collect()
        };
        let tag = c.label.replace(' ', "_").replace('=', "");
        ctx.plots.push(Plot {
            name: format!("profile_{tag}"),
            title: format!("ln N(M_p, eps B) for {}", c.label),
            x_label: "eps".into(),
            y_label: "ln N".into(),
            log_x: true,
            series: vec![Series { label: "greedy net".into(), points: pts("log_count"), reference: false }],
        });
        let measured_line: Vec<(f64, f64)> = pts("bound").iter().map(|(e, _)| (*e, measured)).collect();
        ctx.plots.push(Plot {
            name: format!("bound_{tag}"),
            title: format!("entropy bound and measured moment for {}", c.label),
            x_label: "eps".into(),
            y_label: "(E||X||^2)^(1/2)".into(),
            log_x: true,
            series: vec![
                Series { label: "entropy bound".into(), points: pts("bound"), reference: false },
                Series { label: "measured".into(), points: measured_line, reference: true },
            ],
        });
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}

pub(crate) fn prop36(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = match &ctx.cfg.distributions {
        Some(_) => ctx.specs(&[], &[])?,
        None if ctx.cfg.families.is_some() => ctx.specs(&[], &[6])?,
        None => {
            let s = vec![DistributionSpec::gaussian(6), DistributionSpec::sparse(16)];
            ctx.param("distributions", &s);
            s
        }
    };
    let ps = ctx.grid_f64("p", &ctx.cfg.grid.p.clone(), &[2.0, 4.0]);
    let cxs = ctx.grid_f64("cx", &ctx.cfg.grid.cx.clone(), &[0.1, 1.0, 2.0]);
    let candidates = ctx.candidates(5000);
    let dual = ctx.dual(DualSolveOptions::default(), 100_000);
    let opts = CoverOptions { candidates, dual };
    let mut items: Vec<(DistributionSpec, f64, f64)> = Vec::new();
    for s in &specs {
        for &p in &ps {
            for &cx in &cxs {
                items.push((s.clone(), p, cx));
            }
        }
    }
    let cells = ctx.run_cells(&items, |(spec, p, cx), seed| {
        let r = prop36_check(spec, *p, *cx, &opts, seed).map_err(core_err)?;
        let radius = mp_ball(spec, *p, &opts.dual, seed).map_err(core_err)?.circumradius();
        let mut c = Cell::new(format!("{} p={p} cx={cx}", spec_label(spec)), seed);
        c.set("family", spec.family_name())
            .set("n", spec.dim())
            .set("p", p)
            .set("cx", cx)
            .set("radius", r.radius)
            .set("diameter_bound", 2.0 * radius)
            .set("net_count", r.net_count)
            .set("packing_count", r.packing_count)
            .set("bound", r.bound)
            .set("pass", r.pass)
            .set("refuted", r.refuted);
        Ok(c)
    })?;
    let cols = ["family", "n", "p", "cx", "radius", "net_count", "packing_count", "bound", "pass", "refuted"];
    let mut table = Table::new("prop36", &cols);
    let mut refuted = Vec::new();
    for c in &cells {
        let net = c.get_f64("net_count").unwrap();
        let pack = c.get_f64("packing_count").unwrap();
        ctx.check(Verdict::at_most(format!("{}: packing <= greedy net", c.label), pack, net));
        if c.get_f64("radius").unwrap() >= c.get_f64("diameter_bound").unwrap() {
            ctx.check(Verdict::at_most(format!("{}: one center once eps exceeds the diameter", c.label), net, 1.0));
        }
        let pass = c.values["pass"].as_bool() == Some(true);
        ctx.check(Verdict::new(format!("{}: N <= e^p", c.label), pass, net, c.get_f64("bound").unwrap(), "covering estimate at this cx".into()).soft());
        if c.values["refuted"].as_bool() == Some(true) {
            refuted.push(c.label.clone());
        }
        table.push(row(c, &cols));
    }
    ctx.param("refuted_cells", &refuted);
    ctx.cells = cells;
    ctx.tables.push(table);
    Ok(())
}

pub(crate) fn sudakov_sparse(ctx: &mut Ctx) -> Result<(), CliError> {
    let ns = ctx.grid_n(&[16, 64, 256]);
    let samples = ctx.mc_samples(20_000);
    let cx_floor = ctx.tol("cx_over_sqrt_n", 0.2);
    let growth = ctx.tol("growth", 1.5);
    let gaussian_cap = ctx.tol("gaussian_cx_cap", 10.0);
    let budgets = Budgets { samples, ..Default::default() };
    // Sparse cells first, then one Gaussian reference per dimension.
    let mut items: Vec<(DistributionSpec, IndexSet)> = ns
        .iter()
        .map(|&n| (DistributionSpec::sparse(n), IndexSet::Cube { radius: 1.0 / (n as f64).sqrt() }))
        .collect();
    items.extend(ns.iter().map(|&n| (DistributionSpec::gaussian(n), IndexSet::Ball { radius: 1.0 })));
    let cells = ctx.run_cells(&items, |(spec, set), seed| {
        let r = minoration_constant_lower(spec, set, None, &budgets, seed).map_err(core_err)?;
        let n = spec.dim() as f64;
        let mut c = Cell::new(format!("{} {}", spec_label(spec), set_label(set)), seed);
        c.set("family", spec.family_name())
            .set("n", spec.dim())
            .set("set", set)
            .set("sup", r.sup_estimate.value)
            .set("sup_ci_low", r.sup_estimate.ci_low)
            .set("sup_ci_high", r.sup_estimate.ci_high)
            .set("cx_lower", r.cx_lower)
            .set("cx_over_sqrt_n", r.cx_lower / n.sqrt())
            .set("best_eps", r.best_eps)
            .set("profile", &r.entropy_profile);
        Ok(c)
    })?;
    let (sparse, gauss) = cells.split_at(ns.len());
    let mut prev: Option<&Cell> = None;
    let mut plot = Plot {
        name: "entropy_profile".into(),
        title: "eps sqrt(ln N(T, eps B)) / E sup for the sparse law".into(),
        x_label: "eps".into(),
        y_label: "contribution".into(),
        log_x: true,
        series: Vec::new(),
    };
    let mut checks = Vec::new();
    for c in sparse {
        let exact = c.get_f64("sup") == Some(1.0)
            && c.get_f64("sup_ci_low") == Some(1.0)
            && c.get_f64("sup_ci_high") == Some(1.0);
        checks.push(Verdict::new(format!("{}: every realization gives sup = 1", c.label), exact, c.get_f64("sup").unwrap(), 1.0, "zero variance".into()));
        checks.push(Verdict::at_least(format!("{}: cx_lower / sqrt(n)", c.label), c.get_f64("cx_over_sqrt_n").unwrap(), cx_floor));
        if let Some(pc) = prev {
            let g = c.get_f64("cx_lower").unwrap() / pc.get_f64("cx_lower").unwrap();
            checks.push(Verdict::at_least(format!("cx_lower(n={}) / cx_lower(n={})", c.values["n"], pc.values["n"]), g, growth));
        }
        prev = Some(c);
        let profile: Vec<centroidkit::sudakov::ProfileEntry> = serde_json::from_value(c.values["profile"].clone()).expect("profile");
        plot.series.push(Series {
            label: format!("n={}", c.values["n"]),
            points: profile.iter().map(|e| (e.eps, e.contribution)).collect(),
            reference: false,
        });
    }
    for c in gauss {
        checks.push(Verdict::at_most(format!("{}: cx_lower", c.label), c.get_f64("cx_lower").unwrap(), gaussian_cap).soft());
    }
    let cols = ["family", "n", "sup", "cx_lower", "cx_over_sqrt_n", "best_eps"];
    let mut table = Table::new("sudakov_sparse", &cols);
    for c in &cells {
        table.push(row(c, &cols));
    }
    for v in checks {
        ctx.check(v);
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    ctx.plots.push(plot);
    Ok(())
}

fn set_label(set: &IndexSet) -> String {
    match set {
        IndexSet::Cube { radius } => format!("cube r={radius:.4}"),
        IndexSet::Ball { radius } => format!("ball r={radius:.4}"),
        IndexSet::Finite { points } => format!("finite |T|={}", points.len()),
        IndexSet::MpBall { p } => format!("M_{p} ball"),
    }
}

/// `{e_1, -e_1}` in `R^n`.
fn signed_first_vector(n: usize) -> IndexSet {
    let mut e = vec![0.0; n];
    e[0] = 1.0;
    let m: Vec<f64> = e.iter().map(|v| -v).collect();
    IndexSet::Finite { points: vec![e, m] }
}

pub(crate) fn sudakov_uncond(ctx: &mut Ctx) -> Result<(), CliError> {
    let specs = ctx.specs(&[FamilyName::Rademacher, FamilyName::Exponential], &[4, 16, 64])?;
    if let Some(s) = specs.iter().find(|s| !s.capabilities().is_unconditional) {
        return Err(CliError::Config(format!("{} is not unconditional", spec_label(s))));
    }
    let samples = ctx.mc_samples(20_000);
    let stability = ctx.tol("stability_factor", 4.0);
    let budgets = Budgets { samples, ..Default::default() };
    let items: Vec<(DistributionSpec, IndexSet, &str)> = specs
        .iter()
        .flat_map(|s| {
            let n = s.dim();
            [
                (s.clone(), IndexSet::Cube { radius: 1.0 / (n as f64).sqrt() }, "cube"),
                (s.clone(), signed_first_vector(n), "pm_e1"),
            ]
        })
        .collect();
    let cells = ctx.run_cells(&items, |(spec, set, kind), seed| {
        let ratio = unconditional_minoration_ratio(spec, set, &budgets, seed).map_err(core_err)?;
        let mut c = Cell::new(format!("{} {kind}", spec_label(spec)), seed);
        c.set("family", spec.family_name()).set("n", spec.dim()).set("set", kind).set("ratio", ratio);
        Ok(c)
    })?;
    let mut groups: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for c in &cells {
        let r = c.get_f64("ratio").unwrap();
        ctx.check(Verdict::new(format!("{}: ratio finite and positive", c.label), r.is_finite() && r > 0.0, r, 0.0, "".into()));
        let key = (c.values["family"].as_str().unwrap().to_string(), c.values["set"].as_str().unwrap().to_string());
        groups.entry(key).or_default().push((c.get_f64("n").unwrap(), r));
    }
    let mut plot = Plot {
        name: "uncond_ratio".into(),
        title: "cx_lower min E|X_i| / sqrt(ln(n+1))".into(),
        x_label: "n".into(),
        y_label: "ratio".into(),
        log_x: true,
        series: Vec::new(),
    };
    for ((family, set), pts) in &groups {
        let hi = pts.iter().map(|p| p.1).fold(0.0, f64::max);
        let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        ctx.check(Verdict::at_most(format!("{family} {set}: max/min ratio over n"), hi / lo, stability));
        plot.series.push(Series { label: format!("{family} {set}"), points: pts.clone(), reference: false });
    }
    let cols = ["family", "n", "set", "ratio"];
    let mut table = Table::new("sudakov_uncond", &cols);
    for c in &cells {
        table.push(row(c, &cols));
    }
    ctx.cells = cells;
    ctx.tables.push(table);
    ctx.plots.push(plot);
    Ok(())
}
