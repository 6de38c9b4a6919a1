//! Named experiments. Each one resolves its grid and budgets from the
//! configuration (falling back to its defaults), evaluates grid cells in
//! the thread pool and records verdicts.

use std::collections::BTreeMap;

use centroidkit::nalgebra::DMatrix;
use centroidkit::rng::derive_seed;
use centroidkit::{DistributionSpec, DualSolveOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, FamilyName};
use crate::report::{Cell, ExperimentReport, Plot, Table, Verdict};
use crate::CliError;

mod closed;
mod combinatorics;
mod geometry;
mod sweeps;

/// Experiment names accepted on the command line, in suite order.
pub const EXPERIMENTS: [&str; 14] = [
    "verify-rotinv",
    "verify-z2",
    "remark-largep",
    "c2k-table",
    "verify-prop21",
    "hitczenko",
    "sweep-conjecture",
    "unclogcon",
    "exp-example",
    "entropy-zp",
    "prop36",
    "sudakov-sparse",
    "sudakov-uncond",
    "orderstat",
];

/// Runs every experiment in sequence.
pub const SUITE: &str = "suite";

/// Stream tag for the matrices of random linear images.
const LINEAR_IMAGE_TAG: u64 = 0x4C49_4D47;

/// Smallest budgets reachable through `budget_scale`.
const MIN_OUTER: usize = 100;
const MIN_SAA: usize = 1000;
const MIN_MC: usize = 1000;
const MIN_CANDIDATES: usize = centroidkit::cover::MIN_CANDIDATES;
const MIN_INSTANCES: usize = 10;

pub(crate) fn core_err(e: centroidkit::Error) -> CliError {
    use centroidkit::Error as E;
    match e {
        E::InvalidArgument(_) | E::Unsupported(_) | E::ResourceGuard(_) | E::NoExactOracle(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Run(e.to_string()),
    }
}

pub(crate) fn json(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("serializable value")
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    parameters: BTreeMap<String, Value>,
    pub cells: Vec<Cell>,
    pub verdicts: Vec<Verdict>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, seed: u64) -> Self {
        Self {
            cfg,
            seed,
            parameters: BTreeMap::new(),
            cells: Vec::new(),
            verdicts: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.to_string(), json(value));
    }

    fn scaled(&mut self, key: &str, explicit: Option<usize>, default: usize, min: usize) -> usize {
        let v = explicit.unwrap_or_else(|| ((default as f64 * self.cfg.scale()).round() as usize).max(min));
        self.param(key, v);
        v
    }

    pub fn outer(&mut self, default: usize) -> usize {
        self.scaled("outer_samples", self.cfg.budgets.outer_samples, default, MIN_OUTER)
    }

    pub fn sample_budget(&mut self, default: usize) -> usize {
        self.scaled("sample_budget", self.cfg.budgets.sample_budget, default, MIN_SAA)
    }

    pub fn mc_samples(&mut self, default: usize) -> usize {
        self.scaled("mc_samples", self.cfg.budgets.mc_samples, default, MIN_MC)
    }

    pub fn candidates(&mut self, default: usize) -> usize {
        self.scaled("candidates", self.cfg.budgets.candidates, default, MIN_CANDIDATES)
    }

    pub fn instances(&mut self, default: usize) -> usize {
        self.scaled("instances", self.cfg.budgets.instances, default, MIN_INSTANCES)
    }

    /// Solver options: `[dual]` when given, else `default`; the SAA size
    /// always comes from the budgets.
    pub fn dual(&mut self, default: DualSolveOptions, saa_default: usize) -> DualSolveOptions {
        let mut opts = self.cfg.dual.clone().unwrap_or(default);
        opts.sample_budget = self.sample_budget(saa_default);
        self.param("dual", &opts);
        opts
    }

    pub fn tol(&mut self, name: &str, default: f64) -> f64 {
        let v = self.cfg.tolerances.get(name).copied().unwrap_or(default);
        self.parameters.entry("tolerances".into()).or_insert_with(|| Value::Object(Default::default()));
        if let Some(Value::Object(m)) = self.parameters.get_mut("tolerances") {
            m.insert(name.to_string(), json(v));
        }
        v
    }

    pub fn grid_f64(&mut self, key: &str, given: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
        let v = given.clone().unwrap_or_else(|| default.to_vec());
        self.param(key, &v);
        v
    }

    pub fn grid_n(&mut self, default: &[usize]) -> Vec<usize> {
        let v = self.cfg.grid.n.clone().unwrap_or_else(|| default.to_vec());
        self.param("n", &v);
        v
    }

    /// Explicit `distributions`, or `families` (default `families`) crossed
    /// with `grid.n` (default `dims`).
    pub fn specs(&mut self, families: &[FamilyName], dims: &[usize]) -> Result<Vec<DistributionSpec>, CliError> {
        let specs = match &self.cfg.distributions {
            Some(d) => d.clone(),
            None => {
                let fams = self.cfg.families.clone().unwrap_or_else(|| families.to_vec());
                let ns = self.grid_n(dims);
                let mut out = Vec::new();
                for f in &fams {
                    for &n in &ns {
                        out.push(family_spec(*f, n, self.seed)?);
                    }
                }
                out
            }
        };
        self.param("distributions", &specs);
        Ok(specs)
    }

    pub fn check(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    /// Evaluates `f` on every item in the pool. Item `i` gets the seed
    /// `derive_seed(seed, i)`; cells come back in item order.
    pub fn run_cells<T, F>(&self, items: &[T], f: F) -> Result<Vec<Cell>, CliError>
    where
        T: Sync,
        F: Fn(&T, u64) -> Result<Cell, CliError> + Sync,
    {
        let seed = self.seed;
        items
            .par_iter()
            .enumerate()
            .map(|(i, item)| f(item, derive_seed(seed, i as u64)))
            .collect()
    }

    fn finish(self, name: &str) -> ExperimentReport {
        let passed = self.verdicts.iter().all(|v| !v.hard || v.pass);
        let mut config = self.cfg.clone();
        config.experiment = Some(name.to_string());
        config.seed = Some(self.seed);
        ExperimentReport {
            experiment: name.to_string(),
            seed: self.seed,
            config,
            parameters: self.parameters,
            cells: self.cells,
            verdicts: self.verdicts,
            passed,
            tables: self.tables,
            plots: self.plots,
            children: Vec::new(),
        }
    }
}

/// Orthogonal factor of the QR decomposition of a Gaussian matrix.
fn random_orthogonal(n: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// `U diag(sigma) V^T` with Haar-like `U`, `V` and singular values
/// log-spaced over `[1, 10]`.
pub(crate) fn random_image_matrix(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, LINEAR_IMAGE_TAG ^ n as u64));
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        if i != j {
            0.0
        } else if n == 1 {
            1.0
        } else {
            10f64.powf(i as f64 / (n - 1) as f64)
        }
    });
    u * sigma * v.transpose()
}

pub(crate) fn family_spec(f: FamilyName, n: usize, seed: u64) -> Result<DistributionSpec, CliError> {
    Ok(match f {
        FamilyName::Gaussian => DistributionSpec::gaussian(n),
        FamilyName::Exponential => DistributionSpec::exponential(n),
        FamilyName::Rademacher => DistributionSpec::rademacher(n),
        FamilyName::Sphere => DistributionSpec::sphere(n),
        FamilyName::Cube => DistributionSpec::cube(n),
        FamilyName::Sparse => DistributionSpec::sparse(n),
        FamilyName::RandomLinearImage => {
            DistributionSpec::linear_image(random_image_matrix(n, seed), DistributionSpec::exponential(n))
                .map_err(core_err)?
        }
    })
}

/// Short label such as `exponential_product n=8`.
pub(crate) fn spec_label(spec: &DistributionSpec) -> String {
    format!("{} n={}", spec.family_name(), spec.dim())
}

pub fn is_known(name: &str) -> bool {
    name == SUITE || EXPERIMENTS.contains(&name)
}

/// Runs one named experiment (not the suite).
pub fn run_experiment(name: &str, cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport, CliError> {
    let mut ctx = Ctx::new(cfg, seed);
    match name {
        "verify-rotinv" => closed::verify_rotinv(&mut ctx)?,
        "verify-z2" => closed::verify_z2(&mut ctx)?,
        "remark-largep" => closed::remark_largep(&mut ctx)?,
        "c2k-table" => combinatorics::c2k_table(&mut ctx)?,
        "verify-prop21" => combinatorics::verify_prop21(&mut ctx)?,
        "hitczenko" => combinatorics::hitczenko(&mut ctx)?,
        "sweep-conjecture" => sweeps::sweep_conjecture(&mut ctx)?,
        "unclogcon" => sweeps::unclogcon(&mut ctx)?,
        "exp-example" => sweeps::exp_example(&mut ctx)?,
        "orderstat" => sweeps::orderstat(&mut ctx)?,
        "entropy-zp" => geometry::entropy_zp(&mut ctx)?,
        "prop36" => geometry::prop36(&mut ctx)?,
        "sudakov-sparse" => geometry::sudakov_sparse(&mut ctx)?,
        "sudakov-uncond" => geometry::sudakov_uncond(&mut ctx)?,
        other => return Err(CliError::Config(format!("unknown experiment {other:?}"))),
    }
    Ok(ctx.finish(name))
}

/// Configuration handed to each experiment of the suite: the suite's
/// seed, scale, solver options and tolerance overrides.
pub fn suite_child_config(cfg: &ExperimentConfig, name: &str) -> ExperimentConfig {
    ExperimentConfig {
        experiment: Some(name.to_string()),
        seed: cfg.seed,
        budget_scale: cfg.budget_scale,
        dual: cfg.dual.clone(),
        tolerances: cfg.tolerances.clone(),
        ..Default::default()
    }
}

pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
