//! Seeded experiment runner for `centroidkit`.
//!
//! [`run`] executes a named experiment (or the whole suite) from an
//! [`ExperimentConfig`] and returns an [`ExperimentReport`];
//! [`report::write_outputs`] persists it as `report.json`, `tables/*.csv`
//! and `plots/*.svg`. Reports contain no wall-clock data, so a rerun with
//! the same configuration reproduces `report.json` byte for byte.

pub mod config;
pub mod experiments;
pub mod plots;
pub mod report;

use std::time::Instant;

pub use centroidkit;
pub use config::ExperimentConfig;
pub use experiments::{EXPERIMENTS, SUITE};
pub use report::{ExperimentReport, Timing};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Checks the experiment name against the configuration and returns the
/// seed.
fn prepare(name: &str, cfg: &ExperimentConfig) -> Result<u64, CliError> {
    if !experiments::is_known(name) {
        let all = EXPERIMENTS.join(", ");
        return Err(CliError::Config(format!("unknown experiment {name:?}; expected one of {all}, {SUITE}")));
    }
    if let Some(e) = &cfg.experiment {
        if e != name {
            return Err(CliError::Config(format!("config is for {e:?} but {name:?} was requested")));
        }
    }
    cfg.validate()?;
    cfg.seed.ok_or_else(|| CliError::Config("a seed is required (config `seed` or --seed)".into()))
}

/// Runs `name` with `jobs` worker threads (the rayon default when `None`).
/// Results do not depend on the number of threads.
pub fn run(name: &str, cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<(ExperimentReport, Timing), CliError> {
    let seed = prepare(name, cfg)?;
    if jobs == Some(0) {
        return Err(CliError::Config("jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    pool.install(|| {
        if name == SUITE {
            run_suite(cfg, seed)
        } else {
            let start = Instant::now();
            let report = experiments::run_experiment(name, cfg, seed)?;
            let secs = start.elapsed().as_secs_f64();
            let timing = Timing { total_seconds: secs, experiments: [(name.to_string(), secs)].into() };
            Ok((report, timing))
        }
    })
}

fn run_suite(cfg: &ExperimentConfig, seed: u64) -> Result<(ExperimentReport, Timing), CliError> {
    let start = Instant::now();
    let mut timing = Timing::default();
    let mut children = Vec::new();
    let mut table = report::Table::new("suite", &["experiment", "passed", "hard_verdicts", "failed"]);
    let mut verdicts = Vec::new();
    for name in EXPERIMENTS {
        let child_cfg = experiments::suite_child_config(cfg, name);
        let t = Instant::now();
        let child = experiments::run_experiment(name, &child_cfg, seed)?;
        timing.experiments.insert(name.to_string(), t.elapsed().as_secs_f64());
        let hard = child.verdicts.iter().filter(|v| v.hard).count();
        let failed = child.failed_verdicts().len();
        table.push(vec![name.into(), child.passed.into(), hard.into(), failed.into()]);
        verdicts.push(report::Verdict::new(
            format!("{name}: all hard verdicts pass"),
            child.passed,
            failed as f64,
            0.0,
            format!("{failed} of {hard} failed"),
        ));
        children.push(child);
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    let mut config = cfg.clone();
    config.experiment = Some(SUITE.into());
    config.seed = Some(seed);
    let passed = children.iter().all(|c| c.passed);
    let report = ExperimentReport {
        experiment: SUITE.into(),
        seed,
        config,
        parameters: [("experiments".to_string(), serde_json::json!(EXPERIMENTS))].into(),
        cells: Vec::new(),
        verdicts,
        passed,
        tables: vec![table],
        plots: Vec::new(),
        children,
    };
    Ok((report, timing))
}
