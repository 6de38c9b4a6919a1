use std::path::PathBuf;
use std::process::ExitCode;

use centroidkit_cli::report::{write_outputs, write_timing};
use centroidkit_cli::{run, CliError, ExperimentConfig};
use clap::Parser;

/// Runs a named centroidkit experiment and writes report.json,
/// tables/*.csv and plots/*.svg.
#[derive(Parser, Debug)]
#[command(name = "centroidkit", version)]
struct Args {
    /// Experiment name, or `suite` for all of them.
    experiment: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `out` from the config, else results/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "CENTROIDKIT_JOBS")]
    jobs: Option<usize>,
}

fn main_inner(args: Args) -> Result<bool, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(&args.experiment));
    let (report, timing) = run(&args.experiment, &cfg, args.jobs)?;
    write_outputs(&report, &out)?;
    write_timing(&timing, &out)?;
    let failed = report.failed_verdicts();
    for v in &failed {
        eprintln!("FAIL {}: {}", v.name, v.detail);
    }
    println!(
        "{} {}: {} ({} hard verdicts failed), output in {}",
        if report.passed { "PASS" } else { "FAIL" },
        report.experiment,
        if report.passed { "all assertions hold" } else { "assertion failure" },
        failed.len(),
        out.display()
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
