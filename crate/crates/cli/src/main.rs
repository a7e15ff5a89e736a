use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use starbeam_cli::{run_experiment, ExperimentConfig};

/// Monte-Carlo sweeps of the STAR-RIS beamforming optimizers.
#[derive(Parser, Debug)]
#[command(name = "starbeam", version)]
struct Args {
    /// TOML experiment file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// KEY=VALUE applied on top of the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut overrides = args.overrides;
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = match ExperimentConfig::load(args.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    match run_experiment(&cfg, &args.out, workers) {
        Ok(report) if report.failures == 0 => {
            eprintln!("{} rows written to {}", report.rows, args.out.display());
            ExitCode::SUCCESS
        }
        Ok(report) => {
            eprintln!("{} of {} cells failed; see the error column", report.failures, report.rows);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
