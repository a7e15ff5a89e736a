//! Experiment runner: TOML config in, CSV/JSON results out.

pub mod aggregate;
pub mod config;
pub mod output;
pub mod sweep;

use std::fs::File;
use std::io;
use std::path::Path;

pub use config::{ConfigError, ExperimentConfig};
pub use sweep::{run_sweep, ResultRow};

/// What a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub rows: usize,
    pub failures: usize,
}

/// Runs the sweep and writes every output file into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, workers: usize) -> io::Result<RunReport> {
    std::fs::create_dir_all(out)?;
    let mut writer = output::ResultsWriter::create(&out.join(output::RESULTS_FILE), cfg)?;
    let rows = run_sweep(cfg, workers, |row| writer.write(row))?;
    writer.finish()?;

    let name = cfg.sweep.kind.label();
    output::write_summary(File::create(out.join(output::SUMMARY_FILE))?, name, &aggregate::summarize(&rows))?;
    output::write_paired(File::create(out.join(output::PAIRED_FILE))?, name, &aggregate::paired_differences(&rows))?;
    let failures = rows.iter().filter(|r| r.outcome.is_err()).count();
    output::write_sidecar(File::create(out.join(output::SIDECAR_FILE))?, cfg, rows.len(), failures)?;
    Ok(RunReport {
        rows: rows.len(),
        failures,
    })
}
