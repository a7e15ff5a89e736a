//! Result files.
//!
//! `results.csv` columns, in order: `sweep_name, sweep_value, trial,
//! algorithm, protocol, baseline, user_setup, wsr_bps_hz, rate_user_1 ..
//! rate_user_K, iterations, ms_per_iter, rank_violation, error`. Failed
//! cells leave the numeric columns empty and carry the message in `error`.
//! `summary.csv` and `paired.csv` hold the aggregates; `run.json` records
//! the resolved config and the library version.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::aggregate::{CellSummary, PairedSummary};
use crate::config::ExperimentConfig;
use crate::sweep::ResultRow;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PAIRED_FILE: &str = "paired.csv";
pub const SIDECAR_FILE: &str = "run.json";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn results_header(users: usize) -> Vec<String> {
    let mut h: Vec<String> = ["sweep_name", "sweep_value", "trial", "algorithm", "protocol", "baseline", "user_setup", "wsr_bps_hz"]
        .map(String::from)
        .to_vec();
    h.extend((1..=users).map(|k| format!("rate_user_{k}")));
    h.extend(["iterations", "ms_per_iter", "rank_violation", "error"].map(String::from));
    h
}

pub struct ResultsWriter<W: Write> {
    inner: csv::Writer<W>,
    sweep_name: &'static str,
    users: usize,
}

impl ResultsWriter<File> {
    pub fn create(path: &Path, cfg: &ExperimentConfig) -> io::Result<Self> {
        Self::new(File::create(path)?, cfg)
    }
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(sink: W, cfg: &ExperimentConfig) -> io::Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(results_header(cfg.users))?;
        Ok(Self {
            inner,
            sweep_name: cfg.sweep.kind.label(),
            users: cfg.users,
        })
    }

    pub fn write(&mut self, row: &ResultRow) -> io::Result<()> {
        let c = &row.cell;
        let mut rec = vec![
            self.sweep_name.to_string(),
            c.sweep_value.to_string(),
            c.trial.to_string(),
            c.algorithm.label().to_string(),
            c.protocol.label().to_string(),
            c.baseline.label().to_string(),
            row.user_setup.label().to_string(),
        ];
        match &row.outcome {
            Ok(m) => {
                rec.push(m.wsr.to_string());
                rec.extend(m.rates.iter().map(|r| r.to_string()));
                rec.extend([m.iterations.to_string(), opt(m.ms_per_iter), opt(m.rank_violation), String::new()]);
            }
            Err(e) => {
                rec.extend(std::iter::repeat_n(String::new(), self.users + 4));
                rec.push(e.clone());
            }
        }
        self.inner.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

pub fn write_summary<W: Write>(sink: W, sweep_name: &str, cells: &[CellSummary]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "sweep_name",
        "sweep_value",
        "algorithm",
        "protocol",
        "baseline",
        "trials",
        "failures",
        "wsr_mean",
        "wsr_std",
        "iterations_mean",
        "ms_per_iter_mean",
    ])?;
    for s in cells {
        w.write_record([
            sweep_name.to_string(),
            s.sweep_value.to_string(),
            s.algorithm.label().to_string(),
            s.protocol.label().to_string(),
            s.baseline.label().to_string(),
            s.trials.to_string(),
            s.failures.to_string(),
            s.wsr_mean.to_string(),
            s.wsr_std.to_string(),
            s.iterations_mean.to_string(),
            opt(s.ms_per_iter_mean),
        ])?;
    }
    w.flush()
}

pub fn write_paired<W: Write>(sink: W, sweep_name: &str, pairs: &[PairedSummary]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["sweep_name", "sweep_value", "algorithm", "baseline", "pairs", "es_minus_ms_mean", "es_minus_ms_std"])?;
    for p in pairs {
        w.write_record([
            sweep_name.to_string(),
            p.sweep_value.to_string(),
            p.algorithm.label().to_string(),
            p.baseline.label().to_string(),
            p.pairs.to_string(),
            p.es_minus_ms_mean.to_string(),
            p.es_minus_ms_std.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    library: &'static str,
    version: &'static str,
    rows: usize,
    failures: usize,
    config: &'a ExperimentConfig,
}

pub fn write_sidecar<W: Write>(mut sink: W, cfg: &ExperimentConfig, rows: usize, failures: usize) -> io::Result<()> {
    let doc = Sidecar {
        library: "starbeam",
        version: env!("CARGO_PKG_VERSION"),
        rows,
        failures,
        config: cfg,
    };
    serde_json::to_writer_pretty(&mut sink, &doc)?;
    writeln!(sink)
}
