//! Expansion of a config into cells and their parallel execution.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use starbeam::rng::trial_seed;
use starbeam::{
    dbm_to_watts, run_bcd, sample_scenario, synthesize_channels, Algorithm, Baseline, Channels, Config, Geometry,
    PriorityWeights, Protocol, UserSetup,
};

use crate::config::{ExperimentConfig, SweepKind};

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub sweep_value: f64,
    pub trial: usize,
    pub algorithm: Algorithm,
    pub protocol: Protocol,
    pub baseline: Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub wsr: f64,
    pub rates: Vec<f64>,
    pub iterations: usize,
    pub ms_per_iter: Option<f64>,
    /// Rank-one violation after the last surface update (penalty route only).
    pub rank_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub cell: Cell,
    pub user_setup: UserSetup,
    pub outcome: Result<RowMetrics, String>,
}

impl ResultRow {
    pub fn metrics(&self) -> Option<&RowMetrics> {
        self.outcome.as_ref().ok()
    }
}

/// Grid in emission order: sweep value, trial, algorithm, protocol, baseline.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(cfg.grid_size());
    for &sweep_value in &cfg.sweep.values {
        for trial in 0..cfg.trials {
            for &a in &cfg.algorithms {
                for &p in &cfg.protocols {
                    for &b in &cfg.baselines {
                        out.push(Cell {
                            sweep_value,
                            trial,
                            algorithm: a.into(),
                            protocol: p.into(),
                            baseline: b.into(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Seed shared by every cell of `trial`.
pub fn cell_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    trial_seed(cfg.seed, trial as u64)
}

fn elements_and_power(cfg: &ExperimentConfig, cell: &Cell) -> (usize, f64) {
    match cfg.sweep.kind {
        SweepKind::Power => (cfg.elements, cell.sweep_value),
        SweepKind::Elements => (cell.sweep_value as usize, cfg.power_dbm),
    }
}

/// Layout and channels of a cell. Every variant of one trial at one
/// surface size sees the same draw, which makes ES/MS rows paired.
pub fn cell_scenario(cfg: &ExperimentConfig, cell: &Cell) -> starbeam::Result<(Geometry, Channels)> {
    let (elements, _) = elements_and_power(cfg, cell);
    let seed = cell_seed(cfg, cell.trial);
    let geo = sample_scenario(&cfg.scenario_params(elements), cfg.user_setup.into(), seed)?;
    let ch = synthesize_channels(&geo, cfg.clusters, dbm_to_watts(cfg.noise_dbm), seed)?;
    Ok((geo, ch))
}

/// Optimizer settings of a cell.
pub fn cell_bcd_config(cfg: &ExperimentConfig, cell: &Cell) -> starbeam::Result<Config> {
    let (_, power) = elements_and_power(cfg, cell);
    let mut bcd = Config::new(cell.algorithm, cell.protocol, dbm_to_watts(power), cell_seed(cfg, cell.trial));
    bcd.baseline = cell.baseline;
    bcd.eps_bcd = cfg.eps_bcd;
    bcd.max_iterations = cfg.max_iterations;
    bcd.weights = cfg.weights.clone().map(PriorityWeights::new).transpose()?;
    Ok(bcd)
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> ResultRow {
    let outcome = (|| {
        let (geo, near) = cell_scenario(cfg, cell)?;
        let far = match cell.baseline {
            Baseline::FarFieldDesign => Some(near.to_far_field(&geo)?),
            _ => None,
        };
        let out = run_bcd(&near, far.as_ref(), &cell_bcd_config(cfg, cell)?)?;
        Ok::<_, starbeam::Error>(RowMetrics {
            wsr: out.evaluation.wsr,
            rates: out.evaluation.rates,
            iterations: out.trace.iterations(),
            ms_per_iter: cfg.record_timing.then(|| out.trace.mean_ms_per_iter()),
            rank_violation: match cell.algorithm {
                Algorithm::Pen => out.trace.rank_violation.last().copied(),
                Algorithm::Ele => None,
            },
        })
    })();
    ResultRow {
        cell: *cell,
        user_setup: cfg.user_setup.into(),
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Runs the whole grid on `workers` threads. Rows reach `emit` in grid
/// order whatever the completion order; the first emit error aborts the
/// remaining cells and is returned.
pub fn run_sweep<F>(cfg: &ExperimentConfig, workers: usize, mut emit: F) -> std::io::Result<Vec<ResultRow>>
where
    F: FnMut(&ResultRow) -> std::io::Result<()>,
{
    let grid = cells(cfg);
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, grid.len().max(1));
    let mut rows = Vec::with_capacity(grid.len());
    std::thread::scope(|s| {
        let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (grid, next) = (&grid, &next);
            s.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= grid.len() {
                    break;
                }
                if tx.send((i, run_cell(cfg, &grid[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        for (i, row) in rx {
            pending.insert(i, row);
            while let Some(row) = pending.remove(&rows.len()) {
                if let Err(e) = emit(&row) {
                    next.store(grid.len(), Ordering::Relaxed);
                    return Err(e);
                }
                rows.push(row);
            }
        }
        Ok(())
    })?;
    Ok(rows)
}
