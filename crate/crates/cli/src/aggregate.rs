//! Monte-Carlo summaries of a finished sweep.

use starbeam::{Algorithm, Baseline, Protocol};

use crate::sweep::ResultRow;

/// Statistics of one (sweep value, algorithm, protocol, baseline) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub protocol: Protocol,
    pub baseline: Baseline,
    pub trials: usize,
    pub failures: usize,
    pub wsr_mean: f64,
    pub wsr_std: f64,
    pub iterations_mean: f64,
    pub ms_per_iter_mean: Option<f64>,
}

/// Per-trial `WSR(ES) − WSR(MS)` on shared channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSummary {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub baseline: Baseline,
    pub pairs: usize,
    pub es_minus_ms_mean: f64,
    pub es_minus_ms_std: f64,
}

/// Sample mean and standard deviation (zero for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups in first-appearance order.
fn group_by<K: PartialEq, T>(items: impl IntoIterator<Item = T>, key: impl Fn(&T) -> K) -> Vec<(K, Vec<T>)> {
    let mut groups: Vec<(K, Vec<T>)> = Vec::new();
    for item in items {
        let k = key(&item);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(item),
            None => groups.push((k, vec![item])),
        }
    }
    groups
}

pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    group_by(rows, |r| (r.cell.sweep_value, r.cell.algorithm, r.cell.protocol, r.cell.baseline))
        .into_iter()
        .map(|((sweep_value, algorithm, protocol, baseline), members)| {
            let ok: Vec<_> = members.iter().filter_map(|r| r.metrics()).collect();
            let wsr: Vec<f64> = ok.iter().map(|m| m.wsr).collect();
            let (wsr_mean, wsr_std) = mean_std(&wsr);
            let iters: Vec<f64> = ok.iter().map(|m| m.iterations as f64).collect();
            let ms: Vec<f64> = ok.iter().filter_map(|m| m.ms_per_iter).collect();
            CellSummary {
                sweep_value,
                algorithm,
                protocol,
                baseline,
                trials: members.len(),
                failures: members.len() - ok.len(),
                wsr_mean,
                wsr_std,
                iterations_mean: mean_std(&iters).0,
                ms_per_iter_mean: (!ms.is_empty()).then(|| mean_std(&ms).0),
            }
        })
        .collect()
}

pub fn paired_differences(rows: &[ResultRow]) -> Vec<PairedSummary> {
    let es: Vec<&ResultRow> = rows.iter().filter(|r| r.cell.protocol == Protocol::Es).collect();
    let diffs = es.into_iter().filter_map(|e| {
        let m = rows.iter().find(|r| {
            r.cell.protocol == Protocol::Ms
                && r.cell.sweep_value == e.cell.sweep_value
                && r.cell.trial == e.cell.trial
                && r.cell.algorithm == e.cell.algorithm
                && r.cell.baseline == e.cell.baseline
        })?;
        Some((e.cell, e.metrics()?.wsr - m.metrics()?.wsr))
    });
    group_by(diffs, |(c, _)| (c.sweep_value, c.algorithm, c.baseline))
        .into_iter()
        .map(|((sweep_value, algorithm, baseline), members)| {
            let d: Vec<f64> = members.iter().map(|(_, d)| *d).collect();
            let (es_minus_ms_mean, es_minus_ms_std) = mean_std(&d);
            PairedSummary {
                sweep_value,
                algorithm,
                baseline,
                pairs: d.len(),
                es_minus_ms_mean,
                es_minus_ms_std,
            }
        })
        .collect()
}
