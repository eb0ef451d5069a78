use std::collections::BTreeMap;
use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use irm_core::RunResult64;
use serde::{Deserialize, Serialize};

use crate::run::{Method, RunSpec};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

pub const STATUS_OK: &str = "ok";

/// One run: configuration echo, then metrics. Column order is the CSV
/// schema and must stay stable; new fields go at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: Method,
    pub source: String,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub epsilon_effective: f64,
    pub delta: f64,
    pub pool_size: usize,
    pub pool_frac: f64,
    pub theory_mode: bool,
    pub adjust_by_opt: bool,
    pub seed: u64,
    pub trial: usize,
    pub status: String,
    pub winner_id: Option<usize>,
    pub comparisons: Option<u64>,
    pub ties: Option<u64>,
    pub filters_built: Option<usize>,
    pub peak_memory_tuples: Option<usize>,
    pub tuples_seen: Option<u64>,
    pub tuples_pruned: Option<u64>,
    pub regret_true: Option<f64>,
    pub best_utility: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub timestamp_ms: u64,
    pub cell_mean_comparisons: Option<f64>,
    pub cell_stderr_comparisons: Option<f64>,
    pub cell_mean_regret: Option<f64>,
    pub cell_stderr_regret: Option<f64>,
}

impl MetricsRow {
    /// A row with the configuration filled in and no metrics yet.
    pub fn config_echo(spec: &RunSpec, n: usize, d: usize) -> Self {
        Self {
            method: spec.method,
            source: spec.source.label(),
            n,
            d,
            epsilon: spec.epsilon,
            epsilon_effective: spec.epsilon,
            delta: spec.delta,
            pool_size: spec.pool_size,
            pool_frac: spec.pool_frac,
            theory_mode: spec.theory_mode,
            adjust_by_opt: spec.adjust_by_opt,
            seed: spec.seed,
            trial: 0,
            status: STATUS_OK.into(),
            winner_id: None,
            comparisons: None,
            ties: None,
            filters_built: None,
            peak_memory_tuples: None,
            tuples_seen: None,
            tuples_pruned: None,
            regret_true: None,
            best_utility: None,
            runtime_ms: None,
            timestamp_ms: 0,
            cell_mean_comparisons: None,
            cell_stderr_comparisons: None,
            cell_mean_regret: None,
            cell_stderr_regret: None,
        }
    }

    pub fn fill(&mut self, r: &RunResult64) {
        self.winner_id = Some(r.winner.id);
        self.comparisons = Some(r.comparisons);
        self.ties = Some(r.ties);
        self.filters_built = Some(r.filters_built);
        self.peak_memory_tuples = Some(r.peak_memory_tuples);
        self.tuples_seen = Some(r.tuples_seen);
        self.tuples_pruned = Some(r.tuples_pruned);
        self.regret_true = r.regret_true;
        self.best_utility = r.best_utility;
        self.runtime_ms = Some(r.runtime_ms);
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    /// The row with wall-clock fields cleared, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self {
            runtime_ms: None,
            timestamp_ms: 0,
            ..self.clone()
        }
    }

    fn cell_key(&self) -> String {
        format!(
            "{}|{}|{}|{}|{:?}|{:?}",
            self.method, self.source, self.n, self.d, self.epsilon, self.delta
        )
    }
}

pub fn timestamp_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Fills the per-cell aggregate columns from the successful rows of each
/// cell.
pub fn annotate_cells(rows: &mut [MetricsRow]) {
    let mut cells: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let e = cells.entry(r.cell_key()).or_default();
        if let Some(c) = r.comparisons {
            e.0.push(c as f64);
        }
        if let Some(g) = r.regret_true {
            e.1.push(g);
        }
    }
    for r in rows.iter_mut() {
        if let Some((cmp, reg)) = cells.get(&r.cell_key()) {
            let c = mean_stderr(cmp);
            let g = mean_stderr(reg);
            r.cell_mean_comparisons = c.map(|v| v.0);
            r.cell_stderr_comparisons = c.map(|v| v.1);
            r.cell_mean_regret = g.map(|v| v.0);
            r.cell_stderr_regret = g.map(|v| v.1);
        }
    }
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows<W: Write>(rows: &[MetricsRow], format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => {
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                writeln!(out)?;
            }
            Ok(())
        }
    }
}
