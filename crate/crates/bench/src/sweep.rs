use rayon::prelude::*;

use crate::metrics::{annotate_cells, timestamp_ms, MetricsRow};
use crate::run::{run_once, Method, RunSpec, Source};
use crate::{BenchError, Result};

/// Grid of runs. Every combination of the list-valued fields is one cell;
/// each cell runs once per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub methods: Vec<Method>,
    /// Stream lengths; ignored (and must be empty) for CSV sources.
    pub ns: Vec<usize>,
    pub ds: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template for the fields not swept; its method, ε, δ and seed are
    /// overwritten per run.
    pub base: RunSpec,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let csv = matches!(self.base.source, Source::Csv { .. });
        let empty = self.methods.is_empty()
            || self.epsilons.is_empty()
            || self.deltas.is_empty()
            || (!csv && (self.ns.is_empty() || self.ds.is_empty()));
        if empty {
            return Err(BenchError::Usage("sweep grid is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Usage("sweep needs at least one trial".into()));
        }
        if csv && !(self.ns.is_empty() && self.ds.is_empty()) {
            return Err(BenchError::Usage(
                "--n/--d cannot be swept over a CSV dataset".into(),
            ));
        }
        for r in self.runs() {
            r.1.validate()?;
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        let shape = match self.base.source {
            Source::Csv { .. } => 1,
            Source::Synthetic(_) => self.ns.len() * self.ds.len(),
        };
        self.methods.len() * shape * self.epsilons.len() * self.deltas.len()
    }

    /// Every (trial index, run) pair in a stable order.
    pub fn runs(&self) -> Vec<(usize, RunSpec)> {
        let shapes: Vec<(usize, usize)> = match &self.base.source {
            Source::Csv { .. } => vec![(0, 0)],
            Source::Synthetic(_) => self
                .ns
                .iter()
                .flat_map(|&n| self.ds.iter().map(move |&d| (n, d)))
                .collect(),
        };
        let mut out = Vec::new();
        for &method in &self.methods {
            for &(n, d) in &shapes {
                for &epsilon in &self.epsilons {
                    for &delta in &self.deltas {
                        for (trial, &seed) in self.seeds.iter().enumerate() {
                            let mut spec = RunSpec {
                                method,
                                epsilon,
                                delta,
                                seed,
                                ..self.base.clone()
                            };
                            if let Source::Synthetic(g) = &mut spec.source {
                                g.n = n;
                                g.d = d;
                            }
                            out.push((trial, spec));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs all cells in parallel. Failed runs become rows whose `status`
/// carries the error; the row count always equals cells × trials.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<MetricsRow>> {
    spec.validate()?;
    let mut rows: Vec<MetricsRow> = spec
        .runs()
        .into_par_iter()
        .map(|(trial, run)| {
            let mut row = run_once(&run).unwrap_or_else(|e| {
                let (n, d) = match &run.source {
                    Source::Synthetic(g) => (g.n, g.d),
                    Source::Csv { .. } => (0, 0),
                };
                let mut row = MetricsRow::config_echo(&run, n, d);
                row.status = format!("error: {e}");
                row.timestamp_ms = timestamp_ms();
                row
            });
            row.trial = trial;
            row
        })
        .collect();
    annotate_cells(&mut rows);
    Ok(rows)
}
