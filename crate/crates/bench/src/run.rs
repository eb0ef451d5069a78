use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use irm_core::data::{load_csv, GenKind, GenSpec};
use irm_core::{
    rand_baseline, run_stream, Dataset64, EngineConfig, FilterKind, Oracle, RunResult64,
    SimOracle64,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{timestamp_ms, MetricsRow};
use crate::{BenchError, Result};

pub const DEFAULT_RAND_K: usize = 50;

/// A filter family run through the streaming engine, or the random-subset
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Engine(FilterKind),
    Rand,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Engine(k) => k.fmt(f),
            Method::Rand => f.write_str("rand"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "rand" {
            return Ok(Method::Rand);
        }
        s.parse::<FilterKind>().map(Method::Engine).map_err(|e| e.to_string())
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Synthetic(GenSpec),
    Csv { path: PathBuf, id_column: Option<String> },
}

impl Source {
    pub fn label(&self) -> String {
        match self {
            Source::Synthetic(g) => match g.kind {
                GenKind::Sphere => "sphere".into(),
                GenKind::Clusters => "clusters".into(),
            },
            Source::Csv { path, .. } => path.display().to_string(),
        }
    }

    /// Loads or generates the dataset. Synthetic data uses `data_seed`.
    pub fn load(&self, data_seed: u64) -> Result<Dataset64> {
        match self {
            Source::Synthetic(g) => {
                let spec = GenSpec { seed: data_seed, ..g.clone() };
                Ok(spec.generate()?)
            }
            Source::Csv { path, id_column } => Ok(load_csv(path, id_column.as_deref())?),
        }
    }
}

/// Independent seeds derived from one user-facing seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedPlan {
    pub data: u64,
    pub utility: u64,
    pub shuffle: u64,
    pub baseline: u64,
}

impl SeedPlan {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            data: seed,
            utility: rng.next_u64(),
            shuffle: rng.next_u64(),
            baseline: rng.next_u64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub epsilon: f64,
    pub delta: f64,
    pub pool_size: usize,
    pub pool_frac: f64,
    pub theory_mode: bool,
    /// Scale ε by the best utility so the guarantee becomes an ε-regret.
    pub adjust_by_opt: bool,
    pub rand_k: usize,
    pub seed: u64,
    pub source: Source,
}

impl RunSpec {
    pub fn engine_config(&self, epsilon: f64) -> EngineConfig {
        EngineConfig {
            filter_kind: match self.method {
                Method::Engine(k) => k,
                Method::Rand => FilterKind::ListQp,
            },
            epsilon,
            pool_size: self.pool_size,
            pool_threshold: self.pool_frac,
            delta: self.delta,
            seed: self.seed,
            theory_mode: self.theory_mode,
            ..EngineConfig::default()
        }
    }

    /// Rejects flag values the engine would refuse, before any work is done.
    pub fn validate(&self) -> Result<()> {
        if self.method == Method::Rand && self.rand_k == 0 {
            return Err(BenchError::Usage("--rand-k must be >= 1".into()));
        }
        self.engine_config(self.epsilon)
            .validate()
            .map_err(|e| BenchError::Usage(e.to_string()))
    }
}

/// Executes one run and returns its metrics row. Errors are returned, not
/// recorded; sweeps turn them into rows with a failure status.
pub fn run_once(spec: &RunSpec) -> Result<MetricsRow> {
    spec.validate()?;
    let seeds = SeedPlan::new(spec.seed);
    let dataset = spec.source.load(seeds.data)?;
    let mut oracle = SimOracle64::random(
        dataset.dim,
        spec.delta,
        &mut ChaCha8Rng::seed_from_u64(seeds.utility),
    )?;
    let best = dataset
        .tuples
        .iter()
        .map(|x| oracle.true_utility(x))
        .collect::<irm_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let epsilon = if spec.adjust_by_opt {
        if best <= 0.0 {
            return Err(BenchError::Run(irm_core::Error::InvalidValue(
                "best utility is not positive; cannot adjust epsilon".into(),
            )));
        }
        spec.epsilon * best
    } else {
        spec.epsilon
    };

    let result: RunResult64 = match spec.method {
        Method::Engine(_) => {
            run_stream(&spec.engine_config(epsilon), &dataset, &mut oracle, seeds.shuffle)?
        }
        Method::Rand => rand_baseline(&dataset, &mut oracle, spec.rand_k, seeds.baseline)?,
    };
    debug_assert_eq!(result.comparisons, oracle.query_count());
    let mut row = MetricsRow::config_echo(spec, dataset.len(), dataset.dim);
    row.epsilon_effective = epsilon;
    if let Method::Engine(_) = spec.method {
        // Theory mode replaces the configured pool with the derived one.
        (row.pool_size, row.pool_frac) = spec.engine_config(epsilon).pool_parameters(dataset.len());
    }
    row.fill(&result);
    row.timestamp_ms = timestamp_ms();
    Ok(row)
}
