use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use irm_core::data::{GenKind, GenSpec, DEFAULT_CLUSTERS, DEFAULT_SIGMA};

use crate::metrics::OutputFormat;
use crate::run::{Method, RunSpec, Source, DEFAULT_RAND_K};
use crate::sweep::SweepSpec;
use crate::{BenchError, Result};

/// Streaming regret minimization with a simulated comparison oracle.
///
/// Without a subcommand, performs a single run and prints its metrics.
#[derive(Parser, Debug)]
#[command(name = "irm-bench", version, about)]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a grid of configurations and write one CSV row per cell and trial.
    Sweep(Box<SweepArgs>),
    /// Measure the sorted-sample size needed to prune half of fresh tuples.
    PruneHalf(PruneHalfArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SyntheticKind {
    Sphere,
    Clusters,
}

impl From<SyntheticKind> for GenKind {
    fn from(k: SyntheticKind) -> Self {
        match k {
            SyntheticKind::Sphere => GenKind::Sphere,
            SyntheticKind::Clusters => GenKind::Clusters,
        }
    }
}

/// Where the data comes from. Synthetic sphere data is the default.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Synthetic generator
    #[arg(long, value_enum, conflicts_with = "dataset")]
    pub synthetic: Option<SyntheticKind>,

    /// Number of clusters (clusters generator only)
    #[arg(long, conflicts_with = "dataset")]
    pub clusters: Option<usize>,

    /// Cluster spread (clusters generator only)
    #[arg(long, conflicts_with = "dataset")]
    pub sigma: Option<f64>,

    /// CSV file with a header row; all columns but the id column are numeric
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,

    /// Name of a non-numeric label column in the CSV
    #[arg(long, value_name = "NAME", requires = "dataset")]
    pub id_column: Option<String>,
}

impl DataArgs {
    fn source(&self, n: usize, d: usize) -> Result<Source> {
        if let Some(path) = &self.dataset {
            return Ok(Source::Csv {
                path: path.clone(),
                id_column: self.id_column.clone(),
            });
        }
        let kind = self.synthetic.unwrap_or(SyntheticKind::Sphere);
        if kind == SyntheticKind::Sphere && (self.clusters.is_some() || self.sigma.is_some()) {
            return Err(BenchError::Usage(
                "--clusters/--sigma require --synthetic clusters".into(),
            ));
        }
        Ok(Source::Synthetic(GenSpec {
            kind: kind.into(),
            n,
            d,
            num_clusters: self.clusters.unwrap_or(DEFAULT_CLUSTERS),
            sigma: self.sigma.unwrap_or(DEFAULT_SIGMA),
            seed: 0,
        }))
    }
}

/// Engine and oracle settings shared by single runs and sweeps.
#[derive(Args, Debug, Clone)]
pub struct EngineArgs {
    /// Pool size
    #[arg(long, default_value_t = 100)]
    pub pool_size: usize,

    /// Fraction of the pool a filter must prune to be sealed
    #[arg(long, default_value_t = 0.5)]
    pub pool_frac: f64,

    /// Derive pool size and fraction from the worst-case analysis
    #[arg(long)]
    pub theory_mode: bool,

    /// Multiply ε by the best utility so the result is an ε-regret tuple
    #[arg(long)]
    pub adjust_by_opt: bool,

    /// Subset size of the random baseline
    #[arg(long, default_value_t = DEFAULT_RAND_K)]
    pub rand_k: usize,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Filter family, or `rand` for the random-subset baseline
    #[arg(long, default_value = "list-qp")]
    pub filter: Method,

    /// Regret parameter
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,

    /// Oracle tie threshold; positive values enable the tie-tolerant filters
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of synthetic tuples
    #[arg(long, default_value_t = 1000, conflicts_with = "dataset")]
    pub n: usize,

    /// Dimension of synthetic tuples
    #[arg(long, default_value_t = 4, conflicts_with = "dataset")]
    pub d: usize,

    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub engine: EngineArgs,

    /// Also write the metrics to this file
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

impl RunArgs {
    pub fn spec(&self) -> Result<RunSpec> {
        let spec = RunSpec {
            method: self.filter,
            epsilon: self.epsilon,
            delta: self.delta,
            pool_size: self.engine.pool_size,
            pool_frac: self.engine.pool_frac,
            theory_mode: self.engine.theory_mode,
            adjust_by_opt: self.engine.adjust_by_opt,
            rand_k: self.engine.rand_k,
            seed: self.seed,
            source: self.data.source(self.n, self.d)?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Filter families (comma separated)
    #[arg(long = "filter", value_delimiter = ',', default_value = "list-qp")]
    pub filters: Vec<Method>,

    #[arg(long = "n", value_delimiter = ',', conflicts_with = "dataset")]
    pub ns: Vec<usize>,

    #[arg(long = "d", value_delimiter = ',', conflicts_with = "dataset")]
    pub ds: Vec<usize>,

    #[arg(long = "epsilon", value_delimiter = ',', default_value = "0.1")]
    pub epsilons: Vec<f64>,

    #[arg(long = "delta", value_delimiter = ',', default_value = "0")]
    pub deltas: Vec<f64>,

    /// Explicit trial seeds; overrides --trials/--seed
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,

    /// Trials per cell, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 3)]
    pub trials: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub engine: EngineArgs,

    /// CSV output file (stdout if absent)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

impl SweepArgs {
    pub fn spec(&self) -> Result<SweepSpec> {
        let csv = self.data.dataset.is_some();
        let or_default = |v: &Vec<usize>, d: usize| {
            if v.is_empty() && !csv {
                vec![d]
            } else {
                v.clone()
            }
        };
        let seeds = if self.seeds.is_empty() {
            (0..self.trials).map(|t| self.seed.wrapping_add(t)).collect()
        } else {
            self.seeds.clone()
        };
        let base = RunSpec {
            method: Method::Rand,
            epsilon: 0.0,
            delta: 0.0,
            pool_size: self.engine.pool_size,
            pool_frac: self.engine.pool_frac,
            theory_mode: self.engine.theory_mode,
            adjust_by_opt: self.engine.adjust_by_opt,
            rand_k: self.engine.rand_k,
            seed: 0,
            source: self.data.source(0, 0)?,
        };
        let spec = SweepSpec {
            methods: self.filters.clone(),
            ns: or_default(&self.ns, 1000),
            ds: or_default(&self.ds, 4),
            epsilons: self.epsilons.clone(),
            deltas: self.deltas.clone(),
            seeds,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone)]
pub struct PruneHalfArgs {
    /// Dimensions (comma separated)
    #[arg(long = "d", value_delimiter = ',', default_value = "2,4,8")]
    pub ds: Vec<usize>,

    /// Regret parameters (comma separated)
    #[arg(long = "epsilon", value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub epsilons: Vec<f64>,

    /// Fresh tuples evaluated per trial
    #[arg(long, default_value_t = 1000)]
    pub n_eval: usize,

    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV output file (stdout if absent)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
