//! Single-pass streaming driver.
//!
//! Tuples arrive one at a time. Each is first tested against the sealed
//! filters; survivors fill a held-out pool; once the pool is full they are
//! added to the active filter, which is sealed as soon as it prunes a large
//! enough fraction of the pool. At the end (or at any interruption) the best
//! tuple is chosen among the filters' bests and the pool.
//!
//! The engine never calls an oracle itself. [`Engine::offer`] and
//! [`Engine::answer`] form a step machine that suspends at each comparison,
//! which lets a human answer through a request/response channel. The
//! `process`/`finalize`/`run_stream` helpers drive the same machine with a
//! synchronous [`Oracle`].

use std::mem;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{AddStep, Filter, FilterKind, FilterParams, Query};
use crate::model::{ComparisonOutcome, Dataset, Oracle, Tuple};
use crate::scalar::{dot, Scalar};
use crate::tournament::Tournament;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub filter_kind: FilterKind,
    pub epsilon: f64,
    pub pool_size: usize,
    pub pool_threshold: f64,
    /// Tie threshold of the oracle. Any positive value switches list filters
    /// to their tie-tolerant variant.
    pub delta: f64,
    /// Use tie-tolerant filters even with `delta = 0` (human oracles).
    pub allow_ties: bool,
    pub seed: u64,
    /// Derive pool size and threshold from the worst-case analysis instead
    /// of using `pool_size`/`pool_threshold`.
    pub theory_mode: bool,
    /// Estimate of the best utility, used by the pair-QP threshold.
    pub c_estimate: f64,
    pub hp_lp_full: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            filter_kind: FilterKind::ListQp,
            epsilon: 0.1,
            pool_size: 100,
            pool_threshold: 0.5,
            delta: 0.0,
            allow_ties: false,
            seed: 0,
            theory_mode: false,
            c_estimate: 1.0,
            hp_lp_full: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidValue(m.to_string()));
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad("epsilon must be finite and >= 0");
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return bad("delta must be finite and >= 0");
        }
        if self.pool_size == 0 {
            return bad("pool size must be positive");
        }
        if !(self.pool_threshold > 0.0 && self.pool_threshold <= 1.0) {
            return bad("pool threshold must lie in (0, 1]");
        }
        if !(self.c_estimate > 0.0 && self.c_estimate <= 1.0) {
            return bad("c estimate must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn ties_expected(&self) -> bool {
        self.delta > 0.0 || self.allow_ties
    }

    /// The filter family actually instantiated.
    pub fn effective_kind(&self) -> FilterKind {
        if self.ties_expected() {
            self.filter_kind.tie_tolerant()
        } else {
            self.filter_kind
        }
    }

    /// Pool size and seal threshold for a stream of `n` tuples.
    pub fn pool_parameters(&self, n: usize) -> (usize, f64) {
        if !self.theory_mode {
            return (self.pool_size, self.pool_threshold);
        }
        let log = (2.0 * n.max(1) as f64).ln();
        if self.ties_expected() {
            ((256.0 * log).ceil() as usize, 3.0 / 16.0)
        } else {
            ((64.0 * log).ceil() as usize, 5.0 / 8.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disposition {
    PrunedBySealed,
    Pooled,
    AddedToActive,
    SealedActive,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step<T> {
    /// The engine is suspended until [`Engine::answer`] is called.
    Query(Query<T>),
    Disposed(Disposition),
    Finished(Tuple<T>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub seen: u64,
    pub pruned_by_sealed: u64,
    /// Pool tuples dropped because the filter sealed over them.
    pub pruned_from_pool: u64,
    pub filters_sealed: usize,
    pub peak_memory_tuples: usize,
}

impl EngineStats {
    pub fn pruned(&self) -> u64 {
        self.pruned_by_sealed + self.pruned_from_pool
    }
}

#[derive(Debug, Clone)]
enum Phase<T> {
    Ready,
    Adding,
    Finalizing(Tournament<T>),
    Finished(Tuple<T>),
}

#[derive(Debug, Clone)]
pub struct Engine<T> {
    config: EngineConfig,
    kind: FilterKind,
    params: FilterParams<T>,
    pool_size: usize,
    pool_threshold: f64,
    sealed: Vec<Filter<T>>,
    active: Filter<T>,
    pool: Vec<Tuple<T>>,
    phase: Phase<T>,
    last_query: Option<Query<T>>,
    stats: EngineStats,
}

impl<T: Scalar> Engine<T> {
    /// `stream_len` only matters in theory mode, where the pool size grows
    /// with `ln n`.
    pub fn new(config: EngineConfig, stream_len: usize) -> Result<Self> {
        config.validate()?;
        let kind = config.effective_kind();
        let mut params = FilterParams::new(T::lit(config.epsilon));
        params.c_estimate = T::lit(config.c_estimate);
        params.hp_lp_full = config.hp_lp_full;
        let (pool_size, pool_threshold) = config.pool_parameters(stream_len);
        Ok(Self {
            active: Filter::new(kind, params),
            config,
            kind,
            params,
            pool_size,
            pool_threshold,
            sealed: Vec::new(),
            pool: Vec::new(),
            phase: Phase::Ready,
            last_query: None,
            stats: EngineStats::default(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn sealed(&self) -> &[Filter<T>] {
        &self.sealed
    }

    pub fn active(&self) -> &Filter<T> {
        &self.active
    }

    pub fn pool(&self) -> &[Tuple<T>] {
        &self.pool
    }

    pub fn pool_size(&self) -> usize {
        self.pool_size
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Sealed filters plus the active one if it holds anything.
    pub fn filters_built(&self) -> usize {
        self.sealed.len() + usize::from(!self.active.is_empty())
    }

    pub fn memory_tuples(&self) -> usize {
        self.pool.len()
            + self.sealed.iter().map(Filter::stored).sum::<usize>()
            + self.active.stored()
            + usize::from(self.active.in_flight().is_some())
    }

    pub fn is_waiting(&self) -> bool {
        matches!(self.phase, Phase::Adding | Phase::Finalizing(_))
    }

    pub fn is_finished(&self) -> bool {
        matches!(self.phase, Phase::Finished(_))
    }

    pub fn winner(&self) -> Option<&Tuple<T>> {
        match &self.phase {
            Phase::Finished(w) => Some(w),
            _ => None,
        }
    }

    /// The comparison the engine is suspended on, if any.
    pub fn pending_query(&self) -> Option<Query<T>> {
        match &self.phase {
            Phase::Adding => self.last_query.clone(),
            Phase::Finalizing(t) => t.query(),
            _ => None,
        }
    }

    fn touch_memory(&mut self) {
        self.stats.peak_memory_tuples = self.stats.peak_memory_tuples.max(self.memory_tuples());
    }

    /// Feeds the next stream tuple.
    pub fn offer(&mut self, x: Tuple<T>) -> Result<Step<T>> {
        if !matches!(self.phase, Phase::Ready) {
            return Err(Error::Protocol(
                "engine is waiting on a comparison or already finalized".into(),
            ));
        }
        self.stats.seen += 1;
        if self.sealed.iter().any(|f| f.prune(&x)) {
            self.stats.pruned_by_sealed += 1;
            return Ok(Step::Disposed(Disposition::PrunedBySealed));
        }
        if self.pool.len() < self.pool_size {
            self.pool.push(x);
            self.touch_memory();
            return Ok(Step::Disposed(Disposition::Pooled));
        }
        let step = self.active.begin_add(x)?;
        self.after_add_step(step)
    }

    /// Supplies the outcome of the pending comparison. On error the engine
    /// state is unchanged.
    pub fn answer(&mut self, outcome: ComparisonOutcome) -> Result<Step<T>> {
        match &mut self.phase {
            Phase::Adding => {
                let step = self.active.resume_add(outcome)?;
                self.after_add_step(step)
            }
            Phase::Finalizing(t) => {
                t.answer(outcome)?;
                Ok(self.advance_tournament())
            }
            _ => Err(Error::Protocol("no comparison is pending".into())),
        }
    }

    fn after_add_step(&mut self, step: AddStep<T>) -> Result<Step<T>> {
        match step {
            AddStep::Compare(q) => {
                self.phase = Phase::Adding;
                self.last_query = Some(q.clone());
                self.touch_memory();
                Ok(Step::Query(q))
            }
            AddStep::Done => {
                self.phase = Phase::Ready;
                self.last_query = None;
                self.touch_memory();
                Ok(Step::Disposed(self.pool_test()))
            }
        }
    }

    fn pool_test(&mut self) -> Disposition {
        let prunable: Vec<bool> = self.pool.iter().map(|y| self.active.prune(y)).collect();
        let hits = prunable.iter().filter(|&&p| p).count();
        if (hits as f64) < self.pool_threshold * self.pool.len() as f64 {
            return Disposition::AddedToActive;
        }
        let fresh = Filter::new(self.kind, self.params);
        self.sealed.push(mem::replace(&mut self.active, fresh));
        self.stats.filters_sealed += 1;
        self.stats.pruned_from_pool += hits as u64;
        let mut keep = prunable.iter().map(|p| !p);
        self.pool.retain(|_| keep.next().unwrap_or(true));
        Disposition::SealedActive
    }

    /// Every tuple that could still be the answer: each filter's best
    /// candidates, the pool, and a tuple whose insertion is in progress.
    pub fn candidates(&self) -> Vec<Tuple<T>> {
        let mut out: Vec<Tuple<T>> = self
            .sealed
            .iter()
            .chain(std::iter::once(&self.active))
            .flat_map(|f| f.best_candidates())
            .cloned()
            .collect();
        out.extend(self.pool.iter().cloned());
        if let Some(x) = self.active.in_flight() {
            out.push(x.clone());
        }
        out
    }

    /// Stops consuming the stream and starts the final tournament. An
    /// insertion in progress is abandoned; its tuple joins the candidates.
    pub fn begin_finalize(&mut self) -> Result<Step<T>> {
        match self.phase {
            Phase::Ready | Phase::Adding => {}
            Phase::Finalizing(_) => {
                return Err(Error::Protocol("finalization already in progress".into()))
            }
            Phase::Finished(ref w) => return Ok(Step::Finished(w.clone())),
        }
        let candidates = self.candidates();
        if candidates.is_empty() {
            return Err(Error::NothingProcessed);
        }
        self.phase = Phase::Finalizing(Tournament::new(candidates)?);
        Ok(self.advance_tournament())
    }

    fn advance_tournament(&mut self) -> Step<T> {
        let Phase::Finalizing(t) = &self.phase else {
            unreachable!("advance_tournament outside finalization")
        };
        if let Some(q) = t.query() {
            return Step::Query(q);
        }
        let winner = t.winner().expect("tournament complete").clone();
        self.phase = Phase::Finished(winner.clone());
        Step::Finished(winner)
    }

    /// Feeds `x` and answers every comparison it triggers with `oracle`.
    pub fn process<O: Oracle<T> + ?Sized>(
        &mut self,
        x: Tuple<T>,
        oracle: &mut O,
    ) -> Result<Disposition> {
        let mut step = self.offer(x)?;
        loop {
            match step {
                Step::Disposed(d) => return Ok(d),
                Step::Query(q) => {
                    let outcome = oracle.compare(&q.first, &q.second)?;
                    step = self.answer(outcome)?;
                }
                Step::Finished(_) => unreachable!("offer never finishes the engine"),
            }
        }
    }

    pub fn finalize<O: Oracle<T> + ?Sized>(&mut self, oracle: &mut O) -> Result<Tuple<T>> {
        let mut step = self.begin_finalize()?;
        loop {
            match step {
                Step::Finished(w) => return Ok(w),
                Step::Query(q) => {
                    let outcome = oracle.compare(&q.first, &q.second)?;
                    step = self.answer(outcome)?;
                }
                Step::Disposed(_) => unreachable!("finalization never disposes"),
            }
        }
    }

    /// Best tuple among everything seen so far, leaving the engine untouched.
    pub fn best_so_far<O: Oracle<T> + ?Sized>(&self, oracle: &mut O) -> Result<Tuple<T>> {
        if let Phase::Finished(w) = &self.phase {
            return Ok(w.clone());
        }
        Tournament::new(self.candidates())?.run(oracle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult<T> {
    pub winner: Tuple<T>,
    pub comparisons: u64,
    pub ties: u64,
    pub filters_built: usize,
    pub peak_memory_tuples: usize,
    pub tuples_seen: u64,
    pub tuples_pruned: u64,
    /// `(u·x* − u·winner) / u·x*`, available for simulated oracles.
    pub regret_true: Option<f64>,
    pub best_utility: Option<f64>,
    pub runtime_ms: f64,
}

/// Post-hoc regret of `winner` over `tuples` under the oracle's hidden
/// utility; `None` for oracles that do not expose one.
pub fn true_regret<T: Scalar, O: Oracle<T> + ?Sized>(
    oracle: &O,
    tuples: &[Tuple<T>],
    winner: &Tuple<T>,
) -> Option<(f64, f64)> {
    let u = oracle.hidden_utility()?;
    let best = tuples
        .iter()
        .map(|x| dot(u, &x.coords).to_f64_lossy())
        .fold(f64::NEG_INFINITY, f64::max);
    let got = dot(u, &winner.coords).to_f64_lossy();
    Some(((best - got) / best, best))
}

/// Random-order permutation of `0..n` for a given seed.
pub fn stream_order(n: usize, shuffle_seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
    order
}

/// Streams `dataset` in random order (seeded) through a fresh engine and
/// reports the run's metrics.
pub fn run_stream<T: Scalar, O: Oracle<T> + ?Sized>(
    config: &EngineConfig,
    dataset: &Dataset<T>,
    oracle: &mut O,
    shuffle_seed: u64,
) -> Result<RunResult<T>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let started = Instant::now();
    let (q0, t0) = (oracle.query_count(), oracle.tie_count());
    let mut engine = Engine::new(config.clone(), dataset.len())?;
    for i in stream_order(dataset.len(), shuffle_seed) {
        engine.process(dataset.tuples[i].clone(), oracle)?;
    }
    let winner = engine.finalize(oracle)?;
    let regret = true_regret(oracle, &dataset.tuples, &winner);
    let stats = engine.stats();
    Ok(RunResult {
        comparisons: oracle.query_count() - q0,
        ties: oracle.tie_count() - t0,
        filters_built: engine.filters_built(),
        peak_memory_tuples: stats.peak_memory_tuples,
        tuples_seen: stats.seen,
        tuples_pruned: stats.pruned(),
        regret_true: regret.map(|r| r.0),
        best_utility: regret.map(|r| r.1),
        winner,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Sequential max over `min(k, n)` uniformly sampled tuples.
pub fn rand_baseline<T: Scalar, O: Oracle<T> + ?Sized>(
    dataset: &Dataset<T>,
    oracle: &mut O,
    k: usize,
    seed: u64,
) -> Result<RunResult<T>> {
    if k == 0 {
        return Err(Error::InvalidValue("sample size must be >= 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let started = Instant::now();
    let (q0, t0) = (oracle.query_count(), oracle.tie_count());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, dataset.len(), k.min(dataset.len()));
    let candidates: Vec<Tuple<T>> = picks.iter().map(|i| dataset.tuples[i].clone()).collect();
    let memory = candidates.len();
    let winner = Tournament::new(candidates)?.run(oracle)?;
    let regret = true_regret(oracle, &dataset.tuples, &winner);
    Ok(RunResult {
        comparisons: oracle.query_count() - q0,
        ties: oracle.tie_count() - t0,
        filters_built: 0,
        peak_memory_tuples: memory,
        tuples_seen: dataset.len() as u64,
        tuples_pruned: 0,
        regret_true: regret.map(|r| r.0),
        best_utility: regret.map(|r| r.1),
        winner,
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}
