//! One elicitation session: a dataset streamed in seeded order through an
//! engine whose oracle is the remote user.
//!
//! The engine suspends at every comparison; the session stores the
//! suspension and resumes streaming when the answer arrives. Everything a
//! session does follows from its spec and its answer log, so a record of
//! those two is enough to rebuild it.

use irm_core::data::{read_csv, GenSpec};
use irm_core::engine::stream_order;
use irm_core::{ComparisonOutcome, Dataset64, Engine64, EngineConfig, FilterKind, Tuple64};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Uploaded CSV text with a header row.
    Csv {
        text: String,
        #[serde(default)]
        id_column: Option<String>,
    },
    Synthetic(GenSpec),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub dataset: DatasetSource,
    /// Engine settings; `seed` also fixes the stream order.
    #[serde(default)]
    pub config: EngineConfig,
    /// Accept tie answers. People do tie, so this is on by default and list
    /// filters run as their tie-tolerant variants.
    #[serde(default = "yes")]
    pub ties: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    First,
    Second,
    Tie,
}

impl From<Answer> for ComparisonOutcome {
    fn from(a: Answer) -> Self {
        match a {
            Answer::First => ComparisonOutcome::FirstBetter,
            Answer::Second => ComparisonOutcome::SecondBetter,
            Answer::Tie => ComparisonOutcome::Tie,
        }
    }
}

impl From<ComparisonOutcome> for Answer {
    fn from(o: ComparisonOutcome) -> Self {
        match o {
            ComparisonOutcome::FirstBetter => Answer::First,
            ComparisonOutcome::SecondBetter => Answer::Second,
            ComparisonOutcome::Tie => Answer::Tie,
        }
    }
}

/// One answered comparison, by tuple id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub first: usize,
    pub second: usize,
    pub outcome: Answer,
}

/// Everything needed to rebuild a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub spec: SessionSpec,
    pub answers: Vec<AnswerRecord>,
    /// Number of answers given when the user stopped early.
    #[serde(default)]
    pub stopped_after: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingAnswer,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Streaming,
    Finalizing,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub status: Status,
    pub phase: Phase,
    pub filter_kind: FilterKind,
    pub comparisons: usize,
    pub ties: usize,
    pub tuples_seen: u64,
    pub tuples_pruned: u64,
    pub filters_built: usize,
    pub stream_len: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeValue {
    pub name: String,
    pub value: f64,
}

/// A tuple as shown to a person: raw attribute values under their names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TupleView {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub attributes: Vec<AttributeValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QueryView {
    AwaitingAnswer {
        /// Number of answers so far; echo it with the answer to guard
        /// against double submission.
        query_id: usize,
        first: TupleView,
        second: TupleView,
        progress: Progress,
    },
    Done {
        winner: TupleView,
        progress: Progress,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultView {
    pub winner: TupleView,
    pub comparisons: usize,
    pub stopped_early: bool,
    pub answer_log: Vec<AnswerRecord>,
}

#[derive(Debug, Clone)]
pub struct Session {
    spec: SessionSpec,
    dataset: Dataset64,
    order: Vec<usize>,
    cursor: usize,
    engine: Engine64,
    log: Vec<AnswerRecord>,
    stopped_after: Option<usize>,
}

/// Upper bound on dataset size, so a single request cannot exhaust memory.
pub const DEFAULT_MAX_TUPLES: usize = 1_000_000;

impl Session {
    /// Loads the dataset and streams until the first comparison (or the end).
    pub fn create(spec: SessionSpec, max_tuples: usize) -> ApiResult<Self> {
        let dataset: Dataset64 = match &spec.dataset {
            DatasetSource::Csv { text, id_column } => {
                read_csv(text.as_bytes(), id_column.as_deref())?
            }
            DatasetSource::Synthetic(g) => {
                if g.n > max_tuples {
                    return Err(ApiError::BadRequest(format!(
                        "n = {} exceeds the limit of {max_tuples} tuples",
                        g.n
                    )));
                }
                g.generate()?
            }
        };
        if dataset.len() > max_tuples {
            return Err(ApiError::BadRequest(format!(
                "dataset has {} tuples; the limit is {max_tuples}",
                dataset.len()
            )));
        }
        let engine = Engine64::new(Self::effective_config(&spec), dataset.len())?;
        let mut s = Session {
            order: stream_order(dataset.len(), spec.config.seed),
            spec,
            dataset,
            cursor: 0,
            engine,
            log: Vec::new(),
            stopped_after: None,
        };
        s.pump()?;
        Ok(s)
    }

    /// The engine configuration actually used.
    pub fn effective_config(spec: &SessionSpec) -> EngineConfig {
        let mut c = spec.config.clone();
        c.allow_ties |= spec.ties;
        c
    }

    /// Rebuilds a session by feeding its log to a fresh one. Fails if the
    /// log does not match the comparisons the engine asks for.
    pub fn replay(record: &SessionRecord, max_tuples: usize) -> ApiResult<Self> {
        let mut s = Session::create(record.spec.clone(), max_tuples)?;
        for (i, a) in record.answers.iter().enumerate() {
            if record.stopped_after == Some(i) {
                s.stop()?;
            }
            match s.engine.pending_query() {
                Some(q) if q.first.id == a.first && q.second.id == a.second => {}
                _ => {
                    return Err(ApiError::BadRequest(format!(
                        "answer {i} does not match the pending comparison"
                    )))
                }
            }
            s.answer(a.outcome, None)?;
        }
        if record.stopped_after == Some(record.answers.len()) {
            s.stop()?;
        }
        Ok(s)
    }

    /// Streams tuples until the engine needs an answer or has finished.
    fn pump(&mut self) -> ApiResult<()> {
        while !self.engine.is_waiting() && !self.engine.is_finished() {
            if let Some(&i) = self.order.get(self.cursor) {
                self.cursor += 1;
                self.engine.offer(self.dataset.tuples[i].clone())?;
            } else {
                self.engine.begin_finalize()?;
            }
        }
        Ok(())
    }

    pub fn status(&self) -> Status {
        if self.engine.is_finished() {
            Status::Done
        } else {
            Status::AwaitingAnswer
        }
    }

    fn phase(&self) -> Phase {
        if self.engine.is_finished() {
            Phase::Done
        } else if self.stopped_after.is_some() || self.cursor == self.order.len() {
            Phase::Finalizing
        } else {
            Phase::Streaming
        }
    }

    pub fn kind(&self) -> FilterKind {
        self.engine.kind()
    }

    /// Feeds the answer to the pending comparison and streams on.
    ///
    /// `query_id`, when given, must equal the number of answers so far; a
    /// stale id means the answer was meant for an earlier comparison.
    pub fn answer(&mut self, outcome: Answer, query_id: Option<usize>) -> ApiResult<()> {
        let q = self
            .engine
            .pending_query()
            .ok_or_else(|| ApiError::Conflict("no comparison is pending".into()))?;
        if let Some(id) = query_id {
            if id != self.log.len() {
                return Err(ApiError::Conflict(format!(
                    "query {id} was already answered; the pending query is {}",
                    self.log.len()
                )));
            }
        }
        if outcome == Answer::Tie && matches!(self.kind(), FilterKind::ListQp | FilterKind::ListLp)
        {
            return Err(ApiError::Unprocessable(
                "this session was created without tie support".into(),
            ));
        }
        self.engine.answer(outcome.into())?;
        self.log.push(AnswerRecord { first: q.first.id, second: q.second.id, outcome });
        self.pump()
    }

    /// Stops reading the stream; the remaining comparisons pick the best
    /// tuple among those kept so far. A no-op once the stream is exhausted.
    pub fn stop(&mut self) -> ApiResult<()> {
        if self.phase() != Phase::Streaming {
            return Ok(());
        }
        self.stopped_after = Some(self.log.len());
        self.engine.begin_finalize()?;
        self.pump()
    }

    pub fn progress(&self) -> Progress {
        let stats = self.engine.stats();
        Progress {
            status: self.status(),
            phase: self.phase(),
            filter_kind: self.kind(),
            comparisons: self.log.len(),
            ties: self.log.iter().filter(|a| a.outcome == Answer::Tie).count(),
            tuples_seen: stats.seen,
            tuples_pruned: stats.pruned(),
            filters_built: self.engine.filters_built(),
            stream_len: self.order.len(),
            stopped_early: self.stopped_after.is_some(),
        }
    }

    fn view(&self, t: &Tuple64) -> TupleView {
        let raw = self.dataset.raw_values(t.id);
        TupleView {
            id: t.id,
            label: self.dataset.labels.as_ref().map(|l| l[t.id].clone()),
            attributes: self
                .dataset
                .attributes
                .iter()
                .zip(raw)
                .map(|(name, value)| AttributeValue { name: name.clone(), value })
                .collect(),
        }
    }

    pub fn query(&self) -> QueryView {
        match (self.engine.winner(), self.engine.pending_query()) {
            (Some(w), _) => QueryView::Done { winner: self.view(w), progress: self.progress() },
            (None, Some(q)) => QueryView::AwaitingAnswer {
                query_id: self.log.len(),
                first: self.view(&q.first),
                second: self.view(&q.second),
                progress: self.progress(),
            },
            (None, None) => unreachable!("a live session always has a pending comparison"),
        }
    }

    pub fn result(&self) -> ApiResult<ResultView> {
        let w = self
            .engine
            .winner()
            .ok_or_else(|| ApiError::Conflict("session is not finished".into()))?;
        Ok(ResultView {
            winner: self.view(w),
            comparisons: self.log.len(),
            stopped_early: self.stopped_after.is_some(),
            answer_log: self.log.clone(),
        })
    }

    pub fn record(&self) -> SessionRecord {
        SessionRecord {
            spec: self.spec.clone(),
            answers: self.log.clone(),
            stopped_after: self.stopped_after,
        }
    }

    pub fn dataset(&self) -> &Dataset64 {
        &self.dataset
    }
}
