//! Pruning filters.
//!
//! A filter is built from tuples it has compared and can afterwards discard
//! ("prune") later tuples without asking the oracle anything. All families
//! share one interface: a resumable `add` that may need comparisons, a
//! query-free `prune`, and `best`.
//!
//! | kind            | structure                     | prune test                               |
//! |-----------------|-------------------------------|------------------------------------------|
//! | `list-qp`/`-lp` | sorted sample                 | distance from the descending cone        |
//! | `tied-qp`/`-lp` | representatives + tie groups  | convex block plus skip-one-group cone    |
//! | `pair-qp`/`-lp` | compared pairs                | distance from hull-plus-cone of pairs    |
//! | `hp-lp`         | compared pairs                | infeasible utility-space LP              |
//! | `hp`            | compared pairs                | some pair's halfspace excludes the tuple |

mod pairs;
mod sorted;
mod tied;

pub use pairs::{PairMode, PairSetFilter};
pub use sorted::SortedSampleFilter;
pub use tied::TiedSampleFilter;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComparisonOutcome, Oracle, Tuple};
use crate::scalar::Scalar;
use crate::solvers::SolverOptions;
use crate::tournament::Tournament;

/// Slack added to every residual threshold so solver round-off never decides
/// a prune on its own.
pub const PRUNE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterKind {
    ListQp,
    ListLp,
    TiedQp,
    TiedLp,
    PairQp,
    PairLp,
    HpLp,
    Hp,
}

impl FilterKind {
    pub const ALL: [FilterKind; 8] = [
        FilterKind::ListQp,
        FilterKind::ListLp,
        FilterKind::TiedQp,
        FilterKind::TiedLp,
        FilterKind::PairQp,
        FilterKind::PairLp,
        FilterKind::HpLp,
        FilterKind::Hp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::ListQp => "list-qp",
            FilterKind::ListLp => "list-lp",
            FilterKind::TiedQp => "tied-qp",
            FilterKind::TiedLp => "tied-lp",
            FilterKind::PairQp => "pair-qp",
            FilterKind::PairLp => "pair-lp",
            FilterKind::HpLp => "hp-lp",
            FilterKind::Hp => "hp",
        }
    }

    /// The tie-tolerant counterpart of a list filter; other kinds already
    /// cope with ties.
    pub fn tie_tolerant(self) -> FilterKind {
        match self {
            FilterKind::ListQp => FilterKind::TiedQp,
            FilterKind::ListLp => FilterKind::TiedLp,
            other => other,
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FilterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown filter kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams<T> {
    pub epsilon: T,
    /// Estimate of the best utility, dividing the pair-QP threshold.
    pub c_estimate: T,
    /// Keep the redundant `u·(x − z) ≥ 1` rows in the hp-lp program.
    pub hp_lp_full: bool,
    pub slack: T,
    pub solver: SolverOptions<T>,
}

impl<T: Scalar> FilterParams<T> {
    pub fn new(epsilon: T) -> Self {
        Self {
            epsilon,
            c_estimate: T::one(),
            hp_lp_full: false,
            slack: T::lit(PRUNE_SLACK),
            solver: SolverOptions::default(),
        }
    }
}

/// A pending oracle question: "is `first` better than `second`?".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query<T> {
    pub first: Tuple<T>,
    pub second: Tuple<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AddStep<T> {
    Done,
    Compare(Query<T>),
}

#[derive(Debug, Clone)]
pub enum Filter<T> {
    Sorted(SortedSampleFilter<T>),
    Tied(TiedSampleFilter<T>),
    Pairs(PairSetFilter<T>),
}

impl<T: Scalar> Filter<T> {
    pub fn new(kind: FilterKind, params: FilterParams<T>) -> Self {
        match kind {
            FilterKind::ListQp => Filter::Sorted(SortedSampleFilter::new(params, false)),
            FilterKind::ListLp => Filter::Sorted(SortedSampleFilter::new(params, true)),
            FilterKind::TiedQp => Filter::Tied(TiedSampleFilter::new(params, false)),
            FilterKind::TiedLp => Filter::Tied(TiedSampleFilter::new(params, true)),
            FilterKind::PairQp => Filter::Pairs(PairSetFilter::new(PairMode::PairQp, params)),
            FilterKind::PairLp => Filter::Pairs(PairSetFilter::new(PairMode::PairLp, params)),
            FilterKind::HpLp => Filter::Pairs(PairSetFilter::new(PairMode::HpLp, params)),
            FilterKind::Hp => Filter::Pairs(PairSetFilter::new(PairMode::Hp, params)),
        }
    }

    /// Starts inserting `x`. If a comparison is needed, feed its outcome to
    /// [`Filter::resume_add`] until `AddStep::Done`.
    pub fn begin_add(&mut self, x: Tuple<T>) -> Result<AddStep<T>> {
        match self {
            Filter::Sorted(f) => f.begin_add(x),
            Filter::Tied(f) => f.begin_add(x),
            Filter::Pairs(f) => f.begin_add(x),
        }
    }

    /// On error the filter is left exactly as before the call.
    pub fn resume_add(&mut self, outcome: ComparisonOutcome) -> Result<AddStep<T>> {
        match self {
            Filter::Sorted(f) => f.resume_add(outcome),
            Filter::Tied(f) => f.resume_add(outcome),
            Filter::Pairs(f) => f.resume_add(outcome),
        }
    }

    pub fn add<O: Oracle<T> + ?Sized>(&mut self, x: Tuple<T>, oracle: &mut O) -> Result<()> {
        let mut step = self.begin_add(x)?;
        while let AddStep::Compare(q) = step {
            let outcome = oracle.compare(&q.first, &q.second)?;
            step = self.resume_add(outcome)?;
        }
        Ok(())
    }

    /// Query-free pruning test. Any numerical doubt answers `false`.
    pub fn prune(&self, x: &Tuple<T>) -> bool {
        match self {
            Filter::Sorted(f) => f.prune(x),
            Filter::Tied(f) => f.prune(x),
            Filter::Pairs(f) => f.prune(x),
        }
    }

    /// Tuples among which the filter's best lies.
    pub fn best_candidates(&self) -> Vec<&Tuple<T>> {
        match self {
            Filter::Sorted(f) => f.sample().first().into_iter().collect(),
            Filter::Tied(f) => f.representatives().first().into_iter().collect(),
            Filter::Pairs(f) => f.best_candidates(),
        }
    }

    /// Best stored tuple. Free for list filters; pair filters run a
    /// tournament over their winners and pending tuple.
    pub fn best<O: Oracle<T> + ?Sized>(&self, oracle: &mut O) -> Result<Tuple<T>> {
        let candidates: Vec<Tuple<T>> = self.best_candidates().into_iter().cloned().collect();
        if candidates.is_empty() {
            return Err(Error::EmptyFilter);
        }
        Tournament::new(candidates)?.run(oracle)
    }

    /// Number of tuples held in memory.
    pub fn stored(&self) -> usize {
        match self {
            Filter::Sorted(f) => f.sample().len(),
            Filter::Tied(f) => f.groups().iter().map(Vec::len).sum(),
            Filter::Pairs(f) => 2 * f.pairs().len() + usize::from(f.pending().is_some()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.stored() == 0
    }

    /// The tuple whose insertion is waiting on a comparison, if any.
    pub fn in_flight(&self) -> Option<&Tuple<T>> {
        match self {
            Filter::Sorted(f) => f.in_flight(),
            Filter::Tied(f) => f.in_flight(),
            Filter::Pairs(f) => f.in_flight(),
        }
    }

    pub fn comparisons_used(&self) -> u64 {
        match self {
            Filter::Sorted(f) => f.comparisons_used(),
            Filter::Tied(f) => f.comparisons_used(),
            Filter::Pairs(f) => f.comparisons_used(),
        }
    }
}

/// Binary-search state shared by the list filters.
#[derive(Debug, Clone)]
pub(crate) struct Insertion<T> {
    pub x: Tuple<T>,
    pub lo: usize,
    pub hi: usize,
}

impl<T: Scalar> Insertion<T> {
    pub fn mid(&self) -> usize {
        (self.lo + self.hi) / 2
    }

    pub fn query(&self, sorted: &[Tuple<T>]) -> Query<T> {
        Query {
            first: self.x.clone(),
            second: sorted[self.mid()].clone(),
        }
    }
}

pub(crate) fn busy() -> Error {
    Error::Protocol("filter is already waiting on a comparison".into())
}

pub(crate) fn idle() -> Error {
    Error::Protocol("filter has no pending comparison".into())
}
