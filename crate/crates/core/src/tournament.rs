//! Sequential max by pairwise comparisons, resumable one query at a time.

use crate::error::{Error, Result};
use crate::filters::Query;
use crate::model::{ComparisonOutcome, Oracle, Tuple};
use crate::scalar::Scalar;

/// The incumbent meets each challenger in order and is replaced only when
/// the challenger is strictly better; ties keep the incumbent. Costs exactly
/// `candidates − 1` comparisons.
#[derive(Debug, Clone)]
pub struct Tournament<T> {
    candidates: Vec<Tuple<T>>,
    incumbent: usize,
    next: usize,
}

impl<T: Scalar> Tournament<T> {
    pub fn new(candidates: Vec<Tuple<T>>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::NothingProcessed);
        }
        Ok(Self {
            candidates,
            incumbent: 0,
            next: 1,
        })
    }

    /// The comparison the tournament is waiting on, if any.
    pub fn query(&self) -> Option<Query<T>> {
        self.candidates.get(self.next).map(|challenger| Query {
            first: self.candidates[self.incumbent].clone(),
            second: challenger.clone(),
        })
    }

    pub fn answer(&mut self, outcome: ComparisonOutcome) -> Result<()> {
        if self.next >= self.candidates.len() {
            return Err(Error::Protocol("tournament has no pending comparison".into()));
        }
        if outcome == ComparisonOutcome::SecondBetter {
            self.incumbent = self.next;
        }
        self.next += 1;
        Ok(())
    }

    pub fn winner(&self) -> Option<&Tuple<T>> {
        (self.next >= self.candidates.len()).then(|| &self.candidates[self.incumbent])
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn run<O: Oracle<T> + ?Sized>(mut self, oracle: &mut O) -> Result<Tuple<T>> {
        while let Some(q) = self.query() {
            let outcome = oracle.compare(&q.first, &q.second)?;
            self.answer(outcome)?;
        }
        Ok(self.candidates.swap_remove(self.incumbent))
    }
}
