use serde::{Deserialize, Serialize};

use super::{busy, idle, AddStep, FilterParams, Query};
use crate::error::{Error, Result};
use crate::model::{ComparisonOutcome, Tuple};
use crate::scalar::{dot, sub, Scalar};
use crate::solvers::{convex_cone_ls, lin_feasible, Columns, FeasStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairMode {
    /// Distance to hull(all pair members) + cone(loser − winner) ≤ ε / c.
    PairQp,
    /// Exact membership in hull(winners) + cone(loser − winner).
    PairLp,
    /// Utility-space LP over the pairs is infeasible.
    HpLp,
    /// Some pair's halfspace puts the tuple on the losing side.
    Hp,
}

/// Set of compared pairs `(loser, winner)`. Two consecutive adds make one
/// pair; a tie discards the newcomer and keeps the earlier tuple pending.
#[derive(Debug, Clone)]
pub struct PairSetFilter<T> {
    mode: PairMode,
    pairs: Vec<(Tuple<T>, Tuple<T>)>,
    pending: Option<Tuple<T>>,
    resolving: Option<Tuple<T>>,
    params: FilterParams<T>,
    convex: Columns<T>,
    cone: Columns<T>,
    comparisons_used: u64,
}

impl<T: Scalar> PairSetFilter<T> {
    pub fn new(mode: PairMode, params: FilterParams<T>) -> Self {
        Self {
            mode,
            pairs: Vec::new(),
            pending: None,
            resolving: None,
            params,
            convex: Columns::new(0),
            cone: Columns::new(0),
            comparisons_used: 0,
        }
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }

    /// Stored pairs as `(loser, winner)`.
    pub fn pairs(&self) -> &[(Tuple<T>, Tuple<T>)] {
        &self.pairs
    }

    pub fn pending(&self) -> Option<&Tuple<T>> {
        self.pending.as_ref()
    }

    pub fn comparisons_used(&self) -> u64 {
        self.comparisons_used
    }

    pub fn in_flight(&self) -> Option<&Tuple<T>> {
        self.resolving.as_ref()
    }

    pub fn best_candidates(&self) -> Vec<&Tuple<T>> {
        self.pairs
            .iter()
            .map(|(_, winner)| winner)
            .chain(self.pending.as_ref())
            .collect()
    }

    pub(crate) fn begin_add(&mut self, x: Tuple<T>) -> Result<AddStep<T>> {
        if self.resolving.is_some() {
            return Err(busy());
        }
        match &self.pending {
            None => {
                self.pending = Some(x);
                Ok(AddStep::Done)
            }
            Some(p) => {
                if p.dim() != x.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: p.dim(),
                        found: x.dim(),
                    });
                }
                let q = Query {
                    first: p.clone(),
                    second: x.clone(),
                };
                self.resolving = Some(x);
                Ok(AddStep::Compare(q))
            }
        }
    }

    pub(crate) fn resume_add(&mut self, outcome: ComparisonOutcome) -> Result<AddStep<T>> {
        let x = self.resolving.take().ok_or_else(idle)?;
        self.comparisons_used += 1;
        match outcome {
            ComparisonOutcome::Tie => {}
            ComparisonOutcome::FirstBetter => {
                let winner = self.pending.take().expect("pending set while resolving");
                self.pairs.push((x, winner));
                self.rebuild();
            }
            ComparisonOutcome::SecondBetter => {
                let loser = self.pending.take().expect("pending set while resolving");
                self.pairs.push((loser, x));
                self.rebuild();
            }
        }
        Ok(AddStep::Done)
    }

    fn rebuild(&mut self) {
        let dim = self.pairs[0].0.dim();
        let mut convex = Columns::new(dim);
        let mut cone = Columns::new(dim);
        for (loser, winner) in &self.pairs {
            if self.mode == PairMode::PairQp {
                convex.push(&loser.coords).expect("shared dimension");
            }
            convex.push(&winner.coords).expect("shared dimension");
            cone.push_difference(&loser.coords, &winner.coords)
                .expect("shared dimension");
        }
        self.convex = convex;
        self.cone = cone;
    }

    fn threshold(&self) -> T {
        match self.mode {
            PairMode::PairQp => self.params.epsilon / self.params.c_estimate + self.params.slack,
            _ => self.params.slack,
        }
    }

    /// Rows and right-hand side of the utility-space program for `x`.
    pub fn hp_lp_system(&self, x: &Tuple<T>) -> (Vec<Vec<T>>, Vec<T>) {
        let one_minus_eps = T::one() - self.params.epsilon;
        let mut rows = Vec::with_capacity(self.pairs.len() * 3);
        for (loser, winner) in &self.pairs {
            rows.push(sub(&winner.coords, &loser.coords));
        }
        if self.params.hp_lp_full {
            for (_, winner) in &self.pairs {
                rows.push(sub(&x.coords, &winner.coords));
            }
        }
        for (_, winner) in &self.pairs {
            rows.push(
                x.coords
                    .iter()
                    .zip(&winner.coords)
                    .map(|(&xi, &zi)| one_minus_eps * xi - zi)
                    .collect(),
            );
        }
        let rhs = vec![T::one(); rows.len()];
        (rows, rhs)
    }

    pub(crate) fn prune(&self, x: &Tuple<T>) -> bool {
        if self.pairs.is_empty() || self.pairs[0].0.dim() != x.dim() {
            return false;
        }
        match self.mode {
            PairMode::PairQp | PairMode::PairLp => {
                convex_cone_ls(&self.convex, &self.cone, &x.coords, &self.params.solver)
                    .ok()
                    .filter(|r| r.is_optimal())
                    .is_some_and(|r| r.residual_norm <= self.threshold())
            }
            PairMode::HpLp => {
                let (rows, rhs) = self.hp_lp_system(x);
                lin_feasible(&rows, &rhs, x.dim(), &self.params.solver)
                    .is_ok_and(|r| r.status == FeasStatus::Infeasible)
            }
            PairMode::Hp => self.pairs.iter().any(|(loser, winner)| {
                dot(&x.coords, &winner.coords) - dot(&x.coords, &loser.coords) < T::zero()
            }),
        }
    }
}
