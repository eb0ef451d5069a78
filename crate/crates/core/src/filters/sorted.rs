use super::{busy, idle, AddStep, FilterParams, Insertion};
use crate::error::{Error, Result};
use crate::model::{ComparisonOutcome, Tuple};
use crate::scalar::{sub, Scalar};
use crate::solvers::{nnls, Columns};

/// Totally sorted random sample, best first.
///
/// A tuple `x` is pruned when `x − x₁` lies within `ε` of the cone spanned
/// by the descending steps `x_{j+1} − x_j`. Every such step has nonpositive
/// utility, so anything in the cone is no better than the top `x₁`.
#[derive(Debug, Clone)]
pub struct SortedSampleFilter<T> {
    sample: Vec<Tuple<T>>,
    /// Exact cone membership (LP mode): the threshold drops `ε`.
    exact: bool,
    params: FilterParams<T>,
    cone: Columns<T>,
    comparisons_used: u64,
    insertion: Option<Insertion<T>>,
}

impl<T: Scalar> SortedSampleFilter<T> {
    pub fn new(params: FilterParams<T>, exact: bool) -> Self {
        Self {
            sample: Vec::new(),
            exact,
            params,
            cone: Columns::new(0),
            comparisons_used: 0,
            insertion: None,
        }
    }

    pub fn sample(&self) -> &[Tuple<T>] {
        &self.sample
    }

    pub fn comparisons_used(&self) -> u64 {
        self.comparisons_used
    }

    pub fn in_flight(&self) -> Option<&Tuple<T>> {
        self.insertion.as_ref().map(|i| &i.x)
    }

    pub fn threshold(&self) -> T {
        if self.exact {
            self.params.slack
        } else {
            self.params.epsilon + self.params.slack
        }
    }

    pub(crate) fn begin_add(&mut self, x: Tuple<T>) -> Result<AddStep<T>> {
        if self.insertion.is_some() {
            return Err(busy());
        }
        if let Some(first) = self.sample.first() {
            if first.dim() != x.dim() {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    found: x.dim(),
                });
            }
        }
        let ins = Insertion {
            x,
            lo: 0,
            hi: self.sample.len(),
        };
        self.advance(ins)
    }

    pub(crate) fn resume_add(&mut self, outcome: ComparisonOutcome) -> Result<AddStep<T>> {
        let mut ins = self.insertion.take().ok_or_else(idle)?;
        match outcome {
            ComparisonOutcome::Tie => {
                self.insertion = Some(ins);
                return Err(Error::Protocol(
                    "sorted-sample filter cannot use tie answers; use a tie-tolerant filter".into(),
                ));
            }
            ComparisonOutcome::FirstBetter => ins.hi = ins.mid(),
            ComparisonOutcome::SecondBetter => ins.lo = ins.mid() + 1,
        }
        self.comparisons_used += 1;
        self.advance(ins)
    }

    fn advance(&mut self, ins: Insertion<T>) -> Result<AddStep<T>> {
        if ins.lo < ins.hi {
            let q = ins.query(&self.sample);
            self.insertion = Some(ins);
            return Ok(AddStep::Compare(q));
        }
        self.sample.insert(ins.lo, ins.x);
        self.rebuild_cone();
        Ok(AddStep::Done)
    }

    fn rebuild_cone(&mut self) {
        let dim = self.sample[0].dim();
        let mut cone = Columns::with_capacity(dim, self.sample.len() - 1);
        for w in self.sample.windows(2) {
            cone.push_difference(&w[1].coords, &w[0].coords)
                .expect("sample tuples share a dimension");
        }
        self.cone = cone;
    }

    /// Distance from `x − x₁` to the descending cone, when the solver
    /// reaches optimality.
    pub fn cone_distance(&self, x: &Tuple<T>) -> Option<T> {
        let top = self.sample.first()?;
        if top.dim() != x.dim() {
            return None;
        }
        let target = sub(&x.coords, &top.coords);
        let report = nnls(&self.cone, &target, &self.params.solver).ok()?;
        report.is_optimal().then_some(report.residual_norm)
    }

    pub(crate) fn prune(&self, x: &Tuple<T>) -> bool {
        self.cone_distance(x)
            .is_some_and(|dist| dist <= self.threshold())
    }
}
