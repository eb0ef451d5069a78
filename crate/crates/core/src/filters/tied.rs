use super::{busy, idle, AddStep, FilterParams, Insertion};
use crate::error::{Error, Result};
use crate::model::{ComparisonOutcome, Tuple};
use crate::scalar::Scalar;
use crate::solvers::{convex_cone_ls, Columns};

/// Tie-tolerant sorted sample.
///
/// New tuples are binary-searched into a sorted backbone of representatives.
/// If every comparison is strict the tuple becomes a new representative;
/// the first tie stops the search and the tuple joins that representative's
/// group instead.
///
/// Pruning replaces the apex by the convex hull of the top two groups and
/// the descending steps by differences `w − z` with `z ∈ G_j`,
/// `w ∈ G_{j+2}`. Adjacent groups are skipped because their members can be
/// out of order by up to the tie threshold.
#[derive(Debug, Clone)]
pub struct TiedSampleFilter<T> {
    representatives: Vec<Tuple<T>>,
    /// `groups[i][0]` is `representatives[i]`.
    groups: Vec<Vec<Tuple<T>>>,
    exact: bool,
    params: FilterParams<T>,
    convex: Columns<T>,
    cone: Columns<T>,
    comparisons_used: u64,
    insertion: Option<Insertion<T>>,
}

impl<T: Scalar> TiedSampleFilter<T> {
    pub fn new(params: FilterParams<T>, exact: bool) -> Self {
        Self {
            representatives: Vec::new(),
            groups: Vec::new(),
            exact,
            params,
            convex: Columns::new(0),
            cone: Columns::new(0),
            comparisons_used: 0,
            insertion: None,
        }
    }

    pub fn representatives(&self) -> &[Tuple<T>] {
        &self.representatives
    }

    pub fn groups(&self) -> &[Vec<Tuple<T>>] {
        &self.groups
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

    /// The convex block (members of the top two groups) and cone block
    /// (skip-one-group differences) offered to the solver.
    pub fn assembled(&self) -> (&Columns<T>, &Columns<T>) {
        (&self.convex, &self.cone)
    }

    pub(crate) fn begin_add(&mut self, x: Tuple<T>) -> Result<AddStep<T>> {
        if self.insertion.is_some() {
            return Err(busy());
        }
        if let Some(first) = self.representatives.first() {
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
            hi: self.representatives.len(),
        };
        self.advance(ins)
    }

    pub(crate) fn resume_add(&mut self, outcome: ComparisonOutcome) -> Result<AddStep<T>> {
        let mut ins = self.insertion.take().ok_or_else(idle)?;
        self.comparisons_used += 1;
        match outcome {
            ComparisonOutcome::Tie => {
                let at = ins.mid();
                self.groups[at].push(ins.x);
                self.rebuild();
                return Ok(AddStep::Done);
            }
            ComparisonOutcome::FirstBetter => ins.hi = ins.mid(),
            ComparisonOutcome::SecondBetter => ins.lo = ins.mid() + 1,
        }
        self.advance(ins)
    }

    fn advance(&mut self, ins: Insertion<T>) -> Result<AddStep<T>> {
        if ins.lo < ins.hi {
            let q = ins.query(&self.representatives);
            self.insertion = Some(ins);
            return Ok(AddStep::Compare(q));
        }
        self.representatives.insert(ins.lo, ins.x.clone());
        self.groups.insert(ins.lo, vec![ins.x]);
        self.rebuild();
        Ok(AddStep::Done)
    }

    fn rebuild(&mut self) {
        let dim = self.representatives[0].dim();
        let mut convex = Columns::new(dim);
        for y in self.groups.iter().take(2).flatten() {
            convex.push(&y.coords).expect("shared dimension");
        }
        let mut cone = Columns::new(dim);
        for j in 0..self.groups.len().saturating_sub(2) {
            for z in &self.groups[j] {
                for w in &self.groups[j + 2] {
                    cone.push_difference(&w.coords, &z.coords)
                        .expect("shared dimension");
                }
            }
        }
        self.convex = convex;
        self.cone = cone;
    }

    pub fn distance(&self, x: &Tuple<T>) -> Option<T> {
        if self.convex.ncols() == 0 || self.convex.rows() != x.dim() {
            return None;
        }
        let report = convex_cone_ls(&self.convex, &self.cone, &x.coords, &self.params.solver).ok()?;
        report.is_optimal().then_some(report.residual_norm)
    }

    pub(crate) fn prune(&self, x: &Tuple<T>) -> bool {
        self.distance(x).is_some_and(|d| d <= self.threshold())
    }
}
