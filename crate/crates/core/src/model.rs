//! Tuples, datasets, comparison outcomes and oracles.
//!
//! A tuple is a point in the unit ball of `R^d`. Its utility under a hidden
//! unit vector `u` is the inner product `u·x`. Algorithms never see `u`; they
//! only observe the outcome of pairwise comparisons answered by an [`Oracle`].

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Norms up to this bound count as already inside the unit ball.
pub const UNIT_BALL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuple<T> {
    pub id: usize,
    pub coords: Vec<T>,
}

impl<T: Scalar> Tuple<T> {
    pub fn new(id: usize, coords: Vec<T>) -> Self {
        Self { id, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> T {
        norm(&self.coords)
    }
}

/// An immutable collection of normalized tuples sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub tuples: Vec<Tuple<T>>,
    pub dim: usize,
    /// Divisor applied to the raw vectors. `raw = coords * scale`.
    pub scale: T,
    /// Attribute names, one per coordinate.
    pub attributes: Vec<String>,
    /// Optional external labels (e.g. a CSV id column), aligned with `tuples`.
    pub labels: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Pre-normalization values of tuple `id`.
    pub fn raw_values(&self, id: usize) -> Vec<T> {
        self.tuples[id].coords.iter().map(|&c| c * self.scale).collect()
    }

    pub fn with_attributes(mut self, attributes: Vec<String>) -> Result<Self> {
        if attributes.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: attributes.len(),
            });
        }
        self.attributes = attributes;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.tuples.len() {
            return Err(Error::DimensionMismatch {
                expected: self.tuples.len(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }
}

pub(crate) fn default_attributes(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

/// Scales raw vectors uniformly into the unit ball.
///
/// Ids are assigned densely in input order. The divisor is the largest input
/// norm, or 1 when every input already lies in the ball. No centering is
/// applied, so utility ratios are preserved.
pub fn normalize_dataset<T: Scalar>(raw: Vec<Vec<T>>) -> Result<Dataset<T>> {
    let dim = raw.first().ok_or(Error::EmptyDataset)?.len();
    if dim == 0 {
        return Err(Error::InvalidValue("tuples must have dimension >= 1".into()));
    }
    let mut max_norm = T::zero();
    for (row, v) in raw.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if let Some(col) = v.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite value at row {row}, column {col}"
            )));
        }
        max_norm = max_norm.max(norm(v));
    }
    let scale = if max_norm > T::one() + T::lit(UNIT_BALL_SLACK) {
        max_norm
    } else {
        T::one()
    };
    let tuples = raw
        .into_iter()
        .enumerate()
        .map(|(id, v)| {
            let coords = if scale == T::one() {
                v
            } else {
                v.into_iter().map(|c| c / scale).collect()
            };
            Tuple { id, coords }
        })
        .collect();
    Ok(Dataset {
        tuples,
        dim,
        scale,
        attributes: default_attributes(dim),
        labels: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonOutcome {
    FirstBetter,
    SecondBetter,
    Tie,
}

/// Anything that can answer "which of these two tuples do you prefer?".
pub trait Oracle<T: Scalar> {
    fn compare(&mut self, first: &Tuple<T>, second: &Tuple<T>) -> Result<ComparisonOutcome>;

    fn query_count(&self) -> u64;

    fn tie_count(&self) -> u64;

    /// The hidden utility vector, when the oracle is simulated. Only used for
    /// post-hoc diagnostics such as the true regret of a run.
    fn hidden_utility(&self) -> Option<&[T]> {
        None
    }
}

/// Simulated user with a hidden unit utility vector.
///
/// Pairs whose utilities differ by at most `delta` are answered with a tie;
/// `delta = 0` disables ties entirely (exactly equal utilities then resolve
/// to [`ComparisonOutcome::FirstBetter`]).
#[derive(Debug, Clone)]
pub struct SimOracle<T> {
    u: Vec<T>,
    delta: T,
    query_count: u64,
    tie_count: u64,
}

impl<T: Scalar> SimOracle<T> {
    /// `u` must have unit norm within 1e-12 (1e-6 for single precision).
    pub fn new(u: Vec<T>, delta: T) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::InvalidValue("utility vector must be nonempty".into()));
        }
        if u.iter().any(|c| !c.is_finite()) || !(delta >= T::zero()) {
            return Err(Error::InvalidValue("utility vector and delta must be finite, delta >= 0".into()));
        }
        let unit_tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        if (norm(&u) - T::one()).abs() > unit_tol {
            return Err(Error::InvalidValue("utility vector must have unit norm".into()));
        }
        Ok(Self {
            u,
            delta,
            query_count: 0,
            tie_count: 0,
        })
    }

    /// Normalizes an arbitrary nonzero direction into a utility vector.
    pub fn from_direction(direction: Vec<T>, delta: T) -> Result<Self> {
        let n = norm(&direction);
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidValue("utility direction must be nonzero and finite".into()));
        }
        Self::new(direction.into_iter().map(|c| c / n).collect(), delta)
    }

    /// Draws a utility vector uniformly from the unit sphere.
    pub fn random<R: Rng + ?Sized>(dim: usize, delta: T, rng: &mut R) -> Result<Self> {
        loop {
            let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 1e-9 {
                let u = dir.iter().map(|c| T::lit(c / n)).collect::<Vec<_>>();
                return Self::from_direction(u, delta);
            }
        }
    }

    pub fn utility_vector(&self) -> &[T] {
        &self.u
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    fn check_dim(&self, x: &Tuple<T>) -> Result<()> {
        if x.dim() != self.u.len() {
            return Err(Error::DimensionMismatch {
                expected: self.u.len(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// `u·x`. Diagnostic only: does not count as a query.
    pub fn true_utility(&self, x: &Tuple<T>) -> Result<T> {
        self.check_dim(x)?;
        Ok(dot(&self.u, &x.coords))
    }
}

impl<T: Scalar> Oracle<T> for SimOracle<T> {
    fn compare(&mut self, first: &Tuple<T>, second: &Tuple<T>) -> Result<ComparisonOutcome> {
        self.check_dim(first)?;
        self.check_dim(second)?;
        self.query_count += 1;
        let gap = dot(&self.u, &first.coords) - dot(&self.u, &second.coords);
        if self.delta > T::zero() && gap.abs() <= self.delta {
            self.tie_count += 1;
            return Ok(ComparisonOutcome::Tie);
        }
        Ok(if gap >= T::zero() {
            ComparisonOutcome::FirstBetter
        } else {
            ComparisonOutcome::SecondBetter
        })
    }

    fn query_count(&self) -> u64 {
        self.query_count
    }

    fn tie_count(&self) -> u64 {
        self.tie_count
    }

    fn hidden_utility(&self) -> Option<&[T]> {
        Some(&self.u)
    }
}

impl<T: Scalar, O: Oracle<T> + ?Sized> Oracle<T> for &mut O {
    fn compare(&mut self, first: &Tuple<T>, second: &Tuple<T>) -> Result<ComparisonOutcome> {
        (**self).compare(first, second)
    }

    fn query_count(&self) -> u64 {
        (**self).query_count()
    }

    fn tie_count(&self) -> u64 {
        (**self).tie_count()
    }

    fn hidden_utility(&self) -> Option<&[T]> {
        (**self).hidden_utility()
    }
}

/// Size of the largest subset of `dataset` whose utilities pairwise differ by
/// at most `delta`.
///
/// On a line the pairwise condition is a window condition, so this sorts the
/// true utilities and slides a window of width `delta`.
pub fn max_similar_subset_size<T: Scalar>(
    dataset: &Dataset<T>,
    oracle: &SimOracle<T>,
    delta: T,
) -> Result<usize> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidValue("delta must be >= 0".into()));
    }
    let mut utils = dataset
        .tuples
        .iter()
        .map(|x| oracle.true_utility(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(max_window(&mut utils, delta))
}

pub(crate) fn max_window<T: Scalar>(utils: &mut [T], delta: T) -> usize {
    utils.sort_by(|a, b| a.partial_cmp(b).expect("finite utilities"));
    let mut best = 0;
    let mut lo = 0;
    for hi in 0..utils.len() {
        while utils[hi] - utils[lo] > delta {
            lo += 1;
        }
        best = best.max(hi - lo + 1);
    }
    best
}
