//! Small dense solvers behind every pruning test.
//!
//! * [`nnls`]: `min ‖b − Dα‖₂` subject to `α ≥ 0`.
//! * [`convex_cone_ls`]: `min ‖b − Vν − Dβ‖₂` subject to `ν, β ≥ 0`, `Σν = 1`.
//! * [`lin_feasible`]: does some `u` satisfy `A·u ≥ rhs` rowwise?
//!
//! Problems are tiny (dimension up to ~100, a few hundred columns), so
//! everything is dense and allocation-light. None of the routines panic on
//! numerical trouble; they report a non-optimal status instead and callers
//! are expected to fail safe.

mod active_set;
mod simplex;

pub use active_set::{convex_cone_ls, nnls};
pub use simplex::lin_feasible;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Iteration cap shared by all solvers.
pub const DEFAULT_MAX_ITERATIONS: usize = 4000;

/// Column-major dense matrix built one column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Columns<T> {
    rows: usize,
    data: Vec<T>,
}

impl<T: Scalar> Columns<T> {
    pub fn new(rows: usize) -> Self {
        Self { rows, data: Vec::new() }
    }

    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn from_columns<C: AsRef<[T]>>(rows: usize, cols: &[C]) -> Result<Self> {
        let mut m = Self::with_capacity(rows, cols.len());
        for c in cols {
            m.push(c.as_ref())?;
        }
        Ok(m)
    }

    pub fn push(&mut self, col: &[T]) -> Result<()> {
        if col.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: col.len(),
            });
        }
        self.data.extend_from_slice(col);
        Ok(())
    }

    /// Appends `a − b` as a new column.
    pub fn push_difference(&mut self, a: &[T], b: &[T]) -> Result<()> {
        if a.len() != self.rows || b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: a.len().max(b.len()),
            });
        }
        self.data.extend(a.iter().zip(b).map(|(&x, &y)| x - y));
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.data.len().checked_div(self.rows).unwrap_or(0)
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.rows.max(1))
    }

    /// `M·x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        for (c, &xj) in self.iter().zip(x) {
            if xj != T::zero() {
                for (o, &v) in out.iter_mut().zip(c) {
                    *o = *o + v * xj;
                }
            }
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// KKT stationarity tolerance on the projected gradient.
    pub stationarity_tol: T,
    /// Phase-one objective below which a linear system counts as feasible,
    /// and the slack a feasible witness may violate a constraint by.
    pub feasibility_tol: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            stationarity_tol: T::lit(1e-8).max(T::epsilon() * T::lit(100.0)),
            feasibility_tol: T::lit(1e-9).max(T::epsilon() * T::lit(100.0)),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationCap,
    /// The active-set iteration could not make progress because of
    /// (numerically) dependent columns.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub status: SolveStatus,
    pub coefficients: Vec<T>,
    pub residual_norm: T,
    pub iterations: usize,
}

impl<T> SolveReport<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeasStatus {
    Feasible,
    Infeasible,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasReport<T> {
    pub status: FeasStatus,
    pub witness: Option<Vec<T>>,
    pub iterations: usize,
}
