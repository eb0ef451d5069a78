//! Phase-one simplex (dense tableau, Bland's rule) for `A·u ≥ rhs` with `u`
//! free.
//!
//! Variables are `u = u⁺ − u⁻`, one surplus per row and one artificial per
//! row. Rows are sign-flipped so every right-hand side is nonnegative and the
//! artificials form the starting basis. The system is feasible iff the
//! minimum of the artificial sum is zero.

use super::{FeasReport, FeasStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Decides whether some `u` satisfies `rows[i]·u ≥ rhs[i]` for every `i`.
///
/// With no rows the system is trivially feasible (witness `0`). Callers using
/// this as a pruning test must treat `IterationCap` as "do not prune".
pub fn lin_feasible<T: Scalar, R: AsRef<[T]>>(
    rows: &[R],
    rhs: &[T],
    dim: usize,
    opts: &SolverOptions<T>,
) -> Result<FeasReport<T>> {
    if rows.len() != rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            found: rhs.len(),
        });
    }
    for r in rows {
        let r = r.as_ref();
        if r.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("constraint rows must be finite".into()));
        }
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("right-hand side must be finite".into()));
    }
    if rows.is_empty() {
        return Ok(FeasReport {
            status: FeasStatus::Feasible,
            witness: Some(vec![T::zero(); dim]),
            iterations: 0,
        });
    }

    let mut tab = Tableau::build(rows, rhs, dim);
    let (optimal, iterations) = tab.run(opts.max_iterations);
    if !optimal {
        return Ok(FeasReport {
            status: FeasStatus::IterationCap,
            witness: None,
            iterations,
        });
    }
    let rhs_scale = rhs.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
    if tab.objective() > opts.feasibility_tol * rhs_scale {
        return Ok(FeasReport {
            status: FeasStatus::Infeasible,
            witness: None,
            iterations,
        });
    }

    let witness = tab.witness();
    let slack_tol = opts.feasibility_tol * rhs_scale;
    match repair_witness(rows, rhs, witness, slack_tol) {
        Some(w) => Ok(FeasReport {
            status: FeasStatus::Feasible,
            witness: Some(w),
            iterations,
        }),
        // Phase one says feasible but the basis is too inaccurate to exhibit
        // a point; report numerical doubt rather than a verdict.
        None => Ok(FeasReport {
            status: FeasStatus::IterationCap,
            witness: None,
            iterations,
        }),
    }
}

/// Returns the witness if it satisfies every row within `tol`. When all
/// right-hand sides are positive the constraints are rescaled away from
/// rounding noise by stretching `u`.
fn repair_witness<T: Scalar, R: AsRef<[T]>>(
    rows: &[R],
    rhs: &[T],
    mut u: Vec<T>,
    tol: T,
) -> Option<Vec<T>> {
    let worst = |u: &[T]| {
        rows.iter()
            .zip(rhs)
            .map(|(r, &b)| dot(r.as_ref(), u) - b)
            .fold(T::infinity(), T::min)
    };
    if worst(&u) >= -tol {
        return Some(u);
    }
    if rhs.iter().all(|&b| b > T::zero()) {
        let ratio = rows
            .iter()
            .zip(rhs)
            .map(|(r, &b)| dot(r.as_ref(), &u) / b)
            .fold(T::infinity(), T::min);
        if ratio > T::zero() {
            u.iter_mut().for_each(|v| *v = *v / ratio);
            if worst(&u) >= -tol {
                return Some(u);
            }
        }
    }
    None
}

struct Tableau<T> {
    m: usize,
    dim: usize,
    /// Columns: u⁺ (dim), u⁻ (dim), surplus (m), artificial (m), rhs.
    width: usize,
    cells: Vec<T>,
    /// Reduced cost row of the phase-one objective, same width.
    cost: Vec<T>,
    basis: Vec<usize>,
    pivot_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn build<R: AsRef<[T]>>(rows: &[R], rhs: &[T], dim: usize) -> Self {
        let m = rows.len();
        let nvars = 2 * dim + 2 * m;
        let width = nvars + 1;
        let mut cells = vec![T::zero(); m * width];
        for (i, (row, &b)) in rows.iter().zip(rhs).enumerate() {
            let sign = if b < T::zero() { -T::one() } else { T::one() };
            let line = &mut cells[i * width..(i + 1) * width];
            for (j, &a) in row.as_ref().iter().enumerate() {
                line[j] = sign * a;
                line[dim + j] = -sign * a;
            }
            line[2 * dim + i] = -sign;
            line[2 * dim + m + i] = T::one();
            line[nvars] = sign * b;
        }
        // Phase-one cost: minimize the artificial sum. Pricing out the
        // artificial basis gives reduced costs −Σ rows on non-artificials.
        let mut cost = vec![T::zero(); width];
        for i in 0..m {
            for j in 0..width {
                if j < 2 * dim + m || j == nvars {
                    cost[j] = cost[j] - cells[i * width + j];
                }
            }
        }
        let scale = cells.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
        Self {
            m,
            dim,
            width,
            cells,
            cost,
            basis: (0..m).map(|i| 2 * dim + m + i).collect(),
            pivot_tol: T::epsilon().sqrt() * T::lit(1e-2) * scale,
        }
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    /// Current artificial sum (the phase-one objective).
    fn objective(&self) -> T {
        -self.cost[self.rhs_col()]
    }

    fn run(&mut self, max_iterations: usize) -> (bool, usize) {
        let nvars = self.width - 1;
        let mut iterations = 0;
        loop {
            // Bland: lowest-index improving column.
            let entering = (0..nvars).find(|&j| self.cost[j] < -self.pivot_tol);
            let Some(col) = entering else {
                return (true, iterations);
            };
            if iterations >= max_iterations {
                return (false, iterations);
            }
            iterations += 1;

            let rhs = self.rhs_col();
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.cells[i * self.width + col];
                if a > self.pivot_tol {
                    let ratio = self.cells[i * self.width + rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr || (ratio == lr && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                // Unbounded direction cannot occur for a phase-one problem
                // bounded below by zero; treat as converged.
                return (true, iterations);
            };
            self.pivot(row, col);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.cells[row * w + col];
        for j in 0..w {
            self.cells[row * w + j] = self.cells[row * w + j] / p;
        }
        let pivot_row: Vec<T> = self.cells[row * w..(row + 1) * w].to_vec();
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.cells[i * w + col];
            if f != T::zero() {
                for (c, &pr) in self.cells[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *c = *c - f * pr;
                }
            }
        }
        let f = self.cost[col];
        if f != T::zero() {
            for (c, &pr) in self.cost.iter_mut().zip(&pivot_row) {
                *c = *c - f * pr;
            }
        }
        self.basis[row] = col;
    }

    fn witness(&self) -> Vec<T> {
        let mut u = vec![T::zero(); self.dim];
        let rhs = self.rhs_col();
        for (i, &b) in self.basis.iter().enumerate() {
            let v = self.cells[i * self.width + rhs];
            if b < self.dim {
                u[b] = u[b] + v;
            } else if b < 2 * self.dim {
                u[b - self.dim] = u[b - self.dim] - v;
            }
        }
        u
    }
}
