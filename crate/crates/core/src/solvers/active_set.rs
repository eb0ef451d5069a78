//! Primal active-set method for nonnegative least squares, optionally with
//! a simplex constraint (`Σν = 1`) on a leading block of columns.
//!
//! Without the simplex block this is the Lawson–Hanson algorithm. With it,
//! the equality is eliminated inside each passive-set subproblem by
//! expressing one reference weight through the others, so the subproblem
//! stays an unconstrained least-squares solve done by Householder QR.

use super::{Columns, SolveReport, SolveStatus, SolverOptions};
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

/// Solves `min ‖target − columns·α‖₂` over `α ≥ 0`.
///
/// `Optimal` means the KKT conditions hold within `stationarity_tol`. With no
/// columns the residual is simply `‖target‖₂`.
pub fn nnls<T: Scalar>(
    columns: &Columns<T>,
    target: &[T],
    opts: &SolverOptions<T>,
) -> Result<SolveReport<T>> {
    validate(columns, target)?;
    let empty = Columns::new(columns.rows());
    Ok(Problem::new(&empty, columns, target).solve(opts))
}

/// Solves `min ‖target − convex·ν − cone·β‖₂` over `ν ≥ 0, β ≥ 0, Σν = 1`.
///
/// The report's coefficients are `ν` followed by `β`.
pub fn convex_cone_ls<T: Scalar>(
    convex: &Columns<T>,
    cone: &Columns<T>,
    target: &[T],
    opts: &SolverOptions<T>,
) -> Result<SolveReport<T>> {
    if convex.ncols() == 0 {
        return Err(Error::Contract(
            "convex block needs at least one column".into(),
        ));
    }
    validate(convex, target)?;
    validate(cone, target)?;
    Ok(Problem::new(convex, cone, target).solve(opts))
}

fn validate<T: Scalar>(cols: &Columns<T>, target: &[T]) -> Result<()> {
    if cols.rows() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: cols.rows(),
            found: target.len(),
        });
    }
    if !cols.all_finite() || target.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("solver input must be finite".into()));
    }
    Ok(())
}

struct Problem<'a, T> {
    convex: &'a Columns<T>,
    cone: &'a Columns<T>,
    target: &'a [T],
    m: usize,
    k: usize,
}

impl<'a, T: Scalar> Problem<'a, T> {
    fn new(convex: &'a Columns<T>, cone: &'a Columns<T>, target: &'a [T]) -> Self {
        let m = convex.ncols();
        Self {
            convex,
            cone,
            target,
            m,
            k: m + cone.ncols(),
        }
    }

    fn col(&self, j: usize) -> &[T] {
        if j < self.m {
            self.convex.col(j)
        } else {
            self.cone.col(j - self.m)
        }
    }

    fn residual(&self, x: &[T]) -> Vec<T> {
        let mut r = self.target.to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != T::zero() {
                for (ri, &c) in r.iter_mut().zip(self.col(j)) {
                    *ri = *ri - c * xj;
                }
            }
        }
        r
    }

    /// Passive simplex-block weight used to eliminate the equality.
    fn reference(&self, passive: &[usize], x: &[T]) -> Option<usize> {
        passive
            .iter()
            .copied()
            .filter(|&i| i < self.m)
            .max_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Unconstrained least squares restricted to `passive` (plus the simplex
    /// equality when present). Returns a full-length vector, or `None` when
    /// the passive columns are numerically dependent.
    fn subproblem(&self, passive: &[usize], x: &[T]) -> Option<Vec<T>> {
        let rows = self.target.len();
        let reference = if self.m > 0 {
            Some(self.reference(passive, x)?)
        } else {
            None
        };
        let free: Vec<usize> = passive
            .iter()
            .copied()
            .filter(|&i| Some(i) != reference)
            .collect();
        let mut a = Vec::with_capacity(rows * free.len());
        for &i in &free {
            match reference {
                Some(r) if i < self.m => {
                    a.extend(self.col(i).iter().zip(self.col(r)).map(|(&c, &cr)| c - cr))
                }
                _ => a.extend_from_slice(self.col(i)),
            }
        }
        let mut b: Vec<T> = match reference {
            Some(r) => self
                .target
                .iter()
                .zip(self.col(r))
                .map(|(&t, &c)| t - c)
                .collect(),
            None => self.target.to_vec(),
        };
        let coef = householder_lstsq(&mut a, rows, free.len(), &mut b)?;
        let mut z = vec![T::zero(); self.k];
        let mut convex_sum = T::zero();
        for (&i, &c) in free.iter().zip(&coef) {
            z[i] = c;
            if i < self.m {
                convex_sum = convex_sum + c;
            }
        }
        if let Some(r) = reference {
            z[r] = T::one() - convex_sum;
        }
        Some(z)
    }

    fn solve(&self, opts: &SolverOptions<T>) -> SolveReport<T> {
        let tol = opts.stationarity_tol;
        let k = self.k;
        let mut x = vec![T::zero(); k];
        let mut in_passive = vec![false; k];
        let mut passive: Vec<usize> = Vec::new();
        if self.m > 0 {
            let start = (0..self.m)
                .map(|j| {
                    let gap: T = self
                        .target
                        .iter()
                        .zip(self.col(j))
                        .map(|(&t, &c)| (t - c) * (t - c))
                        .sum();
                    (j, gap)
                })
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .map(|(j, _)| j)
                .expect("simplex block is nonempty");
            x[start] = T::one();
            in_passive[start] = true;
            passive.push(start);
        }
        let mut blocked = vec![false; k];
        let mut iterations = 0usize;

        let status = 'outer: loop {
            let r = self.residual(&x);
            let lambda = match self.reference(&passive, &x) {
                Some(rf) => dot(self.col(rf), &r),
                None => T::zero(),
            };
            let mut entering: Option<(usize, T)> = None;
            let mut blocked_violation = false;
            for j in 0..k {
                if in_passive[j] {
                    continue;
                }
                let mut g = dot(self.col(j), &r);
                if j < self.m {
                    g = g - lambda;
                }
                if g <= tol {
                    continue;
                }
                if blocked[j] {
                    blocked_violation = true;
                } else if entering.is_none_or(|(_, best)| g > best) {
                    entering = Some((j, g));
                }
            }
            let Some((t, _)) = entering else {
                break if blocked_violation {
                    SolveStatus::Degenerate
                } else {
                    SolveStatus::Optimal
                };
            };
            if iterations >= opts.max_iterations {
                break SolveStatus::IterationCap;
            }
            iterations += 1;

            passive.push(t);
            in_passive[t] = true;
            let mut z = match self.subproblem(&passive, &x) {
                Some(z) if z[t] > T::zero() => z,
                _ => {
                    passive.pop();
                    in_passive[t] = false;
                    blocked[t] = true;
                    continue;
                }
            };

            loop {
                if passive.iter().all(|&i| z[i] > T::zero()) {
                    for &i in &passive {
                        x[i] = z[i];
                    }
                    blocked.iter_mut().for_each(|b| *b = false);
                    break;
                }
                if iterations >= opts.max_iterations {
                    break 'outer SolveStatus::IterationCap;
                }
                iterations += 1;

                // Step from x toward z until the first passive weight hits zero.
                let mut alpha = T::one();
                let mut leaving = None;
                for &i in &passive {
                    if z[i] <= T::zero() {
                        let den = x[i] - z[i];
                        let a = if den > T::zero() { x[i] / den } else { T::zero() };
                        if leaving.is_none() || a < alpha {
                            alpha = a;
                            leaving = Some(i);
                        }
                    }
                }
                for &i in &passive {
                    x[i] = x[i] + alpha * (z[i] - x[i]);
                }
                passive.retain(|&i| {
                    let keep = Some(i) != leaving && x[i] > T::zero();
                    if !keep {
                        x[i] = T::zero();
                        in_passive[i] = false;
                    }
                    keep
                });
                z = match self.subproblem(&passive, &x) {
                    Some(z) => z,
                    None => break 'outer SolveStatus::Degenerate,
                };
            }
        };

        let residual_norm = norm(&self.residual(&x));
        SolveReport {
            status,
            coefficients: x,
            residual_norm,
            iterations,
        }
    }
}

/// Least squares `min ‖a·z − b‖` for a column-major `rows × cols` matrix via
/// Householder QR. Both `a` and `b` are overwritten. Returns `None` when a
/// column is numerically dependent on the preceding ones.
fn householder_lstsq<T: Scalar>(
    a: &mut [T],
    rows: usize,
    cols: usize,
    b: &mut [T],
) -> Option<Vec<T>> {
    if cols > rows {
        return None;
    }
    let rank_tol = T::epsilon().sqrt();
    let mut diag = vec![T::zero(); cols];
    for j in 0..cols {
        let (before, rest) = a.split_at_mut(j * rows);
        let _ = before;
        let (colj, after) = rest.split_at_mut(rows);
        let full_norm = norm(colj);
        let sigma = norm(&colj[j..]);
        if !(sigma > rank_tol * full_norm) || sigma == T::zero() {
            return None;
        }
        let alpha = if colj[j] > T::zero() { -sigma } else { sigma };
        colj[j] = colj[j] - alpha;
        let v = &colj[j..];
        let vnorm2 = dot(v, v);
        if vnorm2 > T::zero() {
            let two = T::lit(2.0);
            for c in after.chunks_exact_mut(rows).take(cols - j - 1) {
                let s = two * dot(v, &c[j..]) / vnorm2;
                for (ci, &vi) in c[j..].iter_mut().zip(v) {
                    *ci = *ci - s * vi;
                }
            }
            let s = two * dot(v, &b[j..]) / vnorm2;
            for (bi, &vi) in b[j..].iter_mut().zip(v) {
                *bi = *bi - s * vi;
            }
        }
        diag[j] = alpha;
    }
    let mut z = vec![T::zero(); cols];
    for j in (0..cols).rev() {
        let mut s = b[j];
        for i in j + 1..cols {
            s = s - a[i * rows + j] * z[i];
        }
        z[j] = s / diag[j];
    }
    Some(z)
}
