use irm_core::solvers::{
    convex_cone_ls, lin_feasible, nnls, Columns, FeasStatus, SolveStatus, SolverOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolverOptions<f64> {
    SolverOptions::default()
}

fn residual(convex: &Columns<f64>, cone: &Columns<f64>, b: &[f64], coef: &[f64]) -> f64 {
    let m = convex.ncols();
    let mut r: Vec<f64> = b.to_vec();
    for (j, c) in convex.iter().enumerate() {
        for (ri, ci) in r.iter_mut().zip(c) {
            *ri -= coef[j] * ci;
        }
    }
    for (j, c) in cone.iter().enumerate() {
        for (ri, ci) in r.iter_mut().zip(c) {
            *ri -= coef[m + j] * ci;
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest violation of the first-order optimality conditions, with the
/// simplex multiplier eliminated on the support of the convex block.
fn kkt_violation(convex: &Columns<f64>, cone: &Columns<f64>, b: &[f64], coef: &[f64]) -> f64 {
    let m = convex.ncols();
    let mut r: Vec<f64> = b.to_vec();
    let cols: Vec<&[f64]> = convex.iter().chain(cone.iter()).collect();
    for (j, c) in cols.iter().enumerate() {
        for (ri, ci) in r.iter_mut().zip(*c) {
            *ri -= coef[j] * ci;
        }
    }
    // Gradient of ½‖r‖² is −Aᵀr.
    let grad: Vec<f64> = cols
        .iter()
        .map(|c| -c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let mut worst = 0.0f64;
    if m > 0 {
        let support: Vec<usize> = (0..m).filter(|&j| coef[j] > 1e-12).collect();
        let lambda = -support.iter().map(|&j| grad[j]).sum::<f64>() / support.len() as f64;
        for j in 0..m {
            let g = grad[j] + lambda;
            worst = worst.max(if coef[j] > 1e-12 { g.abs() } else { (-g).max(0.0) });
        }
    }
    for j in m..cols.len() {
        let g = grad[j];
        worst = worst.max(if coef[j] > 1e-12 { g.abs() } else { (-g).max(0.0) });
    }
    worst
}

/// Grid minimum of `f` over `[lo, hi]^p`: coarse pass, then a fine pass
/// around the coarse winner. Exact enough for convex objectives.
fn grid_min(p: usize, lo: f64, hi: f64, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    fn scan(
        p: usize,
        lo: &[f64],
        hi: &[f64],
        step: f64,
        f: &dyn Fn(&[f64]) -> f64,
    ) -> (f64, Vec<f64>) {
        let counts: Vec<usize> = (0..p)
            .map(|i| ((hi[i] - lo[i]) / step).round() as usize + 1)
            .collect();
        let total: usize = counts.iter().product();
        let mut best = (f64::INFINITY, vec![0.0; p]);
        let mut x = vec![0.0; p];
        for mut idx in 0..total {
            for i in 0..p {
                x[i] = (lo[i] + (idx % counts[i]) as f64 * step).min(hi[i]);
                idx /= counts[i];
            }
            let v = f(&x);
            if v < best.0 {
                best = (v, x.clone());
            }
        }
        best
    }
    if p == 0 {
        return f(&[]);
    }
    let (_, c) = scan(p, &vec![lo; p], &vec![hi; p], 0.05, f);
    let flo: Vec<f64> = c.iter().map(|v| (v - 0.05).max(lo)).collect();
    let fhi: Vec<f64> = c.iter().map(|v| (v + 0.05).min(hi)).collect();
    scan(p, &flo, &fhi, 1e-3, f).0
}

fn random_columns(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Columns<f64> {
    let cols: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    Columns::from_columns(d, &cols).unwrap()
}

#[test]
fn nnls_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..30 {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(1..=3);
        let a = random_columns(&mut rng, d, k);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rep = nnls(&a, &b, &opts()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        let empty = Columns::new(d);
        assert!(kkt_violation(&empty, &a, &b, &rep.coefficients) <= 1e-6);
        let grid = grid_min(k, 0.0, 5.0, &|x| residual(&empty, &a, &b, x));
        assert!(rep.residual_norm <= grid + 1e-9, "{} vs grid {}", rep.residual_norm, grid);
        if rep.coefficients.iter().all(|&c| c <= 5.0) {
            assert!(grid - rep.residual_norm <= 1e-2);
        }
    }
}

#[test]
fn convex_cone_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..30 {
        let d = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let k = rng.random_range(0..=3 - m);
        let v = random_columns(&mut rng, d, m);
        let dcols = random_columns(&mut rng, d, k);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rep = convex_cone_ls(&v, &dcols, &b, &opts()).unwrap();
        assert_eq!(rep.status, SolveStatus::Optimal);
        let nu: f64 = rep.coefficients[..m].iter().sum();
        assert!((nu - 1.0).abs() < 1e-9);
        assert!(rep.coefficients.iter().all(|&c| c >= 0.0));
        assert!(kkt_violation(&v, &dcols, &b, &rep.coefficients) <= 1e-6);

        // Free variables: the first m−1 simplex weights, then the cone weights.
        let f = |x: &[f64]| {
            let head: f64 = x[..m - 1].iter().sum();
            if head > 1.0 {
                return f64::INFINITY;
            }
            let mut coef = x[..m - 1].to_vec();
            coef.push(1.0 - head);
            coef.extend_from_slice(&x[m - 1..]);
            residual(&v, &dcols, &b, &coef)
        };
        let grid = grid_min(m - 1 + k, 0.0, if k > 0 { 5.0 } else { 1.0 }, &f);
        assert!(rep.residual_norm <= grid + 1e-9);
        if rep.coefficients[m..].iter().all(|&c| c <= 5.0) {
            assert!(grid - rep.residual_norm <= 1e-2, "{} vs {}", rep.residual_norm, grid);
        }
    }
}

#[test]
fn convex_combination_has_zero_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let d = rng.random_range(2..=6);
        let m = rng.random_range(1..=8);
        let v = random_columns(&mut rng, d, m);
        let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let b = v.apply(&w);
        let rep = convex_cone_ls(&v, &Columns::new(d), &b, &opts()).unwrap();
        assert!(rep.is_optimal());
        assert!(rep.residual_norm <= 1e-8, "{}", rep.residual_norm);
    }
}

#[test]
fn solvers_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_columns(&mut rng, 5, 12);
    let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
    assert_eq!(nnls(&a, &b, &opts()).unwrap(), nnls(&a, &b, &opts()).unwrap());
    let rows: Vec<Vec<f64>> = a.iter().map(<[f64]>::to_vec).collect();
    let rhs = vec![1.0; rows.len()];
    assert_eq!(
        lin_feasible(&rows, &rhs, 5, &opts()).unwrap(),
        lin_feasible(&rows, &rhs, 5, &opts()).unwrap()
    );
}

/// Exact answer for one variable: intersect the half-lines.
fn feasible_1d(a: &[f64], r: &[f64]) -> Option<bool> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&ai, &ri) in a.iter().zip(r) {
        if ai > 0.0 {
            lo = lo.max(ri / ai);
        } else if ai < 0.0 {
            hi = hi.min(ri / ai);
        } else if ri > 0.0 {
            return Some(false);
        }
    }
    if (hi - lo).abs() < 1e-6 {
        return None;
    }
    Some(lo <= hi)
}

#[test]
fn lin_feasible_agrees_with_enumeration_in_one_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut decided = 0;
    for _ in 0..500 {
        let m = rng.random_range(1..=6);
        let a: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let r: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let Some(expected) = feasible_1d(&a, &r) else { continue };
        decided += 1;
        let rows: Vec<[f64; 1]> = a.iter().map(|&v| [v]).collect();
        let rep = lin_feasible(&rows, &r, 1, &opts()).unwrap();
        let want = if expected { FeasStatus::Feasible } else { FeasStatus::Infeasible };
        assert_eq!(rep.status, want, "a={a:?} r={r:?}");
        if let Some(u) = rep.witness {
            for (&ai, &ri) in a.iter().zip(&r) {
                assert!(ai * u[0] >= ri - 1e-7);
            }
        }
    }
    assert!(decided > 400);
}

/// Sampling oracle in two dimensions: best worst-case margin
/// `min_i (a_i·u − r_i)` over a polar grid, refined by local search.
fn best_margin_2d(rows: &[[f64; 2]], r: &[f64]) -> f64 {
    let margin = |u: [f64; 2]| {
        rows.iter()
            .zip(r)
            .map(|(a, ri)| a[0] * u[0] + a[1] * u[1] - ri)
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = (margin([0.0, 0.0]), [0.0, 0.0]);
    for ri in 1..=60 {
        let rad = 0.05 * (1.2f64).powi(ri);
        for ti in 0..720 {
            let th = ti as f64 * std::f64::consts::TAU / 720.0;
            let u = [rad * th.cos(), rad * th.sin()];
            let m = margin(u);
            if m > best.0 {
                best = (m, u);
            }
        }
    }
    let mut step = best.1[0].hypot(best.1[1]).max(1.0) * 0.05;
    // An unbounded margin keeps improving; any clearly positive value settles it.
    for _ in 0..20_000 {
        if step <= 1e-9 || best.0 > 1.0 {
            break;
        }
        let mut improved = false;
        // Dense directions so the search can follow ridges of the kinked margin.
        for k in 0..256 {
            let th = k as f64 * std::f64::consts::TAU / 256.0;
            let (dx, dy) = (th.cos(), th.sin());
            let u = [best.1[0] + dx * step, best.1[1] + dy * step];
            let m = margin(u);
            if m > best.0 {
                best = (m, u);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best.0
}

#[test]
fn lin_feasible_agrees_with_sampling_in_two_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut feasible, mut infeasible) = (0, 0);
    for trial in 0..300 {
        let m = rng.random_range(1..=5);
        let rows: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        // Half the systems use the all-ones right-hand side of the pruning LP.
        let r: Vec<f64> = if trial % 2 == 0 {
            vec![1.0; m]
        } else {
            (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let margin = best_margin_2d(&rows, &r);
        let rep = lin_feasible(&rows, &r, 2, &opts()).unwrap();
        if margin > 1e-6 {
            feasible += 1;
            assert_eq!(rep.status, FeasStatus::Feasible, "rows={rows:?} r={r:?}");
            let u = rep.witness.unwrap();
            for (a, ri) in rows.iter().zip(&r) {
                assert!(a[0] * u[0] + a[1] * u[1] >= ri - 1e-7);
            }
        } else if margin < -1e-3 {
            infeasible += 1;
            assert_eq!(rep.status, FeasStatus::Infeasible, "rows={rows:?} r={r:?} margin={margin}");
        }
    }
    assert!(feasible > 50 && infeasible > 50, "{feasible} / {infeasible}");
}

proptest! {
    #[test]
    fn adding_a_column_never_increases_nnls_residual(
        d in 1usize..6,
        k in 0usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_columns(&mut rng, d, k + 1);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fewer = Columns::from_columns(d, &a.iter().take(k).collect::<Vec<_>>()).unwrap();
        let r0 = nnls(&fewer, &b, &opts()).unwrap();
        let r1 = nnls(&a, &b, &opts()).unwrap();
        prop_assert!(r0.is_optimal() && r1.is_optimal());
        prop_assert!(r1.residual_norm <= r0.residual_norm + 1e-10);
    }

    #[test]
    fn f32_and_f64_nnls_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_columns(&mut rng, 3, 4);
        let b: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a32 = Columns::from_columns(
            3,
            &a.iter().map(|c| c.iter().map(|&v| v as f32).collect::<Vec<_>>()).collect::<Vec<_>>(),
        ).unwrap();
        let b32: Vec<f32> = b.iter().map(|&v| v as f32).collect();
        let r64 = nnls(&a, &b, &opts()).unwrap();
        let r32 = nnls(&a32, &b32, &SolverOptions::default()).unwrap();
        prop_assume!(r64.is_optimal() && r32.is_optimal());
        prop_assert!((r64.residual_norm - r32.residual_norm as f64).abs() < 1e-4);
    }
}
