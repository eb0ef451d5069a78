//! How large must a sorted sample be before its filter prunes half of fresh
//! data?
//!
//! Trials use common random numbers: trial `t` fixes one utility vector,
//! one stream of candidate sample points and one evaluation set, and a
//! sample of size `s` is the first `s` points of that stream. Because the
//! pruning region of a sorted sample only grows when points are added, the
//! measured fraction is monotone in `s`, which makes the doubling plus
//! binary search below exact for the chosen trials.

use irm_core::data::gen_sphere;
use irm_core::{Filter, FilterKind, FilterParams, SimOracle64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

/// Largest sample size tried before giving up.
pub const SAMPLE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneHalf {
    pub d: usize,
    pub epsilon: f64,
    pub sample_size: usize,
    /// The cap was reached without pruning half; `sample_size` is the cap.
    pub capped: bool,
    /// Mean pruned fraction at `sample_size`.
    pub fraction: f64,
}

fn trial_seeds(seed: u64, trial: usize) -> (u64, u64, u64) {
    let base = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(trial as u64);
    (base, base ^ 0x5A5A_5A5A, base ^ 0xC3C3_C3C3_0000)
}

struct Trial {
    oracle: SimOracle64,
    stream: Vec<irm_core::Tuple64>,
    eval: Vec<irm_core::Tuple64>,
}

fn make_trial(d: usize, n_eval: usize, max_s: usize, seed: u64, t: usize) -> Result<Trial> {
    let (u_seed, s_seed, e_seed) = trial_seeds(seed, t);
    let oracle = SimOracle64::random(d, 0.0, &mut ChaCha8Rng::seed_from_u64(u_seed))?;
    Ok(Trial {
        oracle,
        stream: gen_sphere(max_s, d, s_seed)?.tuples,
        eval: gen_sphere(n_eval, d, e_seed)?.tuples,
    })
}

fn trial_fraction(trial: &Trial, epsilon: f64, s: usize) -> Result<f64> {
    let mut oracle = trial.oracle.clone();
    let mut filter = Filter::new(FilterKind::ListQp, FilterParams::new(epsilon));
    for x in &trial.stream[..s] {
        filter.add(x.clone(), &mut oracle)?;
    }
    let pruned = trial.eval.iter().filter(|x| filter.prune(x)).count();
    Ok(pruned as f64 / trial.eval.len() as f64)
}

fn mean_fraction(trials: &[Trial], epsilon: f64, s: usize) -> Result<f64> {
    let fr = trials
        .par_iter()
        .map(|t| trial_fraction(t, epsilon, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(fr.iter().sum::<f64>() / fr.len() as f64)
}

fn check_args(d: usize, epsilon: f64, n_eval: usize, trials: usize) -> Result<()> {
    if d == 0 || n_eval == 0 || trials == 0 {
        return Err(BenchError::Usage("d, n_eval and trials must be >= 1".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(BenchError::Usage("epsilon must be finite and >= 0".into()));
    }
    Ok(())
}

/// Mean fraction of `n_eval` fresh sphere tuples pruned by a random sorted
/// sample of size `s`, over `trials` trials.
pub fn pruned_fraction(
    d: usize,
    epsilon: f64,
    s: usize,
    n_eval: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_args(d, epsilon, n_eval, trials)?;
    if s == 0 {
        return Err(BenchError::Usage("sample size must be >= 1".into()));
    }
    let ts = (0..trials)
        .map(|t| make_trial(d, n_eval, s, seed, t))
        .collect::<Result<Vec<_>>>()?;
    mean_fraction(&ts, epsilon, s)
}

/// Smallest sample size whose filter prunes at least half of the evaluation
/// tuples on average: doubling until the target is met, then binary search.
pub fn prune_half_sample_size(
    d: usize,
    epsilon: f64,
    n_eval: usize,
    trials: usize,
    seed: u64,
) -> Result<PruneHalf> {
    check_args(d, epsilon, n_eval, trials)?;
    let ts = (0..trials)
        .map(|t| make_trial(d, n_eval, SAMPLE_CAP, seed, t))
        .collect::<Result<Vec<_>>>()?;
    let report = |s: usize, capped: bool, fraction: f64| PruneHalf {
        d,
        epsilon,
        sample_size: s,
        capped,
        fraction,
    };

    let mut hi = 1;
    let mut f_hi = mean_fraction(&ts, epsilon, hi)?;
    while f_hi < 0.5 {
        if hi == SAMPLE_CAP {
            return Ok(report(hi, true, f_hi));
        }
        hi = (hi * 2).min(SAMPLE_CAP);
        f_hi = mean_fraction(&ts, epsilon, hi)?;
    }
    // Invariant: fraction(lo) < 0.5 <= fraction(hi).
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let f = mean_fraction(&ts, epsilon, mid)?;
        if f >= 0.5 {
            hi = mid;
            f_hi = f;
        } else {
            lo = mid;
        }
    }
    Ok(report(hi, false, f_hi))
}
