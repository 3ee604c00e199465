//! Worker-count-independent parallel drivers.
//!
//! Work is split into cells that each own an RNG substream; results are
//! collected in cell order and reduced sequentially, so output bits do not
//! depend on the number of threads.

use rayon::prelude::*;
use rayon::ThreadPool;
use tauc_core::control::ControlSequence;
use tauc_core::estimation::simulate::{outcome_probabilities, simulate_point};
use tauc_core::estimation::{invert_cell, BranchPair, DecayCurve, EstimationError, InversionModel};
use tauc_core::noise::{reduce_cosines, LorentzianEnvironment, NoiseError, OracleConfig, OracleEstimate, PhasePlan};

use crate::error::{ConfigError, Result};

pub fn pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(ConfigError::new("--workers", "must be at least 1").into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ConfigError::new("--workers", e.to_string()).into())
}

/// `f(0), …, f(n-1)` evaluated in parallel, returning the lowest-index error.
pub fn ordered_map<T, E, F>(pool: &ThreadPool, n: usize, f: F) -> std::result::Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> std::result::Result<T, E> + Sync,
{
    let results: Vec<std::result::Result<T, E>> = pool.install(|| (0..n).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

/// Same cells and substreams as [`tauc_core::estimation::simulate_decay`].
pub fn simulate_decay(
    pool: &ThreadPool,
    env: &LorentzianEnvironment,
    n_pulses: u32,
    t_grid: &[f64],
    n_shots: u64,
    n_reps: u32,
    seed: u64,
) -> std::result::Result<DecayCurve, EstimationError> {
    if n_shots == 0 || n_reps == 0 {
        return Err(EstimationError::InvalidInput("n_shots and n_reps must be at least 1"));
    }
    let n_t = t_grid.len();
    let probs = outcome_probabilities(env, n_pulses, t_grid)?;
    let cells = ordered_map(pool, n_reps as usize * n_t, |k| {
        let (rep, i) = (k / n_t, k % n_t);
        simulate_point(probs[i], n_shots, seed, rep as u32, i as u32)
    })?;
    let per_rep = cells.chunks(n_t.max(1)).map(<[f64]>::to_vec).collect();
    Ok(DecayCurve::from_repetitions(t_grid.to_vec(), per_rep, n_pulses, n_shots)?.with_seed(seed))
}

/// Parallel form of [`tauc_core::estimation::invert_repetitions`].
pub fn invert_repetitions(
    pool: &ThreadPool,
    curve: &DecayCurve,
    g: f64,
    model: InversionModel,
) -> std::result::Result<Vec<Vec<BranchPair>>, EstimationError> {
    let rows = curve.per_rep().ok_or(EstimationError::MissingRepetitions)?;
    let n_t = curve.len();
    let cells = ordered_map(pool, rows.len() * n_t, |k| {
        let (rep, i) = (k / n_t, k % n_t);
        invert_cell(rows[rep][i], curve.times()[i], curve.n_pulses(), g, model)
    })?;
    Ok(cells.chunks(n_t.max(1)).map(<[BranchPair]>::to_vec).collect())
}

/// Parallel form of [`tauc_core::noise::mc_attenuation_oracle`].
pub fn mc_attenuation_oracle(
    pool: &ThreadPool,
    env: &LorentzianEnvironment,
    seq: &ControlSequence,
    config: &OracleConfig,
) -> std::result::Result<OracleEstimate, NoiseError> {
    let plan = PhasePlan::new(env, seq, config)?;
    let cosines: Vec<f64> = ordered_map::<_, NoiseError, _>(pool, config.n_traj, |i| Ok(plan.phase(i as u64).cos()))?;
    reduce_cosines(&cosines)
}
