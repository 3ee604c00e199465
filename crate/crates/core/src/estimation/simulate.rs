use alloc::vec::Vec;

use rand_distr::{Binomial, Distribution};

use super::{DecayCurve, EstimationError};
use crate::attenuation::{attenuation_exact_time, outcome_probability};
use crate::control::ControlSequence;
use crate::noise::LorentzianEnvironment;
use crate::rng::{cell_index, substream, DOMAIN_SHOTS};

/// One repetition at one time point: `2k/n_shots − 1` with
/// `k ~ Binomial(n_shots, p₊)`, drawn from the `(rep, time_index)` substream.
pub fn simulate_point(p_plus: f64, n_shots: u64, seed: u64, rep: u32, time_index: u32) -> Result<f64, EstimationError> {
    let dist = Binomial::new(n_shots, p_plus).map_err(|_| EstimationError::InvalidInput("outcome probability outside [0, 1]"))?;
    let mut rng = substream(seed, DOMAIN_SHOTS, cell_index(rep, time_index));
    let k = dist.sample(&mut rng);
    Ok(2.0 * k as f64 / n_shots as f64 - 1.0)
}

/// Probability of the `+` outcome at each grid time under the exact model.
pub fn outcome_probabilities(env: &LorentzianEnvironment, n_pulses: u32, t_grid: &[f64]) -> Result<Vec<f64>, EstimationError> {
    t_grid
        .iter()
        .map(|&t| {
            let seq = ControlSequence::cpmg(n_pulses, t)?;
            Ok(outcome_probability(attenuation_exact_time(env, &seq))?.plus)
        })
        .collect()
}

pub fn simulate_decay(
    env: &LorentzianEnvironment,
    n_pulses: u32,
    t_grid: &[f64],
    n_shots: u64,
    n_reps: u32,
    seed: u64,
) -> Result<DecayCurve, EstimationError> {
    if n_shots == 0 || n_reps == 0 {
        return Err(EstimationError::InvalidInput("n_shots and n_reps must be at least 1"));
    }
    let n_times = u32::try_from(t_grid.len()).map_err(|_| EstimationError::InvalidInput("time grid too long"))?;
    let probs = outcome_probabilities(env, n_pulses, t_grid)?;
    let per_rep = (0..n_reps)
        .map(|rep| (0..n_times).map(|i| simulate_point(probs[i as usize], n_shots, seed, rep, i)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DecayCurve::from_repetitions(t_grid.to_vec(), per_rep, n_pulses, n_shots)?.with_seed(seed))
}

/// Observed attenuation at one time; `None` marks a non-positive signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservedAttenuation {
    pub t: f64,
    pub value: Option<f64>,
}

impl ObservedAttenuation {
    pub fn non_positive_signal(&self) -> bool {
        self.value.is_none()
    }
}

/// `J = −ln mx` for a normalized magnetization.
pub fn attenuation_from_mx(mx: f64) -> Option<f64> {
    (mx > 0.0).then(|| -libm::log(mx))
}

pub fn extract_attenuation(curve: &DecayCurve) -> Vec<ObservedAttenuation> {
    curve
        .times()
        .iter()
        .zip(curve.mean_mx())
        .map(|(&t, &m)| ObservedAttenuation { t, value: attenuation_from_mx(m) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_coupling_gives_unit_signal() {
        let env = LorentzianEnvironment::new(1e-200, 1.0).unwrap();
        let c = simulate_decay(&env, 2, &[0.1, 1.0, 10.0], 1000, 3, 1).unwrap();
        assert!(c.mean_mx().iter().all(|&m| m == 1.0));
    }

    #[test]
    fn binomial_statistics_at_ln2() {
        // J = ln 2 gives p₊ = 3/4 and mean magnetization 1/2.
        let p = 0.75;
        let n_shots = 100_000u64;
        let reps: Vec<f64> = (0..50).map(|r| simulate_point(p, n_shots, 42, r, 0).unwrap()).collect();
        let mean = reps.iter().sum::<f64>() / 50.0;
        let var = reps.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 49.0;
        let expected_sd = libm::sqrt((1.0 - 0.25) / n_shots as f64);
        assert!((mean - 0.5).abs() < 5.0 * expected_sd / libm::sqrt(50.0));
        let sd = libm::sqrt(var);
        assert!(sd > 0.6 * expected_sd && sd < 1.4 * expected_sd, "{sd} vs {expected_sd}");
    }

    #[test]
    fn same_seed_same_curve() {
        let env = LorentzianEnvironment::new(8.58, 0.08).unwrap();
        let grid = [0.1, 0.2, 0.3];
        let a = simulate_decay(&env, 2, &grid, 1000, 4, 9).unwrap();
        let b = simulate_decay(&env, 2, &grid, 1000, 4, 9).unwrap();
        let c = simulate_decay(&env, 2, &grid, 1000, 4, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn extraction() {
        let c = DecayCurve::new(vec![0.1, 0.2, 0.3], vec![1.0, libm::exp(-1.0), -0.01], 1, 10, 1).unwrap();
        let obs = extract_attenuation(&c);
        assert_eq!(obs[0].value, Some(0.0));
        assert!((obs[1].value.unwrap() - 1.0).abs() < 1e-15);
        assert!(obs[2].non_positive_signal());
    }

    #[test]
    fn rejects_degenerate_sampling() {
        let env = LorentzianEnvironment::new(1.0, 1.0).unwrap();
        assert!(simulate_decay(&env, 2, &[1.0], 0, 1, 0).is_err());
        assert!(simulate_decay(&env, 2, &[1.0], 1, 0, 0).is_err());
    }
}
