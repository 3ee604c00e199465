//! Quantum Fisher information for `τ_c`, the Cramér-Rao relative-error bound,
//! the regime criterion `gτ_c√(2N)` and error landscapes over probing time.

use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::attenuation::{AttenuationError, AttenuationModel};
use crate::control::{ControlSequence, SequenceError};
use crate::noise::{LorentzianEnvironment, NoiseError};
use crate::numeric::is_strictly_increasing;
use crate::numeric::roots::golden_section_min;

/// Stand-in for an infinite bound where a finite number is required.
pub const DIVERGENT_SENTINEL: f64 = 1e300;

/// Relative step of the central difference in `τ_c`.
pub const FD_REL_STEP: f64 = 1e-5;
const RICHARDSON_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FisherError {
    #[error(transparent)]
    Attenuation(#[from] AttenuationError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("finite-difference derivative unstable: {coarse:e} vs {fine:e}")]
    DerivativeUnstable { coarse: f64, fine: f64 },
    #[error("attenuation is zero; Fisher information is degenerate")]
    DegenerateAttenuation,
    #[error("time grid must be strictly increasing with at least {min} points")]
    InvalidGrid { min: usize },
    #[error("time grid [{t_min}, {t_max}] does not bracket the critical time {t_crit}")]
    GridTooNarrow { t_min: f64, t_max: f64, t_crit: f64 },
    #[error("regime parameters must be positive and finite")]
    InvalidParameters,
}

/// `∂J/∂τ_c`: closed form for the approximate models, a checked central
/// difference for the exact ones.
pub fn attenuation_derivative(
    env: &LorentzianEnvironment,
    seq: &ControlSequence,
    model: AttenuationModel,
) -> Result<f64, FisherError> {
    let g2 = env.g() * env.g();
    let tau = env.tau_c();
    let t = seq.total_time();
    let need_cpmg = || seq.control_frequency().ok_or(FisherError::Attenuation(AttenuationError::NotApplicable));
    match model {
        AttenuationModel::ShortMemory => Ok(g2 * t),
        AttenuationModel::LongMemory => {
            need_cpmg()?;
            let n = f64::from(seq.n_pulses());
            Ok(-g2 * t * t * t / (12.0 * n * n * tau * tau))
        }
        AttenuationModel::NarrowFilter => {
            let w = need_cpmg()?;
            Ok(t * lorentzian_tau_derivative(g2, tau, w))
        }
        AttenuationModel::MultiHarmonic(k_max) => {
            if k_max == 0 || k_max % 2 == 0 {
                return Err(AttenuationError::InvalidHarmonicCutoff(k_max).into());
            }
            let w = need_cpmg()?;
            let mut acc = 0.0;
            let mut k = k_max;
            loop {
                let kf = f64::from(k);
                acc += 8.0 * t / (PI * PI * kf * kf) * lorentzian_tau_derivative(g2, tau, kf * w);
                if k == 1 {
                    break;
                }
                k -= 2;
            }
            Ok(acc)
        }
        AttenuationModel::ExactTime | AttenuationModel::ExactFreq => {
            let at = |h: f64| -> Result<f64, FisherError> {
                let up = model.evaluate(&env.with_tau_c(tau * (1.0 + h))?, seq)?;
                let down = model.evaluate(&env.with_tau_c(tau * (1.0 - h))?, seq)?;
                Ok((up - down) / (2.0 * h * tau))
            };
            let coarse = at(FD_REL_STEP)?;
            let fine = at(0.5 * FD_REL_STEP)?;
            // Absolute floor on the natural scale J/τ_c so that the check stays
            // meaningful where the derivative itself crosses zero.
            let j = model.evaluate(env, seq)?;
            let floor = 1e-9 * j / tau;
            if (coarse - fine).abs() > RICHARDSON_REL_TOL * fine.abs() + floor {
                return Err(FisherError::DerivativeUnstable { coarse, fine });
            }
            Ok(fine)
        }
    }
}

/// `∂G/∂τ_c` of the Lorentzian at fixed `ω`.
fn lorentzian_tau_derivative(g2: f64, tau: f64, omega: f64) -> f64 {
    let x2 = (omega * tau) * (omega * tau);
    g2 * (1.0 - x2) / ((1.0 + x2) * (1.0 + x2))
}

/// `F_Q = e^{-2J}/(1 - e^{-2J}) · (∂J/∂τ_c)²`.
pub fn qfi(env: &LorentzianEnvironment, seq: &ControlSequence, model: AttenuationModel) -> Result<f64, FisherError> {
    let j = model.evaluate(env, seq)?;
    let d = attenuation_derivative(env, seq, model)?;
    qfi_from_parts(j, d)
}

pub fn qfi_from_parts(j: f64, derivative: f64) -> Result<f64, FisherError> {
    if !(j > 0.0) {
        return Err(FisherError::DegenerateAttenuation);
    }
    // e^{-2J}/(1 - e^{-2J}) = 1/(e^{2J} - 1)
    let weight = 1.0 / libm::expm1(2.0 * j);
    Ok(weight * derivative * derivative)
}

/// Per-measurement Cramér-Rao relative error `1/(τ_c √F_Q)`; `+∞` when
/// `F_Q = 0`.
pub fn crb_error(env: &LorentzianEnvironment, seq: &ControlSequence, model: AttenuationModel) -> Result<f64, FisherError> {
    let f = qfi(env, seq, model)?;
    Ok(crb_from_qfi(env.tau_c(), f))
}

pub fn crb_from_qfi(tau_c: f64, fisher: f64) -> f64 {
    if fisher > 0.0 {
        1.0 / (tau_c * libm::sqrt(fisher))
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    ShortMemory,
    Critical,
    LongMemory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeCriterion {
    pub score: f64,
    pub label: Regime,
}

/// `gτ_c√(2N)`: above 1 the long-memory side holds the error minimum.
pub fn regime_criterion(g: f64, tau_c: f64, n_pulses: u32) -> Result<RegimeCriterion, FisherError> {
    if !(g.is_finite() && tau_c.is_finite() && g > 0.0 && tau_c > 0.0 && n_pulses > 0) {
        return Err(FisherError::InvalidParameters);
    }
    let score = g * tau_c * libm::sqrt(2.0 * f64::from(n_pulses));
    let label = if score > 1.0 {
        Regime::LongMemory
    } else if score < 1.0 {
        Regime::ShortMemory
    } else {
        Regime::Critical
    };
    Ok(RegimeCriterion { score, label })
}

/// `Nπτ_c`, where `ω_ctrl τ_c = 1`.
pub fn critical_time(env: &LorentzianEnvironment, n_pulses: u32) -> f64 {
    f64::from(n_pulses) * PI * env.tau_c()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLandscape {
    pub times: Vec<f64>,
    pub attenuation: Vec<f64>,
    pub fisher: Vec<f64>,
    /// `ε_F`, with [`DIVERGENT_SENTINEL`] where `F_Q = 0`.
    pub eps_f: Vec<f64>,
    pub divergent: Vec<bool>,
    pub local_minima: Vec<(f64, f64)>,
    /// Refined location of the `F_Q` dip nearest `Nπτ_c`.
    pub divergence_time: Option<f64>,
    pub global_minimum: (f64, f64),
    pub optimal_side: Regime,
    pub critical_time: f64,
}

/// Minimum landscape grid size.
pub const LANDSCAPE_MIN_POINTS: usize = 32;

pub fn error_landscape(
    env: &LorentzianEnvironment,
    n_pulses: u32,
    t_grid: &[f64],
    model: AttenuationModel,
) -> Result<ErrorLandscape, FisherError> {
    if t_grid.len() < LANDSCAPE_MIN_POINTS || !is_strictly_increasing(t_grid) || !(t_grid[0] > 0.0) {
        return Err(FisherError::InvalidGrid { min: LANDSCAPE_MIN_POINTS });
    }
    let t_crit = critical_time(env, n_pulses);
    let (t_min, t_max) = (t_grid[0], t_grid[t_grid.len() - 1]);
    if !(t_min < t_crit && t_max > t_crit) {
        return Err(FisherError::GridTooNarrow { t_min, t_max, t_crit });
    }

    let fisher_at = |t: f64| -> Result<(f64, f64), FisherError> {
        let seq = ControlSequence::cpmg(n_pulses, t)?;
        let j = model.evaluate(env, &seq)?;
        let d = attenuation_derivative(env, &seq, model)?;
        Ok((j, qfi_from_parts(j, d)?))
    };

    let n = t_grid.len();
    let mut attenuation = Vec::with_capacity(n);
    let mut fisher = Vec::with_capacity(n);
    let mut eps_f = Vec::with_capacity(n);
    let mut divergent = Vec::with_capacity(n);
    for &t in t_grid {
        let (j, f) = fisher_at(t)?;
        let eps = crb_from_qfi(env.tau_c(), f);
        attenuation.push(j);
        fisher.push(f);
        divergent.push(!eps.is_finite());
        eps_f.push(if eps.is_finite() { eps } else { DIVERGENT_SENTINEL });
    }

    let local_minima: Vec<(f64, f64)> = (1..n - 1)
        .filter(|&i| !divergent[i] && eps_f[i] < eps_f[i - 1] && eps_f[i] < eps_f[i + 1])
        .map(|i| (t_grid[i], eps_f[i]))
        .collect();

    let best = (0..n).min_by(|&a, &b| eps_f[a].total_cmp(&eps_f[b])).unwrap_or(0);
    let global_minimum = (t_grid[best], eps_f[best]);
    let optimal_side = if global_minimum.0 < t_crit { Regime::LongMemory } else { Regime::ShortMemory };

    // F_Q dip: interior discrete minimum closest to t_crit (log distance).
    let dip = (1..n - 1)
        .filter(|&i| fisher[i] <= fisher[i - 1] && fisher[i] <= fisher[i + 1])
        .min_by(|&a, &b| {
            let da = libm::log(t_grid[a] / t_crit).abs();
            let db = libm::log(t_grid[b] / t_crit).abs();
            da.total_cmp(&db)
        });
    let divergence_time = match dip {
        Some(i) => {
            let (lo, hi) = (t_grid[i - 1], t_grid[i + 1]);
            let (t_star, _) = golden_section_min(
                |t| fisher_at(t).map(|(_, f)| f).unwrap_or(f64::INFINITY),
                lo,
                hi,
                1e-4 * t_crit,
            );
            Some(t_star)
        }
        None => None,
    };

    Ok(ErrorLandscape {
        times: t_grid.to_vec(),
        attenuation,
        fisher,
        eps_f,
        divergent,
        local_minima,
        divergence_time,
        global_minimum,
        optimal_side,
        critical_time: t_crit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attenuation::attenuation_nf;

    fn env(g: f64, tau: f64) -> LorentzianEnvironment {
        LorentzianEnvironment::new(g, tau).unwrap()
    }

    #[test]
    fn nf_derivative_vanishes_at_critical_point() {
        let e = env(1.0, 1.0);
        let seq = ControlSequence::cpmg(1, PI).unwrap();
        let d = attenuation_derivative(&e, &seq, AttenuationModel::NarrowFilter).unwrap();
        assert!(d.abs() < 1e-15);
        let j = attenuation_nf(&e, &seq).unwrap();
        let f = qfi_from_parts(j, d).unwrap();
        assert!(f < 1e-20);
        let seq = ControlSequence::cpmg(1, PI).unwrap();
        let eps = crb_error(&e, &seq, AttenuationModel::NarrowFilter).unwrap();
        assert!(eps > 1e7);
    }

    #[test]
    fn sm_derivative_and_qfi() {
        let e = env(1.0, 0.37);
        let seq = ControlSequence::cpmg(3, 1.0).unwrap();
        assert_eq!(attenuation_derivative(&e, &seq, AttenuationModel::ShortMemory).unwrap(), 1.0);
        // J = ln 2: weight (1/4)/(3/4).
        let f = qfi_from_parts(core::f64::consts::LN_2, 1.0).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(qfi_from_parts(0.0, 1.0), Err(FisherError::DegenerateAttenuation));
    }

    #[test]
    fn exact_fd_matches_analytic_fid() {
        let e = env(1.0, 1.0);
        let seq = ControlSequence::fid(1.0).unwrap();
        let d = attenuation_derivative(&e, &seq, AttenuationModel::ExactTime).unwrap();
        // d/dτ [g²τ²(t/τ - 1 + e^{-t/τ})] = g²(t - 2τ + 2τe^{-t/τ} + t e^{-t/τ})
        let (tau, t) = (1.0f64, 1.0f64);
        let analytic = t - 2.0 * tau + 2.0 * tau * libm::exp(-t / tau) + t * libm::exp(-t / tau);
        assert!((d - analytic).abs() < 1e-6 * analytic.abs());
    }

    #[test]
    fn nf_analytic_vs_finite_difference() {
        let e = env(8.58, 0.08);
        for t in [0.05, 0.2, 0.4, 0.7, 1.3, 3.0] {
            let seq = ControlSequence::cpmg(2, t).unwrap();
            let analytic = attenuation_derivative(&e, &seq, AttenuationModel::NarrowFilter).unwrap();
            let h = 1e-4 * e.tau_c();
            let up = attenuation_nf(&e.with_tau_c(e.tau_c() + h).unwrap(), &seq).unwrap();
            let dn = attenuation_nf(&e.with_tau_c(e.tau_c() - h).unwrap(), &seq).unwrap();
            let richardson_h = 0.5 * h;
            let up2 = attenuation_nf(&e.with_tau_c(e.tau_c() + richardson_h).unwrap(), &seq).unwrap();
            let dn2 = attenuation_nf(&e.with_tau_c(e.tau_c() - richardson_h).unwrap(), &seq).unwrap();
            let d1 = (up - dn) / (2.0 * h);
            let d2 = (up2 - dn2) / (2.0 * richardson_h);
            let fd = (4.0 * d2 - d1) / 3.0;
            assert!((fd - analytic).abs() <= 1e-8 * analytic.abs(), "t={t}: {fd} vs {analytic}");
        }
    }

    #[test]
    fn regime_scores() {
        let a = regime_criterion(8.58, 0.08, 2).unwrap();
        assert!((a.score - 1.3728).abs() < 1e-12);
        assert_eq!(a.label, Regime::LongMemory);
        let c = regime_criterion(1.0, 0.02, 20).unwrap();
        assert_eq!(c.label, Regime::ShortMemory);
        assert_eq!(regime_criterion(0.5, 1.0, 2).unwrap().label, Regime::Critical);
        assert!(regime_criterion(-1.0, 1.0, 2).is_err());
        assert!(regime_criterion(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn landscape_requires_bracketing_grid() {
        let e = env(8.58, 0.08);
        let narrow = crate::numeric::log_space(0.01, 0.1, 40);
        assert!(matches!(
            error_landscape(&e, 2, &narrow, AttenuationModel::NarrowFilter),
            Err(FisherError::GridTooNarrow { .. })
        ));
        let short = crate::numeric::log_space(0.01, 10.0, 10);
        assert!(matches!(
            error_landscape(&e, 2, &short, AttenuationModel::NarrowFilter),
            Err(FisherError::InvalidGrid { .. })
        ));
    }

    #[test]
    fn nf_landscape_diverges_at_critical_time() {
        let e = env(8.58, 0.08);
        let tc = critical_time(&e, 2);
        let grid = crate::numeric::log_space(0.05 * tc, 20.0 * tc, 201);
        let land = error_landscape(&e, 2, &grid, AttenuationModel::NarrowFilter).unwrap();
        let td = land.divergence_time.unwrap();
        assert!((td / tc - 1.0).abs() < 2e-3, "{td} vs {tc}");
        assert_eq!(land.local_minima.len(), 2);
        assert_eq!(land.optimal_side, Regime::LongMemory);
        let again = error_landscape(&e, 2, &grid, AttenuationModel::NarrowFilter).unwrap();
        assert_eq!(land, again);
    }
}
