use core::f64::consts::PI;

use super::{BranchPair, BranchStatus, EstimationError};
use crate::attenuation::attenuation_exact_time;
use crate::control::ControlSequence;
use crate::noise::LorentzianEnvironment;
use crate::numeric::log_space;
use crate::numeric::roots::{bisect, golden_section_max};

/// Below this the narrow-filter discriminant is treated as zero.
pub const DOUBLE_ROOT_TOL: f64 = 1e-12;
/// Relative bracket width at which exact-model bisection stops.
pub const EXACT_ROOT_REL_TOL: f64 = 1e-8;
const UNIMODALITY_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InversionModel {
    Exact,
    NarrowFilter,
    ShortMemory,
    LongMemory,
}

impl InversionModel {
    pub fn name(&self) -> &'static str {
        match self {
            InversionModel::Exact => "exact",
            InversionModel::NarrowFilter => "nf",
            InversionModel::ShortMemory => "sm",
            InversionModel::LongMemory => "lm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exact" => InversionModel::Exact,
            "nf" => InversionModel::NarrowFilter,
            "sm" => InversionModel::ShortMemory,
            "lm" => InversionModel::LongMemory,
            _ => return None,
        })
    }

    pub fn is_two_branch(&self) -> bool {
        matches!(self, InversionModel::Exact | InversionModel::NarrowFilter)
    }
}

fn check_positive(values: &[f64]) -> Result<(), EstimationError> {
    if values.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(())
    } else {
        Err(EstimationError::InvalidInput("inversion inputs must be positive and finite"))
    }
}

pub fn invert(model: InversionModel, j_obs: f64, t: f64, n_pulses: u32, g: f64) -> Result<BranchPair, EstimationError> {
    match model {
        InversionModel::Exact => invert_exact(j_obs, t, n_pulses, g, ExactBrackets::default()),
        InversionModel::NarrowFilter => invert_nf(j_obs, t, n_pulses, g),
        InversionModel::ShortMemory => Ok(BranchPair::unique(t, invert_sm(j_obs, t, g)?)),
        InversionModel::LongMemory => Ok(BranchPair::unique(t, invert_lm(j_obs, t, n_pulses, g)?)),
    }
}

/// Both roots of `J = g²τt/(1 + (πNτ/t)²)` in `τ`.
pub fn invert_nf(j_obs: f64, t: f64, n_pulses: u32, g: f64) -> Result<BranchPair, EstimationError> {
    check_positive(&[j_obs, t, g, f64::from(n_pulses)])?;
    let n = f64::from(n_pulses);
    let u = 2.0 * PI * n * j_obs / (g * g * t * t);
    let disc = 1.0 - u * u;
    let scale = g * g * t * t * t / (2.0 * PI * PI * n * n * j_obs);
    let pair = if disc.abs() < DOUBLE_ROOT_TOL {
        BranchPair { t, tau_minus: Some(scale), tau_plus: Some(scale), discriminant: 0.0, status: BranchStatus::DoubleRoot }
    } else if disc < 0.0 {
        BranchPair { t, tau_minus: None, tau_plus: None, discriminant: disc, status: BranchStatus::NoRealRoot }
    } else {
        let s = libm::sqrt(disc);
        // 1 − s = u²/(1 + s) avoids cancellation on the small root.
        BranchPair {
            t,
            tau_minus: Some(scale * u * u / (1.0 + s)),
            tau_plus: Some(scale * (1.0 + s)),
            discriminant: disc,
            status: BranchStatus::TwoRoots,
        }
    };
    Ok(pair)
}

/// `τ = J/(g²t)`.
pub fn invert_sm(j_obs: f64, t: f64, g: f64) -> Result<f64, EstimationError> {
    check_positive(&[j_obs, t, g])?;
    Ok(j_obs / (t * g * g))
}

/// `τ = g²t³/(12N²J)`.
pub fn invert_lm(j_obs: f64, t: f64, n_pulses: u32, g: f64) -> Result<f64, EstimationError> {
    check_positive(&[j_obs, t, g, f64::from(n_pulses)])?;
    let n = f64::from(n_pulses);
    Ok(g * g * t * t * t / (12.0 * n * n * j_obs))
}

/// Search interval for the exact inversion, as multiples of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactBrackets {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ExactBrackets {
    fn default() -> Self {
        Self { lower: 1e-6, upper: 1e4 }
    }
}

/// Numerical two-branch inversion of the exact attenuation, which is
/// unimodal in `τ_c` at fixed `t`.
pub fn invert_exact(j_obs: f64, t: f64, n_pulses: u32, g: f64, brackets: ExactBrackets) -> Result<BranchPair, EstimationError> {
    check_positive(&[j_obs, t, g, f64::from(n_pulses), brackets.lower, brackets.upper])?;
    if !(brackets.lower < brackets.upper) {
        return Err(EstimationError::InvalidInput("inverted bracket"));
    }
    let seq = ControlSequence::cpmg(n_pulses, t)?;
    let env = LorentzianEnvironment::new(g, 1.0)?;
    let phi = |tau: f64| -> f64 {
        match env.with_tau_c(tau) {
            Ok(e) => attenuation_exact_time(&e, &seq),
            Err(_) => f64::NAN,
        }
    };

    let (lo, hi) = (brackets.lower * t, brackets.upper * t);
    let grid = log_space(lo, hi, UNIMODALITY_GRID);
    let values: alloc::vec::Vec<f64> = grid.iter().map(|&x| phi(x)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EstimationError::BracketFailure);
    }
    let peak = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    let rising = values[..=peak].windows(2).all(|w| w[0] <= w[1]);
    let falling = values[peak..].windows(2).all(|w| w[0] >= w[1]);
    if peak == 0 || peak == values.len() - 1 || !rising || !falling {
        return Err(EstimationError::BracketFailure);
    }

    let (ln_star, phi_star) = golden_section_max(
        |ln_tau| phi(libm::exp(ln_tau)),
        libm::log(grid[peak - 1]),
        libm::log(grid[peak + 1]),
        1e-10,
    );
    let tau_star = libm::exp(ln_star);
    let discriminant = 1.0 - j_obs / phi_star;
    if discriminant.abs() < DOUBLE_ROOT_TOL {
        return Ok(BranchPair { t, tau_minus: Some(tau_star), tau_plus: Some(tau_star), discriminant: 0.0, status: BranchStatus::DoubleRoot });
    }
    if discriminant < 0.0 {
        return Ok(BranchPair { t, tau_minus: None, tau_plus: None, discriminant, status: BranchStatus::NoSolution });
    }

    let residual = |tau: f64| phi(tau) - j_obs;
    let root = |a: f64, b: f64| bisect(residual, a, b, EXACT_ROOT_REL_TOL).map_err(|_| EstimationError::BracketFailure);
    let tau_minus = root(lo, tau_star)?;
    let tau_plus = root(tau_star, hi)?;
    Ok(BranchPair { t, tau_minus: Some(tau_minus), tau_plus: Some(tau_plus), discriminant, status: BranchStatus::TwoRoots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attenuation::{attenuation_nf, AttenuationModel};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn nf_double_root_at_criticality() {
        let p = invert_nf(PI / 2.0, PI, 1, 1.0).unwrap();
        assert_eq!(p.status, BranchStatus::DoubleRoot);
        assert!(rel(p.tau_minus.unwrap(), 1.0) < 1e-12);
        assert_eq!(p.tau_minus, p.tau_plus);
    }

    #[test]
    fn nf_round_trip_and_infeasible() {
        let env = LorentzianEnvironment::new(8.58, 0.08).unwrap();
        let seq = ControlSequence::cpmg(2, 0.2).unwrap();
        let j = attenuation_nf(&env, &seq).unwrap();
        let p = invert_nf(j, 0.2, 2, 8.58).unwrap();
        assert_eq!(p.status, BranchStatus::TwoRoots);
        let (m, pl) = (p.tau_minus.unwrap(), p.tau_plus.unwrap());
        assert!(m <= pl);
        assert!(rel(m, 0.08).min(rel(pl, 0.08)) < 1e-10);
        // Above the maximum g²t²/(2πN).
        let jmax = 8.58f64.powi(2) * 0.04 / (2.0 * PI * 2.0);
        assert_eq!(invert_nf(1.01 * jmax, 0.2, 2, 8.58).unwrap().status, BranchStatus::NoRealRoot);
        assert!(invert_nf(-1.0, 0.2, 2, 8.58).is_err());
    }

    #[test]
    fn limits_round_trip() {
        assert!(rel(invert_sm(0.2, 10.0, 1.0).unwrap(), 0.02) < 1e-15);
        let (g, tau, t, n) = (3.0, 0.4, 0.7, 5u32);
        assert!(rel(invert_sm(g * g * tau * t, t, g).unwrap(), tau) < 1e-15);
        let nf = f64::from(n);
        let j = g * g * t * t * t / (12.0 * nf * nf * tau);
        assert!(rel(invert_lm(j, t, n, g).unwrap(), tau) < 1e-15);
    }

    #[test]
    fn exact_round_trip() {
        let env = LorentzianEnvironment::new(8.58, 0.08).unwrap();
        let seq = ControlSequence::cpmg(2, 0.3).unwrap();
        let j = attenuation_exact_time(&env, &seq);
        let p = invert_exact(j, 0.3, 2, 8.58, ExactBrackets::default()).unwrap();
        assert_eq!(p.status, BranchStatus::TwoRoots);
        assert!(p.tau_minus.unwrap() < p.tau_plus.unwrap());
        let best = rel(p.tau_minus.unwrap(), 0.08).min(rel(p.tau_plus.unwrap(), 0.08));
        assert!(best < 1e-6, "{best}");
    }

    #[test]
    fn exact_above_maximum_has_no_solution() {
        let small = 1e-3;
        let p = invert_exact(small, 0.3, 2, 8.58, ExactBrackets::default()).unwrap();
        assert_eq!(p.status, BranchStatus::TwoRoots);
        let phi_star = small / (1.0 - p.discriminant);
        let over = invert_exact(1.01 * phi_star, 0.3, 2, 8.58, ExactBrackets::default()).unwrap();
        assert_eq!(over.status, BranchStatus::NoSolution);
        assert!(over.tau_minus.is_none() && over.tau_plus.is_none());
    }

    #[test]
    fn exact_deep_short_memory_matches_sm() {
        let (g, tau, n) = (1.0, 0.02, 20u32);
        let t = 30.0 * f64::from(n) * PI * tau;
        let env = LorentzianEnvironment::new(g, tau).unwrap();
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let j = AttenuationModel::ExactTime.evaluate(&env, &seq).unwrap();
        let p = invert_exact(j, t, n, g, ExactBrackets::default()).unwrap();
        let sm = invert_sm(j, t, g).unwrap();
        assert!(rel(p.tau_minus.unwrap(), sm) < 0.05);
    }

    #[test]
    fn model_names_round_trip() {
        for m in [InversionModel::Exact, InversionModel::NarrowFilter, InversionModel::ShortMemory, InversionModel::LongMemory] {
            assert_eq!(InversionModel::parse(m.name()), Some(m));
        }
    }
}
