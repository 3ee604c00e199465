//! Shot-sampled decay experiments and their inversion into `τ_c` estimates.

use alloc::vec::Vec;

use thiserror::Error;

use crate::attenuation::AttenuationError;
use crate::control::SequenceError;
use crate::fisher::FisherError;
use crate::noise::NoiseError;
use crate::numeric::is_strictly_increasing;
use crate::numeric::lm::LmError;

pub mod criticality;
pub mod inversion;
pub mod precision;
pub mod simulate;
pub mod spectroscopy;

pub use criticality::{detect_critical_crossing, CrossingMethod, CrossingReport};
pub use inversion::{invert, invert_exact, invert_lm, invert_nf, invert_sm, ExactBrackets, InversionModel};
pub use precision::{continue_branches, invert_cell, invert_repetitions, relative_error_series, summarize_errors, Branch, ErrorMetric, ErrorOptions, ErrorPoint, ErrorSeries};
pub use simulate::{extract_attenuation, simulate_decay, simulate_point, ObservedAttenuation};
pub use spectroscopy::{fit_lorentzian, reconstruct_psd, HarmonicWeight, PsdSample, SpectroscopyFit};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Attenuation(#[from] AttenuationError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Fisher(#[from] FisherError),
    #[error("invalid decay curve: {0}")]
    InvalidCurve(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("attenuation is not unimodal in tau_c on the search bracket")]
    BracketFailure,
    #[error("per-repetition data required")]
    MissingRepetitions,
    #[error("no critical crossing inside the time window")]
    NoCrossingInWindow,
    #[error("need at least {required} usable spectral samples, got {got}")]
    InsufficientPoints { required: usize, got: usize },
    #[error("Lorentzian fit diverged")]
    FitDiverged,
}

impl From<LmError> for EstimationError {
    fn from(_: LmError) -> Self {
        EstimationError::FitDiverged
    }
}

/// Repetition-averaged magnetization decay under CPMG control.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    times: Vec<f64>,
    mean_mx: Vec<f64>,
    n_pulses: u32,
    n_shots: u64,
    n_reps: u32,
    /// `n_reps` rows of `times.len()` values.
    per_rep: Option<Vec<Vec<f64>>>,
    seed: Option<u64>,
}

/// Tolerance for per-repetition rows averaging to the stored mean.
pub const REP_MEAN_TOL: f64 = 1e-12;

impl DecayCurve {
    pub fn new(times: Vec<f64>, mean_mx: Vec<f64>, n_pulses: u32, n_shots: u64, n_reps: u32) -> Result<Self, EstimationError> {
        if times.is_empty() || times.len() != mean_mx.len() {
            return Err(EstimationError::InvalidCurve("times and magnetization must be non-empty and equal length"));
        }
        if !(times[0] > 0.0) || !times.iter().all(|t| t.is_finite()) || !is_strictly_increasing(&times) {
            return Err(EstimationError::InvalidCurve("times must be positive and strictly increasing"));
        }
        if !mean_mx.iter().all(|m| m.is_finite() && m.abs() <= 1.0) {
            return Err(EstimationError::InvalidCurve("magnetization outside [-1, 1]"));
        }
        if n_pulses == 0 || n_shots == 0 || n_reps == 0 {
            return Err(EstimationError::InvalidCurve("pulse, shot and repetition counts must be positive"));
        }
        Ok(Self { times, mean_mx, n_pulses, n_shots, n_reps, per_rep: None, seed: None })
    }

    /// Builds a curve whose mean is the column average of `per_rep`.
    pub fn from_repetitions(times: Vec<f64>, per_rep: Vec<Vec<f64>>, n_pulses: u32, n_shots: u64) -> Result<Self, EstimationError> {
        let n_reps = u32::try_from(per_rep.len()).map_err(|_| EstimationError::InvalidCurve("too many repetitions"))?;
        if per_rep.iter().any(|row| row.len() != times.len()) {
            return Err(EstimationError::InvalidCurve("repetition row length differs from time grid"));
        }
        let mean = column_means(&per_rep, times.len());
        let mut curve = Self::new(times, mean, n_pulses, n_shots, n_reps)?;
        curve.per_rep = Some(per_rep);
        Ok(curve)
    }

    /// Attaches repetition rows to an existing mean curve, checking they agree.
    pub fn with_repetitions(mut self, per_rep: Vec<Vec<f64>>) -> Result<Self, EstimationError> {
        if per_rep.len() != self.n_reps as usize || per_rep.iter().any(|row| row.len() != self.times.len()) {
            return Err(EstimationError::InvalidCurve("repetition matrix shape mismatch"));
        }
        if per_rep.iter().flatten().any(|m| !(m.abs() <= 1.0)) {
            return Err(EstimationError::InvalidCurve("magnetization outside [-1, 1]"));
        }
        let mean = column_means(&per_rep, self.times.len());
        if mean.iter().zip(&self.mean_mx).any(|(a, b)| (a - b).abs() > REP_MEAN_TOL) {
            return Err(EstimationError::InvalidCurve("repetition rows do not average to the mean"));
        }
        self.per_rep = Some(per_rep);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mean_mx(&self) -> &[f64] {
        &self.mean_mx
    }

    pub fn n_pulses(&self) -> u32 {
        self.n_pulses
    }

    pub fn n_shots(&self) -> u64 {
        self.n_shots
    }

    pub fn n_reps(&self) -> u32 {
        self.n_reps
    }

    pub fn per_rep(&self) -> Option<&[Vec<f64>]> {
        self.per_rep.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn column_means(rows: &[Vec<f64>], n_cols: usize) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..n_cols).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchStatus {
    TwoRoots,
    DoubleRoot,
    NoRealRoot,
    NoSolution,
    /// Single-valued inversion (short- or long-memory limit).
    Unique,
    /// No usable attenuation at this point.
    NoSignal,
}

impl BranchStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchStatus::TwoRoots => "TwoRoots",
            BranchStatus::DoubleRoot => "DoubleRoot",
            BranchStatus::NoRealRoot => "NoRealRoot",
            BranchStatus::NoSolution => "NoSolution",
            BranchStatus::Unique => "Unique",
            BranchStatus::NoSignal => "NoSignal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "TwoRoots" => BranchStatus::TwoRoots,
            "DoubleRoot" => BranchStatus::DoubleRoot,
            "NoRealRoot" => BranchStatus::NoRealRoot,
            "NoSolution" => BranchStatus::NoSolution,
            "Unique" => BranchStatus::Unique,
            "NoSignal" => BranchStatus::NoSignal,
            _ => return None,
        })
    }

    pub fn has_roots(&self) -> bool {
        matches!(self, BranchStatus::TwoRoots | BranchStatus::DoubleRoot | BranchStatus::Unique)
    }
}

/// The candidate `τ_c` values at one probing time.
///
/// `discriminant` is `1 − u²` for the narrow-filter quadratic and
/// `1 − J_obs/max_τ J` for the exact model; both vanish at a double root and
/// are negative when no root exists. Single-valued models report NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPair {
    pub t: f64,
    pub tau_minus: Option<f64>,
    pub tau_plus: Option<f64>,
    pub discriminant: f64,
    pub status: BranchStatus,
}

impl BranchPair {
    pub fn unique(t: f64, tau: f64) -> Self {
        Self { t, tau_minus: Some(tau), tau_plus: Some(tau), discriminant: f64::NAN, status: BranchStatus::Unique }
    }

    pub fn no_signal(t: f64) -> Self {
        Self { t, tau_minus: None, tau_plus: None, discriminant: f64::NAN, status: BranchStatus::NoSignal }
    }

    /// Root closest to `reference` in log distance.
    pub fn nearest(&self, reference: f64) -> Option<(Branch, f64)> {
        let d = |x: f64| libm::log(x / reference).abs();
        match (self.tau_minus, self.tau_plus) {
            (Some(m), Some(p)) => Some(if d(p) < d(m) { (Branch::Plus, p) } else { (Branch::Minus, m) }),
            (Some(m), None) => Some((Branch::Minus, m)),
            (None, Some(p)) => Some((Branch::Plus, p)),
            (None, None) => None,
        }
    }
}

/// Branch-resolved estimates over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationSeries {
    pub model: InversionModel,
    pub n_pulses: u32,
    pub pairs: Vec<BranchPair>,
    pub true_tau_c: Option<f64>,
}

/// Inverts every point of a decay curve under `model`.
pub fn estimate_series(curve: &DecayCurve, g: f64, model: InversionModel) -> Result<EstimationSeries, EstimationError> {
    let n = curve.n_pulses();
    let pairs = extract_attenuation(curve)
        .into_iter()
        .map(|obs| match obs.value {
            Some(j) if j > 0.0 => invert(model, j, obs.t, n, g),
            _ => Ok(BranchPair::no_signal(obs.t)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EstimationSeries { model, n_pulses: n, pairs, true_tau_c: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn curve_validation() {
        assert!(DecayCurve::new(vec![0.1, 0.2], vec![0.9, 0.8], 2, 10, 1).is_ok());
        assert!(DecayCurve::new(vec![0.2, 0.1], vec![0.9, 0.8], 2, 10, 1).is_err());
        assert!(DecayCurve::new(vec![0.1, 0.2], vec![1.2, 0.8], 2, 10, 1).is_err());
        assert!(DecayCurve::new(vec![0.1], vec![0.9, 0.8], 2, 10, 1).is_err());
        assert!(DecayCurve::new(vec![0.1], vec![0.9], 2, 0, 1).is_err());
    }

    #[test]
    fn repetitions_must_average_to_mean() {
        let c = DecayCurve::new(vec![0.1, 0.2], vec![0.5, 0.25], 2, 10, 2).unwrap();
        assert!(c.clone().with_repetitions(vec![vec![0.4, 0.2], vec![0.6, 0.3]]).is_ok());
        assert!(c.with_repetitions(vec![vec![0.4, 0.2], vec![0.6, 0.4]]).is_err());
        let r = DecayCurve::from_repetitions(vec![0.1], vec![vec![0.2], vec![0.4]], 1, 5).unwrap();
        assert!((r.mean_mx()[0] - 0.3).abs() < 1e-15);
        assert_eq!(r.n_reps(), 2);
    }

    #[test]
    fn status_names_round_trip() {
        for s in [
            BranchStatus::TwoRoots,
            BranchStatus::DoubleRoot,
            BranchStatus::NoRealRoot,
            BranchStatus::NoSolution,
            BranchStatus::Unique,
            BranchStatus::NoSignal,
        ] {
            assert_eq!(BranchStatus::parse(s.as_str()), Some(s));
        }
        assert_eq!(BranchStatus::parse("bogus"), None);
    }
}
