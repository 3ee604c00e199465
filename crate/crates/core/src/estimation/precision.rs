//! Relative-error statistics of branch estimates over repetitions.

use alloc::vec::Vec;

use super::simulate::attenuation_from_mx;
use super::{invert, BranchPair, DecayCurve, EstimationError, InversionModel};
use crate::attenuation::AttenuationModel;
use crate::control::ControlSequence;
use crate::fisher::crb_error;
use crate::noise::LorentzianEnvironment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Minus,
    Plus,
    Unique,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Minus => "minus",
            Branch::Plus => "plus",
            Branch::Unique => "unique",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "minus" => Branch::Minus,
            "plus" => Branch::Plus,
            "unique" => Branch::Unique,
            _ => return None,
        })
    }

    fn pick(&self, pair: &BranchPair) -> Option<f64> {
        match self {
            Branch::Minus | Branch::Unique => pair.tau_minus,
            Branch::Plus => pair.tau_plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMetric {
    /// Root-mean-square distance to the true value.
    #[default]
    Rms,
    /// Mean absolute distance to the true value.
    MeanAbs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorOptions {
    pub metric: ErrorMetric,
    /// Multiplier converting the spread of averaged estimates into a
    /// per-measurement error. Defaults to `√n_shots`.
    pub shot_scale: Option<f64>,
    /// Forward model used for the Cramér-Rao reference.
    pub bound_model: AttenuationModel,
}

impl Default for ErrorOptions {
    fn default() -> Self {
        Self { metric: ErrorMetric::Rms, shot_scale: None, bound_model: AttenuationModel::ExactTime }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPoint {
    pub t: f64,
    pub branch: Branch,
    /// `None` when every repetition failed to invert.
    pub eps_r: Option<f64>,
    pub eps_f_bound: f64,
    pub excluded_reps: u32,
}

impl ErrorPoint {
    pub fn all_reps_invalid(&self) -> bool {
        self.eps_r.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub model: InversionModel,
    pub true_tau_c: f64,
    pub points: Vec<ErrorPoint>,
}

impl ErrorSeries {
    pub fn branch(&self, branch: Branch) -> impl Iterator<Item = &ErrorPoint> + '_ {
        self.points.iter().filter(move |p| p.branch == branch)
    }
}

/// Inverts one repetition at one time; a non-positive signal yields a
/// `NoSignal` pair.
pub fn invert_cell(mx: f64, t: f64, n_pulses: u32, g: f64, model: InversionModel) -> Result<BranchPair, EstimationError> {
    match attenuation_from_mx(mx) {
        Some(j) if j > 0.0 => invert(model, j, t, n_pulses, g),
        _ => Ok(BranchPair::no_signal(t)),
    }
}

/// Branch pairs indexed `[rep][time]`.
pub fn invert_repetitions(curve: &DecayCurve, g: f64, model: InversionModel) -> Result<Vec<Vec<BranchPair>>, EstimationError> {
    let rows = curve.per_rep().ok_or(EstimationError::MissingRepetitions)?;
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(curve.times())
                .map(|(&mx, &t)| invert_cell(mx, t, curve.n_pulses(), g, model))
                .collect()
        })
        .collect()
}

/// Reduces per-repetition inversions to relative errors with a CRB reference.
pub fn summarize_errors(
    curve: &DecayCurve,
    g: f64,
    model: InversionModel,
    true_tau_c: f64,
    rep_pairs: &[Vec<BranchPair>],
    options: ErrorOptions,
) -> Result<ErrorSeries, EstimationError> {
    if !(true_tau_c.is_finite() && true_tau_c > 0.0) {
        return Err(EstimationError::InvalidInput("true tau_c must be positive"));
    }
    let scale = match options.shot_scale {
        Some(s) if s.is_finite() && s > 0.0 => s,
        Some(_) => return Err(EstimationError::InvalidInput("shot scale must be positive")),
        None => libm::sqrt(curve.n_shots() as f64),
    };
    let env = LorentzianEnvironment::new(g, true_tau_c)?;
    let branches: &[Branch] = if model.is_two_branch() { &[Branch::Minus, Branch::Plus] } else { &[Branch::Unique] };

    let mut points = Vec::with_capacity(curve.len() * branches.len());
    for (i, &t) in curve.times().iter().enumerate() {
        let seq = ControlSequence::cpmg(curve.n_pulses(), t)?;
        let eps_f_bound = crb_error(&env, &seq, options.bound_model)?;
        for &branch in branches {
            let mut acc = 0.0;
            let mut used = 0u32;
            let mut excluded = 0u32;
            for row in rep_pairs {
                match branch.pick(&row[i]) {
                    Some(tau) => {
                        let d = (tau - true_tau_c) / true_tau_c;
                        acc += match options.metric {
                            ErrorMetric::Rms => d * d,
                            ErrorMetric::MeanAbs => d.abs(),
                        };
                        used += 1;
                    }
                    None => excluded += 1,
                }
            }
            let eps_r = (used > 0).then(|| {
                let mean = acc / f64::from(used);
                scale
                    * match options.metric {
                        ErrorMetric::Rms => libm::sqrt(mean),
                        ErrorMetric::MeanAbs => mean,
                    }
            });
            points.push(ErrorPoint { t, branch, eps_r, eps_f_bound, excluded_reps: excluded });
        }
    }
    Ok(ErrorSeries { model, true_tau_c, points })
}

pub fn relative_error_series(
    curve: &DecayCurve,
    g: f64,
    model: InversionModel,
    true_tau_c: f64,
    options: ErrorOptions,
) -> Result<ErrorSeries, EstimationError> {
    let rep_pairs = invert_repetitions(curve, g, model)?;
    summarize_errors(curve, g, model, true_tau_c, &rep_pairs, options)
}

/// Pairs the two roots into smooth branches across time.
///
/// Ordered roots never cross, so plain nearest-neighbour matching would keep
/// the labels fixed even where the underlying solution curves pass through a
/// double root. Each branch is instead extrapolated linearly in `(ln t, ln τ)`
/// from its last two values and matched to the nearer root.
pub fn continue_branches(pairs: &[BranchPair]) -> Vec<[Option<f64>; 2]> {
    let mut out = Vec::with_capacity(pairs.len());
    let mut history: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    for pair in pairs {
        let (m, p) = match (pair.tau_minus, pair.tau_plus) {
            (Some(m), Some(p)) => (m, p),
            _ => {
                out.push([None, None]);
                continue;
            }
        };
        let lt = libm::log(pair.t);
        let predict = |h: &Vec<(f64, f64)>| -> Option<f64> {
            match h.len() {
                0 => None,
                1 => Some(h[0].1),
                n => {
                    let (t1, y1) = h[n - 2];
                    let (t2, y2) = h[n - 1];
                    Some(y2 + (y2 - y1) * (lt - t2) / (t2 - t1))
                }
            }
        };
        let (lm, lp) = (libm::log(m), libm::log(p));
        let swap = match (predict(&history[0]), predict(&history[1])) {
            (Some(a), Some(b)) => {
                let keep = (a - lm) * (a - lm) + (b - lp) * (b - lp);
                let cross = (a - lp) * (a - lp) + (b - lm) * (b - lm);
                cross < keep
            }
            _ => false,
        };
        let (a, b) = if swap { (p, m) } else { (m, p) };
        history[0].push((lt, libm::log(a)));
        history[1].push((lt, libm::log(b)));
        out.push([Some(a), Some(b)]);
    }
    out
}
