//! Locating the avoided crossing of the two estimate branches.

use core::f64::consts::PI;

use super::{Branch, BranchStatus, EstimationError, EstimationSeries, InversionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingMethod {
    /// Minimum of `ln(τ₊/τ₋)` over the series.
    GapMinimum,
    /// Swap of which root lies nearest the reference `τ_c`.
    NearestBranchSwap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingReport {
    pub method: CrossingMethod,
    pub t_crit: f64,
    /// Branch value at the crossing, the midpoint of the two roots.
    pub tau_hat: f64,
    /// `t_crit / (Nπτ̂)`.
    pub ratio: f64,
    /// `t_crit / (Nπτ_true)` when a reference is known.
    pub ratio_true: Option<f64>,
    /// First time with a double root or no real root.
    pub first_degenerate_t: Option<f64>,
}

/// Gap measured on a log scale: both roots shrink together at short times,
/// so the absolute difference would always bottom out at the window edge.
fn log_gap(p: &super::BranchPair) -> Option<f64> {
    Some(libm::log(p.tau_plus? / p.tau_minus?))
}

pub fn detect_critical_crossing(series: &EstimationSeries) -> Result<CrossingReport, EstimationError> {
    if !series.model.is_two_branch() {
        return Err(EstimationError::NoCrossingInWindow);
    }
    let n = f64::from(series.n_pulses);
    let first_degenerate_t = series
        .pairs
        .iter()
        .find(|p| matches!(p.status, BranchStatus::DoubleRoot | BranchStatus::NoRealRoot | BranchStatus::NoSolution))
        .map(|p| p.t);

    let use_swap = series.model == InversionModel::Exact && series.true_tau_c.is_some();
    let (t_crit, tau_hat, method) = if use_swap {
        let reference = series.true_tau_c.unwrap_or(f64::NAN);
        let labelled: alloc::vec::Vec<(usize, Branch)> = series
            .pairs
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.nearest(reference).map(|(b, _)| (i, b)))
            .collect();
        let swap = labelled.windows(2).find(|w| w[0].1 == Branch::Plus && w[1].1 == Branch::Minus);
        let (i, k) = match swap {
            Some(w) => (w[0].0, w[1].0),
            None => return Err(EstimationError::NoCrossingInWindow),
        };
        // Of the two bracketing points, report the one with the narrower gap.
        let gap = |idx: usize| log_gap(&series.pairs[idx]).unwrap_or(f64::INFINITY);
        let at = if gap(k) < gap(i) { k } else { i };
        let p = &series.pairs[at];
        let tau_hat = 0.5 * (p.tau_minus.unwrap_or(reference) + p.tau_plus.unwrap_or(reference));
        (p.t, tau_hat, CrossingMethod::NearestBranchSwap)
    } else {
        let valid: alloc::vec::Vec<usize> = (0..series.pairs.len())
            .filter(|&i| series.pairs[i].tau_minus.is_some() && series.pairs[i].tau_plus.is_some())
            .collect();
        let gap = |i: usize| log_gap(&series.pairs[i]).unwrap_or(f64::NAN);
        let best = valid.iter().copied().min_by(|&a, &b| gap(a).total_cmp(&gap(b)));
        let best = match best {
            Some(b) => b,
            None => return Err(EstimationError::NoCrossingInWindow),
        };
        // A minimum at either end of the valid window is not a crossing.
        if best == valid[0] || best == valid[valid.len() - 1] {
            return Err(EstimationError::NoCrossingInWindow);
        }
        let p = &series.pairs[best];
        let tau_hat = 0.5 * (p.tau_minus.unwrap_or(f64::NAN) + p.tau_plus.unwrap_or(f64::NAN));
        (p.t, tau_hat, CrossingMethod::GapMinimum)
    };

    Ok(CrossingReport {
        method,
        t_crit,
        tau_hat,
        ratio: t_crit / (n * PI * tau_hat),
        ratio_true: series.true_tau_c.map(|tau| t_crit / (n * PI * tau)),
        first_degenerate_t,
    })
}
