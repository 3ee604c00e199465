//! Dynamical-decoupling noise spectroscopy and Lorentzian fitting.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{extract_attenuation, DecayCurve, EstimationError};
use crate::numeric::lm::{minimize, LeastSquares, LmConfig};

/// Minimum usable spectral samples for a fit.
pub const MIN_FIT_POINTS: usize = 6;

/// How a decay value is mapped to the spectral density at `ω = πN/t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HarmonicWeight {
    /// `G = J/t`: all filter weight assigned to the first harmonic. This is
    /// exact for narrow-filter data.
    #[default]
    Parseval,
    /// `G = π²J/(8t)`: only the first-lobe weight `8t/π²`, which matches
    /// square-wave CPMG filters at large `N`.
    FirstHarmonic,
}

impl HarmonicWeight {
    fn factor(&self) -> f64 {
        match self {
            HarmonicWeight::Parseval => 1.0,
            HarmonicWeight::FirstHarmonic => PI * PI / 8.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HarmonicWeight::Parseval => "parseval",
            HarmonicWeight::FirstHarmonic => "first-harmonic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "parseval" => Some(HarmonicWeight::Parseval),
            "first-harmonic" => Some(HarmonicWeight::FirstHarmonic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdSample {
    pub omega: f64,
    pub g_hat: f64,
}

/// Spectral samples from every usable point, in input order.
pub fn reconstruct_psd(curves: &[DecayCurve], weight: HarmonicWeight) -> Vec<PsdSample> {
    let mut out = Vec::new();
    for curve in curves {
        let n = f64::from(curve.n_pulses());
        for obs in extract_attenuation(curve) {
            if let Some(j) = obs.value {
                out.push(PsdSample { omega: PI * n / obs.t, g_hat: weight.factor() * j / obs.t });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectroscopyFit {
    pub samples: Vec<PsdSample>,
    pub fitted_g: f64,
    pub fitted_tau_c: f64,
    /// RMS of `ln G_fit − ln Ĝ` over the fitted samples.
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Log-space residuals in `(ln g, ln τ_c)`, which keeps both positive.
struct LogLorentzian<'a> {
    points: &'a [PsdSample],
}

impl LeastSquares<2> for LogLorentzian<'_> {
    fn residuals(&self, p: &[f64; 2], out: &mut Vec<f64>) {
        let (g, tau) = (libm::exp(p[0]), libm::exp(p[1]));
        out.clear();
        out.extend(self.points.iter().map(|s| {
            let x = s.omega * tau;
            2.0 * libm::log(g) + libm::log(tau) - libm::log1p(x * x) - libm::log(s.g_hat)
        }));
    }

    fn jacobian(&self, p: &[f64; 2], out: &mut Vec<[f64; 2]>) {
        let tau = libm::exp(p[1]);
        out.clear();
        out.extend(self.points.iter().map(|s| {
            let x2 = (s.omega * tau) * (s.omega * tau);
            [2.0, 1.0 - 2.0 * x2 / (1.0 + x2)]
        }));
    }
}

pub fn fit_lorentzian(samples: &[PsdSample]) -> Result<SpectroscopyFit, EstimationError> {
    let mut usable: Vec<PsdSample> =
        samples.iter().copied().filter(|s| s.omega.is_finite() && s.omega > 0.0 && s.g_hat.is_finite() && s.g_hat > 0.0).collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(EstimationError::InsufficientPoints { required: MIN_FIT_POINTS, got: usable.len() });
    }
    usable.sort_by(|a, b| a.omega.total_cmp(&b.omega));

    // g²τ_c from the peak value; τ_c = 1/ω where Ĝ first falls below half of it.
    let peak = (0..usable.len()).max_by(|&a, &b| usable[a].g_hat.total_cmp(&usable[b].g_hat)).unwrap_or(0);
    let g_max = usable[peak].g_hat;
    let omega_half = usable[peak..].iter().find(|s| s.g_hat < 0.5 * g_max).map_or(usable[usable.len() - 1].omega, |s| s.omega);
    let tau0 = 1.0 / omega_half;
    let g0 = libm::sqrt(g_max / tau0);

    let model = LogLorentzian { points: &usable };
    let report = minimize(&model, [libm::log(g0), libm::log(tau0)], LmConfig::default())?;
    let (g, tau) = (libm::exp(report.params[0]), libm::exp(report.params[1]));
    if !(g.is_finite() && tau.is_finite() && g > 0.0 && tau > 0.0) {
        return Err(EstimationError::FitDiverged);
    }
    let residual_rms = libm::sqrt(2.0 * report.cost / usable.len() as f64);
    if !residual_rms.is_finite() {
        return Err(EstimationError::FitDiverged);
    }
    Ok(SpectroscopyFit { samples: samples.to_vec(), fitted_g: g, fitted_tau_c: tau, residual_rms, iterations: report.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attenuation::attenuation_nf;
    use crate::control::ControlSequence;
    use crate::noise::LorentzianEnvironment;
    use crate::numeric::log_space;

    fn nf_curve(g: f64, tau: f64, n: u32, times: &[f64]) -> DecayCurve {
        let env = LorentzianEnvironment::new(g, tau).unwrap();
        let mx = times.iter().map(|&t| libm::exp(-attenuation_nf(&env, &ControlSequence::cpmg(n, t).unwrap()).unwrap())).collect();
        DecayCurve::new(times.to_vec(), mx, n, 100_000, 1).unwrap()
    }

    #[test]
    fn noiseless_nf_round_trip() {
        // ω from 0.3/τ to 10/τ at N = 100; lower ω would underflow e^{-J}.
        let times = log_space(100.0 * PI * 0.08 / 10.0, 100.0 * PI * 0.08 / 0.3, 24);
        let curve = nf_curve(8.58, 0.08, 100, &times);
        let samples = reconstruct_psd(&[curve], HarmonicWeight::Parseval);
        assert_eq!(samples.len(), 24);
        let fit = fit_lorentzian(&samples).unwrap();
        assert!((fit.fitted_g / 8.58 - 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.fitted_tau_c / 0.08 - 1.0).abs() < 1e-6);
        assert!(fit.residual_rms < 1e-8);
    }

    #[test]
    fn too_few_points() {
        let samples = [PsdSample { omega: 1.0, g_hat: 1.0 }; 5];
        assert_eq!(fit_lorentzian(&samples), Err(EstimationError::InsufficientPoints { required: 6, got: 5 }));
        let mut bad = [PsdSample { omega: 1.0, g_hat: -1.0 }; 8];
        bad[0].g_hat = 1.0;
        assert!(matches!(fit_lorentzian(&bad), Err(EstimationError::InsufficientPoints { .. })));
    }

    #[test]
    fn weight_names() {
        for w in [HarmonicWeight::Parseval, HarmonicWeight::FirstHarmonic] {
            assert_eq!(HarmonicWeight::parse(w.name()), Some(w));
        }
    }
}
