//! Decoherence attenuation factor `J(τ_c, t)` under several models, plus the
//! magnetization and single-shot outcome probabilities it implies.

use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::control::{cpmg_filter_product, ControlSequence, ModulationProfile, SequenceKind};
use crate::noise::LorentzianEnvironment;
use crate::numeric::quad::{integrate, QuadError, Tolerance};

/// Default relative tolerance of the frequency-domain quadrature.
pub const DEFAULT_FREQ_REL_TOL: f64 = 1e-8;

const MAX_PANELS: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AttenuationError {
    #[error("model requires a CPMG sequence")]
    NotApplicable,
    #[error("harmonic cutoff must be odd and at least 1, got {0}")]
    InvalidHarmonicCutoff(u32),
    #[error("relative tolerance {0:e} outside [1e-10, 1e-4]")]
    InvalidTolerance(f64),
    #[error("frequency quadrature failed: {0}")]
    QuadratureFailure(QuadError),
    #[error("quadrature would need more than {MAX_PANELS} panels")]
    PanelBudget,
    #[error("attenuation must be non-negative, got {0}")]
    NegativeAttenuation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttenuationModel {
    /// Gaussian dephasing double integral, evaluated in closed form.
    ExactTime,
    /// `∫ F_t G dω` by adaptive quadrature.
    ExactFreq,
    /// Full filter weight `t` on the fundamental `ω_ctrl`.
    NarrowFilter,
    /// Odd harmonics up to `k_max`, weights `8t/(π²k²)`.
    MultiHarmonic(u32),
    ShortMemory,
    LongMemory,
}

impl AttenuationModel {
    pub fn evaluate(&self, env: &LorentzianEnvironment, seq: &ControlSequence) -> Result<f64, AttenuationError> {
        match *self {
            Self::ExactTime => Ok(attenuation_exact_time(env, seq)),
            Self::ExactFreq => attenuation_exact_freq(env, seq, DEFAULT_FREQ_REL_TOL),
            Self::NarrowFilter => attenuation_nf(env, seq),
            Self::MultiHarmonic(k) => attenuation_multiharmonic(env, seq, k),
            Self::ShortMemory => Ok(attenuation_sm(env, seq.total_time())),
            Self::LongMemory => attenuation_lm(env, seq),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::ExactTime | Self::ExactFreq)
    }
}

/// `x - 1 + e^{-x}`, accurate for small `x`.
pub(crate) fn x_minus_one_plus_exp(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        x2 * (0.5 - x / 6.0 + x2 / 24.0 - x2 * x / 120.0 + x2 * x2 / 720.0 - x2 * x2 * x / 5040.0)
    } else {
        x + libm::expm1(-x)
    }
}

/// `½ ∬ f(t₁) f(t₂) C(t₁ - t₂) dt₁ dt₂` for a piecewise-constant modulation.
///
/// A diagonal cell of length `L` contributes `2τ²(x - 1 + e^{-x})`, `x = L/τ`.
/// An off-diagonal pair `i < j` contributes `τ² e^{-(a_j - b_i)/τ} α_i α_j`
/// with `α = 1 - e^{-L/τ}`; the running sum over `i` obeys
/// `S_{j+1} = S_j e^{-L_j/τ} + s_j α_j`, giving an O(N) evaluation.
pub fn attenuation_exact_profile(env: &LorentzianEnvironment, profile: &ModulationProfile) -> f64 {
    let tau = env.tau_c();
    let mut diagonal = 0.0;
    let mut cross = 0.0;
    let mut running = 0.0;
    for seg in profile.segments() {
        let x = seg.len() / tau;
        let alpha = -libm::expm1(-x);
        diagonal += x_minus_one_plus_exp(x);
        cross += seg.sign * alpha * running;
        running = running * libm::exp(-x) + seg.sign * alpha;
    }
    let g2 = env.g() * env.g();
    g2 * tau * tau * (diagonal + cross)
}

pub fn attenuation_exact_time(env: &LorentzianEnvironment, seq: &ControlSequence) -> f64 {
    attenuation_exact_profile(env, &seq.modulation())
}

/// `∫_W^∞ 2·(E/2πω²)·G(ω) dω`: the tail of the one-sided integrand with the
/// filter replaced by its frequency-averaged envelope `E/(2πω²)`.
fn averaged_tail(env: &LorentzianEnvironment, jump_energy: f64, cutoff: f64) -> f64 {
    let tau = env.tau_c();
    let u = 1.0 / (cutoff * tau);
    let u_minus_atan = if u < 1e-3 {
        let u2 = u * u;
        u2 * u * (1.0 / 3.0 - u2 / 5.0 + u2 * u2 / 7.0)
    } else {
        u - libm::atan(u)
    };
    jump_energy / PI * env.g() * env.g() * tau * tau * u_minus_atan
}

/// Frequency-domain attenuation `2∫₀^∞ F_t(ω) G(ω) dω`.
///
/// Panels have width `π/t`, so every harmonic `kω_ctrl` is a panel edge. The
/// cutoff `W` is chosen so that an `(N+1)`-fold inflated envelope tail is a
/// small fraction of a pilot integral; the envelope tail is then added back.
pub fn attenuation_exact_freq(
    env: &LorentzianEnvironment,
    seq: &ControlSequence,
    rel_tol: f64,
) -> Result<f64, AttenuationError> {
    if !(1e-10..=1e-4).contains(&rel_tol) {
        return Err(AttenuationError::InvalidTolerance(rel_tol));
    }
    let profile = seq.modulation();
    let t = seq.total_time();
    let tau = env.tau_c();
    let width = PI / t;
    let fundamental = seq.control_frequency().unwrap_or(2.0 * PI / t);
    let energy = profile.jump_energy();
    let safety = f64::from(seq.n_pulses()) + 1.0;
    let (n_pulses, is_cpmg) = (seq.n_pulses(), seq.kind() == SequenceKind::Cpmg);
    let filter = |w: f64| if is_cpmg { cpmg_filter_product(n_pulses, t, w) } else { None }.unwrap_or_else(|| profile.filter(w));
    let integrand = |w: f64| 2.0 * filter(w) * env.psd(w);

    let extra = [0.5 / tau, 1.0 / tau, 2.0 / tau, 4.0 / tau];
    let breaks_up_to = |cutoff: f64| -> Result<Vec<f64>, AttenuationError> {
        let panels = libm::ceil(cutoff / width) as usize;
        if panels > MAX_PANELS {
            return Err(AttenuationError::PanelBudget);
        }
        let mut b: Vec<f64> = (0..=panels).map(|k| k as f64 * width).collect();
        let top = b[b.len() - 1];
        b.extend(extra.iter().copied().filter(|&x| x < top));
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * top);
        Ok(b)
    };

    let pilot_cutoff = (8.0 * fundamental).max(20.0 / tau);
    let pilot_breaks = breaks_up_to(pilot_cutoff)?;
    let pilot = integrate(integrand, &pilot_breaks, Tolerance::relative(1e-3), 50_000_000)
        .map_err(AttenuationError::QuadratureFailure)?;
    let pilot_top = pilot_breaks[pilot_breaks.len() - 1];
    if pilot.value <= 0.0 {
        return Ok(0.0);
    }

    let budget = 0.1 * rel_tol * pilot.value;
    let g2 = env.g() * env.g();
    let mut cutoff = libm::cbrt(safety * energy * g2 / (3.0 * PI * tau * budget)).max(pilot_top);
    while safety * averaged_tail(env, energy, cutoff) > budget {
        cutoff *= 1.1;
    }
    let breaks = breaks_up_to(cutoff)?;
    let top = breaks[breaks.len() - 1];
    let max_evals = 64 * 15 * breaks.len() + 1_000_000;
    let body = integrate(integrand, &breaks, Tolerance::relative(0.25 * rel_tol), max_evals)
        .map_err(AttenuationError::QuadratureFailure)?;
    Ok(body.value + averaged_tail(env, energy, top))
}

fn cpmg_frequency(seq: &ControlSequence) -> Result<f64, AttenuationError> {
    match seq.kind() {
        SequenceKind::Cpmg => Ok(seq.control_frequency().unwrap_or_default()),
        SequenceKind::Fid => Err(AttenuationError::NotApplicable),
    }
}

/// `J^NF = g²τ_c t / (1 + (ω_ctrl τ_c)²)`.
pub fn attenuation_nf(env: &LorentzianEnvironment, seq: &ControlSequence) -> Result<f64, AttenuationError> {
    let w = cpmg_frequency(seq)?;
    Ok(seq.total_time() * env.psd(w))
}

/// `Σ_{k odd ≤ k_max} 8t/(π²k²) · G(kω_ctrl)`.
pub fn attenuation_multiharmonic(
    env: &LorentzianEnvironment,
    seq: &ControlSequence,
    k_max: u32,
) -> Result<f64, AttenuationError> {
    if k_max == 0 || k_max.is_multiple_of(2) {
        return Err(AttenuationError::InvalidHarmonicCutoff(k_max));
    }
    let w = cpmg_frequency(seq)?;
    let t = seq.total_time();
    // Summed from the smallest terms upward.
    let mut acc = 0.0;
    let mut k = k_max;
    loop {
        let kf = f64::from(k);
        acc += 8.0 * t / (PI * PI * kf * kf) * env.psd(kf * w);
        if k == 1 {
            break;
        }
        k -= 2;
    }
    Ok(acc)
}

/// `J^SM = g²τ_c t`.
pub fn attenuation_sm(env: &LorentzianEnvironment, t: f64) -> f64 {
    env.g() * env.g() * env.tau_c() * t
}

/// `J^LM = g²t³ / (12 N² τ_c)`.
pub fn attenuation_lm(env: &LorentzianEnvironment, seq: &ControlSequence) -> Result<f64, AttenuationError> {
    cpmg_frequency(seq)?;
    let t = seq.total_time();
    let n = f64::from(seq.n_pulses());
    Ok(env.g() * env.g() * t * t * t / (12.0 * n * n * env.tau_c()))
}

/// `⟨σ_x(t)⟩ / ⟨σ_x(0)⟩ = e^{-J}`.
pub fn magnetization(j: f64) -> Result<f64, AttenuationError> {
    if j.is_nan() || j < 0.0 {
        return Err(AttenuationError::NegativeAttenuation(j));
    }
    Ok(libm::exp(-j))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbability {
    pub plus: f64,
    pub minus: f64,
}

/// `p_± = (1 ± e^{-J}) / 2`.
pub fn outcome_probability(j: f64) -> Result<OutcomeProbability, AttenuationError> {
    let m = magnetization(j)?;
    Ok(OutcomeProbability { plus: 0.5 * (1.0 + m), minus: 0.5 * (1.0 - m) })
}
