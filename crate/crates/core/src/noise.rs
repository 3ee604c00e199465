//! Ornstein-Uhlenbeck environment in time and frequency domains.
//!
//! Normalization: `C(τ) = g² e^{-|τ|/τ_c}` and `G(ω) = g² τ_c / (1 + ω²τ_c²)`,
//! so that `∫ C(τ) e^{iωτ} dτ = 2 G(ω)`. With `F_t(ω) = |f̃(ω)|²/2π` this makes
//! `J = ∫ F_t G dω = ½ ∬ f f C`, the Gaussian dephasing exponent.
//!
//! `g` is an angular rate in ms⁻¹ (kHz is read as ms⁻¹) and `τ_c` is in ms.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::control::ControlSequence;
use crate::rng::{substream, DOMAIN_OU};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum NoiseError {
    #[error("invalid environment: g = {g}, tau_c = {tau_c} (both must be positive and finite)")]
    InvalidEnvironment { g: f64, tau_c: f64 },
    #[error("invalid path spec: {0}")]
    InvalidPathSpec(&'static str),
    #[error("invalid oracle configuration: {0}")]
    InvalidOracleConfig(&'static str),
    #[error("mean coherence {mean_cos:e} is not positive; shorten t or raise n_traj")]
    NonPositiveMean { mean_cos: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianEnvironment {
    g: f64,
    tau_c: f64,
}

impl LorentzianEnvironment {
    pub fn new(g: f64, tau_c: f64) -> Result<Self, NoiseError> {
        if g.is_finite() && tau_c.is_finite() && g > 0.0 && tau_c > 0.0 {
            Ok(Self { g, tau_c })
        } else {
            Err(NoiseError::InvalidEnvironment { g, tau_c })
        }
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    pub fn with_tau_c(&self, tau_c: f64) -> Result<Self, NoiseError> {
        Self::new(self.g, tau_c)
    }

    pub fn with_g(&self, g: f64) -> Result<Self, NoiseError> {
        Self::new(g, self.tau_c)
    }

    /// Lorentzian spectral density `G(τ_c, ω)`.
    pub fn psd(&self, omega: f64) -> f64 {
        let x = omega * self.tau_c;
        self.g * self.g * self.tau_c / (1.0 + x * x)
    }

    /// `C(τ) = ⟨B(τ)B(0)⟩`.
    pub fn autocorrelation(&self, lag: f64) -> f64 {
        self.g * self.g * libm::exp(-lag.abs() / self.tau_c)
    }
}

pub fn psd(env: &LorentzianEnvironment, omega: f64) -> f64 {
    env.psd(omega)
}

pub fn autocorrelation(env: &LorentzianEnvironment, lag: f64) -> f64 {
    env.autocorrelation(lag)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuPathSpec {
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
}

impl OuPathSpec {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(NoiseError::InvalidPathSpec("dt must be positive"));
        }
        if self.n_steps == 0 {
            return Err(NoiseError::InvalidPathSpec("n_steps must be at least 1"));
        }
        Ok(())
    }
}

/// Exact one-step propagator of the stationary OU process.
#[derive(Debug, Clone, Copy)]
struct OuStep {
    decay: f64,
    kick: f64,
    sigma: f64,
}

impl OuStep {
    fn new(env: &LorentzianEnvironment, dt: f64) -> Self {
        let decay = libm::exp(-dt / env.tau_c);
        // 1 - e^{-2dt/τ} without cancellation for small steps.
        let one_minus = -libm::expm1(-2.0 * dt / env.tau_c);
        Self { decay, kick: env.g * libm::sqrt(one_minus), sigma: env.g }
    }

    fn start<R: Rng>(&self, rng: &mut R) -> f64 {
        self.sigma * rng.sample::<f64, _>(StandardNormal)
    }

    fn advance<R: Rng>(&self, b: f64, rng: &mut R) -> f64 {
        b * self.decay + self.kick * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Samples `B_0, …, B_{n_steps-1}` on the grid `k·dt`.
pub fn sample_ou_path(env: &LorentzianEnvironment, spec: &OuPathSpec) -> Result<Vec<f64>, NoiseError> {
    spec.validate()?;
    let step = OuStep::new(env, spec.dt);
    let mut rng = substream(spec.seed, DOMAIN_OU, u64::MAX);
    let mut path = Vec::with_capacity(spec.n_steps);
    let mut b = step.start(&mut rng);
    path.push(b);
    for _ in 1..spec.n_steps {
        b = step.advance(b, &mut rng);
        path.push(b);
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
}

/// Precomputed time grid for phase accumulation along one trajectory.
#[derive(Debug, Clone)]
pub struct PhasePlan {
    env: LorentzianEnvironment,
    step: f64,
    signs: Vec<f64>,
    seed: u64,
}

impl PhasePlan {
    /// Builds the step grid. The number of steps is rounded up to a multiple
    /// of `2N` so that every switch time lies on the grid.
    pub fn new(env: &LorentzianEnvironment, seq: &ControlSequence, config: &OracleConfig) -> Result<Self, NoiseError> {
        if config.n_traj < 1000 {
            return Err(NoiseError::InvalidOracleConfig("n_traj must be at least 1000"));
        }
        if !(config.dt.is_finite() && config.dt > 0.0) {
            return Err(NoiseError::InvalidOracleConfig("dt must be positive"));
        }
        if config.dt > seq.inter_pulse_delay() / 50.0 * (1.0 + 1e-12) {
            return Err(NoiseError::InvalidOracleConfig("dt must not exceed 1/50 of the inter-pulse delay"));
        }
        let t = seq.total_time();
        let granule = 2 * seq.n_pulses().max(1) as usize;
        let raw = libm::ceil(t / config.dt) as usize;
        let n_steps = raw.div_ceil(granule) * granule;
        let step = t / n_steps as f64;
        let profile = seq.modulation();
        let signs = (0..n_steps).map(|k| profile.sign_at((k as f64 + 0.5) * step)).collect();
        Ok(Self { env: *env, step, signs, seed: config.seed })
    }

    pub fn n_steps(&self) -> usize {
        self.signs.len()
    }

    /// Accumulated phase `φ = Σ f(t_k) B_k Δt` of trajectory `index`.
    pub fn phase(&self, index: u64) -> f64 {
        let step = OuStep::new(&self.env, self.step);
        let mut rng = substream(self.seed, DOMAIN_OU, index);
        let mut b = step.start(&mut rng);
        let mut phi = 0.0;
        for (k, &s) in self.signs.iter().enumerate() {
            if k > 0 {
                b = step.advance(b, &mut rng);
            }
            phi += s * b;
        }
        phi * self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    /// `-ln⟨cos φ⟩`.
    pub attenuation: f64,
    /// Delta-method standard error of `attenuation`.
    pub std_error: f64,
    pub mean_cos: f64,
    pub n_traj: usize,
}

/// Reduces per-trajectory `cos φ` values, in index order, to an attenuation
/// estimate.
pub fn reduce_cosines(cosines: &[f64]) -> Result<OracleEstimate, NoiseError> {
    let n = cosines.len();
    if n < 2 {
        return Err(NoiseError::InvalidOracleConfig("need at least two trajectories"));
    }
    let mean = cosines.iter().sum::<f64>() / n as f64;
    let var = cosines.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64;
    if mean <= 0.0 {
        return Err(NoiseError::NonPositiveMean { mean_cos: mean });
    }
    let se_mean = libm::sqrt(var / n as f64);
    Ok(OracleEstimate { attenuation: -libm::log(mean), std_error: se_mean / mean, mean_cos: mean, n_traj: n })
}

/// Monte-Carlo estimate of the attenuation factor from sampled OU paths.
pub fn mc_attenuation_oracle(
    env: &LorentzianEnvironment,
    seq: &ControlSequence,
    config: &OracleConfig,
) -> Result<OracleEstimate, NoiseError> {
    let plan = PhasePlan::new(env, seq, config)?;
    let cosines: Vec<f64> = (0..config.n_traj as u64).map(|i| libm::cos(plan.phase(i))).collect();
    reduce_cosines(&cosines)
}
