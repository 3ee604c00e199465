//! Scenario configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//!
//! [environment]
//! g = 8.58        # ms⁻¹
//! tau_c = 0.08    # ms
//!
//! [sequence]
//! kind = "cpmg"
//! n_pulses = 2
//!
//! [grid]
//! t_min = 0.05    # ms
//! t_max = 1.3
//! n_points = 40
//! spacing = "log" # or "linear"
//!
//! [sampling]
//! n_shots = 100000
//! n_reps = 50
//! seed = 7
//!
//! models = ["exact", "nf", "sm", "lm"]
//! ```
//!
//! Optional tables: `[landscape]` (`t_min`, `t_max`, `n_points`, `model`) and
//! `[errors]` (`model`, `metric`, `shot_scale`).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use tauc_core::attenuation::AttenuationModel;
use tauc_core::estimation::{ErrorMetric, InversionModel};
use tauc_core::numeric::{lin_space, log_space};

use crate::error::ConfigError;

pub const SCHEMA_VERSION: u32 = 1;
/// Default landscape span, in multiples of `Nπτ_c`.
pub const LANDSCAPE_SPAN: (f64, f64) = (0.01, 100.0);
pub const LANDSCAPE_POINTS: usize = 321;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub environment: EnvironmentConfig,
    pub sequence: SequenceConfig,
    pub grid: GridConfig,
    pub sampling: SamplingConfig,
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeConfig>,
    #[serde(default)]
    pub errors: ErrorsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub g: f64,
    pub tau_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default = "default_kind")]
    pub kind: String,
    pub n_pulses: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_shots: u64,
    pub n_reps: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default = "default_landscape_model")]
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsConfig {
    #[serde(default = "default_error_model")]
    pub model: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_scale: Option<f64>,
}

impl Default for ErrorsConfig {
    fn default() -> Self {
        Self { model: default_error_model(), metric: default_metric(), shot_scale: None }
    }
}

fn default_models() -> Vec<String> {
    ["exact", "nf", "sm", "lm"].iter().map(|s| s.to_string()).collect()
}
fn default_kind() -> String {
    "cpmg".into()
}
fn default_spacing() -> String {
    "log".into()
}
fn default_landscape_model() -> String {
    "exact".into()
}
fn default_error_model() -> String {
    "exact".into()
}
fn default_metric() -> String {
    "rms".into()
}

pub fn parse_attenuation_model(field: &str, s: &str) -> Result<AttenuationModel, ConfigError> {
    Ok(match s {
        "exact" => AttenuationModel::ExactTime,
        "exact-freq" => AttenuationModel::ExactFreq,
        "nf" => AttenuationModel::NarrowFilter,
        "sm" => AttenuationModel::ShortMemory,
        "lm" => AttenuationModel::LongMemory,
        other => match other.strip_prefix("harmonics:").and_then(|k| k.parse::<u32>().ok()) {
            Some(k) if k % 2 == 1 => AttenuationModel::MultiHarmonic(k),
            _ => {
                return Err(ConfigError::new(
                    field,
                    format!("unknown model `{s}` (expected exact, exact-freq, nf, sm, lm or harmonics:<odd k>)"),
                ))
            }
        },
    })
}

pub fn parse_inversion_model(field: &str, s: &str) -> Result<InversionModel, ConfigError> {
    InversionModel::parse(s).ok_or_else(|| ConfigError::new(field, format!("unknown model `{s}` (expected exact, nf, sm or lm)")))
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

/// Validated, typed view of a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub g: f64,
    pub tau_c: f64,
    pub n_pulses: u32,
    pub times: Vec<f64>,
    pub n_shots: u64,
    pub n_reps: u32,
    pub seed: u64,
    pub models: Vec<InversionModel>,
    pub landscape_times: Vec<f64>,
    pub landscape_model: AttenuationModel,
    pub error_model: InversionModel,
    pub metric: ErrorMetric,
    pub shot_scale: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map_or_else(|| "<document>".to_string(), |s| format!("bytes {}..{}", s.start, s.end));
            ConfigError::new(field, e.message().to_string())
        })?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::new("schema_version", format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        let g = positive("environment.g", self.environment.g)?;
        let tau_c = positive("environment.tau_c", self.environment.tau_c)?;
        if self.sequence.kind != "cpmg" {
            return Err(ConfigError::new("sequence.kind", format!("`{}` is not supported; the estimation pipeline needs \"cpmg\"", self.sequence.kind)));
        }
        let n_pulses = self.sequence.n_pulses;
        if n_pulses == 0 {
            return Err(ConfigError::new("sequence.n_pulses", "must be at least 1"));
        }

        let t_min = positive("grid.t_min", self.grid.t_min)?;
        let t_max = positive("grid.t_max", self.grid.t_max)?;
        if t_max <= t_min {
            return Err(ConfigError::new("grid.t_max", "must exceed grid.t_min"));
        }
        if self.grid.n_points < 2 {
            return Err(ConfigError::new("grid.n_points", "must be at least 2"));
        }
        let times = match self.grid.spacing.as_str() {
            "log" => log_space(t_min, t_max, self.grid.n_points),
            "linear" => lin_space(t_min, t_max, self.grid.n_points),
            other => return Err(ConfigError::new("grid.spacing", format!("unknown spacing `{other}` (expected log or linear)"))),
        };

        if self.sampling.n_shots == 0 {
            return Err(ConfigError::new("sampling.n_shots", "must be at least 1"));
        }
        if self.sampling.n_reps == 0 {
            return Err(ConfigError::new("sampling.n_reps", "must be at least 1"));
        }
        let seed = self.sampling.seed.ok_or_else(|| ConfigError::new("sampling.seed", "a seed is required for sampling"))?;

        if self.models.is_empty() {
            return Err(ConfigError::new("models", "at least one model is required"));
        }
        let mut models = Vec::new();
        for (i, m) in self.models.iter().enumerate() {
            let model = parse_inversion_model(&format!("models[{i}]"), m)?;
            if models.contains(&model) {
                return Err(ConfigError::new(format!("models[{i}]"), format!("duplicate model `{m}`")));
            }
            models.push(model);
        }

        let tc = f64::from(n_pulses) * PI * tau_c;
        let (landscape_times, landscape_model) = match &self.landscape {
            Some(l) => {
                let lo = positive("landscape.t_min", l.t_min)?;
                let hi = positive("landscape.t_max", l.t_max)?;
                if hi <= lo {
                    return Err(ConfigError::new("landscape.t_max", "must exceed landscape.t_min"));
                }
                if l.n_points < tauc_core::fisher::LANDSCAPE_MIN_POINTS {
                    return Err(ConfigError::new("landscape.n_points", format!("must be at least {}", tauc_core::fisher::LANDSCAPE_MIN_POINTS)));
                }
                (log_space(lo, hi, l.n_points), parse_attenuation_model("landscape.model", &l.model)?)
            }
            None => (log_space(LANDSCAPE_SPAN.0 * tc, LANDSCAPE_SPAN.1 * tc, LANDSCAPE_POINTS), AttenuationModel::ExactTime),
        };

        let error_model = parse_inversion_model("errors.model", &self.errors.model)?;
        let metric = match self.errors.metric.as_str() {
            "rms" => ErrorMetric::Rms,
            "mad" => ErrorMetric::MeanAbs,
            other => return Err(ConfigError::new("errors.metric", format!("unknown metric `{other}` (expected rms or mad)"))),
        };
        let shot_scale = self.errors.shot_scale.map(|s| positive("errors.shot_scale", s)).transpose()?;

        Ok(Scenario {
            g,
            tau_c,
            n_pulses,
            times,
            n_shots: self.sampling.n_shots,
            n_reps: self.sampling.n_reps,
            seed,
            models,
            landscape_times,
            landscape_model,
            error_model,
            metric,
            shot_scale,
        })
    }
}
