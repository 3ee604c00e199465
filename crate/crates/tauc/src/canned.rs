//! Built-in parameter sets for the three reference regimes and the
//! `reproduce` targets built on them.

use std::f64::consts::PI;

use serde_json::{json, Value};
use tauc_core::attenuation::AttenuationModel;
use tauc_core::estimation::{summarize_errors, ErrorOptions};
use tauc_core::fisher::error_landscape;
use tauc_core::noise::LorentzianEnvironment;

use crate::bundle::{Bundle, BundleBuilder};
use crate::config::{EnvironmentConfig, ErrorsConfig, GridConfig, SamplingConfig, ScenarioConfig, SequenceConfig, SCHEMA_VERSION};
use crate::csvio;
use crate::error::{ConfigError, Result};
use crate::parallel;
use crate::scenario::{self, landscape_summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Near-critical, score ≈ 1.4.
    A,
    /// Long memory, score ≈ 9.7.
    B,
    /// Short memory, score ≈ 0.13.
    C,
}

impl Case {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Case::A),
            "b" => Ok(Case::B),
            "c" => Ok(Case::C),
            other => Err(ConfigError::new("--case", format!("unknown case `{other}` (expected a, b or c)")).into()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
        }
    }

    /// `(g, τ_c, N)` in kHz, ms and pulses.
    pub fn parameters(&self) -> (f64, f64, u32) {
        match self {
            Case::A => (8.58, 0.08, 2),
            Case::B => (8.58, 0.08, 100),
            Case::C => (1.0, 0.02, 20),
        }
    }

    /// Sampling window in units of `Nπτ_c`, chosen where the decay is still
    /// resolvable with 10⁵ shots.
    pub fn window(&self) -> (f64, f64, usize) {
        match self {
            Case::A => (0.1, 2.5, 40),
            Case::B => (0.05, 0.4, 32),
            Case::C => (0.3, 30.0, 40),
        }
    }

    pub fn default_seed(&self) -> u64 {
        match self {
            Case::A => 0x7a0c_0001,
            Case::B => 0x7a0c_0002,
            Case::C => 0x7a0c_0003,
        }
    }

    pub fn critical_time(&self) -> f64 {
        let (_, tau, n) = self.parameters();
        f64::from(n) * PI * tau
    }

    pub fn config(&self, seed: Option<u64>, n_shots: u64) -> ScenarioConfig {
        let (g, tau_c, n_pulses) = self.parameters();
        let (lo, hi, n_points) = self.window();
        let tc = self.critical_time();
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            environment: EnvironmentConfig { g, tau_c },
            sequence: SequenceConfig { kind: "cpmg".into(), n_pulses },
            grid: GridConfig { t_min: lo * tc, t_max: hi * tc, n_points, spacing: "log".into() },
            sampling: SamplingConfig { n_shots, n_reps: 50, seed: Some(seed.unwrap_or(self.default_seed())) },
            models: ["exact", "nf", "sm", "lm"].iter().map(|s| s.to_string()).collect(),
            landscape: None,
            errors: ErrorsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Fig2Insets,
    Fig3,
    Fig6Like,
}

impl Target {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig2-insets" => Ok(Target::Fig2Insets),
            "fig3" => Ok(Target::Fig3),
            "fig6-like" => Ok(Target::Fig6Like),
            other => Err(ConfigError::new("target", format!("unknown target `{other}` (expected fig2-insets, fig3 or fig6-like)")).into()),
        }
    }
}

pub const SHOT_LADDER: [u64; 3] = [1_000, 10_000, 100_000];

pub fn reproduce(target: Target, case: Case, seed: Option<u64>, workers: usize) -> Result<Bundle> {
    match target {
        Target::Fig3 => scenario::run_scenario(&case.config(seed, 100_000), workers),
        Target::Fig2Insets => insets(case),
        Target::Fig6Like => shot_ladder(case, seed, workers),
    }
}

/// Exact and narrow-filter CRB landscapes; deterministic, so no seed.
fn insets(case: Case) -> Result<Bundle> {
    let (g, tau_c, n) = case.parameters();
    let env = LorentzianEnvironment::new(g, tau_c)?;
    let tc = case.critical_time();
    let times = tauc_core::numeric::log_space(
        crate::config::LANDSCAPE_SPAN.0 * tc,
        crate::config::LANDSCAPE_SPAN.1 * tc,
        crate::config::LANDSCAPE_POINTS,
    );
    let mut b = BundleBuilder::new();
    for (name, model) in [("exact", AttenuationModel::ExactTime), ("nf", AttenuationModel::NarrowFilter)] {
        let land = error_landscape(&env, n, &times, model)?;
        b.add(format!("landscape_{name}.csv"), csvio::write_landscape(&land));
        b.summarize(format!("landscape_{name}"), landscape_summary(&land, model));
    }
    let regime = tauc_core::fisher::regime_criterion(g, tau_c, n)?;
    b.summarize("regime", json!({"score": regime.score, "label": scenario::regime_name(regime.label)}));
    Ok(b.finish("fig2-insets", case_echo(case, None)))
}

/// Errors versus shot budget, one simulated experiment per budget.
fn shot_ladder(case: Case, seed: Option<u64>, workers: usize) -> Result<Bundle> {
    let pool = parallel::pool(workers)?;
    let mut b = BundleBuilder::new();
    let mut configs = Vec::new();
    for n_shots in SHOT_LADDER {
        let cfg = case.config(seed, n_shots);
        let s = cfg.validate()?;
        let env = LorentzianEnvironment::new(s.g, s.tau_c)?;
        let curve = parallel::simulate_decay(&pool, &env, s.n_pulses, &s.times, s.n_shots, s.n_reps, s.seed)?;
        let reps = parallel::invert_repetitions(&pool, &curve, s.g, s.error_model)?;
        let options = ErrorOptions { metric: s.metric, shot_scale: s.shot_scale, ..ErrorOptions::default() };
        let errors = summarize_errors(&curve, s.g, s.error_model, s.tau_c, &reps, options)?;
        b.add(format!("decay_shots{n_shots}.csv"), csvio::write_decay(&curve));
        b.add(format!("errors_shots{n_shots}.csv"), csvio::write_errors(&errors.points));
        configs.push(serde_json::to_value(&cfg).expect("config serializes"));
    }
    Ok(b.finish("fig6-like", case_echo(case, Some(Value::Array(configs)))))
}

fn case_echo(case: Case, configs: Option<Value>) -> Value {
    let (g, tau_c, n) = case.parameters();
    let mut v = json!({"case": case.name(), "g": g, "tau_c": tau_c, "n_pulses": n});
    if let Some(c) = configs {
        v["runs"] = c;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canned_configs_validate() {
        for case in [Case::A, Case::B, Case::C] {
            let s = case.config(None, 100_000).validate().unwrap();
            assert_eq!(s.seed, case.default_seed());
            assert!(s.times[0] < case.critical_time());
        }
        assert_eq!(Case::A.config(Some(9), 10).sampling.seed, Some(9));
        assert!(Case::parse("d").is_err());
        assert!(Target::parse("fig4").is_err());
    }
}
