//! End-to-end simulated experiment: sampling, inversion under each model,
//! error statistics, the Fisher landscape and the artifact bundle.

use rayon::ThreadPool;
use serde_json::{json, Value};
use tauc_core::attenuation::{attenuation_exact_time, attenuation_lm, attenuation_nf, attenuation_sm, AttenuationModel};
use tauc_core::control::ControlSequence;
use tauc_core::estimation::{
    detect_critical_crossing, estimate_series, extract_attenuation, summarize_errors, DecayCurve, ErrorOptions, ErrorSeries,
    EstimationSeries,
};
use tauc_core::fisher::{critical_time, error_landscape, regime_criterion, ErrorLandscape, Regime};
use tauc_core::noise::LorentzianEnvironment;

use crate::bundle::{Bundle, BundleBuilder};
use crate::config::{Scenario, ScenarioConfig};
use crate::csvio::{self, AttenuationRow};
use crate::error::{ConfigError, Result, TaucError};
use crate::parallel;

pub fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::ShortMemory => "SM",
        Regime::LongMemory => "LM",
        Regime::Critical => "critical",
    }
}

pub fn attenuation_model_name(m: AttenuationModel) -> String {
    match m {
        AttenuationModel::ExactTime => "exact".into(),
        AttenuationModel::ExactFreq => "exact-freq".into(),
        AttenuationModel::NarrowFilter => "nf".into(),
        AttenuationModel::ShortMemory => "sm".into(),
        AttenuationModel::LongMemory => "lm".into(),
        AttenuationModel::MultiHarmonic(k) => format!("harmonics:{k}"),
    }
}

/// Everything a scenario run computes, before serialization.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub scenario: Scenario,
    pub curve: DecayCurve,
    pub estimates: Vec<EstimationSeries>,
    pub errors: ErrorSeries,
    pub landscape: ErrorLandscape,
}

pub fn simulate(scenario: &Scenario, pool: &ThreadPool) -> Result<ScenarioOutput> {
    let env = LorentzianEnvironment::new(scenario.g, scenario.tau_c)?;
    let curve = parallel::simulate_decay(pool, &env, scenario.n_pulses, &scenario.times, scenario.n_shots, scenario.n_reps, scenario.seed)?;

    let estimates = scenario
        .models
        .iter()
        .map(|&model| {
            let mut s = estimate_series(&curve, scenario.g, model)?;
            s.true_tau_c = Some(scenario.tau_c);
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;

    let rep_pairs = parallel::invert_repetitions(pool, &curve, scenario.g, scenario.error_model)?;
    let options = ErrorOptions { metric: scenario.metric, shot_scale: scenario.shot_scale, ..ErrorOptions::default() };
    let errors = summarize_errors(&curve, scenario.g, scenario.error_model, scenario.tau_c, &rep_pairs, options)?;

    let landscape = error_landscape(&env, scenario.n_pulses, &scenario.landscape_times, scenario.landscape_model).map_err(|e| match e {
        tauc_core::FisherError::GridTooNarrow { .. } | tauc_core::FisherError::InvalidGrid { .. } => {
            TaucError::Config(ConfigError::new("landscape", e.to_string()))
        }
        other => other.into(),
    })?;

    Ok(ScenarioOutput { scenario: scenario.clone(), curve, estimates, errors, landscape })
}

pub fn attenuation_rows(env: &LorentzianEnvironment, curve: &DecayCurve) -> Result<Vec<AttenuationRow>> {
    extract_attenuation(curve)
        .into_iter()
        .map(|obs| {
            let seq = ControlSequence::cpmg(curve.n_pulses(), obs.t)?;
            Ok(AttenuationRow {
                t: obs.t,
                j_obs: obs.value,
                j_exact: attenuation_exact_time(env, &seq),
                j_nf: attenuation_nf(env, &seq)?,
                j_sm: attenuation_sm(env, obs.t),
                j_lm: attenuation_lm(env, &seq)?,
            })
        })
        .collect()
}

pub fn landscape_summary(land: &ErrorLandscape, model: AttenuationModel) -> Value {
    json!({
        "model": attenuation_model_name(model),
        "critical_time_ms": land.critical_time,
        "global_minimum": {"t_ms": land.global_minimum.0, "eps_f": land.global_minimum.1},
        "optimal_side": regime_name(land.optimal_side),
        "local_minima": land.local_minima.iter().map(|&(t, e)| json!({"t_ms": t, "eps_f": e})).collect::<Vec<_>>(),
        "divergence_t_ms": land.divergence_time,
    })
}

pub fn crossing_summary(series: &EstimationSeries) -> Value {
    match detect_critical_crossing(series) {
        Ok(r) => json!({
            "method": format!("{:?}", r.method),
            "t_crit_ms": r.t_crit,
            "tau_hat_ms": r.tau_hat,
            "ratio": r.ratio,
            "ratio_true": r.ratio_true,
            "first_degenerate_t_ms": r.first_degenerate_t,
        }),
        Err(e) => json!({"error": e.to_string()}),
    }
}

pub fn bundle(config: &ScenarioConfig, out: &ScenarioOutput) -> Result<Bundle> {
    let s = &out.scenario;
    let env = LorentzianEnvironment::new(s.g, s.tau_c)?;
    let mut b = BundleBuilder::new();
    b.add("decay.csv", csvio::write_decay(&out.curve));
    if let Some(reps) = csvio::write_decay_reps(&out.curve) {
        b.add("decay_reps.csv", reps);
    }
    b.add("attenuation.csv", csvio::write_attenuation(&attenuation_rows(&env, &out.curve)?));
    let mut crossings = serde_json::Map::new();
    for series in &out.estimates {
        b.add(format!("estimates_{}.csv", series.model.name()), csvio::write_estimates(&series.pairs));
        if series.model.is_two_branch() {
            crossings.insert(series.model.name().to_string(), crossing_summary(series));
        }
    }
    b.add("errors.csv", csvio::write_errors(&out.errors.points));
    b.add("landscape.csv", csvio::write_landscape(&out.landscape));

    let regime = regime_criterion(s.g, s.tau_c, s.n_pulses)?;
    b.summarize("regime", json!({"score": regime.score, "label": regime_name(regime.label)}));
    b.summarize("critical_time_ms", json!(critical_time(&env, s.n_pulses)));
    b.summarize("crossings", Value::Object(crossings));
    b.summarize("errors_model", json!(s.error_model.name()));
    b.summarize("landscape", landscape_summary(&out.landscape, s.landscape_model));
    let config_echo = serde_json::to_value(config).expect("config serializes");
    Ok(b.finish("scenario", config_echo))
}

/// Validates, simulates and serializes; identical input yields identical bytes.
pub fn run_scenario(config: &ScenarioConfig, workers: usize) -> Result<Bundle> {
    let scenario = config.validate()?;
    let pool = parallel::pool(workers)?;
    let out = simulate(&scenario, &pool)?;
    bundle(config, &out)
}
