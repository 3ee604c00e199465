//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use tauc_core::estimation::{
    estimate_series, fit_lorentzian, invert_repetitions, reconstruct_psd, summarize_errors, DecayCurve, ErrorMetric, ErrorOptions,
    EstimationSeries, HarmonicWeight,
};
use tauc_core::fisher::error_landscape;
use tauc_core::noise::LorentzianEnvironment;
use tauc_core::numeric::log_space;

use crate::bundle::write_atomic;
use crate::canned::{self, Case, Target};
use crate::config::{parse_attenuation_model, parse_inversion_model, ScenarioConfig};
use crate::csvio;
use crate::error::{ConfigError, Result, TaucError};
use crate::scenario::{self, landscape_summary};

#[derive(Debug, Parser)]
#[command(name = "tauc", version, about = "Memory-time estimation of Lorentzian dephasing noise with CPMG probes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulated experiment described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sampling.seed`; one of the two is required.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Invert a measured decay curve into branch-resolved estimates.
    Estimate {
        #[arg(long)]
        model: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Optional per-repetition file (`rep,t_ms,mx`) for error statistics.
        #[arg(long)]
        reps: Option<PathBuf>,
        #[arg(long)]
        g: Option<f64>,
        /// Reference value; with `--reps` also emits errors.csv.
        #[arg(long)]
        true_tau: Option<f64>,
        #[arg(long, default_value = "rms")]
        metric: String,
        /// Multiplier turning per-experiment errors into per-measurement ones.
        #[arg(long)]
        shot_scale: Option<f64>,
        /// Output directory; estimates go to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fisher-information error landscape over a log time grid.
    Qfi {
        #[arg(long, default_value = "exact")]
        model: String,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        tau_c: f64,
        #[arg(long)]
        n_pulses: u32,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = crate::config::LANDSCAPE_POINTS)]
        n_points: usize,
        /// CSV destination; the summary always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the spectral density from decays and fit a Lorentzian.
    Spectroscopy {
        #[arg(long = "in", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "parseval")]
        weight: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report the avoided crossing of an estimates file.
    Criticality {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "nf")]
        model: String,
        #[arg(long)]
        n_pulses: u32,
        #[arg(long)]
        true_tau: Option<f64>,
    },
    /// Regenerate a canned dataset.
    Reproduce {
        /// fig2-insets, fig3 or fig6-like.
        target: String,
        #[arg(long)]
        case: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out, workers } => {
            let mut cfg = ScenarioConfig::from_toml(&csvio::read_file(&config)?)?;
            if seed.is_some() {
                cfg.sampling.seed = seed;
            }
            if cfg.sampling.seed.is_none() {
                return Err(ConfigError::new("--seed", "required for simulation (or set sampling.seed)").into());
            }
            let bundle = scenario::run_scenario(&cfg, workers)?;
            bundle.write_to(&out)?;
            emit(stdout, &json!({"out": out, "manifest_sha256": bundle.manifest_hash()}))
        }
        Command::Estimate { model, input, reps, g, true_tau, metric, shot_scale, out } => {
            let model = parse_inversion_model("--model", &model)?;
            let g = positive("--g", g.ok_or_else(|| ConfigError::new("--g", "the coupling g is required for inversion"))?)?;
            let metric = match metric.as_str() {
                "rms" => ErrorMetric::Rms,
                "mad" => ErrorMetric::MeanAbs,
                other => return Err(ConfigError::new("--metric", format!("unknown metric `{other}`")).into()),
            };
            let shot_scale = shot_scale.map(|s| positive("--shot-scale", s)).transpose()?;
            let true_tau = true_tau.map(|t| positive("--true-tau", t)).transpose()?;
            let curve = load_curve(&input, reps.as_deref())?;

            let mut series = estimate_series(&curve, g, model)?;
            series.true_tau_c = true_tau;
            let estimates = csvio::write_estimates(&series.pairs);
            let errors = match (true_tau, curve.per_rep().is_some()) {
                (Some(tau), true) => {
                    let rep_pairs = invert_repetitions(&curve, g, model)?;
                    let options = ErrorOptions { metric, shot_scale, ..ErrorOptions::default() };
                    Some(csvio::write_errors(&summarize_errors(&curve, g, model, tau, &rep_pairs, options)?.points))
                }
                _ => None,
            };
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| TaucError::io(&dir, e))?;
                    write_atomic(&dir.join(format!("estimates_{}.csv", model.name())), estimates.as_bytes())?;
                    if let Some(e) = errors {
                        write_atomic(&dir.join("errors.csv"), e.as_bytes())?;
                    }
                    Ok(())
                }
                None => stdout.write_all(estimates.as_bytes()).map_err(|e| TaucError::io("<stdout>", e)),
            }
        }
        Command::Qfi { model, g, tau_c, n_pulses, t_min, t_max, n_points, out } => {
            let model = parse_attenuation_model("--model", &model)?;
            let env = LorentzianEnvironment::new(positive("--g", g)?, positive("--tau-c", tau_c)?).map_err(|e| ConfigError::new("--g/--tau-c", e.to_string()))?;
            if n_pulses == 0 {
                return Err(ConfigError::new("--n-pulses", "must be at least 1").into());
            }
            let tc = f64::from(n_pulses) * std::f64::consts::PI * tau_c;
            let lo = positive("--t-min", t_min.unwrap_or(crate::config::LANDSCAPE_SPAN.0 * tc))?;
            let hi = positive("--t-max", t_max.unwrap_or(crate::config::LANDSCAPE_SPAN.1 * tc))?;
            if hi <= lo {
                return Err(ConfigError::new("--t-max", "must exceed --t-min").into());
            }
            let land = error_landscape(&env, n_pulses, &log_space(lo, hi, n_points), model).map_err(|e| match e {
                tauc_core::FisherError::GridTooNarrow { .. } | tauc_core::FisherError::InvalidGrid { .. } => {
                    TaucError::Config(ConfigError::new("--t-min/--t-max/--n-points", e.to_string()))
                }
                other => other.into(),
            })?;
            if let Some(path) = out {
                write_atomic(&path, csvio::write_landscape(&land).as_bytes())?;
            }
            emit(stdout, &landscape_summary(&land, model))
        }
        Command::Spectroscopy { inputs, weight, out } => {
            let weight = HarmonicWeight::parse(&weight)
                .ok_or_else(|| ConfigError::new("--weight", format!("unknown weight `{weight}` (expected parseval or first-harmonic)")))?;
            let curves = inputs.iter().map(|p| load_curve(p, None)).collect::<Result<Vec<DecayCurve>>>()?;
            let samples = reconstruct_psd(&curves, weight);
            if let Some(path) = &out {
                write_atomic(path, csvio::write_spectroscopy(&samples).as_bytes())?;
            }
            let fit = fit_lorentzian(&samples)?;
            emit(
                stdout,
                &json!({
                    "weight": weight.name(),
                    "n_samples": fit.samples.len(),
                    "g": fit.fitted_g,
                    "tau_c_ms": fit.fitted_tau_c,
                    "residual_rms_log": fit.residual_rms,
                    "iterations": fit.iterations,
                }),
            )
        }
        Command::Criticality { input, model, n_pulses, true_tau } => {
            let model = parse_inversion_model("--model", &model)?;
            if !model.is_two_branch() {
                return Err(ConfigError::new("--model", "crossing detection needs a two-branch model (exact or nf)").into());
            }
            let source = input.display().to_string();
            let pairs = csvio::read_estimates(&csvio::read_file(&input)?, &source)?;
            let series = EstimationSeries { model, n_pulses, pairs, true_tau_c: true_tau };
            let report = scenario::crossing_summary(&series);
            if let Some(msg) = report.get("error").and_then(Value::as_str) {
                return Err(TaucError::Numerical(msg.to_string()));
            }
            emit(stdout, &report)
        }
        Command::Reproduce { target, case, out, seed, workers } => {
            let target = Target::parse(&target)?;
            let case = Case::parse(&case)?;
            let bundle = canned::reproduce(target, case, seed, workers)?;
            bundle.write_to(&out)?;
            emit(stdout, &json!({"out": out, "manifest_sha256": bundle.manifest_hash()}))
        }
    }
}

fn load_curve(path: &Path, reps: Option<&Path>) -> Result<DecayCurve> {
    let source = path.display().to_string();
    let curve = csvio::read_decay(&csvio::read_file(path)?, &source)?;
    match reps {
        Some(r) => csvio::read_decay_reps(&csvio::read_file(r)?, &r.display().to_string(), curve),
        None => Ok(curve),
    }
}

fn positive(field: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(ConfigError::new(field, format!("must be a positive finite number, got {x}")).into())
    }
}

fn emit(stdout: &mut dyn Write, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("json serializes");
    text.push('\n');
    stdout.write_all(text.as_bytes()).map_err(|e| TaucError::io("<stdout>", e))
}
