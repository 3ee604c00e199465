//! Independent numerical checks of the closed-form models.

use std::f64::consts::PI;

use tauc_core::attenuation::{attenuation_exact_freq, attenuation_exact_time, AttenuationModel};
use tauc_core::control::{filter_function, filter_oracle, filter_weight, oracle_min_grid, ControlSequence};
use tauc_core::noise::{mc_attenuation_oracle, sample_ou_path, LorentzianEnvironment, OracleConfig, OuPathSpec};
use tauc_core::numeric::quad::{integrate, Tolerance};

fn env(g: f64, tau: f64) -> LorentzianEnvironment {
    LorentzianEnvironment::new(g, tau).unwrap()
}

#[test]
fn autocorrelation_and_psd_are_a_fourier_pair() {
    let e = env(1.7, 0.35);
    let tau = e.tau_c();
    for i in 0..20 {
        let w = 0.05 * f64::from(i) * f64::from(i) / tau;
        // ∫ C(s) cos(ωs) ds over the real line, integrating s ≥ 0 out to 60τ_c.
        let panels: Vec<f64> = (0..=600).map(|k| 0.1 * tau * f64::from(k)).collect();
        let half = integrate(|s| e.autocorrelation(s) * (w * s).cos(), &panels, Tolerance::relative(1e-12), 10_000_000).unwrap();
        let tail = e.autocorrelation(60.0 * tau) * tau; // bound on the neglected part
        let lhs = 2.0 * half.value;
        assert!((lhs - 2.0 * e.psd(w)).abs() < 1e-9 * e.psd(0.0) + 2.0 * tail, "ω={w}: {lhs} vs {}", 2.0 * e.psd(w));
    }
}

#[test]
fn filter_weight_obeys_parseval() {
    for n in [1u32, 2, 10, 100] {
        for t in [0.1, 1.0, 10.0] {
            let seq = ControlSequence::cpmg(n, t).unwrap();
            let cutoff = 400.0 * PI * f64::from(n) / t;
            let total = filter_weight(&seq, cutoff, 1e-9).unwrap();
            assert!((total / t - 1.0).abs() < 1e-4, "N={n} t={t}: {total}");
        }
    }
}

#[test]
fn closed_form_filter_matches_simpson_oracle() {
    for (n, t) in [(1u32, 1.0), (2, 0.3), (7, 2.0), (40, 5.0)] {
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let wc = seq.control_frequency().unwrap();
        for w in [0.0, 0.37 * wc, wc, 2.2 * wc, 5.0 * wc] {
            let grid = oracle_min_grid(&seq, w);
            let oracle = filter_oracle(&seq, w, grid).unwrap();
            let closed = filter_function(&seq, w);
            let scale = filter_function(&seq, wc).max(1e-300);
            assert!((closed - oracle).abs() <= 1e-6 * closed.abs().max(1e-6 * scale), "N={n} t={t} ω={w}: {closed} vs {oracle}");
        }
    }
}

#[test]
fn time_and_frequency_domain_agree() {
    let cases = [(8.58, 0.08, 2u32, 0.5), (8.58, 0.08, 100, 5.0), (1.0, 0.02, 20, 3.0), (0.5, 2.0, 4, 1.0), (3.0, 0.3, 1, 0.05)];
    for (g, tau, n, t) in cases {
        let e = env(g, tau);
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let a = attenuation_exact_time(&e, &seq);
        let b = attenuation_exact_freq(&e, &seq, 1e-8).unwrap();
        assert!((a - b).abs() <= 1e-6 * a, "{g} {tau} {n} {t}: {a} vs {b}");
    }
    let fid = ControlSequence::fid(0.7).unwrap();
    let e = env(1.2, 0.4);
    let a = attenuation_exact_time(&e, &fid);
    let b = attenuation_exact_freq(&e, &fid, 1e-8).unwrap();
    assert!((a - b).abs() <= 1e-6 * a);
}

#[test]
fn ou_path_has_stationary_statistics() {
    let e = env(2.0, 0.5);
    let dt = 0.05;
    let path = sample_ou_path(&e, &OuPathSpec { dt, n_steps: 400_000, seed: 3 }).unwrap();
    let n = path.len() as f64;
    let mean = path.iter().sum::<f64>() / n;
    let var = path.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n;
    // Effective sample size is about n·dt/(2τ_c).
    let n_eff = n * dt / (2.0 * e.tau_c());
    assert!(mean.abs() < 5.0 * 2.0 / n_eff.sqrt(), "mean {mean}");
    assert!((var / 4.0 - 1.0).abs() < 5.0 * (2.0 / n_eff).sqrt(), "var {var}");
    for lag in [1usize, 10, 20] {
        let c = path.windows(lag + 1).map(|w| (w[0] - mean) * (w[lag] - mean)).sum::<f64>() / (n - lag as f64);
        let expected = e.autocorrelation(lag as f64 * dt);
        assert!((c - expected).abs() < 0.05 * 4.0, "lag {lag}: {c} vs {expected}");
    }
    let again = sample_ou_path(&e, &OuPathSpec { dt, n_steps: 1000, seed: 3 }).unwrap();
    assert_eq!(&path[..1000], &again[..]);
}

#[test]
fn monte_carlo_oracle_within_three_standard_errors() {
    for (g, tau, n, t) in [(8.58, 0.08, 2u32, 0.3), (1.0, 0.5, 4, 1.5), (2.0, 0.2, 1, 0.4)] {
        let e = env(g, tau);
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let dt = (seq.inter_pulse_delay() / 50.0).min(tau / 200.0);
        let est = mc_attenuation_oracle(&e, &seq, &OracleConfig { n_traj: 20_000, dt, seed: 11 }).unwrap();
        let exact = AttenuationModel::ExactTime.evaluate(&e, &seq).unwrap();
        assert!((est.attenuation - exact).abs() < 3.0 * est.std_error, "{est:?} vs {exact}");
    }
}

#[test]
fn oracle_rejects_invalid_configs() {
    let e = env(1.0, 1.0);
    let seq = ControlSequence::cpmg(2, 1.0).unwrap();
    assert!(mc_attenuation_oracle(&e, &seq, &OracleConfig { n_traj: 10, dt: 1e-3, seed: 0 }).is_err());
    assert!(mc_attenuation_oracle(&e, &seq, &OracleConfig { n_traj: 1000, dt: 0.1, seed: 0 }).is_err());
}
