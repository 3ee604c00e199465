use std::f64::consts::PI;

use proptest::prelude::*;
use tauc_core::attenuation::{attenuation_exact_time, attenuation_lm, attenuation_nf, attenuation_sm, AttenuationModel};
use tauc_core::control::{filter_function, filter_oracle, oracle_min_grid, ControlSequence};
use tauc_core::estimation::{invert_exact, invert_lm, invert_nf, invert_sm, BranchStatus, ExactBrackets};
use tauc_core::noise::LorentzianEnvironment;

fn env(g: f64, tau: f64) -> LorentzianEnvironment {
    LorentzianEnvironment::new(g, tau).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn attenuation_scales_as_g_squared(g in 0.1f64..10.0, tau in 0.01f64..2.0, n in 1u32..50, t in 0.01f64..5.0, s in 0.2f64..5.0) {
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let a = attenuation_exact_time(&env(g, tau), &seq);
        let b = attenuation_exact_time(&env(s * g, tau), &seq);
        prop_assert!(rel(b, s * s * a) < 1e-12);
    }

    #[test]
    fn attenuation_is_invariant_under_time_rescaling(g in 0.1f64..10.0, tau in 0.01f64..2.0, n in 1u32..50, t in 0.01f64..5.0, s in 0.2f64..5.0) {
        // J depends on (gτ_c, t/τ_c) only.
        let a = attenuation_exact_time(&env(g, tau), &ControlSequence::cpmg(n, t).unwrap());
        let b = attenuation_exact_time(&env(g / s, s * tau), &ControlSequence::cpmg(n, s * t).unwrap());
        prop_assert!(rel(b, a) < 1e-11);
    }

    #[test]
    fn closed_form_filter_matches_quadrature(n in 1u32..12, t in 0.05f64..3.0, x in 0.0f64..6.0) {
        let seq = ControlSequence::cpmg(n, t).unwrap();
        let w = x * seq.control_frequency().unwrap();
        let oracle = filter_oracle(&seq, w, oracle_min_grid(&seq, w)).unwrap();
        let closed = filter_function(&seq, w);
        let peak = filter_function(&seq, seq.control_frequency().unwrap());
        prop_assert!((closed - oracle).abs() <= 1e-6 * closed.max(1e-6 * peak));
    }

    #[test]
    fn attenuation_is_non_negative_and_bounded_by_fid(g in 0.1f64..10.0, tau in 0.01f64..2.0, n in 1u32..50, t in 0.01f64..5.0) {
        let e = env(g, tau);
        let j = attenuation_exact_time(&e, &ControlSequence::cpmg(n, t).unwrap());
        let fid = attenuation_exact_time(&e, &ControlSequence::fid(t).unwrap());
        prop_assert!(j >= 0.0);
        prop_assert!(j <= fid * (1.0 + 1e-12));
    }

    #[test]
    fn nf_inversion_round_trip(g in 0.5f64..10.0, tau in 0.01f64..1.0, n in 1u32..100, r in 0.05f64..20.0) {
        let t = r * f64::from(n) * PI * tau;
        let e = env(g, tau);
        let j = attenuation_nf(&e, &ControlSequence::cpmg(n, t).unwrap()).unwrap();
        let p = invert_nf(j, t, n, g).unwrap();
        prop_assert!(p.status.has_roots());
        let best = rel(p.tau_minus.unwrap(), tau).min(rel(p.tau_plus.unwrap(), tau));
        // Near the double root the inversion loses half the digits.
        prop_assert!(best < 1e-10 || (p.discriminant < 1e-8 && best < 1e-4));
    }

    #[test]
    fn limit_inversions_round_trip(g in 0.1f64..10.0, tau in 0.001f64..1.0, n in 1u32..100, t in 0.01f64..10.0) {
        let e = env(g, tau);
        let seq = ControlSequence::cpmg(n, t).unwrap();
        prop_assert!(rel(invert_sm(attenuation_sm(&e, t), t, g).unwrap(), tau) < 1e-12);
        prop_assert!(rel(invert_lm(attenuation_lm(&e, &seq).unwrap(), t, n, g).unwrap(), tau) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_inversion_round_trip(g in 0.5f64..10.0, tau in 0.01f64..1.0, n in 1u32..60, r in 0.1f64..10.0) {
        let t = r * f64::from(n) * PI * tau;
        let e = env(g, tau);
        let j = AttenuationModel::ExactTime.evaluate(&e, &ControlSequence::cpmg(n, t).unwrap()).unwrap();
        let p = invert_exact(j, t, n, g, ExactBrackets::default()).unwrap();
        prop_assert!(matches!(p.status, BranchStatus::TwoRoots | BranchStatus::DoubleRoot));
        let best = rel(p.tau_minus.unwrap(), tau).min(rel(p.tau_plus.unwrap(), tau));
        prop_assert!(best < 1e-6 || p.discriminant < 1e-6, "best {} disc {}", best, p.discriminant);
    }
}

#[test]
fn limits_converge_in_their_regimes() {
    let (g, tau, n) = (8.58, 0.08, 2u32);
    let tc = f64::from(n) * PI * tau;
    let err = |r: f64, model: AttenuationModel| {
        let seq = ControlSequence::cpmg(n, r * tc).unwrap();
        let e = env(g, tau);
        let exact = attenuation_exact_time(&e, &seq);
        rel(model.evaluate(&e, &seq).unwrap(), exact)
    };
    // Deep short memory and deep long memory.
    assert!(err(20.0, AttenuationModel::ShortMemory) < 0.05);
    assert!(err(0.2, AttenuationModel::LongMemory) < 0.10);
    // Errors shrink monotonically moving deeper into each regime.
    let sm: Vec<f64> = [2.0, 5.0, 10.0, 20.0, 50.0].iter().map(|&r| err(r, AttenuationModel::ShortMemory)).collect();
    let lm: Vec<f64> = [1.0, 0.5, 0.3, 0.1, 0.05].iter().map(|&r| err(r, AttenuationModel::LongMemory)).collect();
    assert!(sm.windows(2).all(|w| w[1] < w[0]), "{sm:?}");
    assert!(lm.windows(2).all(|w| w[1] < w[0]), "{lm:?}");
}
