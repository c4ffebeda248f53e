//! Property tests against independent oracles.

mod common;

use beamctl::beamsim::{simulate, ForcingSpec};
use beamctl::biortho::{default_intervals, FamilyIndex};
use beamctl::control::{moment_targets, synthesize_null_control, synthesize_profiles, SynthesisOptions};
use beamctl::modal::{free_state, restricted_inner, signed_cos, BeamState, EndpointState};
use beamctl::spectrum::{char_roots, classify_regime, cluster_map, default_epsilon, frequency_set, Regime, SpectralParams};
use beamctl::C64;
use common::{rk4, Rule, Signal};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn coeffs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn roots_satisfy_vieta(alpha in 0.0f64..2.0, rho in 0.05f64..6.0, n in 1usize..60) {
        let p = SpectralParams::new(alpha, rho, n).unwrap();
        let r = char_roots(n, &p);
        let n4 = (n as f64).powi(4);
        let b = p.damping(n);
        prop_assert!((r.lambda_plus * r.lambda_minus - n4).norm() <= 1e-10 * n4);
        prop_assert!((r.lambda_plus + r.lambda_minus + b).norm() <= 1e-10 * (b + n4.sqrt()));
        let fs = frequency_set(p);
        prop_assert!(fs.entries.iter().all(|e| e.lambda.im > 0.0));
    }

    #[test]
    fn closed_form_angles_match_quadrature(a in 0.0f64..3.0, w in 0.05f64..3.0, n in 1usize..40, m in 1usize..40) {
        prop_assume!(n != m);
        let b = (a + w).min(std::f64::consts::PI);
        prop_assume!(b - a > 0.05);
        let rule = Rule::new(a, b, 64, 16);
        let inner = common::restricted_inner_quad(n, m, &rule);
        prop_assert!((restricted_inner(n, m, a, b) - inner).abs() <= 1e-11);
        let norm = (common::restricted_inner_quad(n, n, &rule) * common::restricted_inner_quad(m, m, &rule)).sqrt();
        prop_assert!((signed_cos(n, m, a, b).unwrap() - inner / norm).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn profiles_split_every_cluster(alpha in 1.05f64..1.45, rho in 0.3f64..4.0, n in 3usize..10, scale in 0.5f64..1.99) {
        let p = SpectralParams::new(alpha, rho, n).unwrap();
        prop_assume!(classify_regime(&p).regime == Regime::TwoDim);
        let fs = frequency_set(p);
        let cm = cluster_map(&fs, default_epsilon(&fs) * scale);
        prop_assume!(cm.is_ok());
        let cm = cm.unwrap();
        let profiles = synthesize_profiles(&fs, &cm);
        prop_assume!(profiles.is_ok());
        let profiles = profiles.unwrap();
        prop_assert!(profiles.split_violations(&cm).is_empty());
        for k in 1..=n {
            prop_assert!(profiles.h1[k - 1] != 0.0 || profiles.h2[k - 1] != 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_state_matches_rk4(alpha in 0.2f64..1.4, rho in 0.3f64..3.0, u0 in coeffs(3), u1 in coeffs(3), t in 0.2f64..1.5) {
        let p = SpectralParams::new(alpha, rho, 3).unwrap();
        let fs = frequency_set(p);
        let state = BeamState::new(u0.clone(), u1.clone()).unwrap();
        let ep = free_state(&state, &fs, t).unwrap();
        for n in 1..=3 {
            let (a, v) = rk4(p.damping(n), (n as f64).powi(4), u0[n - 1], u1[n - 1], |_| 0.0, t, 20000);
            let scale = u0[n - 1].abs() + u1[n - 1].abs();
            prop_assert!((ep.gamma1[n - 1] - a).norm() <= 1e-8 * scale);
            prop_assert!((ep.gamma2[n - 1] - v).norm() <= 1e-8 * scale * (n * n) as f64);
        }
    }

    #[test]
    fn double_root_free_state_matches_rk4(u0 in coeffs(3), u1 in coeffs(3), t in 0.2f64..1.5) {
        let p = SpectralParams::new(1.0, 2.0, 3).unwrap();
        let fs = frequency_set(p);
        prop_assert_eq!(fs.double_modes.len(), 3);
        let ep = free_state(&BeamState::new(u0.clone(), u1.clone()).unwrap(), &fs, t).unwrap();
        for n in 1..=3 {
            let (a, v) = rk4(p.damping(n), (n as f64).powi(4), u0[n - 1], u1[n - 1], |_| 0.0, t, 20000);
            let scale = u0[n - 1].abs() + u1[n - 1].abs();
            prop_assert!((ep.gamma1[n - 1] - a).norm() <= 1e-8 * scale);
            prop_assert!((ep.gamma2[n - 1] - v).norm() <= 1e-8 * scale * (n * n) as f64);
        }
    }

    #[test]
    fn duhamel_matches_rk4(alpha in 0.2f64..1.4, rho in 0.3f64..3.0, seed in any::<u64>(), h in coeffs(3)) {
        let t = 1.0;
        let p = SpectralParams::new(alpha, rho, 3).unwrap();
        let fs = frequency_set(p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Signal::random(&mut rng, t, 5);
        let intervals = default_intervals(fs.max_abs(), t);
        let forcing = ForcingSpec::Profiled {
            t_final: t,
            f1: s.sample(intervals),
            f2: vec![0.0; intervals + 1],
            h1: h.clone(),
            h2: vec![0.0; 3],
        };
        let sim = simulate(&BeamState::zero(3), &forcing, &fs, t).unwrap();
        for n in 1..=3 {
            let (a, v) = rk4(p.damping(n), (n as f64).powi(4), 0.0, 0.0, |x| h[n - 1] * s.eval(x), t, 20000);
            let m = &sim.modes[n - 1];
            prop_assert!((m.a - a).norm() <= 1e-8 * (1.0 + a.abs()));
            prop_assert!((m.a_prime - v).norm() <= 1e-7 * (1.0 + v.abs()));
        }
    }

    /// The moments of the simulated endpoint equal `∫ e^{root τ} f_n(T - τ) dτ`.
    #[test]
    fn moments_match_direct_integrals(alpha in 0.3f64..1.3, rho in 0.5f64..3.0, seed in any::<u64>()) {
        let t = 1.0;
        let fs = frequency_set(SpectralParams::new(alpha, rho, 4).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Signal::random(&mut rng, t, 5);
        let h = [1.0, -0.5, 0.25, 0.8];
        let intervals = default_intervals(fs.max_abs(), t);
        let forcing = ForcingSpec::Profiled {
            t_final: t,
            f1: s.sample(intervals),
            f2: vec![0.0; intervals + 1],
            h1: h.to_vec(),
            h2: vec![0.0; 4],
        };
        let sim = simulate(&BeamState::zero(4), &forcing, &fs, t).unwrap();
        let ep = EndpointState {
            gamma1: sim.modes.iter().map(|m| m.a).collect(),
            gamma2: sim.modes.iter().map(|m| m.a_prime).collect(),
            t_final: t,
        };
        let md = moment_targets(&ep, &fs).unwrap();
        let rule = Rule::new(0.0, t, 32, 16);
        for k in fs.indices() {
            let n = k.unsigned_abs() as usize;
            let ix = FamilyIndex::for_target(k, &fs);
            let root = fs.root_of(ix.k);
            let want: C64 = rule.integrate(|x| {
                let w = if ix.weighted { x } else { 1.0 };
                (root * x).exp() * w * h[n - 1] * s.eval(t - x)
            });
            prop_assert!((md.get(k) - want).norm() <= 1e-8 * (1.0 + want.norm()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn control_is_linear_in_the_data(a in coeffs(4), b in coeffs(4), va in coeffs(4), vb in coeffs(4)) {
        let p = SpectralParams::new(0.5, 1.0, 4).unwrap();
        let opts = SynthesisOptions::default();
        let sa = BeamState::new(a.clone(), va.clone()).unwrap();
        let sb = BeamState::new(b.clone(), vb.clone()).unwrap();
        let sum = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<_>>();
        let sab = BeamState::new(sum(&a, &b), sum(&va, &vb)).unwrap();
        let (fa, _) = synthesize_null_control(&sa, p, 1.0, &opts).unwrap();
        let (fb, _) = synthesize_null_control(&sb, p, 1.0, &opts).unwrap();
        let (fab, _) = synthesize_null_control(&sab, p, 1.0, &opts).unwrap();
        let scale = fa.f1.iter().chain(&fb.f1).fold(1.0f64, |m, v| m.max(v.abs()));
        for ((x, y), z) in fa.f1.iter().zip(&fb.f1).zip(&fab.f1) {
            prop_assert!((x + y - z).abs() <= 1e-9 * scale);
        }
    }
}

/// Clusters do occur in the sampled range, so the split property is not vacuous.
#[test]
fn sampled_range_contains_clusters() {
    let mut found = 0;
    for i in 0..200 {
        let rho = 0.3 + 3.7 * i as f64 / 200.0;
        let fs = frequency_set(SpectralParams::new(1.2, rho, 8).unwrap());
        if let Ok(cm) = cluster_map(&fs, 1.99 * default_epsilon(&fs)) {
            found += usize::from(!cm.pairs.is_empty());
        }
    }
    assert!(found > 0);
}
