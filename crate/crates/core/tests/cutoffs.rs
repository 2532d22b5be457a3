use proptest::prelude::*;
use shl_core::cutoffs::*;
use shl_core::profile::{integrate_profile, summarize_profile, verify_selfsimilar_bounds, ProfileSpec};

fn family() -> CutoffFamily {
    CutoffFamily::new(1.0, 4)
}

#[test]
fn chi_vanishes_below_and_saturates_above() {
    let f = family();
    for j in 0..=5 {
        let a = f.level(j);
        assert_eq!(chi_eval(&f, j, 0.5 * a).unwrap(), 0.0);
        assert_eq!(chi_eval(&f, j, a).unwrap(), 0.0);
        assert_eq!(chi_eval(&f, j, 3.0 * a).unwrap(), 1.0);
        assert_eq!(chi_eval(&f, j, 2.0 * a).unwrap(), 1.0);
    }
    assert_eq!(chi_eval(&f, 6, 1.0), Err(CutoffError::LevelOutOfRange { j: 6, max: 5 }));
}

#[test]
fn weighted_chi_is_bounded_by_level() {
    let f = family();
    for j in 0..=5 {
        let a = f.level(j);
        for i in 0..=400 {
            let x = 4.0 * a * i as f64 / 400.0;
            let c = f.chi(j, x);
            if c > 0.0 {
                assert!(c / (x * x) <= c / (a * a));
            }
        }
    }
}

#[test]
fn theta_near_origin_and_far_out() {
    let env = EnvelopeTheta::new(2.0, 4, 1.0);
    let a_m = env.family.level(4);
    for t in [1e-6, 1e-3, 0.1] {
        for x in [0.0, 0.3 * a_m, a_m] {
            let v = theta_eval(&env, t, x);
            assert!((v - 2.0 * t * t).abs() <= 1e-15 * v);
        }
    }
    for x in [1.0, 1.5, 2.0, 10.0] {
        assert!(theta_eval(&env, 0.0, x) >= 2.0);
    }
    assert_eq!(theta_eval(&env, 0.0, 2.0), 2.0);
}

#[test]
fn theta_sup_at_quarter_is_at_most_two_k() {
    for m in [2, 4, 8, 14] {
        let env = EnvelopeTheta::new(3.0, m, 1.0);
        let sup = (0..=4000).map(|i| theta_eval(&env, 0.25, 5.0 * i as f64 / 4000.0)).fold(0.0, f64::max);
        assert!(sup <= 6.0, "m={m} sup={sup}");
    }
}

#[test]
fn majorant_values() {
    let f = family();
    for s in [1e-4, 0.01, 0.25] {
        let v = h_eval(&f, 4, s, 0.0);
        assert!((v - (1.0 + s) * s).abs() < 1e-16);
    }
    // s → 0 beyond 2a_1: only the j = 1 term keeps a t^0 factor
    let x = 1.5;
    let v = h_eval(&f, 4, 1e-30, x);
    assert!((v - (x.powi(-2) + 1.0)).abs() < 1e-12);
}

#[test]
fn majorant_bound_by_grid_maximization() {
    let f = family();
    let m = 4;
    let a_m = f.level(m);
    for k in 0..20 {
        let s = 0.25 * (k as f64 + 1.0) / 20.0;
        let sum: f64 = (1..=m).map(|j| s.powf(0.5 * (j as f64 - 1.0))).sum();
        let bound = (1.0 + a_m.powi(-2)) * sum + (1.0 + s) * s.powf(0.5 * (m as f64 - 2.0));
        let sup = (0..=20000).map(|i| h_eval(&f, m, s, 3.0 * i as f64 / 20000.0)).fold(0.0, f64::max);
        assert!(sup <= bound * (1.0 + 1e-14), "s={s}");
    }
}

#[test]
fn smoothing_margins_on_default_grids() {
    let f = family();
    let r = verify_smoothing(&f, 1, &default_smoothing_t_grid(12), &default_x_grid(&f)).unwrap();
    assert!(r.chi.margin >= -1e-8, "{r:?}");
    assert!(r.weighted_chi.margin >= -1e-8, "{r:?}");
    assert!(r.duhamel.margin >= -1e-6, "{r:?}");
}

#[test]
fn smoothing_margins_at_small_t_are_nonnegative() {
    let f = CutoffFamily::new(1.0, 2);
    let x: Vec<f64> = (0..=40).map(|i| 3.0 * i as f64 / 40.0).collect();
    let r = verify_smoothing(&f, 1, &[1e-7, 1e-6], &x).unwrap();
    let slack = 10.0 * r.max_quad_error;
    assert!(r.chi.margin >= -slack && r.weighted_chi.margin >= -slack, "{r:?}");
}

#[test]
fn smoothing_rejects_unsorted_grids() {
    let f = family();
    assert!(matches!(verify_smoothing(&f, 1, &[0.1, 0.01], &[0.0]), Err(CutoffError::InvalidArgument(_))));
}

fn profile_c1(a: f64) -> f64 {
    let curve = integrate_profile(ProfileSpec::new(3, 1.0, a), 40.0, 1e-10).unwrap();
    let s = summarize_profile(&curve).unwrap();
    verify_selfsimilar_bounds(&curve, &s).unwrap().c1
}

#[test]
fn proof_route_is_out_of_reach_at_alpha_one() {
    let c1 = profile_c1(0.25);
    let psi = PsiNorms { grad_sup: 3.75, lap_sup: 23.1, w2inf: 1.0 + 3.75 + 23.1 };
    match constants_assemble(1.0, 3, c1, &psi, 1.0, 1.0) {
        Err(CutoffError::NoAdmissibleT { log10_t, .. }) => assert!(log10_t < -12.0),
        other => panic!("expected NoAdmissibleT, got {other:?}"),
    }
}

#[test]
fn proof_route_bundle_reevaluates() {
    // small α and huge δ keep the proof's m and T representable
    let b = constants_assemble(0.25, 1, 1.0, &PsiNorms::ONE, 1.5, 1e120).unwrap();
    let c = b.check();
    assert!(c.proof_valid(), "{c:?}");
    assert_eq!(b.k, 3.0);
    assert_eq!(b.m % 2, 0);
    assert!(4.0 / (b.m - 2) as f64 > b.k / (4.0 * b.b), "m is not minimal");
    assert!(b.provenance.iter().any(|p| p.quantity == "T" && p.rule.starts_with("fDFM:3")));
    let json = serde_json::to_string(&b).unwrap();
    let back: ConstantsBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(back, b);
}

#[test]
fn zero_data_floors_k() {
    let b = constants_practical(1.0, 3, 1.0, 0.25, &PsiNorms::ONE, 0.0, 1.0).unwrap();
    assert_eq!(b.k, K_MIN);
    assert!(b.check().practical_valid());
    assert!(b.provenance.iter().any(|p| p.quantity == "K" && p.rule.contains("floored")));
}

#[test]
fn doubling_the_data_is_monotone() {
    let one = constants_assemble(0.25, 1, 1.0, &PsiNorms::ONE, 1.5, 1e120).unwrap();
    let two = constants_assemble(0.25, 1, 1.0, &PsiNorms::ONE, 3.0, 1e120).unwrap();
    assert_eq!(two.k, 2.0 * one.k);
    assert!(two.m >= one.m && two.t_max <= one.t_max);
    let one = constants_practical(1.0, 3, 1.0, 1.98, &PsiNorms::ONE, 1.0, 1.0).unwrap();
    let two = constants_practical(1.0, 3, 1.0, 1.98, &PsiNorms::ONE, 2.0, 1.0).unwrap();
    assert_eq!(two.k, 2.0 * one.k);
    assert!(two.m >= one.m && two.t_max <= one.t_max);
}

#[test]
fn practical_bundles_satisfy_their_rules() {
    for (c_u, m) in [(0.2144, 4), (1.98, 14), (2.25, 16)] {
        let b = constants_practical(1.0, 3, 1.0, c_u, &PsiNorms::ONE, 1.0, 1.0).unwrap();
        assert_eq!(b.m, m);
        assert!(2.0 * 2.0 * c_u / b.m as f64 <= PRACTICAL_FACTOR);
        let c = b.check();
        assert!(c.practical_valid(), "{c:?}");
        // the next larger candidate T must fail
        let mut bigger = b.clone();
        bigger.t_max *= 2.0;
        assert!(!bigger.check().practical_valid());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_is_monotone(s in 0.0f64..3.0, ds in 0.0f64..1.0) {
        let th = SmoothStep::default();
        prop_assert!(th.eval(s + ds) >= th.eval(s));
        prop_assert!((0.0..=1.0).contains(&th.eval(s)));
    }

    #[test]
    fn chi_levels_nest(delta in 0.1f64..10.0, x in 0.0f64..20.0, j in 0usize..8) {
        let f = CutoffFamily::new(delta, 8);
        prop_assert!(f.chi(j, x) <= f.chi(j + 1, x));
    }

    #[test]
    fn theta_is_positive(t in 1e-12f64..0.25, x in 0.0f64..5.0, m in 2usize..16) {
        let env = EnvelopeTheta::new(1.5, m, 1.0);
        let v = theta_eval(&env, t, x);
        prop_assert!(v >= 1.5 * t.powf(0.5 * m as f64) * (1.0 - 1e-12));
        prop_assert!(v > 0.0);
    }
}
