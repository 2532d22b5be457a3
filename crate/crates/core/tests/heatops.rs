use proptest::prelude::*;
use shl_core::heatops::*;
use std::f64::consts::PI;

fn uniform(h: f64, end: f64) -> Vec<f64> {
    let n = (end / h).round() as usize;
    (0..=n).map(|i| i as f64 * h).collect()
}

fn gaussian_field(dim: usize, a: f64, grid: Vec<f64>) -> RadialField {
    let c = (4.0 * PI * a).powf(-0.5 * dim as f64);
    RadialField::from_fn(dim, grid, FarField::Zero, move |r| c * (-r * r / (4.0 * a)).exp())
}

fn gaussian(dim: usize, a: f64, r: f64) -> f64 {
    (4.0 * PI * a).powf(-0.5 * dim as f64) * (-r * r / (4.0 * a)).exp()
}

#[test]
fn constants_are_fixed() {
    for dim in [1, 2, 3, 5] {
        let f = RadialField::constant(dim, 2.5, uniform(0.1, 3.0));
        for t in [1e-3, 0.3, 4.0] {
            let out = heat_apply(&DomainSpec::WholeSpace, &f, t).unwrap();
            for v in &out.values {
                assert!((v - 2.5).abs() < 1e-12, "N={dim} t={t} {v}");
            }
        }
    }
}

#[test]
fn gaussians_spread_exactly() {
    for dim in [1, 2, 3, 4] {
        let f = gaussian_field(dim, 0.3, uniform(0.002, 6.0));
        let t = 0.2;
        let pts = [0.0, 0.4, 1.1, 2.5];
        let out = heat_apply_on(&DomainSpec::WholeSpace, &f, t, &pts, &QuadratureSettings::default()).unwrap();
        for (i, &r) in pts.iter().enumerate() {
            let exact = gaussian(dim, 0.5, r);
            // the data is piecewise linear, so agreement is limited by h²
            assert!((out.field.values[i] - exact).abs() < 2e-7, "N={dim} r={r}");
        }
    }
}

#[test]
fn pure_power_scaling_at_origin() {
    for (dim, gamma) in [(3usize, 2.0), (3, 0.5), (2, 1.5), (1, 0.5)] {
        let f = RadialField::pure_power(dim, 1.0, gamma, uniform(0.05, 5.0));
        let vals: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
            .iter()
            .map(|&t| {
                let e = heat_eval(&DomainSpec::WholeSpace, &f, t, 0.0, &QuadratureSettings::default()).unwrap();
                t.powf(0.5 * gamma) * e.value
            })
            .collect();
        for v in &vals {
            assert!((v / vals[0] - 1.0).abs() < 1e-6, "N={dim} gamma={gamma} {vals:?}");
        }
        let pm = power_moment(dim, gamma).unwrap();
        assert!((vals[0] / pm - 1.0).abs() < 1e-8);
    }
}

#[test]
fn semigroup_law() {
    let grid = uniform(0.002, 7.0);
    let f = RadialField::from_fn(3, grid, FarField::Zero, |r| (-r * r).exp() * (1.0 + 0.5 * r));
    let d = DomainSpec::WholeSpace;
    let (s, t) = (0.05, 0.08);
    let once = heat_apply(&d, &f, s).unwrap();
    let pts = [0.0, 0.3, 0.9, 1.7];
    let st = QuadratureSettings::default();
    let twice = heat_apply_on(&d, &once, t, &pts, &st).unwrap();
    let direct = heat_apply_on(&d, &f, s + t, &pts, &st).unwrap();
    for i in 0..pts.len() {
        let (a, b) = (twice.field.values[i], direct.field.values[i]);
        // relative to sup|f|; the intermediate field is re-interpolated on the grid
        assert!((a - b).abs() < 1e-6 * f.sup_abs(), "r={} {a} {b}", pts[i]);
    }
}

#[test]
fn gamma_at_least_dim_is_rejected() {
    let f = RadialField::pure_power(2, 1.0, 2.0, vec![0.0, 1.0]);
    assert!(matches!(
        heat_apply(&DomainSpec::WholeSpace, &f, 1.0),
        Err(HeatError::NotIntegrable { .. })
    ));
}

#[test]
fn power_moment_values() {
    for dim in 1..=4 {
        assert!((power_moment(dim, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }
    assert!((power_moment(3, 1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-10);
    assert!((power_moment(2, 1.0).unwrap() - 0.5 * PI.sqrt()).abs() < 1e-10);
    assert!(matches!(power_moment(3, 3.0), Err(HeatError::GammaDomain { .. })));
}

#[test]
fn power_moment_routes_agree_on_the_grid() {
    for dim in 1..=4usize {
        let mut g = 0.25;
        while g < dim as f64 - 0.125 {
            let q = power_moment_quadrature(dim, g);
            let c = power_moment_closed_form(dim, g);
            assert!((q / c - 1.0).abs() < 1e-8, "N={dim} gamma={g}: {q} vs {c}");
            g += 0.25;
        }
    }
}

#[test]
fn mu0_values() {
    assert!((mu0_threshold(3, 2.0).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-9);
    let m = mu0_threshold(3, 1.0).unwrap();
    assert!(m.is_finite() && m > 0.0);
    assert!(matches!(
        mu0_threshold(3, 2.0 / 3.0),
        Err(HeatError::SupercriticalExponentRequired { .. })
    ));
}

#[test]
fn doubling_functional_of_threshold_data_is_one() {
    let d = DomainSpec::WholeSpace;
    for (dim, alpha) in [(3usize, 1.0), (3, 2.0), (2, 1.5)] {
        let mu0 = mu0_threshold(dim, alpha).unwrap();
        let f = RadialField::pure_power(dim, mu0, 2.0 / alpha, uniform(0.05, 5.0));
        for t in [1e-5, 1e-3, 0.1, 0.25] {
            let v = doubling_functional(&d, &f, alpha, t).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "N={dim} alpha={alpha} t={t} {v}");
        }
    }
    let zero = RadialField::constant(3, 0.0, uniform(0.1, 2.0));
    assert_eq!(doubling_functional(&d, &zero, 1.0, 0.1).unwrap(), 0.0);
}

#[test]
fn verdicts_for_pure_powers() {
    let d = DomainSpec::WholeSpace;
    let mu0 = mu0_threshold(3, 1.0).unwrap();
    let grid = uniform(0.05, 5.0);
    let t_grid = default_t_grid();
    assert_eq!(t_grid.len(), 40);
    let above = RadialField::pure_power(3, 1.01 * mu0, 2.0, grid.clone());
    let v = nonexistence_verdict(&d, &above, 1.0, &t_grid, None).unwrap();
    assert_eq!(v.outcome, Outcome::NoNonnegativeSolution);
    assert!((v.functional_value - 1.01).abs() < 1e-6);
    let below = RadialField::pure_power(3, 0.5 * mu0, 2.0, grid.clone());
    let v = nonexistence_verdict(&d, &below, 1.0, &t_grid, None).unwrap();
    assert_eq!(v.outcome, Outcome::CriterionNotViolated);
    let zero = RadialField::constant(3, 0.0, grid.clone());
    let v = nonexistence_verdict(&d, &zero, 1.0, &t_grid, None).unwrap();
    assert_eq!(v.outcome, Outcome::CriterionNotViolated);
    let at = RadialField::pure_power(3, mu0, 2.0, grid);
    assert!(matches!(
        nonexistence_verdict(&d, &at, 1.0, &t_grid[..3], Some(1e-3)),
        Err(HeatError::Inconclusive { .. })
    ));
}

#[test]
fn fr3_examples() {
    assert_eq!(fr3_classifier(3, 1.0, 3.0, 0.1).condition, Condition::B1);
    assert_eq!(fr3_classifier(3, 1.0, 2.5, 0.1).condition, Condition::B2);
    let r = fr3_classifier(3, 2.0, 1.0, 1.3);
    assert_eq!(r.condition, Condition::B3);
    assert_eq!(r.verdict, Outcome::NoNonnegativeSolution);
    let r = fr3_classifier(3, 2.0, 1.0, 1.2);
    assert_eq!(r.condition, Condition::None);
    assert_eq!(r.verdict, Outcome::CriterionNotViolated);
    // γ = 2/α up to rounding still counts as equality
    assert_eq!(fr3_classifier(3, 2.0, 1.0 + 1e-14, 1.3).condition, Condition::B3);
}

#[test]
fn duhamel_trivial_forcings() {
    let d = DomainSpec::WholeSpace;
    let grid = uniform(0.1, 2.0);
    let zero = duhamel(&d, |_| RadialField::constant(3, 0.0, grid.clone()), 0.4, 32).unwrap();
    assert!(zero.field.values.iter().all(|&v| v == 0.0));
    let one = duhamel(&d, |_| RadialField::constant(3, 1.0, grid.clone()), 0.4, 32).unwrap();
    for v in &one.field.values {
        assert!((v - 0.4).abs() < 1e-12);
    }
}

#[test]
fn duhamel_power_forcing() {
    let d = DomainSpec::WholeSpace;
    let grid = uniform(0.25, 1.0);
    for m in [4usize, 6, 14] {
        let t = 0.3;
        let mf = m as f64;
        let f = |s: f64| RadialField::constant(1, (1.0 + s) * s.powf(0.5 * (mf - 2.0)), grid.clone());
        let out = duhamel(&d, f, t, 32).unwrap();
        let exact = 2.0 * (1.0 / mf + t / (mf + 2.0)) * t.powf(0.5 * mf);
        for v in &out.field.values {
            assert!((v / exact - 1.0).abs() < 1e-10, "m={m} {v} {exact}");
        }
    }
}

#[test]
fn duhamel_refinement_and_bound() {
    let d = DomainSpec::WholeSpace;
    let grid = uniform(0.01, 6.0);
    let forcing = |s: f64| {
        RadialField::from_fn(3, grid.clone(), FarField::Zero, move |r| (1.0 + s.sqrt()) * (-(r - 0.5).powi(2)).exp())
    };
    let t = 0.2;
    let pts = [0.0, 0.5, 1.5];
    let a = duhamel_on(&d, forcing, t, 16, &pts, 10.0).unwrap();
    let b = duhamel_on(&d, forcing, t, 32, &pts, 10.0).unwrap();
    for i in 0..pts.len() {
        assert!((a.field.values[i] - b.field.values[i]).abs() < 1e-5);
        assert!(b.field.values[i].abs() <= t * b.forcing_sup);
    }
    assert!(matches!(
        duhamel_on(&d, forcing, t, 16, &pts, 1.0),
        Err(HeatError::ForcingUnbounded { .. })
    ));
}

#[test]
fn heat_after_duhamel_shifts_the_kernel_time() {
    let d = DomainSpec::WholeSpace;
    let grid = uniform(0.005, 7.0);
    let forcing = |s: f64| gaussian_field(3, 0.25, grid.clone()).scaled(1.0 + s);
    let (t, tau) = (0.1, 0.05);
    let inner = duhamel(&d, forcing, t, 16).unwrap();
    let pts = [0.0, 0.7, 1.4];
    let lhs = heat_apply_on(&d, &inner.field, tau, &pts, &QuadratureSettings::default()).unwrap();
    let (s, w) = graded_s_rule(t, 16);
    for (i, &r) in pts.iter().enumerate() {
        let rhs: f64 = s.iter().zip(&w).map(|(&sj, &wj)| wj * (1.0 + sj) * gaussian(3, 0.25 + tau + t - sj, r)).sum();
        assert!((lhs.field.values[i] - rhs).abs() < 1e-5 * rhs.abs().max(1e-2), "r={r}");
    }
}

#[test]
fn ball3_eigen_matches_images() {
    let g = RadialField::from_fn(3, uniform(0.005, 1.0), FarField::Zero, |r| 1.0 - r * r + 0.3 * r);
    let dom = DomainSpec::Ball { radius: 1.0 };
    let st = QuadratureSettings::default();
    let pts = [0.0, 0.5, 0.9];
    for t in [1e-3, 0.05, 0.5] {
        let eig = heat_apply_on(&dom, &g, t, &pts, &st).unwrap();
        assert_eq!(eig.method, "eigen");
        for (i, &r) in pts.iter().enumerate() {
            let img = heat_eval(&dom, &g, t, r, &st).unwrap().value;
            assert!((eig.field.values[i] - img).abs() < 1e-9, "t={t} r={r}");
        }
    }
}

#[test]
fn ball1_images_match_cosine_modes() {
    let g = RadialField::from_fn(1, uniform(0.005, 2.0), FarField::Zero, |r| (2.0 - r) * (1.0 + r));
    let st = QuadratureSettings::default();
    for t in [1e-3, 0.1, 1.0] {
        let img = heat_apply_on(&DomainSpec::Ball { radius: 2.0 }, &g, t, &[0.0, 1.0, 1.9], &st).unwrap();
        let eig = ball_eigen_apply(&g, 2.0, t, &[0.0, 1.0, 1.9], 200).unwrap();
        for i in 0..3 {
            assert!((img.field.values[i] - eig.field.values[i]).abs() < 1e-9, "t={t}");
        }
    }
}

#[test]
fn ball_comparison_margins() {
    let t_grid: Vec<f64> = (0..12).map(|i| 1e-3 * (250f64).powf(i as f64 / 11.0)).collect();
    let x_grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let rep = ball_comparison_check(2.0, 1.0, &t_grid, &x_grid).unwrap();
    assert!(rep.min_margin >= -1e-9, "{rep:?}");
    assert!(rep.floor_margin >= 0.0);
    assert!(rep.series_tail <= 1e-14);
    // both sides tend to φ as t → 0
    let small = ball_comparison_check(2.0, 1.0, &[1e-7], &[0.0]).unwrap();
    assert!(small.min_margin.abs() < 1e-5);
}

#[test]
fn kernel_floor_holds() {
    for t in [1e-4, 1e-2, 0.3, 2.0] {
        assert!(kernel_floor_margin(1.0, t) >= 0.0, "t={t}");
    }
}

fn arb_field() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (prop::sample::select(vec![1usize, 2, 3]), prop::collection::vec(-1.0f64..1.0, 6))
}

fn smooth_field(dim: usize, coeffs: &[f64], nonneg: bool) -> RadialField {
    let c = coeffs.to_vec();
    RadialField::from_fn(dim, uniform(0.02, 6.0), FarField::Zero, move |r| {
        let mut s = 0.0;
        for (k, a) in c.iter().enumerate() {
            s += a * (-(r - k as f64 * 0.7).powi(2) * 2.0).exp();
        }
        if nonneg {
            s.abs()
        } else {
            s
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn positivity_and_contraction((dim, c) in arb_field(), t in 1e-3f64..1.0) {
        let f = smooth_field(dim, &c, true);
        let pts: Vec<f64> = (0..=12).map(|i| i as f64 * 0.4).collect();
        let out = heat_apply_on(&DomainSpec::WholeSpace, &f, t, &pts, &QuadratureSettings::default()).unwrap();
        let sup = f.sup_abs();
        for v in &out.field.values {
            prop_assert!(*v >= 0.0);
            prop_assert!(*v <= sup * (1.0 + 1e-12));
        }
        // general-N ball solves use Bessel modes and are covered by unit tests
        let g = smooth_field(if dim == 2 { 3 } else { dim }, &c, false);
        let out = heat_apply_on(&DomainSpec::Ball { radius: 3.0 }, &g, t, &pts, &QuadratureSettings::default()).unwrap();
        for v in &out.field.values {
            prop_assert!(v.abs() <= g.sup_abs() * (1.0 + 1e-9));
        }
    }

}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn semigroup_on_random_fields(dim in prop::sample::select(vec![1usize, 3]), c in prop::collection::vec(-1.0f64..1.0, 6), s in 0.01f64..0.1, t in 0.01f64..0.1) {
        let c2 = c.clone();
        let f = RadialField::from_fn(dim, uniform(0.002, 7.0), FarField::Zero, move |r| {
            c2.iter().enumerate().map(|(k, a)| a * (-(r - k as f64 * 0.7).powi(2)).exp()).sum()
        });
        let d = DomainSpec::WholeSpace;
        let pts = [0.0, 0.6, 1.5, 3.0];
        let st = QuadratureSettings::default();
        let once = heat_apply(&d, &f, s).unwrap();
        let twice = heat_apply_on(&d, &once, t, &pts, &st).unwrap();
        let direct = heat_apply_on(&d, &f, s + t, &pts, &st).unwrap();
        let scale = f.sup_abs().max(1e-3);
        for i in 0..pts.len() {
            prop_assert!((twice.field.values[i] - direct.field.values[i]).abs() < 1e-6 * scale);
        }
    }
}
