use proptest::prelude::*;
use shl_core::profile::*;

fn curve(a: f64) -> ProfileCurve {
    integrate_profile(ProfileSpec::new(3, 1.0, a), 40.0, 1e-10).unwrap()
}

/// Fixed-step RK4 for (f, f') from a two-term series start at r = 1e-3,
/// sampled at `at`.
fn rk4_profile(a: f64, h: f64, at: &[f64]) -> Vec<f64> {
    let g = a + a.abs() * a;
    let r0 = 1e-3;
    let mut r = r0;
    let mut y = [a - g * r0 * r0 / 6.0 + g * (2.0 + 2.0 * a.abs()) * r0.powi(4) / 120.0, -g * r0 / 3.0 + g * (2.0 + 2.0 * a.abs()) * r0.powi(3) / 30.0];
    let rhs = |r: f64, y: [f64; 2]| [y[1], -(2.0 / r + 0.5 * r) * y[1] - y[0] - y[0].abs() * y[0]];
    let mut out = Vec::new();
    for &target in at {
        let steps = ((target - r) / h).round() as usize;
        let hh = (target - r) / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(r, y);
            let k2 = rhs(r + 0.5 * hh, [y[0] + 0.5 * hh * k1[0], y[1] + 0.5 * hh * k1[1]]);
            let k3 = rhs(r + 0.5 * hh, [y[0] + 0.5 * hh * k2[0], y[1] + 0.5 * hh * k2[1]]);
            let k4 = rhs(r + hh, [y[0] + hh * k3[0], y[1] + hh * k3[1]]);
            for q in 0..2 {
                y[q] += hh * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]) / 6.0;
            }
            r += hh;
        }
        r = target;
        out.push(y[0]);
    }
    out
}

fn rk4_converged(a: f64, at: &[f64]) -> Vec<f64> {
    let mut h = 1e-2;
    let mut prev = rk4_profile(a, h, at);
    loop {
        h *= 0.5;
        let cur = rk4_profile(a, h, at);
        if cur.iter().zip(&prev).all(|(x, y)| (x - y).abs() <= 1e-10) {
            return cur;
        }
        prev = cur;
    }
}

#[test]
fn zero_shooting_value_gives_zero_curve() {
    let c = curve(0.0);
    assert!(c.f_values.iter().chain(&c.df_values).all(|&v| v == 0.0));
    let s = summarize_profile(&c).unwrap();
    assert_eq!((s.zero_count, s.mu, s.f0), (0, 0.0, 0.0));
    assert_eq!(verify_selfsimilar_bounds(&c, &s).unwrap().c1, 0.0);
}

#[test]
fn curvature_at_the_origin() {
    let c = curve(1.0);
    assert_eq!((c.f_values[0], c.df_values[0]), (1.0, 0.0));
    // f = a − g r²/6 + g(2 + 2|a|) r⁴/120 with g = a + |a|a, so f''(0) = −g/3
    let (r, df) = (c.r_grid[1], c.df_values[1]);
    let f2 = (df - 2.0 * 4.0 * 4.0 * r.powi(3) / 120.0) / r;
    assert!((f2 + 2.0 / 3.0).abs() < 1e-6, "{f2}");
}

#[test]
fn residual_holds_on_interior_nodes() {
    for a in [0.25, 0.5, 1.0, -1.98, 3.0] {
        let res = curve(a).max_residual();
        assert!(res <= 1e-8, "a={a}: {res}");
    }
}

#[test]
fn odd_symmetry_is_exact() {
    let p = curve(0.7);
    let m = curve(-0.7);
    assert_eq!(p.r_grid, m.r_grid);
    for i in 0..p.r_grid.len() {
        assert_eq!(p.f_values[i], -m.f_values[i]);
        assert_eq!(p.df_values[i], -m.df_values[i]);
    }
    assert_eq!(p.zeros, m.zeros);
}

#[test]
fn agrees_with_step_halving_oracle() {
    let at = [1.0, 5.0, 20.0, 40.0];
    let oracle = rk4_converged(0.5, &at);
    let c = curve(0.5);
    for (&r, &f) in at.iter().zip(&oracle) {
        let (v, _) = c.interpolate(r);
        assert!((v - f).abs() <= 1e-8, "r={r}: {v} vs {f}");
    }
    // μ from the oracle's tail: r² f at r = 40 plus the 1/r² correction
    let tail = rk4_converged(0.5, &[30.0, 40.0]);
    let (y1, y2) = (900.0 * tail[0], 1600.0 * tail[1]);
    let mu_oracle = (y2 * 1600.0 - y1 * 900.0) / 700.0;
    let s = summarize_profile(&c).unwrap();
    assert_eq!(s.zero_count, 0);
    assert!((s.mu - mu_oracle).abs() <= 1e-4 * mu_oracle.abs(), "{} vs {mu_oracle}", s.mu);
    assert!((s.mu - 0.423668464).abs() < 1e-8, "{}", s.mu);
}

#[test]
fn mu_is_stable_under_r_max_doubling() {
    for a in [0.25, 0.5, 1.0] {
        let spec = ProfileSpec::new(3, 1.0, a);
        let s40 = summarize_profile(&integrate_profile(spec, 40.0, 1e-10).unwrap()).unwrap();
        let s80 = summarize_profile(&integrate_profile(spec, 80.0, 1e-10).unwrap()).unwrap();
        assert!((s40.mu - s80.mu).abs() <= 1e-4, "a={a}: {} {}", s40.mu, s80.mu);
    }
}

#[test]
fn mu_extraction_is_self_consistent() {
    for a in [0.25, -1.98, 3.0] {
        let spec = ProfileSpec::new(3, 1.0, a);
        let c = integrate_profile(spec, 80.0, 1e-10).unwrap();
        let s = summarize_profile(&c).unwrap();
        let raw = 6400.0 * c.f_values.last().unwrap();
        assert!((s.mu - raw).abs() <= s.mu_uncertainty);
        let half = summarize_profile(&integrate_profile(spec, 40.0, 1e-10).unwrap()).unwrap();
        assert!((s.mu - half.mu).abs() <= s.mu_uncertainty.max(half.mu_uncertainty), "a={a}");
    }
}

#[test]
fn zero_count_survives_tighter_tolerance() {
    for a in [0.5, -1.98, 3.0, 6.0] {
        let spec = ProfileSpec::new(3, 1.0, a);
        let loose = integrate_profile(spec, 40.0, 1e-9).unwrap();
        let tight = integrate_profile(spec, 40.0, 1e-10).unwrap();
        assert_eq!(loose.zeros.len(), tight.zeros.len(), "a={a}");
    }
}

#[test]
fn short_tail_is_reported() {
    let c = integrate_profile(ProfileSpec::new(3, 1.0, 3.0), 4.0, 1e-10).unwrap();
    assert!(matches!(summarize_profile(&c), Err(ProfileError::TailNotSettled { .. })));
}

#[test]
fn self_similar_evaluation() {
    let c = curve(0.5);
    let s = summarize_profile(&c).unwrap();
    assert_eq!(self_similar_eval(&c, &s, 1.0, 0.0), 0.5);
    for &(t, rho) in &[(0.01, 0.05), (0.3, 0.7), (1.0, 3.0)] {
        let u = self_similar_eval(&c, &s, t, rho);
        let scaled = self_similar_eval(&c, &s, 4.0 * t, 2.0 * rho);
        assert!((scaled - 0.25 * u).abs() <= 1e-12 * u.abs().max(1e-300), "{u} {scaled}");
    }
    // t → 0 at ρ = 1: U → μ
    let u = self_similar_eval(&c, &s, 1e-6, 1.0);
    assert!((u - s.mu).abs() <= s.mu_uncertainty + 1e-5, "{u} {}", s.mu);
    let (u, du) = self_similar_eval_with_grad(&c, &s, 0.2, 0.4);
    let h = 1e-6;
    let fd = (self_similar_eval(&c, &s, 0.2, 0.4 + h) - self_similar_eval(&c, &s, 0.2, 0.4 - h)) / (2.0 * h);
    assert!((du - fd).abs() < 1e-6 * (1.0 + du.abs()), "{du} {fd} {u}");
}

#[test]
fn c1_is_stable_and_reproducible() {
    let c = curve(-1.98);
    let s = summarize_profile(&c).unwrap();
    let one = verify_selfsimilar_bounds(&c, &s).unwrap();
    let two = verify_selfsimilar_bounds(&c, &s).unwrap();
    assert_eq!(one.c1.to_bits(), two.c1.to_bits());
    assert!((one.c1 - one.c1_coarse).abs() <= 0.05 * one.c1);
    assert!(one.c1 >= 1.98, "C1 must dominate t|U|^α at the origin");
}

#[test]
fn branch_search_finds_the_zero_profile() {
    let found = find_profiles(3, 1.0, 0.0, 0, (0.0, 0.0), 8, &ScanOptions::default()).unwrap();
    assert_eq!(found, vec![0.0]);
}

#[test]
fn branch_search_refuses_supercritical_alpha() {
    let e = find_profiles(3, 5.0, 0.3, 0, (0.0, 1.0), 8, &ScanOptions::default()).unwrap_err();
    assert_eq!(e, ProfileError::GateViolation { dim: 3, alpha: 5.0 });
}

#[test]
fn zero_count_zero_cannot_reach_one_half() {
    // μ(a) on the positive branch peaks near 0.4284
    let opts = ScanOptions { samples_per_unit: 40.0, ..Default::default() };
    let e = find_profiles(3, 1.0, 0.5, 0, (0.0, 1.6), 8, &opts).unwrap_err();
    assert_eq!(e, ProfileError::NoBracket { mu_target: 0.5, zeros: 0 });
}

#[test]
fn two_zero_counts_share_a_mu() {
    let opts = ScanOptions { samples_per_unit: 40.0, ..Default::default() };
    let mut all = Vec::new();
    for zeros in [0, 1] {
        for a in find_profiles(3, 1.0, 0.3, zeros, (-3.0, 3.0), 8, &opts).unwrap() {
            let c = curve(a);
            let s = summarize_profile(&c).unwrap();
            assert_eq!(s.zero_count, zeros);
            assert!((s.mu - 0.3).abs() <= 1e-8, "a={a} mu={}", s.mu);
            all.push(a);
        }
    }
    assert!(all.len() >= 2);
    assert!(all.iter().any(|a| (a - 0.2214).abs() < 1e-3), "{all:?}");
    assert!(all.iter().any(|a| (a + 1.98).abs() < 0.01), "{all:?}");
}

#[test]
fn csv_has_the_documented_columns() {
    let csv = curve(0.5).to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,f,df,residual"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[..3], [0.0, 0.5, 0.0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn negation_is_node_wise(a in -3.0f64..3.0) {
        let p = curve(a);
        let m = curve(-a);
        prop_assert!(p.f_values.iter().zip(&m.f_values).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn residual_bound_holds(a in -2.5f64..2.5) {
        let res = curve(a).max_residual();
        prop_assert!(res <= 1e-8, "a={} residual {:e}", a, res);
    }
}
