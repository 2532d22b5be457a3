use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shl_core::cutoffs::*;
use shl_core::heatops::DomainSpec;
use shl_core::perturb::*;
use shl_core::profile::*;
use std::sync::OnceLock;

const ALPHA: f64 = 1.0;

fn background(a: f64) -> (Background, f64, f64) {
    let curve = integrate_profile(ProfileSpec::new(3, ALPHA, a), 40.0, 1e-10).unwrap();
    let summary = summarize_profile(&curve).unwrap();
    let c1 = verify_selfsimilar_bounds(&curve, &summary).unwrap().c1;
    let c_u = curve.f_values.iter().fold(0.0f64, |m, f| m.max(f.abs().powf(ALPHA)));
    (Background::SelfSimilar { curve, summary }, c1, c_u)
}

fn whole_problem(a: f64, data: InitialData, n_t: usize, refine: u32) -> PerturbationProblem {
    let (bg, c1, c_u) = background(a);
    let psi = SpatialCutoff::One;
    let w0_sup = if data.bump_amplitude == 0.0 { 0.0 } else { data.bump_amplitude };
    let constants = constants_practical(ALPHA, 3, c1, c_u, &psi.norms(3), w0_sup, 1.0).unwrap();
    let grids = GridSettings { n_t, refine, ..Default::default() };
    PerturbationProblem { domain: DomainSpec::WholeSpace, dim: 3, alpha: ALPHA, background: bg, psi, data, constants, grids }
}

/// U = 0, Ψ ≡ 1: the forcing is the bare power |w|^α w.
fn bare_problem(data: InitialData) -> PerturbationProblem {
    let psi = SpatialCutoff::One;
    let constants = constants_practical(ALPHA, 3, 1.0, 0.0, &psi.norms(3), data.bump_amplitude, 1.0).unwrap();
    let grids = GridSettings { n_t: 16, ..Default::default() };
    PerturbationProblem {
        domain: DomainSpec::WholeSpace,
        dim: 3,
        alpha: ALPHA,
        background: Background::Zero,
        psi,
        data,
        constants,
        grids,
    }
}

fn bump_data() -> InitialData {
    InitialData::bump(1.0, 1.0, 3.0)
}

/// Zero-count-0 branch at μ = 0.3 with a unit bump, on the coarse grid.
fn whole() -> &'static (Solver, SpaceTimeField, FixedPointReport) {
    static CELL: OnceLock<(Solver, SpaceTimeField, FixedPointReport)> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = Solver::new(whole_problem(0.2214, bump_data(), 32, 0)).unwrap();
        let (w, rep) = s.solve_fixed_point(Seed::Zero, 1e-8, 60).unwrap();
        (s, w, rep)
    })
}

fn scaled(s: &Solver, mut xi: impl FnMut(usize, usize) -> f64) -> SpaceTimeField {
    let mut w = s.theta_field();
    for (k, row) in w.values.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v *= xi(k, i);
        }
    }
    w.values[0] = s.w0.clone();
    w
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn power_difference_matches_direct_form() {
    for &(v, w) in &[(2.0, 0.5), (-1.5, 0.1), (0.3, -0.9), (1.0, -1.0), (0.0, -0.4), (5.0, 1e-9)] {
        let direct = (v + w) * f64::abs(v + w) - v * f64::abs(v);
        assert!((power_difference(v, w, 1.0) - direct).abs() <= 1e-14 * (1.0 + direct.abs()), "{v} {w}");
    }
    assert_eq!(power_difference(3.0, 0.0, 1.0), 0.0);
}

#[test]
fn mtilde_vanishes_at_zero_perturbation() {
    let (s, _, _) = whole();
    let w = scaled(s, |_, _| 0.0);
    for k in [1, 5, s.steps()] {
        assert!(s.mtilde(&w, k).values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn mtilde_without_background_is_the_bare_power() {
    let s = Solver::new(bare_problem(InitialData::zero())).unwrap();
    let w = scaled(&s, |k, i| if (k + i) % 2 == 0 { 0.7 } else { -0.3 });
    for k in [1, 7, s.steps()] {
        let m = s.mtilde(&w, k);
        for (mv, wv) in m.values.iter().zip(&w.values[k]) {
            assert_eq!(*mv, wv.abs() * wv);
        }
    }
}

#[test]
fn mtilde_obeys_the_weighted_bound() {
    let (s, _, _) = whole();
    let c = &s.problem.constants;
    let fam = c.envelope().family;
    let bound = c.a * (1.0 + c.k.powf(ALPHA + 1.0));
    for sign in [1.0, -1.0] {
        let w = scaled(s, |_, _| sign);
        for k in 1..=s.steps() {
            let m = s.mtilde(&w, k);
            for (i, &x) in s.r.iter().enumerate() {
                let h = h_eval(&fam, c.m, s.t[k], x);
                assert!(m.values[i].abs() <= bound * h, "t={} r={x}", s.t[k]);
            }
        }
    }
}

#[test]
fn zero_problem_is_a_fixed_point() {
    let s = Solver::new(bare_problem(InitialData::zero())).unwrap();
    let zero = s.seed(Seed::Zero);
    let out = s.picard_map(&zero).unwrap();
    assert!(out.values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn zero_data_leaves_the_profile_alone() {
    let s = Solver::new(whole_problem(0.2214, InitialData::zero(), 16, 0)).unwrap();
    let (w, rep) = s.solve_fixed_point(Seed::Zero, 1e-8, 60).unwrap();
    assert!(rep.converged);
    assert!(w.values.iter().flatten().all(|&v| v.abs() <= rep.quad_error.max(1e-300)));
    let u = s.assemble_u(&w);
    assert_eq!(u.values, s.background_field().values);
}

#[test]
fn duhamel_part_is_bounded_by_time_and_forcing() {
    let (s, _, _) = whole();
    for sign in [1.0, -1.0, 0.5] {
        let w = scaled(s, |_, _| sign);
        let phi = s.picard_map(&w).unwrap();
        let mut sup = 0.0f64;
        for k in 0..=s.steps() {
            let m = if k == 0 { s.mtilde(&w, 0) } else { s.mtilde(&w, k) };
            sup = m.values.iter().fold(sup, |a, v| a.max(v.abs()));
        }
        let slack = s.quad_error(sup);
        for k in 1..=s.steps() {
            let d = sup_diff(&phi.values[k], &s.heat0[k]);
            assert!(d <= s.t[k] * sup + slack, "t={} {d} {}", s.t[k], s.t[k] * sup);
        }
    }
}

#[test]
fn picard_map_keeps_the_envelope() {
    let (s, _, _) = whole();
    for w in [scaled(s, |_, _| 1.0), scaled(s, |_, _| -1.0), scaled(s, |k, i| if (k * 7 + i) % 3 == 0 { 1.0 } else { -0.5 })] {
        let out = s.picard_map(&w).unwrap();
        assert!(out.envelope_ratio <= 1.0 + 1e-9, "{}", out.envelope_ratio);
    }
}

#[test]
fn inputs_outside_the_envelope_are_refused() {
    let (s, _, _) = whole();
    let w = scaled(s, |k, i| if k == 3 && i == 10 { 1.5 } else { 0.0 });
    assert!(matches!(s.picard_map(&w), Err(PerturbError::EnvelopeViolated { side: Side::In, .. })));
}

#[test]
fn random_pairs_contract() {
    let (s, _, _) = whole();
    let rep = s.measure_contraction(21, 11);
    assert_eq!(rep.factors.len(), 21);
    assert!(rep.kinds.iter().any(|k| k == "aligned"));
    assert!(rep.max_factor <= 0.8, "{:?}", rep.factors);
    assert!(rep.factors.iter().all(|&f| f > 0.0));
}

#[test]
fn iteration_converges_geometrically() {
    let (_, w, rep) = whole();
    assert!(rep.converged && rep.iterations <= 60);
    assert!(*rep.dists.last().unwrap() <= 1e-8);
    assert!(rep.dists.windows(2).skip(1).all(|d| d[1] < d[0]), "{:?}", rep.dists);
    assert!(rep.contraction_factors.iter().skip(1).all(|&f| f <= 0.8), "{:?}", rep.contraction_factors);
    assert!(rep.envelope_margin >= -10.0 * rep.quad_error);
    assert!(w.is_finite() && w.envelope_ratio <= 1.0);
}

#[test]
fn fixed_point_is_unique_in_the_envelope() {
    let (s, w, _) = whole();
    let (w2, rep2) = s.solve_fixed_point(Seed::HalfTheta, 1e-8, 60).unwrap();
    assert!(rep2.converged);
    assert!(weighted_distance(w, &w2, &s.theta_field()) <= 1e-7);
}

#[test]
fn initial_trace_is_linear_in_time() {
    let (s, w, rep) = whole();
    let tr = initial_trace_check(w, &s.heat0_field());
    assert!(tr.constant.is_finite() && tr.constant == rep.trace_constant);
    assert!(tr.decades.len() >= 2);
    assert!(tr.variation <= 2.0, "{:?}", tr.decades);
}

#[test]
fn perturbation_stays_below_the_inner_envelope() {
    let (s, w, _) = whole();
    let c = &s.problem.constants;
    let inner = c.envelope().family.level(c.m);
    for (k, &t) in s.t.iter().enumerate().skip(1) {
        let cap = c.k * t.powf(0.5 * c.m as f64);
        for (i, &x) in s.r.iter().enumerate().take_while(|(_, &x)| x <= inner) {
            assert!(w.values[k][i].abs() <= cap * (1.0 + 1e-9), "t={t} r={x}");
        }
    }
}

/// U sampled on a uniform t-grid and the solver's r-grid, refined `level`
/// times by halving both spacings.
fn sampled_background(s: &Solver, level: u32) -> SpaceTimeField {
    let n = 1usize << level;
    let dt = s.t[1] / n as f64;
    let t_grid: Vec<f64> = (0..=s.steps() * n).map(|k| k as f64 * dt).collect();
    let mut r_grid = vec![0.0];
    for w in s.r.windows(2) {
        for q in 1..=n {
            r_grid.push(w[0] + (w[1] - w[0]) * q as f64 / n as f64);
        }
    }
    let values = t_grid
        .iter()
        .map(|&t| r_grid.iter().map(|&x| if t == 0.0 { 0.0 } else { s.problem.background.eval(t, x).0 }).collect())
        .collect();
    SpaceTimeField { t_grid, r_grid, values, envelope_ratio: 0.0 }
}

#[test]
fn background_residual_is_second_order() {
    let (s, _, _) = whole();
    let res = |level: u32| {
        let u = sampled_background(s, level);
        let opts = ResidualOptions { t_floor: 4.0 * s.t[1], r_max: 3.0, stride: 1 << level };
        s.u_residual(&u, &opts).unwrap().max_residual
    };
    let (coarse, fine) = (res(0), res(1));
    assert!((coarse / fine).log2() >= 1.8, "{coarse:e} {fine:e}");
}

#[test]
fn residual_of_pure_heat_flow_is_second_order() {
    // U = 0 and no forcing: heat0 alone solves the heat equation. Level 0
    // does not yet resolve the bump edges, so levels 1 and 2 are compared.
    let data = InitialData::bump(1e-3, 1.0, 3.0);
    let mut t_floor = 0.0;
    let mut res = Vec::new();
    for refine in 1..=2 {
        let mut p = bare_problem(data);
        p.grids.refine = refine;
        let s = Solver::new(p).unwrap();
        if refine == 1 {
            t_floor = 8.0 * s.t[1];
        }
        let opts = ResidualOptions { t_floor, r_max: f64::INFINITY, stride: 1 << (refine - 1) };
        res.push(residual_check(&s.heat0_field(), 3, &opts, |_, _, _| 0.0).unwrap().max_residual);
    }
    assert!(res[0] < 1e-2 && (res[0] / res[1]).log2() >= 1.8, "{res:?}");
}

#[test]
fn residual_needs_resolved_nodes() {
    let (s, w, _) = whole();
    let opts = ResidualOptions { t_floor: 10.0, r_max: f64::INFINITY, stride: 1 };
    assert!(matches!(s.w_residual(w, &opts), Err(PerturbError::GridTooCoarse(_))));
}

#[test]
fn problems_outside_the_theory_are_refused() {
    let mut p = bare_problem(InitialData::bump(1.0, 0.5, 2.0));
    assert!(matches!(Solver::new(p.clone()), Err(PerturbError::InvalidProblem(_))));
    p.data = InitialData::zero();
    p.dim = 2;
    assert!(matches!(Solver::new(p), Err(PerturbError::Unsupported(_))));
}

#[test]
fn dirichlet_ball_run() {
    let (bg, c1, c_u) = background(-2.25);
    let (delta, radius) = (0.3, 1.0);
    let psi = SpatialCutoff::for_ball(delta, radius);
    let data = InitialData { bump_amplitude: 0.0, bump_inner: delta, bump_outer: radius, power_mu: 0.5 };
    let w0_sup = 0.5 * delta.powf(-2.0);
    let constants = constants_practical(ALPHA, 3, c1, c_u, &psi.norms(3), w0_sup, delta).unwrap();
    let grids = GridSettings { n_t: 32, ..Default::default() };
    let p = PerturbationProblem {
        domain: DomainSpec::Ball { radius },
        dim: 3,
        alpha: ALPHA,
        background: bg,
        psi,
        data,
        constants,
        grids,
    };
    let s = Solver::new(p).unwrap();
    let (w, rep) = s.solve_fixed_point(Seed::Zero, 1e-8, 60).unwrap();
    assert!(rep.converged, "{:?}", rep.dists);
    let u = s.assemble_u(&w);
    let tol = 10.0 * rep.quad_error.max(1e-12);
    assert!(u.values.iter().skip(1).all(|row| row.last().unwrap().abs() <= tol));
    let c = &s.problem.constants;
    let inner = c.envelope().family.level(c.m);
    let bgf = s.background_field();
    for (k, &t) in s.t.iter().enumerate().skip(1) {
        let cap = c.k * t.powf(0.5 * c.m as f64) + tol;
        for (i, _) in s.r.iter().enumerate().take_while(|(_, &x)| x <= inner) {
            assert!((u.values[k][i] - bgf.values[k][i]).abs() <= cap);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn power_difference_is_odd(v in -3.0f64..3.0, w in -3.0f64..3.0) {
        prop_assert!((power_difference(v, w, 1.0) + power_difference(-v, -w, 1.0)).abs() <= 1e-12);
    }

    #[test]
    fn admissible_inputs_map_into_the_envelope(seed in 0u64..1000) {
        let (s, _, _) = whole();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = scaled(s, |_, _| rng.gen_range(-1.0..=1.0));
        let out = s.picard_map(&w).unwrap();
        prop_assert!(out.envelope_ratio <= 1.0 + 1e-9);
    }
}
