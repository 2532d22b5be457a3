//! The property suites behind `verify`. A suite that errors is recorded as a
//! failed check; nothing here aborts the run.

use super::flows::{branch, contraction, solver, Tag};
use super::{basic, Check, Outcome, Reduce, RunConfig, ScenarioError, Sense, Table};
use crate::cutoffs::{constants_practical, default_smoothing_t_grid, default_x_grid, verify_smoothing, CutoffFamily};
use crate::heatops::{
    ball_comparison_check, heat_eval, power_moment_closed_form, power_moment_quadrature, DomainSpec, QuadratureSettings, RadialField,
};
use crate::perturb::{GridSettings, InitialData, PerturbationProblem, Solver, SpatialCutoff};
use crate::profile::{find_profiles, integrate_profile, summarize_profile, ProfileSpec};

type Suite = fn(&RunConfig) -> Result<Outcome, ScenarioError>;

pub(crate) fn verify(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let suites: [(&str, Suite); 9] = [
        ("moments", moments),
        ("scaling", scaling),
        ("threshold", threshold),
        ("profile", profile),
        ("branches", branches),
        ("smoothing", smoothing),
        ("comparison", comparison),
        ("contraction", contraction_suite),
        ("fault", fault),
    ];
    let mut out = Outcome::default();
    for (name, suite) in suites {
        match suite(cfg) {
            Ok(o) => out.merge(o),
            Err(e) => out.checks.push(Check::flag(&format!("verify.{name}.run"), name, "-", false).note(e.to_string())),
        }
    }
    Ok(out)
}

fn moments(_: &RunConfig) -> Result<Outcome, ScenarioError> {
    let mut table = Table::new("moments.csv", &["N", "gamma", "quadrature", "closed_form", "rel_err"]);
    for dim in 1..=4usize {
        for k in 0..4 * dim {
            let gamma = 0.25 * k as f64;
            let q = power_moment_quadrature(dim, gamma);
            let c = power_moment_closed_form(dim, gamma);
            table.push(vec![dim as f64, gamma, q, c, (q - c).abs() / c]);
        }
    }
    let worst = table.rows.iter().fold(0.0f64, |m, r| m.max(r[4].abs()));
    let mut out = Outcome::default();
    out.checks.push(
        Check::new("verify.power_moment", "power_moment_quadrature", "N in 1..=4, gamma = k/4 < N", worst, Sense::AtMost, 1e-8)
            .from_csv("moments.csv", Reduce::MaxAbs { column: "rel_err".into() }),
    );
    out.tables.push(table);
    Ok(out)
}

/// t^{γ/2}(e^{tΔ}|x|^{−γ})(0) does not depend on t.
fn scaling(_: &RunConfig) -> Result<Outcome, ScenarioError> {
    let ts: Vec<f64> = (0..=5).map(|i| 10f64.powi(-6 + i)).collect();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
    let mut table = Table::new("scaling.csv", &["N", "gamma", "t", "scaled"]);
    let mut worst = 0.0f64;
    for (dim, gamma) in [(1usize, 0.5), (2, 1.0), (3, 1.0), (3, 2.0)] {
        let field = RadialField::pure_power(dim, 1.0, gamma, grid.clone());
        let mut vals = Vec::new();
        for &t in &ts {
            let v = heat_eval(&DomainSpec::WholeSpace, &field, t, 0.0, &QuadratureSettings::default())?.value;
            let scaled = t.powf(0.5 * gamma) * v;
            table.push(vec![dim as f64, gamma, t, scaled]);
            vals.push(scaled);
        }
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        worst = worst.max((hi - lo) / hi.abs());
    }
    let mut out = Outcome::default();
    out.checks.push(Check::new("verify.scaling", "heat_eval", "t = 1e-6 .. 1e-1 by decades", worst, Sense::AtMost, 1e-6));
    out.tables.push(table);
    Ok(out)
}

fn threshold(_: &RunConfig) -> Result<Outcome, ScenarioError> {
    basic::threshold(&RunConfig { dim: Some(3), alpha: Some(2.0), ..Default::default() })
}

fn profile(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let t = &cfg.tolerances;
    let mut out = Outcome::default();
    let mut table = Table::new("profile_checks.csv", &["a", "residual", "mu", "mu_doubled"]);
    let mut sym = 0.0f64;
    for a in [0.25, 0.5, 1.0] {
        let c = integrate_profile(ProfileSpec::new(3, 1.0, a), t.r_max, t.profile_tol)?;
        let m = integrate_profile(ProfileSpec::new(3, 1.0, -a), t.r_max, t.profile_tol)?;
        let far = integrate_profile(ProfileSpec::new(3, 1.0, a), 2.0 * t.r_max, t.profile_tol)?;
        for (x, y) in c.f_values.iter().zip(&m.f_values) {
            sym = sym.max((x + y).abs());
        }
        let mu = summarize_profile(&c)?.mu;
        let mu2 = summarize_profile(&far)?.mu;
        table.push(vec![a, c.max_residual(), mu, mu2]);
    }
    let grid = format!("r_max = {} and {}", t.r_max, 2.0 * t.r_max);
    let res = table.rows.iter().fold(0.0f64, |m, r| m.max(r[1]));
    let drift = table.rows.iter().fold(0.0f64, |m, r| m.max((r[2] - r[3]).abs()));
    out.checks.push(
        Check::new("verify.profile_residual", "integrate_profile", &grid, res, Sense::AtMost, t.residual_max)
            .from_csv("profile_checks.csv", Reduce::MaxAbs { column: "residual".into() }),
    );
    out.checks.push(Check::new("verify.profile_symmetry", "integrate_profile", &grid, sym, Sense::AtMost, 0.0));
    out.checks.push(Check::new("verify.mu_stability", "summarize_profile", &grid, drift, Sense::AtMost, 1e-4));
    let zero = integrate_profile(ProfileSpec::new(3, 1.0, 0.0), t.r_max, t.profile_tol)?;
    let sup = zero.f_values.iter().chain(&zero.df_values).fold(0.0f64, |m, v| m.max(v.abs()));
    out.checks.push(Check::new("verify.profile_zero", "integrate_profile", &grid, sup, Sense::AtMost, 0.0));
    out.tables.push(table);
    Ok(out)
}

/// Two profiles with μ = 0.3 on consecutive zero counts.
fn branches(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let opts = basic::scan_options(cfg);
    let mu = 0.3;
    let mut found = Vec::new();
    for (zeros, window) in [(0usize, (0.1, 0.4)), (1, (-2.2, -1.8))] {
        for a in find_profiles(3, 1.0, mu, zeros, window, 1, &opts)? {
            let s = summarize_profile(&integrate_profile(ProfileSpec::new(3, 1.0, a), opts.r_max, opts.tol)?)?;
            found.push((a, zeros, s.zero_count, s.mu));
        }
    }
    let mut table = Table::new("branches.csv", &["a", "zeros", "zero_count", "mu"]);
    for &(a, z, zc, m) in &found {
        table.push(vec![a, z as f64, zc as f64, m]);
    }
    let confirmed = found.iter().filter(|&&(_, z, zc, m)| z == zc && (m - mu).abs() <= 1e-6).count();
    let mut out = Outcome::default();
    out.checks.push(
        Check::new("verify.branches", "find_profiles", "N = 3, alpha = 1, mu = 0.3", confirmed as f64, Sense::AtLeast, 2.0)
            .note(format!("{} shooting values found", found.len())),
    );
    out.tables.push(table);
    Ok(out)
}

fn smoothing(_: &RunConfig) -> Result<Outcome, ScenarioError> {
    let fam = CutoffFamily::new(1.0, 4);
    let rep = verify_smoothing(&fam, 1, &default_smoothing_t_grid(12), &default_x_grid(&fam))?;
    let mut out = Outcome::default();
    out.checks.push(Check::new("verify.smoothing", "verify_smoothing", "N = 1, delta = 1, m = 4", rep.min_margin(), Sense::AtLeast, -1e-8));
    out.put("smoothing", rep)?;
    Ok(out)
}

fn comparison(_: &RunConfig) -> Result<Outcome, ScenarioError> {
    let (lo, hi) = (1e-3f64.ln(), 0.25f64.ln());
    let t: Vec<f64> = (0..12).map(|i| (lo + (hi - lo) * i as f64 / 11.0).exp()).collect();
    let x: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let rep = ball_comparison_check(2.0, 1.0, &t, &x)?;
    let mut out = Outcome::default();
    out.checks.push(Check::new("verify.comparison", "ball_comparison_check", "R = 2, rho = 1, N = 1", rep.min_margin, Sense::AtLeast, -1e-9));
    out.put("comparison", rep)?;
    Ok(out)
}

/// Whole-space problem on the zero-count-1 branch at μ = 0.3, where the
/// background is largest and m is set by the contraction budget.
fn branch1_solver(cfg: &RunConfig, m_override: Option<usize>) -> Result<Solver, ScenarioError> {
    let b = branch(cfg, 3, 1.0, -1.97795)?;
    let psi = SpatialCutoff::One;
    let data = InitialData::bump(1.0, 1.0, 3.0);
    let mut constants = constants_practical(1.0, 3, b.c1, b.c_u, &psi.norms(3), 1.0, 1.0)?;
    if let Some(m) = m_override {
        constants.m = m;
    }
    solver(PerturbationProblem {
        domain: DomainSpec::WholeSpace,
        dim: 3,
        alpha: 1.0,
        background: b.background,
        psi,
        data,
        constants,
        grids: GridSettings { n_t: 32, ..Default::default() },
    })
}

fn contraction_suite(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let s = branch1_solver(cfg, None)?;
    let mut out = Outcome::default();
    contraction(&mut out, &s, cfg, Tag { name: "verify", file: "" });
    Ok(out)
}

/// Corrupts the bundle by cutting m to a quarter (rounded to an even m ≥ 2)
/// and expects the contraction check to fail.
fn fault(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let honest = branch1_solver(cfg, None)?.problem.constants.m;
    let m = ((honest / 4).max(2) + 1) & !1;
    let s = branch1_solver(cfg, Some(m))?;
    let rep = s.measure_contraction(6, cfg.seed());
    let mut out = Outcome::default();
    out.checks.push(
        Check::new("verify.fault_injection", "measure_contraction", &format!("m = {honest} corrupted to {m}"), rep.max_factor, Sense::AtMost, 0.75)
            .expect_failure()
            .note("corrupted constants must not contract"),
    );
    Ok(out)
}
