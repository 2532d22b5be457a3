//! Space-time runs: perturb, nonunique and ball.

use super::basic::{gate, shooting_values};
use super::{Check, Outcome, Reduce, RunConfig, ScenarioError, Sense, Table};
use crate::cutoffs::{constants_practical, ConstantsBundle};
use crate::heatops::DomainSpec;
use crate::perturb::{
    initial_trace_check, weighted_distance, Background, FixedPointReport, GridSettings, InitialData, PerturbError,
    PerturbationProblem, ResidualOptions, Seed, Solver, SpaceTimeField, SpatialCutoff,
};
use crate::profile::{integrate_profile, summarize_profile, verify_selfsimilar_bounds, ProfileSpec};

/// A profile ready to serve as background.
pub(crate) struct Branch {
    pub f0: f64,
    pub c1: f64,
    pub c_u: f64,
    pub background: Background,
}

pub(crate) fn branch(cfg: &RunConfig, dim: usize, alpha: f64, a: f64) -> Result<Branch, ScenarioError> {
    let t = &cfg.tolerances;
    let curve = integrate_profile(ProfileSpec::new(dim, alpha, a), t.r_max, t.profile_tol)?;
    let summary = summarize_profile(&curve)?;
    let c1 = verify_selfsimilar_bounds(&curve, &summary)?.c1;
    let c_u = curve.f_values.iter().fold(0.0f64, |m, f| m.max(f.abs().powf(alpha)));
    Ok(Branch { f0: summary.f0, c1, c_u, background: Background::SelfSimilar { curve, summary } })
}

/// Problems the solver does not cover are configuration errors.
pub(crate) fn solver(p: PerturbationProblem) -> Result<Solver, ScenarioError> {
    Solver::new(p).map_err(|e| match e {
        PerturbError::Unsupported(_) | PerturbError::InvalidProblem(_) => ScenarioError::Config(e.to_string()),
        e => e.into(),
    })
}

fn grid_label(s: &Solver) -> String {
    let c = &s.problem.constants;
    format!("n_t = {}, n_r = {}, T = {:e}, m = {}", s.steps(), s.r.len(), c.t_max, c.m)
}

fn tail(cfg: &RunConfig, delta: f64) -> InitialData {
    match cfg.tail {
        Some(t) => InitialData::bump(t.amplitude, t.inner, t.outer),
        None => InitialData::bump(1.0, delta, 3.0 * delta),
    }
}

/// Name prefix and file suffix for one solver's checks and tables.
#[derive(Clone, Copy)]
pub(crate) struct Tag<'a> {
    pub name: &'a str,
    pub file: &'a str,
}

impl Tag<'_> {
    fn check(&self, s: &str) -> String {
        format!("{}.{s}", self.name)
    }

    fn csv(&self, s: &str) -> String {
        format!("{s}{}.csv", self.file)
    }
}

pub(crate) fn contraction(out: &mut Outcome, s: &Solver, cfg: &RunConfig, tag: Tag) {
    let t = &cfg.tolerances;
    let rep = s.measure_contraction(t.contraction_pairs, cfg.seed());
    let file = tag.csv("contraction");
    let mut table = Table::new(&file, &["pair", "factor"]);
    for (p, &f) in rep.factors.iter().enumerate() {
        table.push(vec![p as f64, f]);
    }
    out.tables.push(table);
    out.checks.push(
        Check::new(&tag.check("contraction"), "measure_contraction", &grid_label(s), rep.max_factor, Sense::AtMost, t.contraction_max)
            .from_csv(&file, Reduce::Max { column: "factor".into() })
            .note(format!("{} pairs, worst at t = {:e}, r = {:e}", rep.factors.len(), rep.worst_t, rep.worst_r)),
    );
    out.data.insert(tag.check("contraction"), serde_json::to_value(&rep).unwrap_or_default());
}

/// Solves from w = 0 and records convergence, envelope, trace and
/// near-origin checks together with the field table.
pub(crate) fn solve(
    out: &mut Outcome,
    s: &Solver,
    cfg: &RunConfig,
    tag: Tag,
) -> Result<(SpaceTimeField, FixedPointReport), ScenarioError> {
    let t = &cfg.tolerances;
    let grid = grid_label(s);
    let (w, rep) = s.solve_fixed_point(Seed::Zero, t.fixed_point_tol, t.max_iter)?;
    let slack = 10.0 * rep.quad_error;

    let file = tag.csv("iterations");
    let mut table = Table::new(&file, &["iteration", "dist", "factor"]);
    for (k, &d) in rep.dists.iter().enumerate() {
        let f = if k == 0 { f64::NAN } else { rep.contraction_factors[k - 1] };
        table.push(vec![(k + 1) as f64, d, f]);
    }
    out.tables.push(table);
    out.checks.push(
        Check::new(&tag.check("converged"), "solve_fixed_point", &grid, *rep.dists.last().unwrap_or(&f64::NAN), Sense::AtMost, t.fixed_point_tol)
            .from_csv(&file, Reduce::Last { column: "dist".into() })
            .note(format!("{} iterations", rep.iterations)),
    );
    // the first ratio compares against the w = 0 seed and is not a contraction
    let steady = rep.contraction_factors.iter().skip(1).fold(0.0f64, |m, &f| m.max(f));
    out.checks.push(Check::new(&tag.check("iteration_factor"), "solve_fixed_point", &grid, steady, Sense::AtMost, t.contraction_max));

    let field = tag.csv("field");
    out.tables.push(field_table(&field, s, &w)?);
    let margin = envelope_margin(s, &w);
    out.checks.push(
        Check::new(&tag.check("envelope"), "solve_fixed_point", &grid, margin, Sense::AtLeast, -slack)
            .from_csv(&field, Reduce::EnvelopeMargin { value: "w".into(), envelope: "Theta".into() }),
    );

    let (w2, rep2) = s.solve_fixed_point(Seed::HalfTheta, t.fixed_point_tol, t.max_iter)?;
    out.checks.push(
        Check::new(&tag.check("unique"), "solve_fixed_point", &grid, weighted_distance(&w, &w2, &s.theta_field()), Sense::AtMost, 10.0 * t.fixed_point_tol)
            .note(format!("second seed Θ/2 with alternating signs, {} iterations", rep2.iterations)),
    );

    let trace = initial_trace_check(&w, &s.heat0_field());
    let file = tag.csv("trace");
    let mut table = Table::new(&file, &["t_lo", "t_hi", "ratio"]);
    for &(lo, hi, q) in &trace.decades {
        table.push(vec![lo, hi, q]);
    }
    out.tables.push(table);
    out.checks.push(
        Check::new(&tag.check("trace"), "initial_trace_check", &grid, trace.variation, Sense::AtMost, t.trace_variation_max)
            .note(format!("constant {:e} over {} decades", trace.constant, trace.decades.len())),
    );

    let c = &s.problem.constants;
    let inner = c.envelope().family.level(c.m);
    let mut excess = f64::NEG_INFINITY;
    for (k, &tk) in s.t.iter().enumerate().skip(1) {
        let cap = c.k * tk.powf(0.5 * c.m as f64);
        for (i, _) in s.r.iter().enumerate().take_while(|(_, &x)| x <= inner) {
            excess = excess.max(w.values[k][i].abs() - cap);
        }
    }
    out.checks.push(
        Check::new(&tag.check("near_origin"), "assemble_u", &grid, excess, Sense::AtMost, slack)
            .note(format!("max of |u − U| − K t^(m/2) on r <= {inner:e}")),
    );

    out.data.insert(tag.check("report"), serde_json::to_value(&rep)?);
    out.data.insert(tag.check("trace"), serde_json::to_value(&trace)?);
    Ok((w, rep))
}

fn envelope_margin(s: &Solver, w: &SpaceTimeField) -> f64 {
    let mut m = f64::INFINITY;
    for (row, th) in w.values.iter().zip(&s.theta).skip(1) {
        for (v, t) in row.iter().zip(th) {
            m = m.min(t - v.abs());
        }
    }
    m
}

fn residual_opts(s: &Solver, stride: usize) -> ResidualOptions {
    ResidualOptions { t_floor: 4.0 * s.t[1], r_max: f64::INFINITY, stride }
}

/// Rows t > 0 of (t, r, ΨU, w, u, Θ, u-residual); the residual is blank
/// where the stencil is not applied.
fn field_table(name: &str, s: &Solver, w: &SpaceTimeField) -> Result<Table, ScenarioError> {
    let bg = s.background_field();
    let u = s.assemble_u(w);
    let mut res = vec![vec![f64::NAN; s.r.len()]; s.t.len()];
    for (k, i, v) in s.u_residual_nodes(&u, &residual_opts(s, 1)) {
        res[k][i] = v;
    }
    let mut t = Table::new(name, &["t", "r", "U", "w", "u", "Theta", "residual"]);
    for k in 1..s.t.len() {
        for i in 0..s.r.len() {
            t.push(vec![s.t[k], s.r[i], bg.values[k][i], w.values[k][i], u.values[k][i], s.theta[k][i], res[k][i]]);
        }
    }
    Ok(t)
}

/// Solves one level finer and checks the order of the u-residual.
fn refinement(out: &mut Outcome, coarse: &Solver, w: &SpaceTimeField, cfg: &RunConfig, tag: Tag) -> Result<(), ScenarioError> {
    let t = &cfg.tolerances;
    let mut p = coarse.problem.clone();
    p.grids = p.grids.refined();
    let fine = solver(p)?;
    let (wf, _) = fine.solve_fixed_point(Seed::Zero, t.fixed_point_tol, t.max_iter)?;
    let opts = residual_opts(coarse, 1);
    let rc = coarse.u_residual(&coarse.assemble_u(w), &opts)?;
    let rf = fine.u_residual(&fine.assemble_u(&wf), &ResidualOptions { stride: 2, ..opts })?;
    let wc = coarse.w_residual(w, &opts)?;
    let wfine = fine.w_residual(&wf, &ResidualOptions { stride: 2, ..opts })?;
    let file = tag.csv("residual");
    let mut table = Table::new(&file, &["level", "u_residual", "w_residual", "worst_t", "worst_r", "nodes"]);
    for (lvl, (u, ww)) in [(&rc, &wc), (&rf, &wfine)].into_iter().enumerate() {
        table.push(vec![lvl as f64, u.max_residual, ww.max_residual, u.worst_t, u.worst_r, u.nodes as f64]);
    }
    out.tables.push(table);
    let order = (rc.max_residual / rf.max_residual).log2();
    let grid = format!("{} and {}", grid_label(coarse), grid_label(&fine));
    out.checks.push(
        Check::new(&tag.check("residual_order"), "residual_check", &grid, order, Sense::AtLeast, t.residual_order_min).note(format!(
            "u residual {:e} -> {:e}; w residual order {:.3}",
            rc.max_residual,
            rf.max_residual,
            (wc.max_residual / wfine.max_residual).log2()
        )),
    );
    let d = weighted_distance(w, &wf.subsample(2), &coarse.theta_field());
    out.checks.push(Check::new(&tag.check("refined_distance"), "weighted_distance", &grid, d, Sense::AtMost, 100.0 * t.fixed_point_tol));
    Ok(())
}

fn whole_problem(cfg: &RunConfig, dim: usize, alpha: f64, b: &Branch, delta: f64) -> Result<PerturbationProblem, ScenarioError> {
    let psi = SpatialCutoff::One;
    let data = tail(cfg, delta);
    let constants = constants_practical(alpha, dim, b.c1, b.c_u, &psi.norms(dim), data.bump_amplitude.abs(), delta)?;
    Ok(PerturbationProblem {
        domain: DomainSpec::WholeSpace,
        dim,
        alpha,
        background: b.background.clone(),
        psi,
        data,
        constants,
        grids: cfg.grids.unwrap_or_default(),
    })
}

fn first_branch(cfg: &RunConfig, dim: usize, alpha: f64) -> Result<f64, ScenarioError> {
    shooting_values(cfg, dim, alpha, 1)?
        .first()
        .map(|&(a, _)| a)
        .ok_or_else(|| ScenarioError::Config("no profile with the requested mu in a_window".into()))
}

fn bundle_data(out: &mut Outcome, key: &str, c: &ConstantsBundle) -> Result<(), ScenarioError> {
    out.put(key, c)?;
    out.put(&format!("{key}_check"), c.check())
}

pub(crate) fn perturb(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(1.0);
    gate(dim, alpha)?;
    let mut cfg = cfg.clone();
    if cfg.a.is_none() && cfg.mu.is_none() {
        cfg.mu = Some(0.3);
    }
    let a = first_branch(&cfg, dim, alpha)?;
    let b = branch(&cfg, dim, alpha, a)?;
    let delta = cfg.delta.unwrap_or(1.0);
    let s = solver(whole_problem(&cfg, dim, alpha, &b, delta)?)?;
    let mut out = Outcome::default();
    out.put("a", a)?;
    bundle_data(&mut out, "constants", &s.problem.constants)?;
    let tag = Tag { name: "perturb", file: "" };
    contraction(&mut out, &s, &cfg, tag);
    let (w, _) = solve(&mut out, &s, &cfg, tag)?;
    if cfg.tolerances.refinement.unwrap_or(true) {
        refinement(&mut out, &s, &w, &cfg, tag)?;
    }
    Ok(out)
}

pub(crate) fn nonunique(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(1.0);
    gate(dim, alpha)?;
    let mut cfg = cfg.clone();
    cfg.a = None;
    cfg.mu = Some(cfg.mu.unwrap_or(0.3));
    cfg.zeros = Some(cfg.zeros.clone().unwrap_or_else(|| vec![0, 1]));
    cfg.a_window = Some(cfg.a_window.unwrap_or((-3.0, 3.0)));
    let mut out = Outcome::default();
    let mut zeros = cfg.zeros.clone().unwrap_or_default();
    zeros.dedup();
    // one branch per zero count, smallest a first within each
    let mut found: Vec<(f64, Option<usize>)> = Vec::new();
    if zeros.len() >= 2 {
        for (a, z) in shooting_values(&cfg, dim, alpha, 1)? {
            if !found.iter().any(|&(_, y)| y == z) {
                found.push((a, z));
            }
        }
    }
    out.put("shooting_values", found.iter().map(|&(a, _)| a).collect::<Vec<_>>())?;
    let count = if zeros.len() < 2 { zeros.len() } else { found.len() };
    out.checks.push(
        Check::new("nonunique.branches", "find_profiles", "-", count as f64, Sense::AtLeast, 2.0)
            .note(format!("zero counts {zeros:?}; nonuniqueness needs branches on at least two of them")),
    );
    if count < 2 {
        return Ok(out);
    }
    let delta = cfg.delta.unwrap_or(1.0);
    let mut problems = Vec::new();
    let mut f0 = Vec::new();
    for &(a, _) in found.iter().take(2) {
        let b = branch(&cfg, dim, alpha, a)?;
        f0.push(b.f0);
        problems.push(whole_problem(&cfg, dim, alpha, &b, delta)?);
    }
    // a smaller T keeps every smallness condition, so both runs share the
    // shorter horizon and therefore the same t-grid
    let t_max = problems.iter().map(|p| p.constants.t_max).fold(f64::INFINITY, f64::min);
    let mut us = Vec::new();
    for (j, mut p) in problems.into_iter().enumerate() {
        p.constants.t_max = t_max;
        let s = solver(p)?;
        let name = format!("nonunique[{j}]");
        let file = format!("_{j}");
        let tag = Tag { name: &name, file: &file };
        bundle_data(&mut out, &format!("constants_{j}"), &s.problem.constants)?;
        contraction(&mut out, &s, &cfg, tag);
        let (w, _) = solve(&mut out, &s, &cfg, tag)?;
        us.push((s.t.clone(), s.assemble_u(&w)));
    }
    let (t, u1) = &us[0];
    let u2 = &us[1].1;
    let target = (f0[0] - f0[1]).abs();
    let t_floor = 4.0 * t[1];
    let mut table = Table::new("separation.csv", &["t", "u1_0", "u2_0", "ratio"]);
    for (k, &tk) in t.iter().enumerate().skip(1).filter(|(_, &tk)| tk >= t_floor * (1.0 - 1e-12)) {
        let (a, b) = (u1.values[k][0], u2.values[k][0]);
        table.push(vec![tk, a, b, tk.powf(1.0 / alpha) * (a - b).abs() / target]);
    }
    let (t0, ratio) = table.rows.first().map(|r| (r[0], r[3])).unwrap_or((f64::NAN, f64::NAN));
    let grid = format!("shared t-grid, n_t = {}, T = {t_max:e}, t_floor = {t_floor:e}", t.len() - 1);
    let band = cfg.tolerances.separation_band;
    let mut lo = Check::new("nonunique.separation_lo", "assemble_u", &grid, ratio, Sense::AtLeast, 1.0 - band)
        .from_csv("separation.csv", Reduce::First { column: "ratio".into() });
    let hi = Check::new("nonunique.separation_hi", "assemble_u", &grid, ratio, Sense::AtMost, 1.0 + band)
        .from_csv("separation.csv", Reduce::First { column: "ratio".into() });
    if !(0.9..=1.1).contains(&ratio) {
        lo = lo.note(ScenarioError::SeparationNotResolved { ratio, t: t0 }.to_string());
    }
    out.checks.push(lo);
    out.checks.push(hi);
    out.tables.push(table);
    out.put("f0", &f0)?;
    out.put("separation_target", target)?;
    Ok(out)
}

pub(crate) fn ball(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(1.0);
    gate(dim, alpha)?;
    let delta = cfg.delta.unwrap_or(0.3);
    let radius = cfg.radius.unwrap_or(1.0);
    if !(delta < radius) {
        return Err(ScenarioError::Config(format!("delta = {delta} must be below R = {radius}")));
    }
    let mut cfg = cfg.clone();
    if cfg.a.is_none() {
        cfg.mu = Some(cfg.mu.unwrap_or(0.5));
        cfg.zeros = Some(cfg.zeros.clone().unwrap_or_else(|| vec![1]));
    }
    let a = first_branch(&cfg, dim, alpha)?;
    let b = branch(&cfg, dim, alpha, a)?;
    let mu = match &b.background {
        Background::SelfSimilar { summary, .. } => summary.mu,
        Background::Zero => 0.0,
    };
    let psi = SpatialCutoff::for_ball(delta, radius);
    let mut data = InitialData { bump_amplitude: 0.0, bump_inner: delta, bump_outer: radius, power_mu: mu };
    if let Some(t) = cfg.tail {
        (data.bump_amplitude, data.bump_inner, data.bump_outer) = (t.amplitude, t.inner, t.outer);
    }
    let w0_sup = mu.abs() * delta.powf(-2.0 / alpha) + data.bump_amplitude.abs();
    let constants = constants_practical(alpha, dim, b.c1, b.c_u, &psi.norms(dim), w0_sup, delta)?;
    let grids = cfg.grids.unwrap_or(GridSettings { n_t: 32, ..Default::default() });
    let p = PerturbationProblem { domain: DomainSpec::Ball { radius }, dim, alpha, background: b.background, psi, data, constants, grids };
    let s = solver(p)?;
    let mut out = Outcome::default();
    out.put("a", a)?;
    out.put("mu", mu)?;
    bundle_data(&mut out, "constants", &s.problem.constants)?;
    let tag = Tag { name: "ball", file: "" };
    contraction(&mut out, &s, &cfg, tag);
    let (w, rep) = solve(&mut out, &s, &cfg, tag)?;
    let u = s.assemble_u(&w);
    let mut table = Table::new("boundary.csv", &["t", "u_R"]);
    for (k, row) in u.values.iter().enumerate().skip(1) {
        table.push(vec![s.t[k], *row.last().unwrap_or(&f64::NAN)]);
    }
    let sup = table.rows.iter().fold(0.0f64, |m, r| m.max(r[1].abs()));
    out.tables.push(table);
    out.checks.push(
        Check::new("ball.boundary", "assemble_u", &grid_label(&s), sup, Sense::AtMost, 10.0 * rep.quad_error.max(1e-12))
            .from_csv("boundary.csv", Reduce::MaxAbs { column: "u_R".into() }),
    );
    if cfg.tolerances.refinement.unwrap_or(false) {
        refinement(&mut out, &s, &w, &cfg, tag)?;
    }
    Ok(out)
}
