//! One PASS/FAIL line per acceptance criterion, with its runtime budget.
//! Run with `cargo test --release --test acceptance -- --nocapture`.

use shl_core::cutoffs::{default_smoothing_t_grid, default_x_grid, verify_smoothing, CutoffFamily};
use shl_core::heatops::*;
use shl_core::profile::*;
use shl_core::scenarios::{run, Check, RunConfig, RunOutput, Status};
use std::time::{Duration, Instant};

struct Line {
    id: usize,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn criterion(id: usize, title: &'static str, budget_s: u64, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (pass, detail) = f();
    Line { id, title, pass, detail, elapsed: start.elapsed(), budget: Duration::from_secs(budget_s) }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp()).collect()
}

fn check<'a>(out: &'a RunOutput, name: &str) -> Option<&'a Check> {
    out.record.checks.iter().find(|c| c.name == name)
}

fn passed(out: &RunOutput, names: &[&str]) -> bool {
    names.iter().all(|n| check(out, n).is_some_and(|c| c.status == Status::Pass))
}

fn value(out: &RunOutput, name: &str) -> f64 {
    check(out, name).map_or(f64::NAN, |c| c.value)
}

fn c1_moments() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for dim in 1..=4usize {
        for k in 0..4 * dim {
            let g = 0.25 * k as f64;
            let exact = 2f64.powf(-g) * statrs::function::gamma::gamma(0.5 * (dim as f64 - g)) / statrs::function::gamma::gamma(0.5 * dim as f64);
            let q = power_moment_quadrature(dim, g);
            worst = worst.max((q - exact).abs() / exact);
            cases += 1;
        }
    }
    (worst <= 1e-8, format!("max relative error {worst:.2e} over {cases} (N, gamma)"))
}

fn c2_scaling() -> (bool, String) {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
    let ts = log_grid(1e-6, 1e-1, 11);
    let mut worst = 0.0f64;
    for (dim, g) in [(1usize, 0.5), (2, 1.0), (3, 1.0), (3, 2.0), (4, 3.0)] {
        let field = RadialField::pure_power(dim, 1.0, g, grid.clone());
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| t.powf(0.5 * g) * heat_eval(&DomainSpec::WholeSpace, &field, t, 0.0, &QuadratureSettings::default()).unwrap().value)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        worst = vals.iter().fold(worst, |m, v| m.max((v / mean - 1.0).abs()));
    }
    (worst <= 1e-6, format!("max relative spread of t^(gamma/2) e^(tΔ)|x|^-gamma (0) = {worst:.2e}"))
}

fn c3_threshold() -> (bool, String) {
    let mu0 = mu0_threshold(3, 2.0).unwrap();
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (factor, expect) in [(1.01, Outcome::NoNonnegativeSolution), (0.99, Outcome::CriterionNotViolated)] {
        let field = RadialField::pure_power(3, factor * mu0, 1.0, grid.clone());
        match nonexistence_verdict(&DomainSpec::WholeSpace, &field, 2.0, &default_t_grid(), None) {
            Ok(v) => {
                ok &= v.outcome == expect && (v.functional_value - factor).abs() <= 1e-4;
                parts.push(format!("{factor}: {:?} at {:.8}", v.outcome, v.functional_value));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{factor}: {e}"));
            }
        }
    }
    (ok, format!("mu0 = {mu0:.10}; {}", parts.join("; ")))
}

fn c4_profile() -> (bool, String) {
    let mut residual = 0.0f64;
    let mut sym = 0.0f64;
    let mut drift = 0.0f64;
    for a in [0.25, 0.5, 1.0] {
        let c = integrate_profile(ProfileSpec::new(3, 1.0, a), 40.0, 1e-10).unwrap();
        let m = integrate_profile(ProfileSpec::new(3, 1.0, -a), 40.0, 1e-10).unwrap();
        let far = integrate_profile(ProfileSpec::new(3, 1.0, a), 80.0, 1e-10).unwrap();
        residual = residual.max(c.max_residual()).max(m.max_residual());
        for (x, y) in c.f_values.iter().zip(&m.f_values) {
            sym = sym.max((x + y).abs());
        }
        drift = drift.max((summarize_profile(&c).unwrap().mu - summarize_profile(&far).unwrap().mu).abs());
    }
    let zero = integrate_profile(ProfileSpec::new(3, 1.0, 0.0), 40.0, 1e-10).unwrap();
    let exact_zero = zero.f_values.iter().chain(&zero.df_values).all(|&v| v == 0.0);
    (
        residual <= 1e-8 && sym == 0.0 && drift <= 1e-4 && exact_zero,
        format!("residual {residual:.2e}, symmetry defect {sym:e}, mu drift {drift:.2e}, zero curve exact: {exact_zero}"),
    )
}

fn c5_branches() -> (bool, String) {
    let opts = ScanOptions { samples_per_unit: 40.0, ..Default::default() };
    let mut found = Vec::new();
    for zeros in [0usize, 1] {
        for a in find_profiles(3, 1.0, 0.3, zeros, (-3.0, 3.0), 2, &opts).unwrap() {
            let s = summarize_profile(&integrate_profile(ProfileSpec::new(3, 1.0, a), 40.0, 1e-10).unwrap()).unwrap();
            if s.zero_count == zeros && (s.mu - 0.3).abs() <= 1e-8 {
                found.push(a);
            }
        }
    }
    found.sort_by(f64::total_cmp);
    found.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    (found.len() >= 2, format!("mu = 0.3, zero counts 0 and 1: verified shooting values {found:.5?}"))
}

fn c6_smoothing() -> (bool, String) {
    let fam = CutoffFamily::new(1.0, 4);
    let rep = verify_smoothing(&fam, 1, &default_smoothing_t_grid(12), &default_x_grid(&fam)).unwrap();
    let m = rep.min_margin();
    (m >= -1e-8, format!("min margin {m:.3e} (chi {:.2e}, weighted {:.2e}, duhamel {:.2e})", rep.chi.margin, rep.weighted_chi.margin, rep.duhamel.margin))
}

fn c7_comparison() -> (bool, String) {
    let x: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let rep = ball_comparison_check(2.0, 1.0, &log_grid(1e-3, 0.25, 12), &x).unwrap();
    (rep.min_margin >= -1e-9, format!("min margin {:.3e}, kernel floor margin {:.3e}", rep.min_margin, rep.floor_margin))
}

fn config(json: &str) -> RunConfig {
    RunConfig::from_json(json).unwrap()
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    lines.push(criterion(1, "Gamma-moment oracle", 5, c1_moments));
    lines.push(criterion(2, "scaling invariance", 10, c2_scaling));
    lines.push(criterion(3, "threshold boundary", 10, c3_threshold));
    lines.push(criterion(4, "profile integrity", 30, c4_profile));
    lines.push(criterion(5, "branch multiplicity", 120, c5_branches));
    lines.push(criterion(6, "smoothing lemmas", 60, c6_smoothing));
    lines.push(criterion(7, "ball comparison", 30, c7_comparison));

    // criteria 8 to 10 share one whole-space run with a refinement level
    let start = Instant::now();
    let whole = run(&config(r#"{"command":"perturb","mu":0.3,"zeros":[0],"tolerances":{"refinement":true}}"#)).unwrap();
    let shared = start.elapsed();
    let pairs = whole.record.data["perturb.contraction"]["factors"].as_array().map_or(0, |a| a.len());
    let mut l = criterion(8, "contraction", 300, || {
        let ok = pairs >= 20 && passed(&whole, &["perturb.contraction", "perturb.converged", "perturb.iteration_factor", "perturb.envelope"]);
        (
            ok,
            format!(
                "max factor {:.3} over {pairs} pairs; last distance {:.1e}; envelope margin {:.1e}",
                value(&whole, "perturb.contraction"),
                value(&whole, "perturb.converged"),
                value(&whole, "perturb.envelope")
            ),
        )
    });
    l.elapsed += shared;
    lines.push(l);
    let mut l = criterion(9, "initial trace", 60, || {
        (passed(&whole, &["perturb.trace"]), format!("variation x{:.4} over the two smallest decades", value(&whole, "perturb.trace")))
    });
    l.elapsed += shared;
    lines.push(l);
    let mut l = criterion(10, "PDE residual order", 300, || {
        (passed(&whole, &["perturb.residual_order"]), format!("order {:.3} under refinement x2", value(&whole, "perturb.residual_order")))
    });
    l.elapsed += shared;
    lines.push(l);

    lines.push(criterion(11, "nonuniqueness separation", 600, || {
        let out = run(&config(r#"{"command":"nonunique","mu":0.3,"zeros":[0,1]}"#)).unwrap();
        let ok = passed(&out, &["nonunique.branches", "nonunique.separation_lo", "nonunique.separation_hi"])
            && out.record.verdict == Status::Pass;
        (ok, format!("ratio {:.6} at the smallest resolved t; verdict {}", value(&out, "nonunique.separation_lo"), out.record.verdict))
    }));
    lines.push(criterion(12, "Dirichlet ball run", 600, || {
        let out = run(&config(r#"{"command":"ball","mu":0.5,"zeros":[1],"delta":0.3,"R":1.0}"#)).unwrap();
        let ok = passed(&out, &["ball.boundary", "ball.near_origin", "ball.converged"]) && out.record.verdict == Status::Pass;
        (
            ok,
            format!("boundary sup {:.1e}; near-origin excess {:.1e}; verdict {}", value(&out, "ball.boundary"), value(&out, "ball.near_origin"), out.record.verdict),
        )
    }));

    println!();
    let mut all = true;
    for l in &lines {
        let in_time = l.elapsed <= l.budget;
        let ok = l.pass && in_time;
        all &= ok;
        println!(
            "{} {:>2} {}: {} [{:.1} s of {} s{}]",
            if ok { "PASS" } else { "FAIL" },
            l.id,
            l.title,
            l.detail,
            l.elapsed.as_secs_f64(),
            l.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
    assert!(all, "acceptance criteria failed");
}
