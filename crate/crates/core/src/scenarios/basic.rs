//! Commands that need no space-time solve: profile, threshold, nonexist.

use super::{Check, Outcome, Reduce, RunConfig, ScenarioError, Sense, Status, Table};
use crate::heatops::{
    default_t_grid, fr3_classifier, mu0_threshold, nonexistence_verdict, power_moment_closed_form, Condition,
    DomainSpec, HeatError, Outcome as HeatOutcome, RadialField,
};
use crate::profile::{
    find_profiles, integrate_profile, subcritical, summarize_profile, verify_selfsimilar_bounds, ProfileCurve,
    ProfileSpec, ScanOptions, SummaryRecord,
};

pub(crate) const DEFAULT_WINDOW: (f64, f64) = (-4.0, 4.0);

pub(crate) fn scan_options(cfg: &RunConfig) -> ScanOptions {
    let t = &cfg.tolerances;
    ScanOptions { r_max: t.r_max, tol: t.profile_tol.max(1e-9), samples_per_unit: t.samples_per_unit, mu_tol: t.mu_tol }
}

pub(crate) fn gate(dim: usize, alpha: f64) -> Result<(), ScenarioError> {
    if subcritical(dim, alpha) {
        Ok(())
    } else {
        Err(ScenarioError::Config(format!("profiles need alpha < 4/(N − 2), got N = {dim}, alpha = {alpha}")))
    }
}

/// Shooting values named by the config: `a` itself, or every branch with
/// the requested μ for each zero count.
pub(crate) fn shooting_values(cfg: &RunConfig, dim: usize, alpha: f64, k_max: usize) -> Result<Vec<(f64, Option<usize>)>, ScenarioError> {
    if let Some(a) = cfg.a {
        return Ok(vec![(a, None)]);
    }
    let Some(mu) = cfg.mu else {
        return Err(ScenarioError::Config("give either a or mu".into()));
    };
    let window = cfg.a_window.unwrap_or(DEFAULT_WINDOW);
    let opts = scan_options(cfg);
    let mut out = Vec::new();
    for &z in cfg.zeros.as_deref().unwrap_or(&[0]) {
        for a in find_profiles(dim, alpha, mu, z, window, k_max, &opts)? {
            out.push((a, Some(z)));
        }
    }
    Ok(out)
}

fn profile_table(name: &str, c: &ProfileCurve) -> Table {
    let mut t = Table::new(name, &["r", "f", "df", "residual"]);
    for (i, res) in c.residuals().into_iter().enumerate() {
        t.push(vec![c.r_grid[i], c.f_values[i], c.df_values[i], res]);
    }
    t
}

pub(crate) fn profile(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(1.0);
    gate(dim, alpha)?;
    let mut cfg = cfg.clone();
    if cfg.a.is_none() && cfg.mu.is_none() {
        cfg.mu = Some(0.3);
    }
    let cfg = &cfg;
    let tol = &cfg.tolerances;
    let mut out = Outcome::default();
    let mut summaries = Vec::new();
    for (k, (a, zeros)) in shooting_values(cfg, dim, alpha, 8)?.into_iter().enumerate() {
        let spec = ProfileSpec::new(dim, alpha, a);
        let curve = integrate_profile(spec, tol.r_max, tol.profile_tol)?;
        let grid = format!("uniform r, h = {}, r_max = {}", curve.spacing(), tol.r_max);
        let file = format!("profile_{k}.csv");
        let name = |s: &str| format!("profile[{k}].{s}");
        out.checks.push(
            Check::new(&name("residual"), "integrate_profile", &grid, curve.max_residual(), Sense::AtMost, tol.residual_max)
                .from_csv(&file, Reduce::MaxAbs { column: "residual".into() }),
        );
        let summary = summarize_profile(&curve)?;
        let c1 = verify_selfsimilar_bounds(&curve, &summary)?.c1;
        if let Some(z) = zeros {
            out.checks.push(Check::flag(&name("zero_count"), "summarize_profile", &grid, summary.zero_count == z));
            let mu = cfg.mu.unwrap_or(0.0);
            out.checks.push(Check::new(
                &name("mu"),
                "summarize_profile",
                &grid,
                (summary.mu - mu).abs(),
                Sense::AtMost,
                (10.0 * tol.mu_tol).max(summary.mu_uncertainty),
            ));
        }
        out.tables.push(profile_table(&file, &curve));
        summaries.push(SummaryRecord::new(&spec, &summary, c1));
    }
    out.put("profiles", summaries)?;
    Ok(out)
}

fn uniform(h: f64, end: f64) -> Vec<f64> {
    let n = (end / h).round() as usize;
    (0..=n).map(|i| i as f64 * h).collect()
}

pub(crate) fn threshold(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(2.0);
    let mu0 = mu0_threshold(dim, alpha).map_err(|e| match e {
        HeatError::SupercriticalExponentRequired { .. } => ScenarioError::Config(e.to_string()),
        e => e.into(),
    })?;
    let gamma = 2.0 / alpha;
    let closed = 1.0 / (alpha.powf(1.0 / alpha) * power_moment_closed_form(dim, gamma));
    let tol = &cfg.tolerances;
    let domain = DomainSpec::WholeSpace;
    let t_grid = default_t_grid();
    let mut out = Outcome::default();
    out.checks.push(Check::new(
        "threshold.mu0_routes",
        "mu0_threshold",
        "graded quadrature vs Gamma closed form",
        (mu0 - closed).abs() / closed,
        Sense::AtMost,
        1e-8,
    ));
    let mut factors = vec![(1.01, HeatOutcome::NoNonnegativeSolution), (0.99, HeatOutcome::CriterionNotViolated)];
    if let Some(mu) = cfg.mu {
        let f = mu / mu0;
        let expect = if f > 1.0 { HeatOutcome::NoNonnegativeSolution } else { HeatOutcome::CriterionNotViolated };
        factors.push((f, expect));
    }
    let mut table = Table::new("threshold.csv", &["t", "factor", "functional"]);
    let mut verdicts = Vec::new();
    for (idx, &(factor, expect)) in factors.iter().enumerate() {
        let field = RadialField::pure_power(dim, factor * mu0, gamma, uniform(0.05, 5.0));
        let grid = "40 log-spaced t in [1e-6, 1/4]";
        let name = |s: &str| format!("threshold[{idx}].{s}");
        match nonexistence_verdict(&domain, &field, alpha, &t_grid, None) {
            Ok(v) => {
                for &(t, val) in &v.samples {
                    table.push(vec![t, factor, val]);
                }
                out.checks.push(Check::flag(&name("outcome"), "nonexistence_verdict", grid, v.outcome == expect));
                out.checks.push(
                    Check::new(&name("functional"), "doubling_functional", grid, (v.functional_value - factor).abs(), Sense::AtMost, tol.functional_tol)
                        .note(format!("functional {} for mu = {factor} mu0", v.functional_value)),
                );
                verdicts.push(serde_json::json!({"factor": factor, "verdict": v}));
            }
            Err(HeatError::Inconclusive { value, margin, witness_t }) => {
                out.checks.push(
                    Check::new(&name("outcome"), "nonexistence_verdict", grid, value, Sense::AtMost, 1.0)
                        .with_status(Status::Inconclusive)
                        .note(format!("within margin {margin:e} of 1 at t = {witness_t:e}")),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.tables.push(table);
    out.put("mu0", mu0)?;
    out.put("mu0_closed_form", closed)?;
    out.put("verdicts", verdicts)?;
    Ok(out)
}

pub(crate) fn nonexist(cfg: &RunConfig) -> Result<Outcome, ScenarioError> {
    let dim = cfg.dim.unwrap_or(3);
    let alpha = cfg.alpha.unwrap_or(2.0);
    let gamma = cfg.gamma.unwrap_or(2.0 / alpha);
    let mu = cfg.mu.unwrap_or(1.3);
    if !(mu > 0.0) {
        return Err(ScenarioError::Config(format!("nonexist needs mu > 0, got {mu}")));
    }
    let fr3 = fr3_classifier(dim, alpha, gamma, mu);
    let mut out = Outcome::default();
    out.put("fr3", fr3)?;
    if gamma >= dim as f64 {
        // not locally integrable: there is no heat flow to cross-check
        out.checks.push(
            Check::flag("nonexist.classified", "fr3_classifier", "-", fr3.condition == Condition::B1)
                .note("gamma >= N: the data are not locally integrable"),
        );
        return Ok(out);
    }
    let field = RadialField::pure_power(dim, mu, gamma, uniform(0.05, 5.0));
    let grid = "40 log-spaced t in [1e-6, 1/4]";
    match nonexistence_verdict(&DomainSpec::WholeSpace, &field, alpha, &default_t_grid(), None) {
        Ok(v) => {
            let mut table = Table::new("nonexist.csv", &["t", "functional"]);
            for &(t, val) in &v.samples {
                table.push(vec![t, val]);
            }
            out.tables.push(table);
            out.checks.push(
                Check::new("nonexist.functional", "doubling_functional", grid, v.functional_value, Sense::AtLeast, 0.0)
                    .from_csv("nonexist.csv", Reduce::Max { column: "functional".into() }),
            );
            // the classifier is one-sided: a violated criterion must be backed
            // by the quadrature, the converse is not claimed
            let agrees = fr3.condition == Condition::None || v.outcome == HeatOutcome::NoNonnegativeSolution;
            out.checks.push(
                Check::flag("nonexist.cross_validated", "fr3_classifier + nonexistence_verdict", grid, agrees)
                    .note(format!("condition {:?}, quadrature outcome {:?}", fr3.condition, v.outcome)),
            );
            out.put("verdict", v)?;
        }
        Err(HeatError::Inconclusive { value, margin, witness_t }) => {
            out.checks.push(
                Check::new("nonexist.functional", "nonexistence_verdict", grid, value, Sense::AtMost, 1.0)
                    .with_status(Status::Inconclusive)
                    .note(format!("within margin {margin:e} of 1 at t = {witness_t:e}")),
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}
