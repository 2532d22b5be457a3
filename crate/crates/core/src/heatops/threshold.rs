use super::apply::{heat_apply_on, heat_eval, QuadratureSettings};
use super::{sphere_area, DomainSpec, HeatError, RadialField};
use crate::quadrature::{composite, graded_singular};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

/// Agreement required between the two routes to the power moment.
const MOMENT_AGREEMENT: f64 = 1e-8;

/// [e^Δ |·|^{−γ}](0) from the Gamma function: 2^{−γ} Γ((N−γ)/2) / Γ(N/2).
pub fn power_moment_closed_form(dim: usize, gamma_exp: f64) -> f64 {
    let n = dim as f64;
    2f64.powf(-gamma_exp) * gamma(0.5 * (n - gamma_exp)) / gamma(0.5 * n)
}

/// (4π)^{−N/2} |S^{N−1}| ∫_0^∞ e^{−r²/4} r^{N−1−γ} dr on a graded mesh near 0.
pub fn power_moment_quadrature(dim: usize, gamma_exp: f64) -> f64 {
    let n = dim as f64;
    let beta = n - 1.0 - gamma_exp;
    let g = |r: f64| (-0.25 * r * r).exp();
    let inner = graded_singular(beta, 1.0, 48, 12, g);
    let outer = composite(1.0, 16.0, 0.25, 12, |r| g(r) * r.powf(beta));
    (4.0 * std::f64::consts::PI).powf(-0.5 * n) * sphere_area(dim) * (inner + outer)
}

/// [e^Δ |·|^{−γ}](0), by quadrature, cross-checked against the closed form.
pub fn power_moment(dim: usize, gamma_exp: f64) -> Result<f64, HeatError> {
    if dim == 0 || !(0.0..dim as f64).contains(&gamma_exp) {
        return Err(HeatError::GammaDomain { dim, gamma: gamma_exp });
    }
    let q = power_moment_quadrature(dim, gamma_exp);
    let c = power_moment_closed_form(dim, gamma_exp);
    let rel = (q - c).abs() / c.abs();
    if !(rel <= MOMENT_AGREEMENT) {
        return Err(HeatError::QuadratureFailure { rho: 0.0, error: rel });
    }
    Ok(q)
}

/// μ₀ = [α^{1/α} [e^Δ |·|^{−2/α}](0)]^{−1}.
pub fn mu0_threshold(dim: usize, alpha: f64) -> Result<f64, HeatError> {
    if !(alpha > 2.0 / dim as f64) {
        return Err(HeatError::SupercriticalExponentRequired { dim, alpha });
    }
    let pm = power_moment(dim, 2.0 / alpha)?;
    Ok(1.0 / (alpha.powf(1.0 / alpha) * pm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingValue {
    pub value: f64,
    /// Quadrature error estimate on `value`.
    pub error: f64,
    /// Radius at which the sup is attained.
    pub rho: f64,
}

/// (αt)^{1/α} sup_ρ (e^{tΔ} field)(ρ), with the grid maximizer refined by
/// golden-section search between its neighbours.
pub fn doubling_detail(domain: &DomainSpec, field: &RadialField, alpha: f64, t: f64) -> Result<DoublingValue, HeatError> {
    let min = field.min_value();
    if min < 0.0 {
        return Err(HeatError::NegativeField { min });
    }
    let settings = QuadratureSettings::default();
    let mut grid: Vec<f64> = field.grid.clone();
    if let Some(r) = domain.radius() {
        grid.retain(|&x| x < r);
    }
    let out = heat_apply_on(domain, field, t, &grid, &settings)?;
    let vals = &out.field.values;
    let mut i_max = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v > vals[i_max] {
            i_max = i;
        }
    }
    let mut best = (grid[i_max], vals[i_max], out.max_error);
    if vals[i_max] > 0.0 && grid.len() > 1 {
        let lo = grid[i_max.saturating_sub(1)];
        let hi = grid[(i_max + 1).min(grid.len() - 1)];
        let eval = |r: f64| heat_eval(domain, field, t, r, &settings);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        for _ in 0..40 {
            if fc.value > fd.value {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(d)?;
            }
            if b - a < 1e-10 * (1.0 + b) {
                break;
            }
        }
        for e in [(c, fc), (d, fd)] {
            if e.1.value > best.1 {
                best = (e.0, e.1.value, best.2.max(e.1.error));
            }
        }
    }
    let scale = (alpha * t).powf(1.0 / alpha);
    Ok(DoublingValue { value: scale * best.1, error: scale * best.2, rho: best.0 })
}

/// (αt)^{1/α} ‖e^{tΔ} field‖_∞.
pub fn doubling_functional(domain: &DomainSpec, field: &RadialField, alpha: f64, t: f64) -> Result<f64, HeatError> {
    Ok(doubling_detail(domain, field, alpha, t)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    NoNonnegativeSolution,
    CriterionNotViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub witness_t: f64,
    pub functional_value: f64,
    pub margin: f64,
    /// (t, functional value) over the whole grid.
    pub samples: Vec<(f64, f64)>,
}

/// 40 log-spaced times in [1e−6, 1/4].
pub fn default_t_grid() -> Vec<f64> {
    let (lo, hi) = (1e-6f64.ln(), 0.25f64.ln());
    (0..40).map(|i| (lo + (hi - lo) * i as f64 / 39.0).exp()).collect()
}

/// Decide whether the doubling functional exceeds 1 somewhere on `t_grid`.
/// The margin defaults to ten times the quadrature error at the maximizer.
pub fn nonexistence_verdict(
    domain: &DomainSpec,
    field: &RadialField,
    alpha: f64,
    t_grid: &[f64],
    margin: Option<f64>,
) -> Result<Verdict, HeatError> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(HeatError::InvalidArgument("t_grid must be positive and sorted".into()));
    }
    let mut samples = Vec::with_capacity(t_grid.len());
    let mut best: Option<(f64, DoublingValue)> = None;
    for &t in t_grid {
        let d = doubling_detail(domain, field, alpha, t)?;
        samples.push((t, d.value));
        if best.is_none_or(|(_, b)| d.value > b.value) {
            best = Some((t, d));
        }
    }
    let (witness_t, d) = best.unwrap();
    // rounding floor so that an exact error estimate of 0 still leaves a band
    let margin = margin.unwrap_or((10.0 * d.error).max(1e-12 * d.value.abs()));
    let outcome = if d.value > 1.0 + margin {
        Outcome::NoNonnegativeSolution
    } else if d.value < 1.0 - margin {
        Outcome::CriterionNotViolated
    } else {
        return Err(HeatError::Inconclusive { value: d.value, margin, witness_t });
    };
    Ok(Verdict { outcome, witness_t, functional_value: d.value, margin, samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    B1,
    B2,
    B3,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fr3Result {
    pub condition: Condition,
    pub verdict: Outcome,
    pub mu0: Option<f64>,
}

/// Which of the three sufficient conditions for nonexistence applies to
/// data μ|x|^{−γ}.
pub fn fr3_classifier(dim: usize, alpha: f64, gamma_exp: f64, mu: f64) -> Fr3Result {
    let n = dim as f64;
    let critical = 2.0 / alpha;
    let equal = (gamma_exp - critical).abs() <= 1e-12 * critical.abs();
    let mu0 = mu0_threshold(dim, alpha).ok();
    let condition = if gamma_exp >= n {
        Condition::B1
    } else if gamma_exp > critical && !equal {
        Condition::B2
    } else if equal && alpha > 2.0 / n && mu0.is_some_and(|m| mu > m) {
        Condition::B3
    } else {
        Condition::None
    };
    let verdict = if condition == Condition::None {
        Outcome::CriterionNotViolated
    } else {
        Outcome::NoNonnegativeSolution
    };
    Fr3Result { condition, verdict, mu0 }
}
