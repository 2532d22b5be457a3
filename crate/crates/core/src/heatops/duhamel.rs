use super::apply::{heat_apply_on, QuadratureSettings};
use super::{DomainSpec, FarField, HeatError, RadialField};
use crate::quadrature::gauss_legendre;
use serde::Serialize;

const RULE_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DuhamelOutput {
    pub field: RadialField,
    /// Quadrature nodes in s and their weights.
    pub s_nodes: Vec<f64>,
    pub s_weights: Vec<f64>,
    /// sup over the sampled s of sup|F(s)|.
    pub forcing_sup: f64,
    pub max_error: f64,
}

/// Nodes and positive weights for ∫_0^t ds on the graded grid
/// s = t(3u² − 2u³), with composite Gauss–Legendre panels in u. The grid
/// clusters at both ends, so √s and √(t − s) behaviour is resolved. `count`
/// is rounded up to a whole number of panels.
pub fn graded_s_rule(t: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
    let panels = count.div_ceil(RULE_ORDER).max(1);
    let rule = gauss_legendre(RULE_ORDER);
    let mut s = Vec::with_capacity(panels * RULE_ORDER);
    let mut w = Vec::with_capacity(panels * RULE_ORDER);
    for p in 0..panels {
        let u0 = p as f64 / panels as f64;
        let u1 = (p + 1) as f64 / panels as f64;
        for (u, wu) in rule.points(u0, u1) {
            s.push(t * u * u * (3.0 - 2.0 * u));
            w.push(6.0 * t * u * (1.0 - u) * wu);
        }
    }
    (s, w)
}

/// ∫_0^t e^{(t−s)Δ} F(s) ds on `out_grid`. Fails with ForcingUnbounded when a
/// sampled sup|F(s)| exceeds `cap`, and with DuhamelBound if the result
/// breaks ‖·‖_∞ ≤ t sup‖F‖_∞.
pub fn duhamel_on<F>(
    domain: &DomainSpec,
    forcing: F,
    t: f64,
    s_nodes: usize,
    out_grid: &[f64],
    cap: f64,
) -> Result<DuhamelOutput, HeatError>
where
    F: Fn(f64) -> RadialField,
{
    if !(t > 0.0) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let settings = QuadratureSettings::default();
    let (s, w) = graded_s_rule(t, s_nodes);
    let mut acc = vec![0.0; out_grid.len()];
    let mut sup = 0.0f64;
    let mut max_error = 0.0f64;
    let mut dim = 0;
    for (&sj, &wj) in s.iter().zip(&w) {
        let f = forcing(sj);
        dim = f.dim;
        let fs = f.sup_abs();
        if !(fs <= cap) {
            return Err(HeatError::ForcingUnbounded { sup: fs, cap });
        }
        sup = sup.max(fs);
        if fs == 0.0 {
            continue;
        }
        let out = heat_apply_on(domain, &f, t - sj, out_grid, &settings)?;
        max_error += wj * out.max_error;
        for (a, v) in acc.iter_mut().zip(&out.field.values) {
            *a += wj * v;
        }
    }
    let norm = acc.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = t * sup;
    if norm > bound * (1.0 + 1e-9) + max_error {
        return Err(HeatError::DuhamelBound { norm, bound });
    }
    let farfield = match domain {
        DomainSpec::Ball { .. } => FarField::Zero,
        DomainSpec::WholeSpace => {
            let last = forcing(t);
            match last.farfield {
                FarField::Constant { .. } => FarField::Constant { value: *acc.last().unwrap_or(&0.0) },
                _ => FarField::Zero,
            }
        }
    };
    let field = RadialField::bounded(dim.max(1), out_grid.to_vec(), acc, farfield);
    Ok(DuhamelOutput { field, s_nodes: s, s_weights: w, forcing_sup: sup, max_error })
}

/// ∫_0^t e^{(t−s)Δ} F(s) ds on the grid of F(t).
pub fn duhamel<F>(domain: &DomainSpec, forcing: F, t: f64, s_nodes: usize) -> Result<DuhamelOutput, HeatError>
where
    F: Fn(f64) -> RadialField,
{
    let grid = forcing(t).grid;
    duhamel_on(domain, forcing, t, s_nodes, &grid, f64::INFINITY)
}
