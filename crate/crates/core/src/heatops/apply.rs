use super::ball::ball_eigen_apply;
use super::kernel::{reduced_kernel, WINDOW};
use super::{DomainSpec, FarField, HeatError, RadialField};
use crate::quadrature::{composite, graded_singular};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Panel width in units of √t.
    pub panel: f64,
    pub graded_cells: usize,
    pub order: usize,
    /// Relative error above which evaluation is reported as failed.
    pub fail_rel: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { panel: 0.5, graded_cells: 32, order: 10, fail_rel: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatEval {
    pub value: f64,
    /// |fine − coarse| between two quadrature resolutions.
    pub error: f64,
    /// Bound on the neglected Gaussian tail beyond the window.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatOutput {
    pub field: RadialField,
    pub max_error: f64,
    pub tail_bound: f64,
    pub method: &'static str,
}

fn integrate_once<K: Fn(f64) -> f64>(
    kern: &K,
    field: &RadialField,
    t: f64,
    rho: f64,
    r_limit: f64,
    panel: f64,
    graded: usize,
    order: usize,
    min_order: usize,
) -> f64 {
    let dim = field.dim as i32;
    let st = t.sqrt();
    let width = panel * st;
    let lo = (rho - WINDOW * st).max(0.0);
    let hi = (rho + WINDOW * st).min(r_limit);
    if hi <= lo {
        return 0.0;
    }
    let pw = |r: f64| r.powi(dim - 1);
    let gamma0 = field.singular.c != 0.0 && field.singular.gamma == 0.0;
    let shift = if gamma0 { field.singular.c } else { 0.0 };
    let mut acc = 0.0;

    // bounded part, split at grid nodes so each piece is linear
    let mut breaks = vec![lo];
    let end = field.grid_end();
    let first = field.grid.partition_point(|&x| x <= lo);
    for &x in &field.grid[first..] {
        if x >= hi {
            break;
        }
        breaks.push(x);
    }
    if end > lo && end < hi && *breaks.last().unwrap() != end {
        breaks.push(end);
    }
    breaks.push(hi);
    let all_zero = field.values.iter().all(|&v| v == 0.0) && field.farfield == FarField::Zero && shift == 0.0;
    if !all_zero {
        for w in breaks.windows(2) {
            // pieces much shorter than a panel need fewer nodes
            let frac = (w[1] - w[0]) / width;
            let ord = ((order as f64 * frac).ceil() as usize).clamp(min_order, order);
            acc += composite(w[0], w[1], width, ord, |r| kern(r) * pw(r) * (field.bounded_eval(r) + shift));
        }
    }

    if field.has_singular() {
        let c = field.singular.c;
        let beta = field.dim as f64 - 1.0 - field.singular.gamma;
        if rho < 3.0 * WINDOW * st {
            let r_a = st.min(hi);
            acc += c * graded_singular(beta, r_a, graded, order, kern);
            acc += c * composite(r_a, hi, width, order, |r| kern(r) * r.powf(beta));
        } else {
            acc += c * composite(lo, hi, width, order, |r| kern(r) * r.powf(beta));
        }
    }
    acc
}

fn tail_bound(field: &RadialField, t: f64, rho: f64) -> f64 {
    let st = t.sqrt();
    let cut = rho + WINDOW * st;
    let far = field.eval(cut).abs().max(field.farfield.eval(cut).abs());
    let sup_beyond = if field.grid_end() > cut {
        field.values.iter().zip(&field.grid).filter(|(_, &r)| r >= cut).fold(far, |m, (v, _)| m.max(v.abs()))
    } else {
        far
    };
    let growth = (1.0 + WINDOW * st / rho.max(st)).powi(field.dim as i32 - 1);
    sup_beyond * growth * erfc(0.5 * WINDOW)
}

/// (e^{tΔ} field)(ρ) with a quadrature error estimate.
pub fn heat_eval(
    domain: &DomainSpec,
    field: &RadialField,
    t: f64,
    rho: f64,
    settings: &QuadratureSettings,
) -> Result<HeatEval, HeatError> {
    domain.validate()?;
    field.validate()?;
    if !(t > 0.0) {
        return Err(HeatError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let dim = field.dim;
    let r_limit = domain.radius().unwrap_or(f64::INFINITY);
    if reduced_kernel(domain, dim, t, rho, 0.0).is_none() {
        let out = ball_eigen_apply(field, r_limit, t, &[rho], 0)?;
        return Ok(HeatEval { value: out.field.values[0], error: out.tail_bound, tail_bound: out.tail_bound });
    }
    let kern = |r: f64| reduced_kernel(domain, dim, t, rho, r).unwrap();
    let coarse = integrate_once(&kern, field, t, rho, r_limit, settings.panel, settings.graded_cells, settings.order, 2);
    let fine = integrate_once(
        &kern,
        field,
        t,
        rho,
        r_limit,
        0.5 * settings.panel,
        2 * settings.graded_cells,
        settings.order,
        3,
    );
    let error = (fine - coarse).abs();
    let tail = if domain.radius().is_some() { 0.0 } else { tail_bound(field, t, rho) };
    if error > settings.fail_rel * fine.abs().max(1e-300) && error > 1e-12 {
        return Err(HeatError::QuadratureFailure { rho, error });
    }
    Ok(HeatEval { value: fine, error: error + tail, tail_bound: tail })
}

/// e^{tΔ} field evaluated on `out_grid`.
pub fn heat_apply_on(
    domain: &DomainSpec,
    field: &RadialField,
    t: f64,
    out_grid: &[f64],
    settings: &QuadratureSettings,
) -> Result<HeatOutput, HeatError> {
    domain.validate()?;
    field.validate()?;
    let dim = field.dim;
    let (values, max_error, tail, method) = match domain {
        DomainSpec::Ball { radius } if !matches!(dim, 1) => {
            let out = ball_eigen_apply(field, *radius, t, out_grid, 200)?;
            (out.field.values, out.tail_bound, out.tail_bound, "eigen")
        }
        _ => {
            let mut values = Vec::with_capacity(out_grid.len());
            let mut err = 0.0f64;
            let mut tail = 0.0f64;
            for &rho in out_grid {
                let e = heat_eval(domain, field, t, rho, settings)?;
                values.push(e.value);
                err = err.max(e.error);
                tail = tail.max(e.tail_bound);
            }
            let method = if domain.radius().is_some() { "images" } else { "kernel" };
            (values, err, tail, method)
        }
    };
    let farfield = match domain {
        DomainSpec::Ball { .. } => FarField::Zero,
        DomainSpec::WholeSpace => output_farfield(field),
    };
    let out = RadialField::bounded(dim, out_grid.to_vec(), values, farfield);
    Ok(HeatOutput { field: out, max_error, tail_bound: tail, method })
}

/// Far-field of e^{tΔ} field: power laws and constants are preserved to
/// leading order for r ≫ √t.
fn output_farfield(field: &RadialField) -> FarField {
    let s = field.singular;
    match (s.c != 0.0, field.farfield) {
        (false, f) => f,
        (true, FarField::Zero) => FarField::PowerLaw { c: s.c, gamma: s.gamma },
        (true, FarField::PowerLaw { c, gamma }) if gamma == s.gamma => FarField::PowerLaw { c: c + s.c, gamma },
        (true, FarField::PowerLaw { c, gamma }) if gamma < s.gamma => FarField::PowerLaw { c, gamma },
        (true, FarField::Constant { value }) if s.gamma > 0.0 => FarField::Constant { value },
        (true, _) => FarField::PowerLaw { c: s.c, gamma: s.gamma },
    }
}

/// e^{tΔ} field on the field's own grid.
pub fn heat_apply(domain: &DomainSpec, field: &RadialField, t: f64) -> Result<RadialField, HeatError> {
    Ok(heat_apply_on(domain, field, t, &field.grid, &QuadratureSettings::default())?.field)
}
