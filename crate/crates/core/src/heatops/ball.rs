//! Dirichlet heat semigroup on a ball by radial eigenfunction expansion.

use super::{FarField, HeatError, RadialField};
use crate::quadrature::{gauss_legendre, graded_rule};
use crate::special::{bessel_j, bessel_j_scaled, bessel_zeros};
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Modes with e^{−λt} below this are dropped.
const MODE_CUTOFF: f64 = 1e-17;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenOutput {
    pub field: RadialField,
    pub modes: usize,
    /// Bound on the contribution of the discarded modes.
    pub tail_bound: f64,
}

/// Radial Dirichlet eigenfunctions φ_k with −Δφ_k = λ_k φ_k on B_R.
struct Basis {
    dim: usize,
    /// √λ_k
    freqs: Vec<f64>,
    norms: Vec<f64>,
}

impl Basis {
    fn new(dim: usize, radius: f64, count: usize) -> Self {
        let nu = 0.5 * dim as f64 - 1.0;
        let (freqs, norms): (Vec<f64>, Vec<f64>) = match dim {
            1 => (1..=count).map(|k| ((k as f64 - 0.5) * PI / radius, 0.5 * radius)).unzip(),
            3 => (1..=count).map(|k| (k as f64 * PI / radius, 0.5 * radius)).unzip(),
            _ => bessel_zeros(nu, count)
                .into_iter()
                .map(|j| {
                    let jn = bessel_j(nu + 1.0, j);
                    (j / radius, 0.5 * radius * radius * jn * jn)
                })
                .unzip(),
        };
        Self { dim, freqs, norms }
    }

    fn phi(&self, k: usize, r: f64) -> f64 {
        let w = self.freqs[k];
        match self.dim {
            1 => (w * r).cos(),
            3 => {
                let x = w * r;
                if x.abs() < 1e-6 {
                    w * (1.0 - x * x / 6.0)
                } else {
                    x.sin() / r
                }
            }
            _ => {
                // r^{−ν} J_ν(w r) = w^ν (J_ν(x)/x^ν)
                let nu = 0.5 * self.dim as f64 - 1.0;
                w.powf(nu) * bessel_j_scaled(nu, w * r)
            }
        }
    }

    /// sup over [0, R] of |φ_k|.
    fn phi_sup(dim: usize, w: f64) -> f64 {
        match dim {
            1 => 1.0,
            3 => w,
            _ => {
                let nu = 0.5 * dim as f64 - 1.0;
                w.powf(nu) / (2f64.powf(nu) * gamma(nu + 1.0))
            }
        }
    }

    fn lambda(&self, k: usize) -> f64 {
        self.freqs[k] * self.freqs[k]
    }

    fn len(&self) -> usize {
        self.freqs.len()
    }
}

/// Number of modes with e^{−λ_k t} ≥ MODE_CUTOFF, using the large-k spacing
/// of the zeros as an estimate and a few spare modes on top.
fn mode_count(dim: usize, radius: f64, t: f64) -> usize {
    let w_max = (-MODE_CUTOFF.ln() / t).sqrt();
    let nu = 0.5 * dim as f64 - 1.0;
    let k = w_max * radius / PI - 0.5 * nu + 0.25;
    k.max(0.0).ceil() as usize + 4
}

/// Quadrature points (r, weight·u(r)) for ∫_0^R r^{N−1} u(r) g(r) dr, g smooth
/// on the scale `resolution`.
fn weighted_points(field: &RadialField, radius: f64, resolution: f64) -> Vec<(f64, f64)> {
    let order = 10;
    let rule = gauss_legendre(order);
    let dim = field.dim as i32;
    let mut pts = Vec::new();
    let push_panels = |a: f64, b: f64, pts: &mut Vec<(f64, f64)>, f: &dyn Fn(f64) -> f64| {
        if b <= a {
            return;
        }
        let n = ((b - a) / resolution).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for i in 0..n {
            let lo = a + i as f64 * h;
            for (r, w) in rule.points(lo, lo + h) {
                pts.push((r, w * f(r)));
            }
        }
    };

    // bounded part, piecewise linear between grid nodes
    let shift = if field.singular.gamma == 0.0 { field.singular.c } else { 0.0 };
    let mut breaks: Vec<f64> = field.grid.iter().copied().take_while(|&x| x < radius).collect();
    breaks.push(radius);
    let bounded = |r: f64| r.powi(dim - 1) * (field.bounded_eval(r) + shift);
    for w in breaks.windows(2) {
        push_panels(w[0], w[1], &mut pts, &bounded);
    }

    if field.has_singular() {
        let c = field.singular.c;
        let beta = field.dim as f64 - 1.0 - field.singular.gamma;
        let r_a = resolution.min(radius);
        for (r, w) in graded_rule(beta, r_a, 32, order) {
            pts.push((r, w * c));
        }
        let sing = |r: f64| c * r.powf(beta);
        push_panels(r_a, radius, &mut pts, &sing);
    }
    pts
}

/// e^{tΔ_{B_R}} field at the points of `out_grid` (values beyond R are zero).
/// At least `min_modes` modes are used, more if e^{−λt} is not yet negligible.
pub fn ball_eigen_apply(
    field: &RadialField,
    radius: f64,
    t: f64,
    out_grid: &[f64],
    min_modes: usize,
) -> Result<EigenOutput, HeatError> {
    field.validate()?;
    if !(t > 0.0) || !(radius > 0.0) {
        return Err(HeatError::InvalidArgument(format!("need t > 0 and R > 0, got t={t}, R={radius}")));
    }
    let dim = field.dim;
    let count = mode_count(dim, radius, t).max(min_modes).max(1);
    let basis = Basis::new(dim, radius, count);
    let pts = weighted_points(field, radius, radius / (2.0 * count as f64));

    let mut coeffs = Vec::with_capacity(basis.len());
    let mut l1 = 0.0;
    for &(_, wu) in &pts {
        l1 += wu.abs();
    }
    for k in 0..basis.len() {
        let mut acc = 0.0;
        for &(r, wu) in &pts {
            acc += wu * basis.phi(k, r);
        }
        coeffs.push(acc / basis.norms[k]);
    }

    let mut values = Vec::with_capacity(out_grid.len());
    for &rho in out_grid {
        if rho >= radius {
            values.push(0.0);
            continue;
        }
        let mut acc = 0.0;
        for k in 0..basis.len() {
            let decay = (-basis.lambda(k) * t).exp();
            if decay == 0.0 {
                break;
            }
            acc += coeffs[k] * decay * basis.phi(k, rho);
        }
        values.push(acc);
    }

    let tail_bound = spectral_tail(dim, radius, t, count, l1);
    if !tail_bound.is_finite() {
        return Err(HeatError::SeriesNotConverged { tail: tail_bound });
    }
    let out = RadialField::bounded(dim, out_grid.to_vec(), values, FarField::Zero);
    Ok(EigenOutput { field: out, modes: count, tail_bound })
}

/// Σ_{k>K} |c_k| e^{−λ_k t} sup|φ_k| with |c_k| ≤ ‖r^{N−1}u‖_1 sup|φ_k| / norm_k,
/// using asymptotic zeros and norms for the discarded modes.
fn spectral_tail(dim: usize, radius: f64, t: f64, count: usize, l1: f64) -> f64 {
    let nu = 0.5 * dim as f64 - 1.0;
    let mut acc = 0.0;
    let mut k = count + 1;
    loop {
        let j = (k as f64 + 0.5 * nu - 0.25) * PI;
        let w = j / radius;
        let norm = match dim {
            1 | 3 => 0.5 * radius,
            _ => radius * radius / (PI * j),
        };
        let s = Basis::phi_sup(dim, w);
        let term = l1 * s * s / norm * (-w * w * t).exp();
        acc += term;
        if term <= 1e-20 * acc.max(1e-300) || term == 0.0 || k > count + 100_000 {
            break;
        }
        k += 1;
    }
    acc
}
