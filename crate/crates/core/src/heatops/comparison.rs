//! Comparison between the Dirichlet semigroup on an interval and the free
//! semigroup for data supported well inside it.

use super::kernel::{ball1_kernel, gauss, whole_reduced, WINDOW};
use super::HeatError;
use crate::quadrature::composite;
use serde::Serialize;
use std::f64::consts::PI;

/// Largest image-series tail tolerated.
const SERIES_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub radius: f64,
    pub rho: f64,
    /// min over the grids of e^{tΔ_B}φ − e^{−π²t/4(R−ρ)²} e^{tΔ}φ.
    pub min_margin: f64,
    pub worst_t: f64,
    pub worst_x: f64,
    /// min over t of G_{(−L,L)}(t,0,0) − (4πt)^{−1/2} e^{−π²t/4L²} with L = R − ρ.
    pub floor_margin: f64,
    pub series_tail: f64,
}

/// Smooth even bump supported in [−ρ, ρ], equal to 1 at the origin.
pub fn bump(rho: f64, x: f64) -> f64 {
    let s = x / rho;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Bound on the image terms beyond those summed in `ball1_kernel`.
pub fn ball1_series_tail(t: f64, radius: f64) -> f64 {
    let n_max = ((WINDOW * t.sqrt() + 2.0 * radius) / (4.0 * radius)).ceil() as i64 + 1;
    let mut acc = 0.0;
    for n in (n_max + 1).. {
        let d = 4.0 * (n - 1) as f64 * radius;
        let term = 8.0 * gauss(d, t);
        acc += term;
        if term <= 1e-30 * acc.max(1e-300) || term == 0.0 {
            break;
        }
    }
    acc
}

/// G_{(−L,L)}(t,0,0) − (4πt)^{−1/2} e^{−π²t/4L²}.
pub fn kernel_floor_margin(half_width: f64, t: f64) -> f64 {
    let g = 0.5 * ball1_kernel(t, half_width, 0.0, 0.0);
    g - (4.0 * PI * t).powf(-0.5) * (-PI * PI * t / (4.0 * half_width * half_width)).exp()
}

/// Checks e^{tΔ_{(−R,R)}}φ ≥ e^{−π²t/4(R−ρ)²} e^{tΔ}φ on [0, ρ] for the bump
/// supported in [−ρ, ρ], in dimension one.
pub fn ball_comparison_check(
    radius: f64,
    rho: f64,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<ComparisonReport, HeatError> {
    if !(rho > 0.0 && rho < radius) {
        return Err(HeatError::InvalidArgument(format!("need 0 < rho < R, got rho={rho}, R={radius}")));
    }
    let l = radius - rho;
    let mut report = ComparisonReport {
        radius,
        rho,
        min_margin: f64::INFINITY,
        worst_t: f64::NAN,
        worst_x: f64::NAN,
        floor_margin: f64::INFINITY,
        series_tail: 0.0,
    };
    let mass = composite(0.0, rho, rho / 64.0, 12, |r| bump(rho, r));
    for &t in t_grid {
        let tail = ball1_series_tail(t, radius) * 2.0 * mass;
        report.series_tail = report.series_tail.max(tail);
        if tail > SERIES_TOL {
            return Err(HeatError::SeriesNotConverged { tail });
        }
        report.floor_margin = report.floor_margin.min(kernel_floor_margin(l, t));
        let factor = (-PI * PI * t / (4.0 * l * l)).exp();
        let width = (0.25 * t.sqrt()).min(rho / 64.0);
        for &x in x_grid {
            if x.abs() > rho {
                continue;
            }
            let x = x.abs();
            let lo = (x - WINDOW * t.sqrt()).max(0.0);
            let hi = (x + WINDOW * t.sqrt()).min(rho);
            let dir = composite(lo, hi, width, 12, |r| ball1_kernel(t, radius, x, r) * bump(rho, r));
            let free = composite(lo, hi, width, 12, |r| whole_reduced(1, t, x, r) * bump(rho, r));
            let margin = dir - factor * free;
            if margin < report.min_margin {
                report.min_margin = margin;
                report.worst_t = t;
                report.worst_x = x;
            }
        }
    }
    Ok(report)
}
