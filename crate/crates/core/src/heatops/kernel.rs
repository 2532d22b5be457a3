//! Radial heat kernels. A kernel k(ρ, r) gives
//!   (e^{tΔ} u)(ρ) = ∫_0^∞ k(ρ, r) u(r) dr
//! for radial u; the reduced kernel is k̃ = k / r^{N−1}, finite at r = 0.

use super::{sphere_area, DomainSpec};
use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;

/// Half-width of the integration window in units of √t; e^{−W²/4} ≈ 1e−17.
pub const WINDOW: f64 = 12.5;

#[inline]
pub fn gauss(z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// (1 − e^{−x})/x, continuous at 0.
#[inline]
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-10 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// Whole-space reduced kernel for any N ≥ 1.
pub fn whole_reduced(dim: usize, t: f64, rho: f64, r: f64) -> f64 {
    match dim {
        1 => gauss(rho - r, t) + gauss(rho + r, t),
        3 => gauss(rho - r, t) * phi1(rho * r / t) / t,
        _ => whole_reduced_angular(dim, t, rho, r),
    }
}

pub fn whole_kernel(dim: usize, t: f64, rho: f64, r: f64) -> f64 {
    whole_reduced(dim, t, rho, r) * r.powi(dim as i32 - 1)
}

/// (4πt)^{−N/2} |S^{N−2}| e^{−(ρ−r)²/4t} ∫_0^π e^{−κ(1−cos φ)} sin^{N−2}φ dφ with κ = ρr/2t.
fn whole_reduced_angular(dim: usize, t: f64, rho: f64, r: f64) -> f64 {
    let n = dim as f64;
    let pref = (4.0 * PI * t).powf(-0.5 * n) * (-(rho - r) * (rho - r) / (4.0 * t)).exp();
    if rho * r == 0.0 {
        return pref * sphere_area(dim);
    }
    let kappa = rho * r / (2.0 * t);
    let phi_max = if kappa > 20.0 { (1.0 - 40.0 / kappa).acos() } else { PI };
    let integrand = |phi: f64| (-kappa * (1.0 - phi.cos())).exp() * phi.sin().powi(dim as i32 - 2);
    let mut nodes = 64;
    let mut prev = gauss_legendre(nodes).integrate(0.0, phi_max, integrand);
    loop {
        nodes *= 2;
        let cur = gauss_legendre(nodes).integrate(0.0, phi_max, integrand);
        if (cur - prev).abs() <= 1e-10 * cur.abs() || nodes >= 4096 {
            return pref * sphere_area(dim - 1) * cur;
        }
        prev = cur;
    }
}

/// Dirichlet kernel of (−R, R) restricted to even data, by images.
pub fn ball1_kernel(t: f64, radius: f64, rho: f64, r: f64) -> f64 {
    let n_max = ((WINDOW * t.sqrt() + 2.0 * radius) / (4.0 * radius)).ceil() as i64 + 1;
    let mut acc = 0.0;
    for n in -n_max..=n_max {
        let s = 4.0 * n as f64 * radius;
        let s2 = (4 * n + 2) as f64 * radius;
        acc += gauss(rho - r + s, t) - gauss(rho + r + s2, t);
        acc += gauss(rho + r + s, t) - gauss(rho - r + s2, t);
    }
    acc
}

/// Reduced Dirichlet kernel of the 3-ball, from images of v = r u on (0, R).
pub fn ball3_reduced(t: f64, radius: f64, rho: f64, r: f64) -> f64 {
    let n_max = ((WINDOW * t.sqrt() + radius) / (2.0 * radius)).ceil() as i64 + 1;
    let mut acc = 0.0;
    if rho == 0.0 && r == 0.0 {
        acc += gauss(0.0, t) / t;
        for n in 1..=n_max {
            let s = 2.0 * n as f64 * radius;
            acc += 2.0 * gauss(s, t) * (1.0 - s * s / (2.0 * t)) / t;
        }
        return acc;
    }
    if rho == 0.0 || r == 0.0 {
        let x = rho + r;
        for n in -n_max..=n_max {
            let s = 2.0 * n as f64 * radius;
            acc += gauss(x + s, t) * (x + s);
        }
        return acc / (t * x);
    }
    for n in -n_max..=n_max {
        let s = 2.0 * n as f64 * radius;
        if n == 0 {
            acc += gauss(rho - r, t) * phi1(rho * r / t) / t;
        } else {
            // g(ρ−r+s) − g(ρ+r+s)
            acc += (gauss(rho - r + s, t) - gauss(rho + r + s, t)) / (rho * r);
        }
    }
    acc
}

/// Pointwise reduced kernel where one is available: whole space for all N,
/// ball for N ∈ {1, 3}.
pub fn reduced_kernel(domain: &DomainSpec, dim: usize, t: f64, rho: f64, r: f64) -> Option<f64> {
    match (domain, dim) {
        (DomainSpec::WholeSpace, _) => Some(whole_reduced(dim, t, rho, r)),
        (DomainSpec::Ball { radius }, 1) => Some(ball1_kernel(t, *radius, rho, r)),
        (DomainSpec::Ball { radius }, 3) => Some(ball3_reduced(t, *radius, rho, r)),
        _ => None,
    }
}

/// reduced_kernel at r = ρ + z, with the near Gaussian evaluated at the exact
/// offset z. When √t ≪ ρ, rounding in r = ρ + z would otherwise cost a
/// relative error of order ε·ρ/√t.
pub fn reduced_kernel_offset(domain: &DomainSpec, dim: usize, t: f64, rho: f64, z: f64) -> Option<f64> {
    let r = rho + z;
    match (domain, dim) {
        (DomainSpec::WholeSpace, 1) => Some(gauss(z, t) + gauss(rho + r, t)),
        (DomainSpec::WholeSpace, 3) => Some(gauss(z, t) * phi1(rho * r / t) / t),
        (DomainSpec::WholeSpace, _) => Some(whole_reduced(dim, t, rho, r)),
        (DomainSpec::Ball { radius }, 1) => Some(ball1_offset(t, *radius, rho, z)),
        (DomainSpec::Ball { radius }, 3) if rho > 0.0 && r > 0.0 => Some(ball3_offset(t, *radius, rho, z)),
        _ => reduced_kernel(domain, dim, t, rho, r),
    }
}

/// 2ρ + s with the reflection through R taken from the exact ρ − R.
#[inline]
fn reflected(rho: f64, radius: f64, s: f64) -> f64 {
    if s == -2.0 * radius {
        2.0 * (rho - radius)
    } else {
        2.0 * rho + s
    }
}

fn ball1_offset(t: f64, radius: f64, rho: f64, z: f64) -> f64 {
    let n_max = ((WINDOW * t.sqrt() + 2.0 * radius) / (4.0 * radius)).ceil() as i64 + 1;
    let mut acc = 0.0;
    for n in -n_max..=n_max {
        let s = 4.0 * n as f64 * radius;
        let s2 = (4 * n + 2) as f64 * radius;
        acc += gauss(s - z, t) - gauss(reflected(rho, radius, s2) + z, t);
        acc += gauss(2.0 * rho + s + z, t) - gauss(s2 - z, t);
    }
    acc
}

fn ball3_offset(t: f64, radius: f64, rho: f64, z: f64) -> f64 {
    let n_max = ((WINDOW * t.sqrt() + radius) / (2.0 * radius)).ceil() as i64 + 1;
    let r = rho + z;
    let mut acc = gauss(z, t) * phi1(rho * r / t) / t;
    for n in -n_max..=n_max {
        if n != 0 {
            let s = 2.0 * n as f64 * radius;
            acc += (gauss(s - z, t) - gauss(reflected(rho, radius, s) + z, t)) / (rho * r);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite;

    #[test]
    fn whole_kernels_have_unit_mass() {
        for dim in [1usize, 2, 3, 4] {
            for rho in [0.0, 0.3, 1.0] {
                let t: f64 = 0.05;
                let lo = (rho - WINDOW * t.sqrt()).max(0.0);
                let hi = rho + WINDOW * t.sqrt();
                let m = composite(lo, hi, 0.02, 12, |r| whole_kernel(dim, t, rho, r));
                assert!((m - 1.0).abs() < 1e-9, "N={dim} rho={rho} mass {m}");
            }
        }
    }

    #[test]
    fn general_n_formula_matches_closed_forms_at_n3() {
        for (rho, r) in [(0.2, 0.5), (1.0, 1.1), (0.0, 0.4)] {
            let a = whole_reduced_angular(3, 0.07, rho, r);
            let b = whole_reduced(3, 0.07, rho, r);
            assert!((a - b).abs() < 1e-9 * b.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn offset_kernels_agree_with_direct_ones() {
        let ball = DomainSpec::Ball { radius: 1.0 };
        for (dom, dim) in [(DomainSpec::WholeSpace, 1), (DomainSpec::WholeSpace, 3), (ball, 1), (ball, 3)] {
            for (rho, z) in [(0.3, 0.05), (0.9, 0.08), (0.5, -0.2)] {
                let a = reduced_kernel(&dom, dim, 0.01, rho, rho + z).unwrap();
                let b = reduced_kernel_offset(&dom, dim, 0.01, rho, z).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{dom:?} N={dim}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn ball_kernels_vanish_on_boundary() {
        assert!(ball1_kernel(0.3, 1.0, 1.0, 0.4).abs() < 1e-15);
        let k = ball3_reduced(0.3, 1.0, 1.0, 0.4);
        assert!(k.abs() < 1e-14, "{k}");
    }

    #[test]
    fn ball3_limits_are_continuous() {
        let t = 0.2;
        let a = ball3_reduced(t, 1.0, 0.0, 0.3);
        let b = ball3_reduced(t, 1.0, 1e-6, 0.3);
        assert!((a - b).abs() < 1e-6 * a.abs());
        let c = ball3_reduced(t, 1.0, 0.0, 0.0);
        let d = ball3_reduced(t, 1.0, 1e-5, 1e-5);
        assert!((c - d).abs() < 1e-6 * c.abs(), "{c} {d}");
    }
}
