//! Bessel functions of the first kind and their zeros, for radial Dirichlet
//! eigenfunctions on a ball.

use crate::quadrature::gauss_legendre;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// J_ν(x) for ν > −1/2 from the Poisson integral
///   J_ν(x) = (x/2)^ν / (√π Γ(ν+½)) ∫_{−π/2}^{π/2} cos^{2ν}θ cos(x sinθ) dθ.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu > -0.5, "Poisson integral needs nu > -1/2");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let pref = (0.5 * x).powf(nu) / (PI.sqrt() * gamma(nu + 0.5));
    let panels = (x.abs() / 2.0).ceil() as usize + 4;
    let rule = gauss_legendre(16);
    let h = PI / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = -0.5 * PI + k as f64 * h;
        acc += rule.integrate(lo, lo + h, |t| t.cos().abs().powf(2.0 * nu) * (x * t.sin()).cos());
    }
    pref * acc
}

/// J_ν(x) / x^ν, finite at x = 0.
pub fn bessel_j_scaled(nu: f64, x: f64) -> f64 {
    if x.abs() < 1e-8 {
        return 0.5f64.powf(nu) / gamma(nu + 1.0);
    }
    bessel_j(nu, x) / x.powf(nu)
}

/// First `count` positive zeros of J_ν, by bisection around McMahon's estimate.
pub fn bessel_zeros(nu: f64, count: usize) -> Vec<f64> {
    let mut zeros = Vec::with_capacity(count);
    let mut lo = 1e-3;
    let step = 0.1;
    let mut f_lo = bessel_j(nu, lo);
    while zeros.len() < count {
        let guess = (zeros.len() as f64 + 1.0 + 0.5 * nu - 0.25) * PI;
        // jump close to the next zero once the asymptotic estimate is reliable
        if zeros.len() >= 3 && guess - 0.5 > lo {
            lo = guess - 0.5;
            f_lo = bessel_j(nu, lo);
        }
        let hi = lo + step;
        let f_hi = bessel_j(nu, hi);
        if f_lo == 0.0 {
            zeros.push(lo);
        } else if (f_lo > 0.0) != (f_hi > 0.0) {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                let fm = bessel_j(nu, m);
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
                if b - a < 1e-14 * b {
                    break;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        lo = hi;
        f_lo = f_hi;
    }
    zeros
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_matches_closed_form() {
        // J_{1/2}(x) = √(2/(πx)) sin x
        for x in [0.3, 1.0, 7.5, 40.0] {
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(0.5, x) - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn zeros_of_half_order_are_multiples_of_pi() {
        let z = bessel_zeros(0.5, 20);
        for (k, zk) in z.iter().enumerate() {
            assert!((zk - (k as f64 + 1.0) * PI).abs() < 1e-11, "k={k} {zk}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let z = bessel_zeros(0.0, 1);
        assert!((z[0] - 2.404_825_557_695_773).abs() < 1e-12);
    }
}
