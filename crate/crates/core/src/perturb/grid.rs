//! Radial grids from a smooth spacing map, and the finite-difference slope
//! operator used by the Hermite representation of fields.

use crate::profile::fd_weights;
use serde::{Deserialize, Serialize};

/// RK4 step of the spacing ODE dr/dξ = σ(r).
const TABLE_STEP: f64 = 1.0 / 64.0;

/// Nodes r(ξ_k) of the map dr/dξ = σ(r), r(0) = 0, sampled at equal steps in
/// ξ. σ is geometric away from the origin and graded toward each cluster
/// centre, so consecutive cells differ by O(step²) and centred differences
/// keep second order. Level `refine` halves the ξ-step `refine` times, and
/// every node of a coarser level is a node of the finer one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RGridSpec {
    /// Spacing near the origin.
    pub h0: f64,
    /// σ ≥ growth·r away from the clusters.
    pub growth: f64,
    /// (centre, minimal spacing)
    pub clusters: Vec<(f64, f64)>,
    pub cluster_growth: f64,
    /// Upper bound on the spacing.
    pub h_max: f64,
    pub r_end: f64,
    pub refine: u32,
}

impl RGridSpec {
    pub fn spacing(&self, r: f64) -> f64 {
        let mut s = self.h0.max(self.growth * r).min(self.h_max);
        for &(c, h) in &self.clusters {
            s = s.min(h.max(self.cluster_growth * (r - c).abs()));
        }
        s
    }

    fn hermite(&self, (x0, r0): (f64, f64), (x1, r1): (f64, f64), x: f64) -> f64 {
        let h = x1 - x0;
        let s = (x - x0) / h;
        let (d0, d1) = (self.spacing(r0) * h, self.spacing(r1) * h);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * r0 + h10 * d0 + h01 * r1 + h11 * d1
    }

    pub fn nodes(&self) -> Vec<f64> {
        let mut table = vec![(0.0, 0.0)];
        let mut r = 0.0;
        let mut xi = 0.0;
        let h = TABLE_STEP;
        while r < self.r_end {
            let k1 = self.spacing(r);
            let k2 = self.spacing(r + 0.5 * h * k1);
            let k3 = self.spacing(r + 0.5 * h * k2);
            let k4 = self.spacing(r + h * k3);
            r += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            xi += h;
            table.push((xi, r));
        }
        // ξ at r_end, by bisection on the last interpolation cell
        let n = table.len();
        let (p0, p1) = (table[n - 2], table[n - 1]);
        let (mut lo, mut hi) = (p0.0, p1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(p0, p1, mid) < self.r_end {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let xi_end = 0.5 * (lo + hi);
        let cells = (xi_end.ceil() as usize).max(4) << self.refine;
        let mut out = Vec::with_capacity(cells + 1);
        out.push(0.0);
        for k in 1..cells {
            let x = (k as f64 / cells as f64) * xi_end;
            let i = ((x / h) as usize).min(n - 2);
            out.push(self.hermite(table[i], table[i + 1], x));
        }
        out.push(self.r_end);
        out
    }
}

/// Sparse rows D with slope_i ≈ Σ_k D_ik F_k: five-point Fornberg weights,
/// even reflection at r = 0 and one-sided stencils at the outer end.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeOperator {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SlopeOperator {
    pub fn new(r: &[f64]) -> Self {
        let n = r.len();
        assert!(n >= 5, "slope operator needs at least five nodes");
        let mut rows = Vec::with_capacity(n);
        rows.push(Vec::new());
        for i in 1..n {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
            if i == 1 {
                let x = [-r[1], 0.0, r[1], r[2], r[3]];
                let w = fd_weights(r[1], &x, 1);
                row.push((0, w[1]));
                row.push((1, w[0] + w[2]));
                row.push((2, w[3]));
                row.push((3, w[4]));
            } else {
                let start = i.saturating_sub(2).min(n - 5);
                let w = fd_weights(r[i], &r[start..start + 5], 1);
                row.extend(w.into_iter().enumerate().map(|(j, c)| (start + j, c)));
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(k, c)| c * f[k]).sum()).collect()
    }
}

/// Cubic Hermite interpolation of node values with slopes from `slopes`.
pub fn hermite_eval(r: &[f64], f: &[f64], slopes: &[f64], x: f64) -> f64 {
    let n = r.len();
    if x <= 0.0 {
        return f[0];
    }
    if x >= r[n - 1] {
        return f[n - 1];
    }
    let c = r.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let h = r[c + 1] - r[c];
    let s = (x - r[c]) / h;
    let [h00, h10, h01, h11] = hermite_basis(s);
    h00 * f[c] + h10 * h * slopes[c] + h01 * f[c + 1] + h11 * h * slopes[c + 1]
}

#[inline]
pub(crate) fn hermite_basis(s: f64) -> [f64; 4] {
    let a = 1.0 - s;
    [(1.0 + 2.0 * s) * a * a, s * a * a, s * s * (3.0 - 2.0 * s), s * s * (s - 1.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(refine: u32) -> RGridSpec {
        RGridSpec {
            h0: 1e-3,
            growth: 0.06,
            clusters: vec![(0.25, 2e-4), (0.5, 2e-4)],
            cluster_growth: 0.2,
            h_max: 0.1,
            r_end: 3.0,
            refine,
        }
    }

    #[test]
    fn refinement_nests() {
        let c = spec(0).nodes();
        let f = spec(1).nodes();
        assert_eq!(f.len(), 2 * c.len() - 1);
        for (i, &x) in c.iter().enumerate() {
            assert!((f[2 * i] - x).abs() <= 1e-15 * (1.0 + x), "{i}");
        }
        assert_eq!(*c.last().unwrap(), 3.0);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn spacing_is_smooth() {
        let r = spec(0).nodes();
        for w in r.windows(3) {
            let (a, b) = (w[1] - w[0], w[2] - w[1]);
            assert!((b / a - 1.0).abs() < 0.35, "{w:?}");
        }
    }

    #[test]
    fn slopes_are_fourth_order() {
        let err = |refine| {
            let r = spec(refine).nodes();
            let f: Vec<f64> = r.iter().map(|x| (2.0 * x).cos()).collect();
            let d = SlopeOperator::new(&r).apply(&f);
            r.iter().zip(&d).fold(0.0f64, |m, (x, di)| m.max((di + 2.0 * (2.0 * x).sin()).abs()))
        };
        let (e0, e1) = (err(0), err(1));
        assert!(e0 < 1e-3, "{e0}");
        // halving every cell should gain about 2^4
        assert!(e0 / e1 > 12.0, "{e0} {e1}");
    }
}
