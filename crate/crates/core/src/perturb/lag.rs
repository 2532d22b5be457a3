//! Discrete Duhamel operators on a uniform t-grid. With the forcing linear in
//! s between t-nodes and cubic Hermite in r, the integral over the j-th lag
//! interval τ ∈ [jΔt, (j+1)Δt] splits into two banded matrices:
//!   A_j = ∫ (1 − (τ − jΔt)/Δt) E(τ) dτ,   B_j = ∫ ((τ − jΔt)/Δt) E(τ) dτ,
//! where E(τ) maps node values to e^{τΔ}F at the nodes.

use super::grid::{hermite_basis, SlopeOperator};
use crate::heatops::kernel::{reduced_kernel_offset, WINDOW};
use crate::heatops::DomainSpec;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Default)]
pub(crate) struct Banded {
    /// (first column, entries)
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl Banded {
    pub fn apply_add(&self, x: &[f64], y: &mut [f64]) {
        for (yi, (lo, vals)) in y.iter_mut().zip(&self.rows) {
            let xs = &x[*lo..*lo + vals.len()];
            *yi += vals.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn add(&self, other: &Banded) -> Banded {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|((la, va), (lb, vb))| {
                if va.is_empty() {
                    return (*lb, vb.clone());
                }
                if vb.is_empty() {
                    return (*la, va.clone());
                }
                let lo = (*la).min(*lb);
                let hi = (la + va.len()).max(lb + vb.len());
                let mut v = vec![0.0; hi - lo];
                for (k, a) in va.iter().enumerate() {
                    v[la - lo + k] += a;
                }
                for (k, b) in vb.iter().enumerate() {
                    v[lb - lo + k] += b;
                }
                (lo, v)
            })
            .collect();
        Banded { rows }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.1.len()).sum()
    }
}

/// τ-nodes, the A/B weights and σ = (τ − jΔt)/Δt on lag interval j.
fn tau_rule(j: usize, dt: f64) -> Vec<(f64, f64, f64, f64)> {
    let t0 = j as f64 * dt;
    let mut out = Vec::new();
    if j == 0 {
        // τ = Δt v² absorbs the √τ behaviour at τ = 0
        for (v, w) in gauss_legendre(8).points(0.0, 1.0) {
            let tau = dt * v * v;
            let wt = 2.0 * dt * v * w;
            let b = tau / dt;
            out.push((tau, wt * (1.0 - b), wt * b, b));
        }
    } else {
        let order = if j == 1 { 8 } else { 6 };
        for (tau, w) in gauss_legendre(order).points(t0, t0 + dt) {
            let b = (tau - t0) / dt;
            out.push((tau, w * (1.0 - b), w * b, b));
        }
    }
    out
}

/// Value and slope accumulators for one banded row.
struct Acc {
    val: Vec<f64>,
    slope: Vec<f64>,
}

impl Acc {
    fn new(n: usize) -> Self {
        Self { val: vec![0.0; n], slope: vec![0.0; n] }
    }

    #[inline]
    fn add(&mut self, c: usize, h: f64, w: f64, m: &[f64; 4]) {
        self.val[c] += w * m[0];
        self.val[c + 1] += w * m[2];
        self.slope[c] += w * m[1] * h;
        self.slope[c + 1] += w * m[3] * h;
    }
}

/// Near the origin the forcing behaves like s^P in time, which linear
/// interpolation on the first uniform steps overestimates badly. For the
/// first `cols` nodes the forcing is therefore taken as s^P times a linear
/// function, and the lag integrals need the moments
///   MA_{j,i} = ∫ (1 − σ) σ^i E(τ) dτ,   MB_{j,i} = ∫ σ (1 − σ)^i E(τ) dτ
/// for i = 0..=P, restricted to those columns.
#[derive(Debug, Clone, Default)]
pub(crate) struct NearMoments {
    pub cols: usize,
    pub power: usize,
    /// [j][i]
    pub a: Vec<Vec<Banded>>,
    pub b: Vec<Vec<Banded>>,
}

pub(crate) struct LagSet {
    /// A_j and B_j with the near columns removed.
    pub ab: Vec<(Banded, Banded)>,
    pub near: NearMoments,
    /// Σ_j max_i |row mass of A_j + B_j − Δt| over rows whose window stays
    /// inside the grid.
    pub defect: f64,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn lag_matrices(
    domain: &DomainSpec,
    dim: usize,
    r: &[f64],
    slopes: &SlopeOperator,
    dt: f64,
    n_t: usize,
    near_cols: usize,
    power: usize,
) -> LagSet {
    let n = r.len();
    let (mut acc_a, mut acc_b) = (Acc::new(n), Acc::new(n));
    let mut mom_a: Vec<Acc> = (0..=power).map(|_| Acc::new(n)).collect();
    let mut mom_b: Vec<Acc> = (0..=power).map(|_| Acc::new(n)).collect();
    // cells whose nodes can fold onto a near column
    let near_cells = if near_cols == 0 { 0 } else { near_cols + 2 };
    let pow = dim as i32 - 1;
    let r_end = r[n - 1];
    let mut ab = Vec::with_capacity(n_t);
    let mut near = NearMoments { cols: near_cols, power, a: Vec::new(), b: Vec::new() };
    let mut defect = 0.0;
    for j in 0..n_t {
        let rule = tau_rule(j, dt);
        let reach = WINDOW * ((j + 1) as f64 * dt).sqrt();
        let mut a = Banded::default();
        let mut b = Banded::default();
        let mut ma = vec![Banded::default(); power + 1];
        let mut mb = vec![Banded::default(); power + 1];
        let mut worst = 0.0f64;
        for &rho in r {
            let c_lo = r.partition_point(|&x| x <= rho - reach).saturating_sub(1);
            let c_hi = r.partition_point(|&x| x < rho + reach).min(n - 1);
            let with_moments = c_lo < near_cells;
            for &(tau, wa, wb, sigma) in &rule {
                let st = tau.sqrt();
                // offsets z = x − ρ keep the Gaussian argument exact
                for c in c_lo..c_hi {
                    let (z0, z1) = (r[c] - rho, r[c + 1] - rho);
                    let lo = z0.max(-WINDOW * st);
                    let hi = z1.min(WINDOW * st);
                    if hi <= lo {
                        continue;
                    }
                    let h = r[c + 1] - r[c];
                    let panels = ((hi - lo) / (0.5 * st)).ceil().max(1.0) as usize;
                    let pw = (hi - lo) / panels as f64;
                    let order = if pw > 0.1 * st { 6 } else { 4 };
                    let rule_r = gauss_legendre(order);
                    let mut m = [0.0; 4];
                    for p in 0..panels {
                        let p0 = lo + p as f64 * pw;
                        for (z, w) in rule_r.points(p0, p0 + pw) {
                            let x = rho + z;
                            let k = reduced_kernel_offset(domain, dim, tau, rho, z).unwrap_or(0.0) * x.powi(pow) * w;
                            let hb = hermite_basis((z - z0) / h);
                            for q in 0..4 {
                                m[q] += k * hb[q];
                            }
                        }
                    }
                    acc_a.add(c, h, wa, &m);
                    acc_b.add(c, h, wb, &m);
                    if with_moments && c < near_cells {
                        let (mut sa, mut sb) = (1.0, 1.0);
                        for i in 0..=power {
                            mom_a[i].add(c, h, wa * sa, &m);
                            mom_b[i].add(c, h, wb * sb, &m);
                            sa *= sigma;
                            sb *= 1.0 - sigma;
                        }
                    }
                }
            }
            let row_a = fold(&mut acc_a, slopes, c_lo, c_hi);
            let row_b = fold(&mut acc_b, slopes, c_lo, c_hi);
            if rho + reach <= r_end {
                let mass: f64 = row_a.1.iter().chain(&row_b.1).sum();
                worst = worst.max((mass - dt).abs());
            }
            a.rows.push(drop_columns(row_a, near_cols));
            b.rows.push(drop_columns(row_b, near_cols));
            for i in 0..=power {
                let (ra, rb) = if with_moments {
                    let hi = c_hi.min(near_cells);
                    (
                        keep_columns(fold(&mut mom_a[i], slopes, c_lo, hi), near_cols),
                        keep_columns(fold(&mut mom_b[i], slopes, c_lo, hi), near_cols),
                    )
                } else {
                    ((0, Vec::new()), (0, Vec::new()))
                };
                ma[i].rows.push(ra);
                mb[i].rows.push(rb);
            }
        }
        defect += worst;
        ab.push((a, b));
        if near_cols > 0 {
            near.a.push(ma);
            near.b.push(mb);
        }
    }
    LagSet { ab, near, defect }
}

fn drop_columns((lo, v): (usize, Vec<f64>), cols: usize) -> (usize, Vec<f64>) {
    if lo >= cols || v.is_empty() {
        return (lo, v);
    }
    let skip = (cols - lo).min(v.len());
    trim(cols, v[skip..].to_vec())
}

fn keep_columns((lo, v): (usize, Vec<f64>), cols: usize) -> (usize, Vec<f64>) {
    if lo >= cols {
        return (0, Vec::new());
    }
    let keep = (cols - lo).min(v.len());
    trim(lo, v[..keep].to_vec())
}

/// Drops exact zeros at both ends.
fn trim(lo: usize, band: Vec<f64>) -> (usize, Vec<f64>) {
    match band.iter().position(|&v| v != 0.0) {
        None => (lo, Vec::new()),
        Some(f) => {
            let last = band.iter().rposition(|&v| v != 0.0).unwrap();
            (lo + f, band[f..=last].to_vec())
        }
    }
}

/// Moves slope coefficients onto node values through D, extracts the band
/// and clears the scratch range.
fn fold(acc: &mut Acc, d: &SlopeOperator, c_lo: usize, c_hi: usize) -> (usize, Vec<f64>) {
    let mut lo = c_lo;
    let mut hi = c_hi;
    for c in c_lo..=c_hi {
        for &(k, _) in &d.rows[c] {
            lo = lo.min(k);
            hi = hi.max(k);
        }
    }
    for c in c_lo..=c_hi {
        let sc = acc.slope[c];
        if sc != 0.0 {
            for &(k, w) in &d.rows[c] {
                acc.val[k] += sc * w;
            }
        }
        acc.slope[c] = 0.0;
    }
    let band: Vec<f64> = acc.val[lo..=hi].to_vec();
    acc.val[lo..=hi].iter_mut().for_each(|v| *v = 0.0);
    trim(lo, band)
}
