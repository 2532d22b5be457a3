use super::grid::SlopeOperator;
use super::lag::{lag_matrices, Banded, NearMoments};
use super::{power_difference, signed_pow, PerturbError, PerturbationProblem, Side, SpaceTimeField};
use crate::heatops::kernel::{reduced_kernel_offset, WINDOW};
use crate::heatops::{DomainSpec, FarField, RadialField};
use crate::quadrature::gauss_legendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Starting iterate of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Seed {
    Zero,
    /// Θ/2 with the sign flipped on alternate r-nodes.
    HalfTheta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    pub dists: Vec<f64>,
    pub contraction_factors: Vec<f64>,
    /// min over nodes with t > 0 of Θ − |w|
    pub envelope_margin: f64,
    /// max over nodes with t > 0 of |w|/Θ
    pub envelope_ratio: f64,
    pub trace_constant: f64,
    /// Estimated absolute quadrature error of the last Picard step.
    pub quad_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// dist(Φw, Φz)/dist(w, z) per pair
    pub factors: Vec<f64>,
    pub kinds: Vec<String>,
    pub max_factor: f64,
    /// Node of the largest image difference for the worst pair.
    pub worst_t: f64,
    pub worst_r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualOptions {
    pub t_floor: f64,
    /// Nodes beyond this radius are skipped.
    pub r_max: f64,
    /// Check every `stride`-th node in t and r.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub worst_t: f64,
    pub worst_r: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    /// max over t_k > 0 of ‖w(t_k) − e^{t_kΔ}w̄₀‖_∞ / t_k
    pub constant: f64,
    /// (lower, upper, max ratio) for the decades (T/10, T], (T/100, T/10], …
    pub decades: Vec<(f64, f64, f64)>,
    /// max/min of the decade maxima over the two smallest populated decades.
    pub variation: f64,
}

/// Discretized Picard map for one problem. Node values are the unknowns;
/// in r the forcing is cubic Hermite with finite-difference slopes, in t it
/// is linear between the uniform steps.
pub struct Solver {
    pub problem: PerturbationProblem,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub theta: Vec<Vec<f64>>,
    bg: Vec<Vec<(f64, f64)>>,
    psi: Vec<(f64, f64, f64)>,
    pub w0: Vec<f64>,
    /// e^{t_kΔ}w̄₀ at the nodes.
    pub heat0: Vec<Vec<f64>>,
    pub heat0_error: f64,
    /// heat0 plus the contribution of the forcing at t = 0.
    g0: Vec<Vec<f64>>,
    f0: Vec<f64>,
    /// C_0 = A_0, C_d = A_d + B_{d−1}, without the near columns
    lags: Vec<Banded>,
    near: NearMoments,
    /// Σ_j max_i |row mass of A_j + B_j − Δt| over rows away from the edges.
    pub lag_defect: f64,
    /// max over t > 0 of |U|^α / (C1 min(1/t, 1/r²)).
    pub c1_ratio: f64,
}

impl Solver {
    pub fn new(problem: PerturbationProblem) -> Result<Self, PerturbError> {
        problem.validate()?;
        let p = &problem;
        let n_t = p.grids.steps();
        let t_max = p.constants.t_max;
        let dt = t_max / n_t as f64;
        let t: Vec<f64> = (0..=n_t).map(|k| if k == n_t { t_max } else { k as f64 * dt }).collect();
        let r = p.r_grid_spec().nodes();
        let slopes = SlopeOperator::new(&r);
        let env = p.constants.envelope();
        let theta: Vec<Vec<f64>> = t.iter().map(|&tk| r.iter().map(|&x| env.eval(tk, x)).collect()).collect();
        let bg: Vec<Vec<(f64, f64)>> = t.iter().map(|&tk| r.iter().map(|&x| p.background.eval(tk, x)).collect()).collect();
        let psi: Vec<(f64, f64, f64)> = r.iter().map(|&x| p.psi.eval(p.dim, x)).collect();
        let w0: Vec<f64> = r.iter().map(|&x| p.w0(x)).collect();

        let mut c1_ratio = 0.0f64;
        for (k, &tk) in t.iter().enumerate().skip(1) {
            for (i, &x) in r.iter().enumerate() {
                let bound = p.constants.c1 * (1.0 / tk).min(if x > 0.0 { 1.0 / (x * x) } else { f64::INFINITY });
                c1_ratio = c1_ratio.max(bg[k][i].0.abs().powf(p.alpha) / bound);
            }
        }

        let mut heat0 = vec![w0.clone()];
        let mut heat0_error = 0.0f64;
        for &tk in &t[1..] {
            let mut row = Vec::with_capacity(r.len());
            for &rho in &r {
                let a = heat_of_data(p, tk, rho, 0.5);
                let b = heat_of_data(p, tk, rho, 0.25);
                heat0_error = heat0_error.max((a - b).abs());
                row.push(b);
            }
            heat0.push(row);
        }

        let mut solver = Solver {
            problem: problem.clone(),
            t,
            r,
            theta,
            bg,
            psi,
            w0,
            heat0,
            heat0_error,
            g0: Vec::new(),
            f0: Vec::new(),
            lags: Vec::new(),
            near: NearMoments::default(),
            lag_defect: 0.0,
            c1_ratio,
        };
        solver.f0 = solver.mtilde_row(0, &solver.w0);

        // near the origin Θ = K t^{m/2} and the forcing grows like s^{m/2−1}
        let env_level = env.family.level(p.constants.m);
        let near_r = env_level.min(8.0 * t_max.sqrt());
        let mut near_cols = solver.r.partition_point(|&x| x <= near_r);
        if solver.f0[..near_cols].iter().any(|&v| v != 0.0) {
            near_cols = 0;
        }
        let power = (p.constants.m / 2).saturating_sub(1);
        let set = lag_matrices(&problem.domain, problem.dim, &solver.r, &slopes, dt, n_t, near_cols, power);
        solver.lag_defect = set.defect;
        solver.near = set.near;
        let ab = set.ab;

        let mut g0 = vec![solver.w0.clone()];
        for k in 1..=n_t {
            let mut row = solver.heat0[k].clone();
            ab[k - 1].1.apply_add(&solver.f0, &mut row);
            g0.push(row);
        }
        solver.g0 = g0;
        let mut lags = Vec::with_capacity(n_t);
        for d in 0..n_t {
            lags.push(if d == 0 { ab[0].0.clone() } else { ab[d].0.add(&ab[d - 1].1) });
        }
        solver.lags = lags;
        Ok(solver)
    }

    pub fn steps(&self) -> usize {
        self.t.len() - 1
    }

    pub fn nnz(&self) -> usize {
        let near: usize = self.near.a.iter().chain(&self.near.b).flatten().map(Banded::nnz).sum();
        self.lags.iter().map(Banded::nnz).sum::<usize>() + near
    }

    fn mtilde_node(&self, k: usize, i: usize, w: f64) -> f64 {
        let alpha = self.problem.alpha;
        let (u, du) = self.bg[k][i];
        let (p, dp, lp) = self.psi[i];
        let mut m = 0.0;
        if w != 0.0 {
            let v = if p == 0.0 { 0.0 } else { p * u };
            m += power_difference(v, w, alpha);
        }
        if p != 1.0 && p != 0.0 {
            m += (p.powf(alpha + 1.0) - p) * signed_pow(u, alpha);
        }
        if dp != 0.0 {
            m += 2.0 * du * dp;
        }
        if lp != 0.0 {
            m += u * lp;
        }
        m
    }

    fn mtilde_row(&self, k: usize, w: &[f64]) -> Vec<f64> {
        w.iter().enumerate().map(|(i, &wi)| self.mtilde_node(k, i, wi)).collect()
    }

    /// M̃w(t_k) at the r-nodes.
    pub fn mtilde(&self, w: &SpaceTimeField, k: usize) -> RadialField {
        let values = self.mtilde_row(k, &w.values[k]);
        RadialField::bounded(self.problem.dim, self.r.clone(), values, FarField::Zero)
    }

    /// Φ(w) node values and sup|M̃w| over t > 0.
    fn picard_raw(&self, w: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
        let n_t = self.steps();
        let mut forcing = Vec::with_capacity(n_t + 1);
        forcing.push(self.f0.clone());
        let mut sup = 0.0f64;
        for k in 1..=n_t {
            let row = self.mtilde_row(k, &w[k]);
            sup = row.iter().fold(sup, |m, v| m.max(v.abs()));
            forcing.push(row);
        }
        let mut out = Vec::with_capacity(n_t + 1);
        out.push(self.w0.clone());
        for k in 1..=n_t {
            let mut row = self.g0[k].clone();
            for d in 0..k {
                self.lags[d].apply_add(&forcing[k - d], &mut row);
            }
            self.near_add(k, &forcing, &mut row);
            out.push(row);
        }
        (out, sup)
    }

    /// Lag integrals for the near columns, where the forcing is s^P times a
    /// linear function on each step. With s = (l + 1 − σ)Δt on step l,
    ///   (s/t_{l+1})^P = Σ_i C(P,i) (−σ/(l+1))^i,
    ///   (s/t_l)^P     = Σ_i C(P,i) ((1 − σ)/l)^i,
    /// so each step is a combination of the moment matrices.
    fn near_add(&self, k: usize, forcing: &[Vec<f64>], row: &mut [f64]) {
        let nm = &self.near;
        if nm.cols == 0 {
            return;
        }
        let p = nm.power;
        let mut binom = vec![1.0f64; p + 1];
        for i in 1..=p {
            binom[i] = binom[i - 1] * (p + 1 - i) as f64 / i as f64;
        }
        for j in 0..k {
            let l = k - 1 - j;
            let fa = &forcing[l + 1];
            let mut c = 1.0;
            for i in 0..=p {
                let mut y = vec![0.0; row.len()];
                nm.a[j][i].apply_add(fa, &mut y);
                let w = binom[i] * c;
                row.iter_mut().zip(&y).for_each(|(r, v)| *r += w * v);
                c *= -1.0 / (l + 1) as f64;
            }
            if l >= 1 {
                let fb = &forcing[l];
                let mut c = 1.0;
                for i in 0..=p {
                    let mut y = vec![0.0; row.len()];
                    nm.b[j][i].apply_add(fb, &mut y);
                    let w = binom[i] * c;
                    row.iter_mut().zip(&y).for_each(|(r, v)| *r += w * v);
                    c /= l as f64;
                }
            }
        }
    }

    /// Absolute quadrature error of Φ for forcing bounded by `forcing_sup`.
    pub fn quad_error(&self, forcing_sup: f64) -> f64 {
        self.heat0_error + self.lag_defect * forcing_sup
    }

    fn field(&self, values: Vec<Vec<f64>>) -> SpaceTimeField {
        let ratio = self.ratio(&values);
        SpaceTimeField { t_grid: self.t.clone(), r_grid: self.r.clone(), values, envelope_ratio: ratio }
    }

    fn ratio(&self, values: &[Vec<f64>]) -> f64 {
        let mut m = 0.0f64;
        for (row, th) in values.iter().zip(&self.theta).skip(1) {
            for (v, t) in row.iter().zip(th) {
                m = m.max(v.abs() / t);
            }
        }
        m
    }

    /// max over t > 0 of |w| − Θ with its node.
    fn excess(&self, values: &[Vec<f64>]) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (k, (row, th)) in values.iter().zip(&self.theta).enumerate().skip(1) {
            for (i, (v, t)) in row.iter().zip(th).enumerate() {
                let e = v.abs() - t;
                if e > best.0 {
                    best = (e, k, i);
                }
            }
        }
        best
    }

    pub fn theta_field(&self) -> SpaceTimeField {
        self.field(self.theta.clone())
    }

    pub fn heat0_field(&self) -> SpaceTimeField {
        self.field(self.heat0.clone())
    }

    /// ΨU on the grid; the t = 0 row is singular at the origin when μ ≠ 0.
    pub fn background_field(&self) -> SpaceTimeField {
        let values = self
            .bg
            .iter()
            .map(|row| row.iter().zip(&self.psi).map(|(&(u, _), &(p, _, _))| if p == 0.0 { 0.0 } else { p * u }).collect())
            .collect();
        SpaceTimeField { t_grid: self.t.clone(), r_grid: self.r.clone(), values, envelope_ratio: 0.0 }
    }

    pub fn seed(&self, seed: Seed) -> SpaceTimeField {
        let mut values: Vec<Vec<f64>> = match seed {
            Seed::Zero => vec![vec![0.0; self.r.len()]; self.t.len()],
            Seed::HalfTheta => self
                .theta
                .iter()
                .map(|row| row.iter().enumerate().map(|(i, th)| if i % 2 == 0 { 0.5 * th } else { -0.5 * th }).collect())
                .collect(),
        };
        values[0] = self.w0.clone();
        self.field(values)
    }

    /// Φ(w)(t) = e^{tΔ}w̄₀ + ∫_0^t e^{(t−s)Δ}M̃w(s) ds.
    pub fn picard_map(&self, w: &SpaceTimeField) -> Result<SpaceTimeField, PerturbError> {
        let (out, _) = self.checked_picard(&w.values)?;
        Ok(self.field(out))
    }

    fn checked_picard(&self, w: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, f64), PerturbError> {
        let (e, k, i) = self.excess(w);
        if e > 1e-12 * self.theta[k][i] {
            return Err(PerturbError::EnvelopeViolated { side: Side::In, excess: e, t: self.t[k], r: self.r[i] });
        }
        let (out, sup) = self.picard_raw(w);
        let quad = self.quad_error(sup);
        let (e, k, i) = self.excess(&out);
        if e > 10.0 * quad {
            return Err(PerturbError::EnvelopeViolated { side: Side::Out, excess: e, t: self.t[k], r: self.r[i] });
        }
        Ok((out, quad))
    }

    /// Iterates w ← Φ(w) until the weighted step is at most `tol`.
    pub fn solve_fixed_point(
        &self,
        seed: Seed,
        tol: f64,
        max_iter: usize,
    ) -> Result<(SpaceTimeField, FixedPointReport), PerturbError> {
        let mut w = self.seed(seed).values;
        let mut dists: Vec<f64> = Vec::new();
        let mut factors: Vec<f64> = Vec::new();
        let mut quad = 0.0;
        let mut converged = false;
        let mut iterations = 0;
        let mut above = 0;
        while iterations < max_iter {
            let (next, q) = self.checked_picard(&w)?;
            quad = q;
            iterations += 1;
            let (d, k, i) = distance(&next, &w, &self.theta);
            if let Some(&prev) = dists.last() {
                let f = if prev > 0.0 { d / prev } else { 0.0 };
                factors.push(f);
                above = if f > 0.9 { above + 1 } else { 0 };
                if above >= 3 {
                    return Err(PerturbError::NotContracting { factors, t: self.t[k], r: self.r[i] });
                }
            }
            dists.push(d);
            w = next;
            if d <= tol {
                converged = true;
                break;
            }
        }
        let field = self.field(w);
        let mut margin = f64::INFINITY;
        for (row, th) in field.values.iter().zip(&self.theta).skip(1) {
            for (v, t) in row.iter().zip(th) {
                margin = margin.min(t - v.abs());
            }
        }
        let trace = initial_trace_check(&field, &self.heat0_field());
        let report = FixedPointReport {
            iterations,
            dists,
            contraction_factors: factors,
            envelope_margin: margin,
            envelope_ratio: field.envelope_ratio,
            trace_constant: trace.constant,
            quad_error: quad,
            converged,
        };
        Ok((field, report))
    }

    /// dist(Φw, Φz)/dist(w, z) over `pairs` random admissible pairs w = Θξ,
    /// z = Θζ with |ξ|, |ζ| ≤ 1. Pair kinds cycle through independent node
    /// noise, smooth random modes and the aligned pair ξ = −ζ = ±1.
    pub fn measure_contraction(&self, pairs: usize, seed: u64) -> ContractionReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut factors = Vec::with_capacity(pairs);
        let mut kinds = Vec::with_capacity(pairs);
        let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
        let nt = self.t.len();
        let h0 = self.r[1];
        for p in 0..pairs {
            let (xi, zeta, kind): (Vec<Vec<f64>>, Vec<Vec<f64>>, &str) = match p % 3 {
                0 => {
                    let mut draw = || -> Vec<Vec<f64>> {
                        (0..nt).map(|_| self.r.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect()
                    };
                    let a = draw();
                    let b = draw();
                    (a, b, "noise")
                }
                1 => {
                    let mut mode = || {
                        let (ph, fr, ft) = (rng.gen_range(0.0..6.3), rng.gen_range(0.2..3.0), rng.gen_range(0.0..6.0));
                        (0..nt)
                            .map(|k| {
                                let s = k as f64 / nt as f64;
                                self.r.iter().map(|&x| (ph + fr * (x / h0).ln_1p() + ft * s).sin()).collect()
                            })
                            .collect::<Vec<Vec<f64>>>()
                    };
                    let a = mode();
                    let b = mode();
                    (a, b, "smooth")
                }
                _ => {
                    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    (vec![vec![s; self.r.len()]; nt], vec![vec![-s; self.r.len()]; nt], "aligned")
                }
            };
            let scale = |x: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
                let mut v: Vec<Vec<f64>> =
                    x.iter().zip(&self.theta).map(|(row, th)| row.iter().zip(th).map(|(a, b)| a * b).collect()).collect();
                v[0] = self.w0.clone();
                v
            };
            let w = scale(xi);
            let z = scale(zeta);
            let (pw, _) = self.picard_raw(&w);
            let (pz, _) = self.picard_raw(&z);
            let (din, _, _) = distance(&w, &z, &self.theta);
            let (dout, k, i) = distance(&pw, &pz, &self.theta);
            let f = if din > 0.0 { dout / din } else { 0.0 };
            if f > worst.0 {
                worst = (f, self.t[k], self.r[i]);
            }
            factors.push(f);
            kinds.push(kind.to_string());
        }
        ContractionReport { factors, kinds, max_factor: worst.0.max(0.0), worst_t: worst.1, worst_r: worst.2 }
    }

    /// u = ΨU + w.
    pub fn assemble_u(&self, w: &SpaceTimeField) -> SpaceTimeField {
        let bg = self.background_field();
        let values = bg.values.iter().zip(&w.values).map(|(b, w)| b.iter().zip(w).map(|(x, y)| x + y).collect()).collect();
        SpaceTimeField { t_grid: self.t.clone(), r_grid: self.r.clone(), values, envelope_ratio: 0.0 }
    }

    /// Residual of w_t − Δw − M̃w.
    pub fn w_residual(&self, w: &SpaceTimeField, opts: &ResidualOptions) -> Result<ResidualReport, PerturbError> {
        residual_check(w, self.problem.dim, opts, |k, i, v| self.mtilde_node(k, i, v))
    }

    /// Node-wise residual of u_t − Δu − |u|^α u.
    pub fn u_residual_nodes(&self, u: &SpaceTimeField, opts: &ResidualOptions) -> Vec<(usize, usize, f64)> {
        let alpha = self.problem.alpha;
        residual_nodes(u, self.problem.dim, opts, |_, _, v| signed_pow(v, alpha))
    }

    /// Residual of u_t − Δu − |u|^α u.
    pub fn u_residual(&self, u: &SpaceTimeField, opts: &ResidualOptions) -> Result<ResidualReport, PerturbError> {
        let alpha = self.problem.alpha;
        residual_check(u, self.problem.dim, opts, |_, _, v| signed_pow(v, alpha))
    }
}

/// e^{tΔ}w̄₀ at ρ by composite Gauss–Legendre on panels of `panel`·√t, in
/// the offset z = r − ρ.
fn heat_of_data(p: &PerturbationProblem, t: f64, rho: f64, panel: f64) -> f64 {
    let st = t.sqrt();
    let reach = WINDOW * st;
    let end = match p.domain {
        DomainSpec::Ball { radius } => radius,
        DomainSpec::WholeSpace => *p.w0_breakpoints().last().unwrap_or(&0.0),
    };
    let lo = (-reach).max(p.delta() - rho);
    let hi = reach.min(end - rho);
    if hi <= lo {
        return 0.0;
    }
    let mut cuts = vec![lo];
    for b in p.w0_breakpoints().into_iter().map(|b| b - rho).chain([0.0]) {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let rule = gauss_legendre(8);
    let pow = p.dim as i32 - 1;
    let mut acc = 0.0;
    for c in cuts.windows(2) {
        let n = ((c[1] - c[0]) / (panel * st)).ceil().max(1.0) as usize;
        let h = (c[1] - c[0]) / n as f64;
        for q in 0..n {
            let a = c[0] + q as f64 * h;
            for (z, w) in rule.points(a, a + h) {
                let x = rho + z;
                let v = p.w0(x);
                if v != 0.0 {
                    acc += w * v * x.powi(pow) * reduced_kernel_offset(&p.domain, p.dim, t, rho, z).unwrap_or(0.0);
                }
            }
        }
    }
    acc
}

fn distance(a: &[Vec<f64>], b: &[Vec<f64>], theta: &[Vec<f64>]) -> (f64, usize, usize) {
    let mut best = (0.0, 0, 0);
    for (k, ((ra, rb), th)) in a.iter().zip(b).zip(theta).enumerate().skip(1) {
        for (i, ((x, y), t)) in ra.iter().zip(rb).zip(th).enumerate() {
            let d = (x - y).abs() / t;
            if d > best.0 {
                best = (d, k, i);
            }
        }
    }
    best
}

/// max over t > 0 of |a − b|/Θ.
pub fn weighted_distance(a: &SpaceTimeField, b: &SpaceTimeField, theta: &SpaceTimeField) -> f64 {
    distance(&a.values, &b.values, &theta.values).0
}

/// |u_t − Δu − source| at every interior node with t ≥ t_floor, as
/// (t index, r index, value), using centred differences on the (possibly
/// nonuniform) grid. `source` receives the node's indices and the value there.
pub fn residual_nodes<S>(u: &SpaceTimeField, dim: usize, opts: &ResidualOptions, source: S) -> Vec<(usize, usize, f64)>
where
    S: Fn(usize, usize, f64) -> f64,
{
    let s = opts.stride.max(1);
    let (t, r) = (&u.t_grid, &u.r_grid);
    let n = dim as f64;
    let mut out = Vec::new();
    for k in (s..t.len().saturating_sub(1)).step_by(s) {
        if t[k] < opts.t_floor {
            continue;
        }
        let (prev, cur, next) = (&u.values[k - 1], &u.values[k], &u.values[k + 1]);
        let dt = t[k + 1] - t[k - 1];
        for i in (s..r.len().saturating_sub(1)).step_by(s) {
            if r[i] > opts.r_max {
                break;
            }
            let (hm, hp) = (r[i] - r[i - 1], r[i + 1] - r[i]);
            let (a, b, c) = (cur[i - 1], cur[i], cur[i + 1]);
            let urr = 2.0 * ((c - b) / hp - (b - a) / hm) / (hp + hm);
            let ur = (hm * hm * c - hp * hp * a + (hp * hp - hm * hm) * b) / (hp * hm * (hp + hm));
            let ut = (next[i] - prev[i]) / dt;
            out.push((k, i, (ut - urr - (n - 1.0) * ur / r[i] - source(k, i, b)).abs()));
        }
    }
    out
}

/// Largest value of `residual_nodes` with its location.
pub fn residual_check<S>(
    u: &SpaceTimeField,
    dim: usize,
    opts: &ResidualOptions,
    source: S,
) -> Result<ResidualReport, PerturbError>
where
    S: Fn(usize, usize, f64) -> f64,
{
    let nodes = residual_nodes(u, dim, opts, source);
    if nodes.is_empty() {
        return Err(PerturbError::GridTooCoarse(format!(
            "no interior node with t ≥ {:e} and r ≤ {:e}",
            opts.t_floor, opts.r_max
        )));
    }
    let mut report = ResidualReport { max_residual: 0.0, worst_t: 0.0, worst_r: 0.0, nodes: nodes.len() };
    for &(k, i, res) in &nodes {
        if res > report.max_residual || res.is_nan() {
            report.max_residual = res;
            report.worst_t = u.t_grid[k];
            report.worst_r = u.r_grid[i];
        }
    }
    Ok(report)
}

/// ‖w(t) − e^{tΔ}w̄₀‖_∞ / t along the t-grid, with per-decade maxima.
pub fn initial_trace_check(w: &SpaceTimeField, heat0: &SpaceTimeField) -> TraceReport {
    let t_max = *w.t_grid.last().unwrap();
    let mut ratios = Vec::new();
    for (k, &t) in w.t_grid.iter().enumerate().skip(1) {
        let d = w.values[k].iter().zip(&heat0.values[k]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        ratios.push((t, d / t));
    }
    let constant = ratios.iter().fold(0.0f64, |m, &(_, q)| m.max(q));
    let mut decades = Vec::new();
    let mut hi = t_max;
    loop {
        let lo = hi / 10.0;
        let in_decade: Vec<f64> = ratios.iter().filter(|&&(t, _)| t > lo && t <= hi).map(|&(_, q)| q).collect();
        if in_decade.is_empty() {
            break;
        }
        decades.push((lo, hi, in_decade.iter().fold(0.0f64, |m, &q| m.max(q))));
        hi = lo;
    }
    let variation = match decades.len() {
        0 | 1 => 1.0,
        n => {
            let (a, b) = (decades[n - 1].2, decades[n - 2].2);
            if a == 0.0 && b == 0.0 {
                1.0
            } else {
                a.max(b) / a.min(b)
            }
        }
    };
    TraceReport { constant, decades, variation }
}
