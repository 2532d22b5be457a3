//! Self-similar profiles f(r) of u_t = Δu + |u|^α u, with U(t,x) = t^{-1/α} f(|x|/√t).
//!
//! The profile ODE is
//!   f'' + ((N−1)/r + r/2) f' + f/α + |f|^α f = 0,  f(0) = a, f'(0) = 0.

use crate::ode::{integrate, DenseStep, Dop853Options, OdeError, StepControl};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile left the overflow guard at r = {escape_radius}")]
    NonFinite { escape_radius: f64 },
    #[error("integrator could not meet tolerance: {0}")]
    ToleranceNotMet(OdeError),
    #[error("far-field tail not settled: spread {spread:.3e} exceeds {limit:.3e}")]
    TailNotSettled { spread: f64, limit: f64 },
    #[error("no bracket for mu = {mu_target} with {zeros} zeros in the window")]
    NoBracket { mu_target: f64, zeros: usize },
    #[error("alpha = {alpha} is not Sobolev-subcritical in dimension {dim}")]
    GateViolation { dim: usize, alpha: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("self-similar bound grows under refinement: {coarse} -> {fine}")]
    Unbounded { coarse: f64, fine: f64 },
}

pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub dim: usize,
    pub alpha: f64,
    pub a: f64,
}

impl ProfileSpec {
    pub fn new(dim: usize, alpha: f64, a: f64) -> Self {
        Self { dim, alpha, a }
    }

    /// α < 4/(N−2) for N ≥ 3; every α > 0 is admitted for N ≤ 2.
    pub fn is_subcritical(&self) -> bool {
        subcritical(self.dim, self.alpha)
    }

    fn validate(&self) -> Result<(), ProfileError> {
        if self.dim == 0 || !(self.alpha > 0.0) || !self.a.is_finite() {
            return Err(ProfileError::InvalidArgument(format!(
                "need N >= 1, alpha > 0, finite a; got {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn subcritical(dim: usize, alpha: f64) -> bool {
    dim <= 2 || alpha < 4.0 / (dim as f64 - 2.0)
}

/// g(f) = f/α + |f|^α f.
#[inline]
fn source(f: f64, alpha: f64) -> f64 {
    f / alpha + f.abs().powf(alpha) * f
}

#[inline]
fn source_prime(f: f64, alpha: f64) -> f64 {
    1.0 / alpha + (alpha + 1.0) * f.abs().powf(alpha)
}

/// f'' from the ODE at r > 0.
#[inline]
pub fn profile_f2(dim: usize, alpha: f64, r: f64, f: f64, df: f64) -> f64 {
    -((dim as f64 - 1.0) / r + 0.5 * r) * df - source(f, alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub spec: ProfileSpec,
    pub tol: f64,
    /// Uniform grid 0 = r_0 < … < r_n = r_max.
    pub r_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub df_values: Vec<f64>,
    pub local_error: Vec<f64>,
    /// Sign changes of f, each refined by bisection on the dense output.
    pub zeros: Vec<f64>,
}

impl ProfileCurve {
    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().unwrap()
    }

    pub fn spacing(&self) -> f64 {
        self.r_grid[1] - self.r_grid[0]
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let h = self.spacing();
        let n = self.r_grid.len() - 1;
        let i = ((r / h).floor() as usize).min(n - 1);
        (i, (r - self.r_grid[i]) / h)
    }

    fn f2_at(&self, i: usize) -> f64 {
        let r = self.r_grid[i];
        if r == 0.0 {
            -source(self.spec.a, self.spec.alpha) / self.spec.dim as f64
        } else {
            profile_f2(self.spec.dim, self.spec.alpha, r, self.f_values[i], self.df_values[i])
        }
    }

    /// Cubic Hermite interpolation of (f, f') for 0 ≤ r ≤ r_max.
    pub fn interpolate(&self, r: f64) -> (f64, f64) {
        let h = self.spacing();
        let (i, s) = self.locate(r);
        let (f0, f1) = (self.f_values[i], self.f_values[i + 1]);
        let (d0, d1) = (self.df_values[i], self.df_values[i + 1]);
        let (e0, e1) = (self.f2_at(i), self.f2_at(i + 1));
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let f = h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1;
        let df = h00 * d0 + h10 * h * e0 + h01 * d1 + h11 * h * e1;
        (f, df)
    }

    /// ODE residual per node; f'' comes from 7-point differences of f'.
    /// Stencils never straddle a zero of f, where |f|^α f loses smoothness.
    pub fn residuals(&self) -> Vec<f64> {
        let n = self.r_grid.len();
        let h = self.spacing();
        let (dim, alpha) = (self.spec.dim, self.spec.alpha);
        let d = &self.df_values;
        let mut out = vec![0.0; n];
        if n < 8 {
            return out;
        }
        // f' is odd in r, which supplies ghost values left of the origin.
        let df_at = |k: isize| -> f64 {
            if k < 0 {
                -d[(-k) as usize]
            } else {
                d[k as usize]
            }
        };
        let cell_of = |z: f64| (z / h).floor() as isize;
        let zero_cells: Vec<isize> = self.zeros.iter().map(|&z| cell_of(z)).collect();
        let last = n as isize - 1;
        for (i, slot) in out.iter_mut().enumerate() {
            let ii = i as isize;
            let clean = |lo: isize| {
                lo + 6 <= last && !zero_cells.iter().any(|&c| c >= lo && c < lo + 6)
            };
            let mut start = None;
            for off in [3isize, 2, 4, 1, 5, 0, 6] {
                if clean(ii - off) {
                    start = Some(ii - off);
                    break;
                }
            }
            let lo = start.unwrap_or((ii - 3).min(last - 6));
            let offsets: Vec<f64> = (lo..lo + 7).map(|k| (k - ii) as f64).collect();
            let w = fd_weights(0.0, &offsets, 1);
            let f2 = (lo..lo + 7).zip(&w).map(|(k, wk)| wk * df_at(k)).sum::<f64>() / h;
            let r = self.r_grid[i];
            let f = self.f_values[i];
            *slot = if r == 0.0 {
                dim as f64 * f2 + source(f, alpha)
            } else {
                f2 + ((dim as f64 - 1.0) / r + 0.5 * r) * d[i] + source(f, alpha)
            };
        }
        out
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_csv(&self) -> String {
        let res = self.residuals();
        let mut s = String::from("r,f,df,residual\n");
        for i in 0..self.r_grid.len() {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e}",
                self.r_grid[i], self.f_values[i], self.df_values[i], res[i]
            );
        }
        s
    }
}

/// Fornberg weights for the `order`-th derivative at `z` from nodes `x`.
pub fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Output spacing: resolves the local oscillation scale 1/√g'(a) by ~20 nodes.
fn output_spacing(spec: &ProfileSpec) -> f64 {
    let omega = source_prime(spec.a, spec.alpha).sqrt();
    let h = (0.05 / omega).min(1.0 / 64.0);
    // power of two so grid nodes are exact multiples
    2f64.powi(h.log2().floor() as i32)
}

pub fn series_radius(tol: f64) -> f64 {
    1e-3f64.min(tol.powf(0.25))
}

/// Fourth-order Taylor start: f = a + c2 r² + c4 r⁴.
pub fn series_start(spec: &ProfileSpec, r: f64) -> (f64, f64) {
    let n = spec.dim as f64;
    let c2 = -source(spec.a, spec.alpha) / (2.0 * n);
    let c4 = -c2 * (1.0 + source_prime(spec.a, spec.alpha)) / (4.0 * (n + 2.0));
    let r2 = r * r;
    (spec.a + c2 * r2 + c4 * r2 * r2, 2.0 * c2 * r + 4.0 * c4 * r2 * r)
}

/// First sign change of f inside the step, located to `tol` on the side
/// where f already has the new sign. The step is sampled at interior points so
/// two zeros in one step are not missed.
fn first_crossing(step: &DenseStep<2>, last_sign: f64, tol: f64) -> Option<f64> {
    let samples = 6;
    let mut t_prev = step.t0;
    for k in 1..=samples {
        let t = step.t0 + step.h * k as f64 / samples as f64;
        let f = if k == samples { step.y1[0] } else { step.eval(t)[0] };
        if f != 0.0 && f.signum() != last_sign {
            let (mut lo, mut hi) = (t_prev, t);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let fm = step.eval(mid)[0];
                if fm != 0.0 && fm.signum() != last_sign {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        t_prev = t;
    }
    None
}

pub fn integrate_profile(spec: ProfileSpec, r_max: f64, tol: f64) -> Result<ProfileCurve, ProfileError> {
    integrate_profile_with_spacing(spec, r_max, tol, output_spacing(&spec))
}

pub fn integrate_profile_with_spacing(
    spec: ProfileSpec,
    r_max: f64,
    tol: f64,
    h_out: f64,
) -> Result<ProfileCurve, ProfileError> {
    spec.validate()?;
    if !(r_max > 0.0) || !(tol > 0.0) || !(h_out > 0.0) {
        return Err(ProfileError::InvalidArgument(format!(
            "need r_max > 0, tol > 0, spacing > 0; got {r_max}, {tol}, {h_out}"
        )));
    }
    let n = (r_max / h_out).ceil() as usize;
    let n = n.max(8);
    let h_out = r_max / n as f64;
    let r_grid: Vec<f64> = (0..=n).map(|i| i as f64 * h_out).collect();
    let mut f_values = vec![0.0; n + 1];
    let mut df_values = vec![0.0; n + 1];
    let mut local_error = vec![0.0; n + 1];
    f_values[0] = spec.a;

    if spec.a == 0.0 {
        return Ok(ProfileCurve { spec, tol, r_grid, f_values, df_values, local_error, zeros: vec![] });
    }

    let r0 = series_radius(tol).min(0.5 * h_out);
    let (dim, alpha) = (spec.dim, spec.alpha);
    let rhs = move |r: f64, y: &[f64; 2]| [y[1], profile_f2(dim, alpha, r, y[0], y[1])];
    let step_tol = (tol * 1e-3).max(1e-14);
    let opts = Dop853Options {
        rtol: step_tol,
        atol: step_tol,
        h_max: 0.25,
        h_init: None,
        max_steps: 2_000_000,
    };
    let y0 = {
        let (f, df) = series_start(&spec, r0);
        [f, df]
    };

    // f|f|^α is not smooth at f = 0, so each zero ends a segment: the step
    // that crosses it is discarded and replayed up to the zero, and the
    // integration restarts there.
    let mut next = 1usize;
    let mut zeros = Vec::new();
    let mut last_sign = spec.a.signum();
    let (mut r_start, mut y_start) = (r0, y0);
    let mut pending: Option<f64> = None;
    loop {
        let end = pending.unwrap_or(r_max);
        let mut escape = None;
        let mut crossing = None;
        let mut end_state = y_start;
        let result = integrate(&rhs, r_start, y_start, end, &opts, |step| {
            if step.y1[0].abs() > OVERFLOW_GUARD {
                escape = Some(step.t1());
                return StepControl::Stop;
            }
            if pending.is_none() {
                if let Some(z) = first_crossing(step, last_sign, tol) {
                    crossing = Some((z, step.t0, step.y0));
                    return StepControl::Stop;
                }
            }
            while next <= n && r_grid[next] <= step.t1() * (1.0 + 1e-15) {
                let y = if r_grid[next] >= step.t1() { step.y1 } else { step.eval(r_grid[next]) };
                f_values[next] = y[0];
                df_values[next] = y[1];
                local_error[next] = step.err * (step_tol + step_tol * y[0].abs());
                next += 1;
            }
            end_state = step.y1;
            StepControl::Continue
        });
        if let Some(r) = escape {
            return Err(ProfileError::NonFinite { escape_radius: r });
        }
        match result {
            Ok(_) => {}
            Err(OdeError::NonFinite { t }) => return Err(ProfileError::NonFinite { escape_radius: t }),
            Err(e) => return Err(ProfileError::ToleranceNotMet(e)),
        }
        if let Some(z) = pending.take() {
            zeros.push(z);
            last_sign = -last_sign;
            r_start = z;
            y_start = end_state;
        } else if let Some((z, t0, y)) = crossing {
            pending = Some(z);
            r_start = t0;
            y_start = y;
        } else {
            break;
        }
    }
    debug_assert_eq!(next, n + 1);
    Ok(ProfileCurve { spec, tol, r_grid, f_values, df_values, local_error, zeros })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub zero_count: usize,
    pub mu: f64,
    pub mu_uncertainty: f64,
    /// Second far-field coefficient: r^{2/α} f ≈ μ (1 + far_c / r² + …).
    pub far_c: f64,
    pub f0: f64,
    pub decay_certificate: f64,
}

/// Least squares fit of y = p + q/r² + s/r⁴ on the given nodes.
fn fit_far_field(r: &[f64], y: &[f64]) -> (f64, f64) {
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (ri, yi) in r.iter().zip(y) {
        let x = 1.0 / (ri * ri);
        let phi = [1.0, x, x * x];
        for p in 0..3 {
            for q in 0..3 {
                m[p][q] += phi[p] * phi[q];
            }
            b[p] += phi[p] * yi;
        }
    }
    let sol = solve3(m, b);
    (sol[0], sol[1])
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for k in 0..3 {
        let piv = (k..3).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap()).unwrap();
        m.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..3 {
            let l = m[i][k] / m[k][k];
            for j in k..3 {
                m[i][j] -= l * m[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; 3];
    for k in (0..3).rev() {
        let mut acc = b[k];
        for j in k + 1..3 {
            acc -= m[k][j] * x[j];
        }
        x[k] = acc / m[k][k];
    }
    x
}

/// Spread limit for declaring the tail settled.
pub fn tail_limit(mu: f64) -> f64 {
    1e-5 * (1.0 + mu.abs())
}

pub fn summarize_profile(curve: &ProfileCurve) -> Result<ProfileSummary, ProfileError> {
    let alpha = curve.spec.alpha;
    let beta = 2.0 / alpha;
    let n = curve.r_grid.len() - 1;
    let decay_certificate = curve
        .r_grid
        .iter()
        .zip(curve.f_values.iter().zip(&curve.df_values))
        .map(|(&r, (&f, &df))| (f.abs() + (1.0 + r) * df.abs()) * (1.0 + r * r).powf(1.0 / alpha))
        .fold(0.0, f64::max);
    if curve.f_values.iter().all(|&f| f == 0.0) {
        return Ok(ProfileSummary {
            zero_count: 0,
            mu: 0.0,
            mu_uncertainty: 0.0,
            far_c: 0.0,
            f0: curve.spec.a,
            decay_certificate,
        });
    }
    let r_max = curve.r_max();
    let i_half = curve.r_grid.partition_point(|&r| r < 0.5 * r_max);
    let i_q = curve.r_grid.partition_point(|&r| r < 0.75 * r_max);
    let scaled: Vec<f64> = (0..=n).map(|i| curve.r_grid[i].powf(beta) * curve.f_values[i]).collect();
    let (p, q) = fit_far_field(&curve.r_grid[i_half..], &scaled[i_half..]);
    let (p1, _) = fit_far_field(&curve.r_grid[i_half..=i_q], &scaled[i_half..=i_q]);
    let (p2, _) = fit_far_field(&curve.r_grid[i_q..], &scaled[i_q..]);
    let spread = (p1 - p2).abs();
    let limit = tail_limit(p);
    if !(spread <= limit) {
        return Err(ProfileError::TailNotSettled { spread, limit });
    }
    let raw = scaled[n];
    let mu_uncertainty = spread.max((p - raw).abs());
    let far_c = if p != 0.0 { q / p } else { 0.0 };
    Ok(ProfileSummary {
        zero_count: curve.zeros.len(),
        mu: p,
        mu_uncertainty,
        far_c,
        f0: curve.spec.a,
        decay_certificate,
    })
}

/// U(t, ρ) and ∂_ρ U(t, ρ).
pub fn self_similar_eval_with_grad(curve: &ProfileCurve, summary: &ProfileSummary, t: f64, rho: f64) -> (f64, f64) {
    let alpha = curve.spec.alpha;
    let sqrt_t = t.sqrt();
    let r = rho / sqrt_t;
    let tpow = t.powf(-1.0 / alpha);
    if r <= curve.r_max() {
        let (f, df) = curve.interpolate(r);
        (tpow * f, tpow * df / sqrt_t)
    } else {
        let beta = 2.0 / alpha;
        let mu = summary.mu;
        let c = summary.far_c;
        let rb = r.powf(-beta);
        let f = mu * rb * (1.0 + c / (r * r));
        let df = mu * rb * (-beta / r - (beta + 2.0) * c / (r * r * r));
        (tpow * f, tpow * df / sqrt_t)
    }
}

pub fn self_similar_eval(curve: &ProfileCurve, summary: &ProfileSummary, t: f64, rho: f64) -> f64 {
    self_similar_eval_with_grad(curve, summary, t, rho).0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarCertificate {
    #[serde(rename = "C1")]
    pub c1: f64,
    pub c1_coarse: f64,
    pub samples: usize,
}

fn bound_ratio(curve: &ProfileCurve, summary: &ProfileSummary, t: f64, rho: f64) -> f64 {
    let alpha = curve.spec.alpha;
    let (u, du) = self_similar_eval_with_grad(curve, summary, t, rho);
    let first = u.abs().powf(alpha) / (1.0 / t).min(1.0 / (rho * rho));
    let second = du.abs().powf(2.0 * alpha / (alpha + 2.0)) * (t + rho * rho);
    first.max(second)
}

fn sampled_c1(curve: &ProfileCurve, summary: &ProfileSummary, n: usize) -> f64 {
    // every curve node at t = 1, then a log grid in (t, ρ)
    let mut c1 = 0.0f64;
    for &r in &curve.r_grid {
        c1 = c1.max(bound_ratio(curve, summary, 1.0, r));
    }
    for i in 0..n {
        let t = 10f64.powf(-6.0 + 6.0 * i as f64 / (n - 1) as f64);
        for k in 0..n {
            let rho = 10f64.powf(-4.0 + 6.0 * k as f64 / (n - 1) as f64);
            c1 = c1.max(bound_ratio(curve, summary, t, rho));
        }
    }
    c1
}

/// Smallest grid-measured C1 in |U|^α ≤ C1 min{1/t, |x|^{-2}} and
/// |∇U|^{2α/(α+2)} ≤ C1/(t + |x|²).
pub fn verify_selfsimilar_bounds(
    curve: &ProfileCurve,
    summary: &ProfileSummary,
) -> Result<SelfSimilarCertificate, ProfileError> {
    let n = 48;
    let coarse = sampled_c1(curve, summary, n);
    let fine = sampled_c1(curve, summary, 2 * n);
    if fine > 1.05 * coarse + 1e-300 {
        return Err(ProfileError::Unbounded { coarse, fine });
    }
    Ok(SelfSimilarCertificate { c1: fine, c1_coarse: coarse, samples: 2 * n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub r_max: f64,
    pub tol: f64,
    pub samples_per_unit: f64,
    /// Accept |μ(a) − μ_target| below this.
    pub mu_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { r_max: 40.0, tol: 1e-9, samples_per_unit: 400.0, mu_tol: 1e-9 }
    }
}

/// (zero count, μ) at one shooting value; None when the tail does not settle
/// or the profile escapes.
pub fn classify(dim: usize, alpha: f64, a: f64, opts: &ScanOptions) -> Option<(usize, f64)> {
    let curve = integrate_profile(ProfileSpec::new(dim, alpha, a), opts.r_max, opts.tol).ok()?;
    let s = summarize_profile(&curve).ok()?;
    Some((s.zero_count, s.mu))
}

/// Shooting values a in the window whose profiles have `zeros` sign changes
/// and far-field coefficient μ_target; smallest a first.
pub fn find_profiles(
    dim: usize,
    alpha: f64,
    mu_target: f64,
    zeros: usize,
    a_window: (f64, f64),
    k_max: usize,
    opts: &ScanOptions,
) -> Result<Vec<f64>, ProfileError> {
    if !subcritical(dim, alpha) {
        return Err(ProfileError::GateViolation { dim, alpha });
    }
    let (lo, hi) = a_window;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(ProfileError::InvalidArgument(format!("bad window {a_window:?}")));
    }
    let cells = ((hi - lo) * opts.samples_per_unit).ceil().max(1.0) as usize;
    let samples: Vec<f64> = if hi == lo {
        vec![lo]
    } else {
        (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect()
    };
    let classes: Vec<Option<(usize, f64)>> = samples.iter().map(|&a| classify(dim, alpha, a, opts)).collect();

    let mut found: Vec<f64> = Vec::new();
    for (i, c) in classes.iter().enumerate() {
        if let Some((z, mu)) = c {
            if *z == zeros && (mu - mu_target).abs() <= opts.mu_tol {
                found.push(samples[i]);
            }
        }
    }
    for i in 0..samples.len().saturating_sub(1) {
        if found.len() >= k_max {
            break;
        }
        let (Some((z0, m0)), Some((z1, m1))) = (classes[i], classes[i + 1]) else {
            continue;
        };
        if z0 != zeros || z1 != zeros {
            continue;
        }
        let (g0, g1) = (m0 - mu_target, m1 - mu_target);
        if g0 == 0.0 || g1 == 0.0 || (g0 > 0.0) == (g1 > 0.0) {
            continue;
        }
        if let Some(a) = bisect_mu(dim, alpha, mu_target, zeros, samples[i], samples[i + 1], g0, opts) {
            found.push(a);
        }
    }
    found.sort_by(|x, y| x.partial_cmp(y).unwrap());
    found.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * (1.0 + x.abs()));
    found.truncate(k_max);
    if found.is_empty() {
        return Err(ProfileError::NoBracket { mu_target, zeros });
    }
    Ok(found)
}

#[allow(clippy::too_many_arguments)]
fn bisect_mu(
    dim: usize,
    alpha: f64,
    mu_target: f64,
    zeros: usize,
    mut lo: f64,
    mut hi: f64,
    g_lo: f64,
    opts: &ScanOptions,
) -> Option<f64> {
    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (z, mu) = classify(dim, alpha, mid, opts)?;
        if z != zeros {
            return None;
        }
        let g = mu - mu_target;
        best = Some(mid);
        if g.abs() <= opts.mu_tol || hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
        if (g > 0.0) == (g_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub a: f64,
    pub zero_count: usize,
    pub mu: f64,
    pub mu_uncertainty: f64,
    pub f0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
}

impl SummaryRecord {
    pub fn new(spec: &ProfileSpec, s: &ProfileSummary, c1: f64) -> Self {
        Self {
            n: spec.dim,
            alpha: spec.alpha,
            a: spec.a,
            zero_count: s.zero_count,
            mu: s.mu,
            mu_uncertainty: s.mu_uncertainty,
            f0: s.f0,
            c1,
        }
    }
}
