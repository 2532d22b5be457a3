//! Smooth cutoffs at dyadic scales, the weight Θ, the majorant h and the
//! constants of the fixed-point construction.

use crate::heatops::{duhamel_on, heat_apply_on, DomainSpec, FarField, HeatError, QuadratureSettings, RadialField};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CutoffError {
    #[error("cutoff level {j} outside 0..={max}")]
    LevelOutOfRange { j: usize, max: usize },
    #[error("no admissible T: {binding} needs log10 T <= {log10_t:.2}")]
    NoAdmissibleT { binding: String, log10_t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Heat(#[from] HeatError),
}

/// θ(s) = P(s − 1) with the quintic P(u) = 6u⁵ − 15u⁴ + 10u³, which is C²
/// with θ = 0 on s ≤ 1 and θ = 1 on s ≥ 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothStep {
    pub order: u32,
}

impl Default for SmoothStep {
    fn default() -> Self {
        Self { order: 2 }
    }
}

impl SmoothStep {
    pub fn eval(&self, s: f64) -> f64 {
        let u = (s - 1.0).clamp(0.0, 1.0);
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }

    pub fn d1(&self, s: f64) -> f64 {
        let u = s - 1.0;
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }

    pub fn d2(&self, s: f64) -> f64 {
        let u = s - 1.0;
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    }

    /// sup|θ'| = 15/8.
    pub const D1_SUP: f64 = 1.875;
    /// sup|θ''| = 10/√3.
    pub const D2_SUP: f64 = 5.773_502_691_896_258;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub delta: f64,
    /// Levels 0..=m+1 are available.
    pub m: usize,
    pub step: SmoothStep,
}

impl CutoffFamily {
    pub fn new(delta: f64, m: usize) -> Self {
        Self { delta, m, step: SmoothStep::default() }
    }

    /// a_j = 2^{−j}δ, without a range check.
    pub fn level(&self, j: usize) -> f64 {
        self.delta * (-(j as f64) * LN_2).exp()
    }

    /// χ_j(x) = θ(|x|/a_j), without a range check.
    pub fn chi(&self, j: usize, x: f64) -> f64 {
        self.step.eval(x.abs() / self.level(j))
    }
}

pub fn chi_eval(family: &CutoffFamily, j: usize, x_norm: f64) -> Result<f64, CutoffError> {
    if j > family.m + 1 {
        return Err(CutoffError::LevelOutOfRange { j, max: family.m + 1 });
    }
    Ok(family.chi(j, x_norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeTheta {
    #[serde(rename = "K")]
    pub k: f64,
    pub m: usize,
    pub family: CutoffFamily,
}

impl EnvelopeTheta {
    pub fn new(k: f64, m: usize, delta: f64) -> Self {
        Self { k, m, family: CutoffFamily::new(delta, m) }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let st = t.sqrt();
        let mut acc = st.powi(self.m as i32);
        let mut p = 1.0;
        for j in 1..=self.m {
            acc += p * self.family.chi(j, x);
            p *= st;
        }
        self.k * acc
    }
}

pub fn theta_eval(env: &EnvelopeTheta, t: f64, x_norm: f64) -> f64 {
    env.eval(t, x_norm)
}

/// h(s,x) = (|x|^{−2} + 1) Σ_{j=1}^m s^{(j−1)/2} χ_j(x) + (1 + s) s^{(m−2)/2}.
pub fn h_eval(family: &CutoffFamily, m: usize, s: f64, x_norm: f64) -> f64 {
    let ss = s.sqrt();
    let mut sum = 0.0;
    let mut p = 1.0;
    for j in 1..=m {
        let c = family.chi(j, x_norm);
        if c != 0.0 {
            sum += p * c;
        }
        p *= ss;
    }
    let head = if sum == 0.0 { 0.0 } else { (x_norm.powi(-2) + 1.0) * sum };
    head + (1.0 + s) * s.powf(0.5 * (m as f64 - 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Worst {
    pub margin: f64,
    pub j: usize,
    pub t: f64,
    pub x: f64,
}

impl Worst {
    fn new() -> Self {
        Self { margin: f64::INFINITY, j: 0, t: f64::NAN, x: f64::NAN }
    }

    fn update(&mut self, margin: f64, j: usize, t: f64, x: f64) {
        if margin < self.margin {
            *self = Self { margin, j, t, x };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub dim: usize,
    /// e^{tΔ}χ_j ≤ χ_{j+1} + 2^{N/2} e^{−a_{j+1}²/8t}
    pub chi: Worst,
    /// e^{tΔ}(|·|^{−2}χ_j) ≤ a_j^{−2}(χ_{j+1} + 2^{N/2} e^{−a_{j+1}²/8t})
    pub weighted_chi: Worst,
    /// the Duhamel bound on ∫_0^t e^{(t−s)Δ} h(s) ds
    pub duhamel: Worst,
    pub max_quad_error: f64,
}

impl SmoothingReport {
    pub fn min_margin(&self) -> f64 {
        self.chi.margin.min(self.weighted_chi.margin).min(self.duhamel.margin)
    }
}

/// Grid resolving every transition [a_j, 2a_j] for j in `levels` with
/// `per_cell` uniform cells, geometric elsewhere, out to `r_end`.
fn transition_grid(family: &CutoffFamily, levels: std::ops::RangeInclusive<usize>, per_cell: usize, r_end: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    for j in levels {
        let a = family.level(j);
        for i in 0..=per_cell {
            pts.push(a * (1.0 + i as f64 / per_cell as f64));
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut r = *pts.last().unwrap();
    while r < r_end {
        r = (r * 1.02).max(r + 1e-3);
        pts.push(r);
    }
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

/// Default probe points: the origin, samples across each transition and a
/// few beyond δ.
pub fn default_x_grid(family: &CutoffFamily) -> Vec<f64> {
    let mut x = vec![0.0];
    for j in 0..=family.m + 1 {
        let a = family.level(j);
        for f in [0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0] {
            x.push(f * a);
        }
    }
    x.push(5.0 * family.delta);
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    x.dedup();
    x
}

/// `n` log-spaced times in [1e−4, 1/4].
pub fn default_smoothing_t_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (1e-4f64.ln(), 0.25f64.ln());
    (0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64).exp()).collect()
}

/// Checks the three smoothing estimates on whole space in dimension `dim`
/// for levels j = 0..=m, returning the smallest margin of each.
pub fn verify_smoothing(
    family: &CutoffFamily,
    dim: usize,
    t_grid: &[f64],
    x_grid: &[f64],
) -> Result<SmoothingReport, CutoffError> {
    let sorted = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[0] <= w[1]);
    if !sorted(t_grid) || !sorted(x_grid) || t_grid[0] <= 0.0 || x_grid[0] < 0.0 {
        return Err(CutoffError::InvalidArgument("grids must be sorted, t > 0, x ≥ 0".into()));
    }
    if dim == 0 {
        return Err(CutoffError::InvalidArgument("dimension must be positive".into()));
    }
    let domain = DomainSpec::WholeSpace;
    let settings = QuadratureSettings::default();
    let m = family.m;
    let gauss_factor = 2f64.powf(0.5 * dim as f64);
    let x_max = *x_grid.last().unwrap();
    let t_max = *t_grid.last().unwrap();
    let r_end = x_max + 14.0 * t_max.sqrt() + 2.0 * family.delta;
    let mut report = SmoothingReport {
        dim,
        chi: Worst::new(),
        weighted_chi: Worst::new(),
        duhamel: Worst::new(),
        max_quad_error: 0.0,
    };

    for j in 0..=m {
        let a_j = family.level(j);
        let a_next = family.level(j + 1);
        let grid = transition_grid(family, j..=j, 400, r_end);
        let chi = RadialField::from_fn(dim, grid.clone(), FarField::Constant { value: 1.0 }, |r| family.chi(j, r));
        let weighted = RadialField::from_fn(dim, grid, FarField::PowerLaw { c: 1.0, gamma: 2.0 }, |r| {
            if r <= a_j {
                0.0
            } else {
                family.chi(j, r) / (r * r)
            }
        });
        for &t in t_grid {
            let slack = gauss_factor * (-a_next * a_next / (8.0 * t)).exp();
            let out = heat_apply_on(&domain, &chi, t, x_grid, &settings)?;
            report.max_quad_error = report.max_quad_error.max(out.max_error);
            for (&x, &v) in x_grid.iter().zip(&out.field.values) {
                report.chi.update(family.chi(j + 1, x) + slack - v, j, t, x);
            }
            let out = heat_apply_on(&domain, &weighted, t, x_grid, &settings)?;
            report.max_quad_error = report.max_quad_error.max(out.max_error);
            let scale = a_j.powi(-2);
            for (&x, &v) in x_grid.iter().zip(&out.field.values) {
                report.weighted_chi.update(scale * (family.chi(j + 1, x) + slack) - v, j, t, x);
            }
        }
    }

    if m >= 1 {
        let grid = transition_grid(family, 1..=m, 100, r_end);
        let a_m = family.level(m);
        let a_m1 = family.level(m + 1);
        let coef = 1.0 + a_m.powi(-2);
        let forcing = |s: f64| {
            let values: Vec<f64> = grid.iter().map(|&r| h_eval(family, m, s, r)).collect();
            let far = *values.last().unwrap();
            RadialField::bounded(dim, grid.clone(), values, FarField::Constant { value: far })
        };
        for &t in t_grid {
            let out = duhamel_on(&domain, &forcing, t, 32, x_grid, f64::INFINITY)?;
            report.max_quad_error = report.max_quad_error.max(out.max_error);
            let st = t.sqrt();
            let tm = st.powi(m as i32);
            for (&x, &v) in x_grid.iter().zip(&out.field.values) {
                let mut sum = tm;
                let mut p = st;
                for jj in 2..=m {
                    sum += p * family.chi(jj, x);
                    p *= st;
                }
                let bound = st * coef * sum
                    + m as f64 * gauss_factor * coef * (1.0 + st.powi(m as i32 + 1)) * (-a_m1 * a_m1 / (8.0 * t)).exp()
                    + 2.0 * (1.0 / m as f64 + t / (m as f64 + 2.0)) * tm;
                report.duhamel.update(bound - v, m, t, x);
            }
        }
    }
    Ok(report)
}

/// Sup norms of the spatial cutoff Ψ and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiNorms {
    pub grad_sup: f64,
    pub lap_sup: f64,
    /// sup|Ψ| + sup|∇Ψ| + sup|D²Ψ|
    pub w2inf: f64,
}

impl PsiNorms {
    /// Ψ ≡ 1.
    pub const ONE: PsiNorms = PsiNorms { grad_sup: 0.0, lap_sup: 0.0, w2inf: 1.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Every constant from the inequalities of the existence proof.
    Proof,
    /// m and T from the measured contraction budget; see the provenance.
    Practical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub quantity: String,
    pub rule: String,
    pub value: f64,
    /// Worst log-ratio (≤ 0 means satisfied) for inequality checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_margin: Option<f64>,
}

fn prov(quantity: &str, rule: &str, value: f64, log_margin: Option<f64>) -> Provenance {
    Provenance { quantity: quantity.into(), rule: rule.into(), value, log_margin }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsBundle {
    pub route: Route,
    pub alpha: f64,
    pub dim: usize,
    pub delta: f64,
    pub w0_sup: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub m: usize,
    #[serde(rename = "T")]
    pub t_max: f64,
    /// The budget in the smallness conditions: K/(4B) on the proof route.
    pub kappa: f64,
    pub provenance: Vec<Provenance>,
}

pub const K_MIN: f64 = 1e-6;
/// Candidate T below this are rejected on the proof route.
pub const T_FLOOR_PROOF: f64 = 1e-12;
/// The practical route goes further down; t^{m/2} stays representable.
pub const T_FLOOR_PRACTICAL: f64 = 1e-40;
/// Target for 2(α+1)C_U/m on the practical route.
pub const PRACTICAL_FACTOR: f64 = 0.6;

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Log-space forms of the three smallness conditions for given (N, δ, m, κ).
#[derive(Debug, Clone, Copy)]
struct Smallness {
    dim: usize,
    ln_delta: f64,
    m: usize,
    ln_kappa: f64,
}

impl Smallness {
    fn ln_level(&self, j: usize) -> f64 {
        self.ln_delta - j as f64 * LN_2
    }

    /// ln a²/(8t)
    fn gauss_exponent(&self, j: usize, ln_t: f64) -> f64 {
        (2.0 * self.ln_level(j) - 8f64.ln() - ln_t).exp()
    }

    /// ln of LHS/RHS for 2^{N/2} e^{−a₁²/8t} ≤ t^{m/2}/2.
    fn first(&self, ln_t: f64) -> f64 {
        0.5 * self.dim as f64 * LN_2 - self.gauss_exponent(1, ln_t) + LN_2 - 0.5 * self.m as f64 * ln_t
    }

    /// ln of LHS/RHS for T^{1/2}(1 + a_m^{−2}) ≤ κ.
    fn second(&self, ln_t: f64) -> f64 {
        0.5 * ln_t + softplus(-2.0 * self.ln_level(self.m)) - self.ln_kappa
    }

    /// ln of LHS/RHS for m 2^{N/2}(1 + a_m^{−2})(1 + t^{(m+1)/2}) e^{−a_{m+1}²/8t} ≤ κ t^{m/2}.
    fn third(&self, ln_t: f64) -> f64 {
        let m = self.m as f64;
        m.ln() + 0.5 * self.dim as f64 * LN_2 + softplus(-2.0 * self.ln_level(self.m)) + softplus(0.5 * (m + 1.0) * ln_t)
            - self.gauss_exponent(self.m + 1, ln_t)
            - self.ln_kappa
            - 0.5 * m * ln_t
    }

    /// Worst value of `g` over (0, T]. Below t* = a²/(4m) the log-ratio is
    /// increasing in t, so the grid starts at min(t*, T) and covers
    /// everything beneath it.
    fn worst_on_interval(&self, g: impl Fn(f64) -> f64, level: usize, ln_t_max: f64) -> f64 {
        let ln_star = 2.0 * self.ln_level(level) - (4.0 * self.m as f64).ln();
        let lo = ln_star.min(ln_t_max);
        let mut worst = g(ln_t_max).max(g(lo));
        let n = 200;
        for i in 0..n {
            let lt = lo + (ln_t_max - lo) * i as f64 / (n - 1) as f64;
            worst = worst.max(g(lt));
        }
        worst
    }

    fn margins(&self, ln_t: f64, with_second: bool) -> [f64; 3] {
        let a = self.worst_on_interval(|l| self.first(l), 1, ln_t);
        let b = if with_second { self.second(ln_t) } else { f64::NEG_INFINITY };
        let c = self.worst_on_interval(|l| self.third(l), self.m + 1, ln_t);
        [a, b, c]
    }
}

const NAMES: [&str; 3] = ["fDFM:1", "fDFM:2", "fDFM:3"];

/// Largest T in {1/4, 1/8, …} above `floor` with all enforced log-ratios
/// ≤ 0, or the binding condition at the floor.
fn choose_t(s: &Smallness, with_second: bool, floor: f64) -> Result<(f64, [f64; 3]), CutoffError> {
    let mut t = 0.25f64;
    let mut last = [0.0; 3];
    while t >= floor {
        last = s.margins(t.ln(), with_second);
        if last.iter().all(|&v| v <= 0.0) {
            return Ok((t, last));
        }
        t *= 0.5;
    }
    let (idx, _) = last.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    // largest ln t at which the binding condition alone holds
    let g = |l: f64| match idx {
        0 => s.first(l),
        1 => s.second(l),
        _ => s.third(l),
    };
    let (mut lo, mut hi) = (-1e6f64, floor.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(CutoffError::NoAdmissibleT { binding: NAMES[idx].into(), log10_t: lo / std::f64::consts::LN_10 })
}

fn check_inputs(alpha: f64, dim: usize, c1: f64, w0_sup: f64, delta: f64) -> Result<(), CutoffError> {
    if !(alpha > 0.0 && c1 > 0.0 && delta > 0.0 && w0_sup >= 0.0 && dim > 0) || !w0_sup.is_finite() {
        return Err(CutoffError::InvalidArgument(format!(
            "need alpha, C1, delta > 0 and w0_sup >= 0 (alpha={alpha}, C1={c1}, w0_sup={w0_sup}, delta={delta})"
        )));
    }
    Ok(())
}

/// (K, A, B) with their provenance.
fn assemble_kab(alpha: f64, c1: f64, psi: &PsiNorms, w0_sup: f64, delta: f64) -> (f64, f64, f64, Vec<Provenance>) {
    let k = (2.0 * w0_sup).max(K_MIN);
    let k_rule = if 2.0 * w0_sup >= K_MIN { "fDK1: K = 2 sup|w0|" } else { "K floored at K_MIN" };
    let c3 = 2f64.powf(alpha + 1.0) * (alpha + 1.0);
    let c2 = [
        c1.powf(1.0 / alpha) * (2.0 + delta.powf(-2.0 / alpha)),
        c3,
        c1.powf((alpha + 1.0) / alpha) * delta.powf(-2.0 * (alpha + 1.0) / alpha),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let a = [
        3.0 * c2 * psi.w2inf,
        2f64.powf(alpha) * c2 * 2.0,
        2.0 * c1 * c2,
        2.0 * c3 * c1,
        2f64.powf(alpha + 2.0) * c3,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let b = (1.0 + k.powf(alpha + 1.0)) * a;
    let p = vec![
        prov("K", k_rule, k, None),
        prov("C2", "M~ estimate: max of the three power bounds", c2, None),
        prov("C3", "M~ estimate: 2^{a+1}(a+1)", c3, None),
        prov("A", "M~ estimate: max of the five assembled terms", a, None),
        prov("B", "fCTS: B = (1 + K^{a+1}) A", b, None),
    ];
    (k, a, b, p)
}

/// Constants exactly as the existence proof fixes them.
pub fn constants_assemble(
    alpha: f64,
    dim: usize,
    c1: f64,
    psi: &PsiNorms,
    w0_sup: f64,
    delta: f64,
) -> Result<ConstantsBundle, CutoffError> {
    check_inputs(alpha, dim, c1, w0_sup, delta)?;
    let (k, a, b, mut provenance) = assemble_kab(alpha, c1, psi, w0_sup, delta);
    let kappa = k / (4.0 * b);
    // smallest even m with 4/m ≤ κ
    let m_real = (4.0 / kappa).ceil();
    if !(m_real < 1e7) {
        return Err(CutoffError::InvalidArgument(format!("budget K/4B = {kappa:e} forces m = {m_real:e}")));
    }
    let mut m = (m_real as usize).max(2);
    m += m % 2;
    provenance.push(prov("m", "fDFM: smallest even m with 4/m <= K/(4B)", m as f64, None));
    let s = Smallness { dim, ln_delta: delta.ln(), m, ln_kappa: kappa.ln() };
    let (t_max, margins) = choose_t(&s, true, T_FLOOR_PROOF)?;
    push_t_provenance(&mut provenance, t_max, &margins, true);
    Ok(ConstantsBundle {
        route: Route::Proof,
        alpha,
        dim,
        delta,
        w0_sup,
        c1,
        k,
        a,
        b,
        m,
        t_max,
        kappa,
        provenance,
    })
}

fn push_t_provenance(p: &mut Vec<Provenance>, t_max: f64, margins: &[f64; 3], with_second: bool) {
    p.push(prov("T", "largest of 1/4, 1/8, ... meeting the enforced smallness conditions", t_max, None));
    for (i, name) in NAMES.iter().enumerate() {
        if i == 1 && !with_second {
            continue;
        }
        let rule = if i == 1 {
            format!("{name}: closed form at T")
        } else {
            format!("{name}: 200-point log grid on [min(t*, T), T], log-ratio increasing below t* = a^2/(4m)")
        };
        p.push(Provenance { quantity: "T".into(), rule, value: t_max, log_margin: Some(margins[i]) });
    }
}

/// Constants for actual runs. K, A and B are assembled as on the proof
/// route; m is the smallest even m ≥ 4 with 2(α+1)C_U/m ≤ 0.6, where
/// C_U = sup|f|^α bounds t|U|^α, and T meets the first and third smallness
/// conditions with the budget κ = 1/(4(α+1)(1 + C_U)). The second condition
/// is replaced by the measured contraction factor.
pub fn constants_practical(
    alpha: f64,
    dim: usize,
    c1: f64,
    c_u: f64,
    psi: &PsiNorms,
    w0_sup: f64,
    delta: f64,
) -> Result<ConstantsBundle, CutoffError> {
    check_inputs(alpha, dim, c1, w0_sup, delta)?;
    if !(c_u >= 0.0 && c_u.is_finite()) {
        return Err(CutoffError::InvalidArgument(format!("C_U must be finite and >= 0, got {c_u}")));
    }
    let (k, a, b, mut provenance) = assemble_kab(alpha, c1, psi, w0_sup, delta);
    let raw = (2.0 * (alpha + 1.0) * c_u / PRACTICAL_FACTOR).ceil() as usize;
    let mut m = raw.max(4);
    m += m % 2;
    provenance.push(prov("C_U", "sup |f|^alpha over the profile", c_u, None));
    provenance.push(prov("m", "practical: smallest even m >= 4 with 2(a+1)C_U/m <= 0.6", m as f64, None));
    let kappa = 1.0 / (4.0 * (alpha + 1.0) * (1.0 + c_u));
    provenance.push(prov("kappa", "practical: 1/(4(a+1)(1+C_U)) in place of K/(4B)", kappa, None));
    let s = Smallness { dim, ln_delta: delta.ln(), m, ln_kappa: kappa.ln() };
    let (t_max, margins) = choose_t(&s, false, T_FLOOR_PRACTICAL)?;
    push_t_provenance(&mut provenance, t_max, &margins, false);
    Ok(ConstantsBundle {
        route: Route::Practical,
        alpha,
        dim,
        delta,
        w0_sup,
        c1,
        k,
        a,
        b,
        m,
        t_max,
        kappa,
        provenance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BundleCheck {
    pub k_rule: bool,
    pub b_rule: bool,
    /// 4/m ≤ K/(4B)
    pub m_rule: bool,
    pub t_le_quarter: bool,
    /// Worst log-ratios of the three smallness conditions at the bundle's
    /// (m, T, κ).
    pub smallness: [f64; 3],
}

impl BundleCheck {
    /// Everything the existence proof asks for.
    pub fn proof_valid(&self) -> bool {
        self.k_rule && self.b_rule && self.m_rule && self.t_le_quarter && self.smallness.iter().all(|&v| v <= 0.0)
    }

    /// What the practical route promises: the second smallness condition and
    /// the m budget are not part of it.
    pub fn practical_valid(&self) -> bool {
        self.k_rule && self.b_rule && self.t_le_quarter && self.smallness[0] <= 0.0 && self.smallness[2] <= 0.0
    }
}

impl ConstantsBundle {
    pub fn envelope(&self) -> EnvelopeTheta {
        EnvelopeTheta::new(self.k, self.m, self.delta)
    }

    /// Re-evaluates the defining relations from the stored numbers.
    pub fn check(&self) -> BundleCheck {
        let k_expect = (2.0 * self.w0_sup).max(K_MIN);
        let b_expect = (1.0 + self.k.powf(self.alpha + 1.0)) * self.a;
        let s = Smallness { dim: self.dim, ln_delta: self.delta.ln(), m: self.m, ln_kappa: self.kappa.ln() };
        let margins = s.margins(self.t_max.ln(), true);
        BundleCheck {
            k_rule: (self.k - k_expect).abs() <= 1e-15 * k_expect,
            b_rule: (self.b - b_expect).abs() <= 1e-12 * b_expect,
            m_rule: 4.0 / self.m as f64 <= self.k / (4.0 * self.b),
            t_le_quarter: self.t_max <= 0.25,
            smallness: margins,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_values_and_derivatives() {
        let th = SmoothStep::default();
        assert_eq!(th.eval(0.5), 0.0);
        assert_eq!(th.eval(1.0), 0.0);
        assert_eq!(th.eval(2.0), 1.0);
        assert_eq!(th.eval(7.0), 1.0);
        assert!((th.eval(1.5) - 0.5).abs() < 1e-15);
        let h = 1e-6;
        for s in [1.1, 1.3, 1.5, 1.9] {
            let d = (th.eval(s + h) - th.eval(s - h)) / (2.0 * h);
            assert!((d - th.d1(s)).abs() < 1e-8);
            let d2 = (th.d1(s + h) - th.d1(s - h)) / (2.0 * h);
            assert!((d2 - th.d2(s)).abs() < 1e-6);
        }
        assert!((th.d1(1.5) - SmoothStep::D1_SUP).abs() < 1e-14);
        let u = 0.5 - 0.5 / 3f64.sqrt();
        assert!((th.d2(1.0 + u) - SmoothStep::D2_SUP).abs() < 1e-12);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0) - LN_2).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-800.0) >= 0.0);
    }
}
