//! The weighted fixed-point construction u = ΨU + w around a singular
//! background U. w solves w_t − Δw = M̃w with w(0) = w̄₀, and the Picard map
//! is iterated in the space |w| ≤ Θ on a space-time grid.

pub mod grid;
mod lag;
mod solver;

pub use grid::{hermite_eval, RGridSpec, SlopeOperator};
pub use solver::{
    initial_trace_check, residual_check, residual_nodes, weighted_distance, ContractionReport, FixedPointReport, ResidualOptions,
    ResidualReport, Seed, Solver, TraceReport,
};

use crate::cutoffs::{ConstantsBundle, CutoffError, PsiNorms, SmoothStep};
use crate::heatops::{bump, DomainSpec, HeatError};
use crate::profile::{self_similar_eval_with_grad, ProfileCurve, ProfileSummary};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    In,
    Out,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::In => "in",
            Side::Out => "out",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("envelope violated ({side}): |w| − Θ = {excess:.3e} at t={t:e}, r={r:e}")]
    EnvelopeViolated { side: Side, excess: f64, t: f64, r: f64 },
    #[error("not contracting: factors {factors:?}, worst node t={t:e}, r={r:e}")]
    NotContracting { factors: Vec<f64>, t: f64, r: f64 },
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Heat(#[from] HeatError),
    #[error(transparent)]
    Cutoff(#[from] CutoffError),
}

#[inline]
pub(crate) fn signed_pow(x: f64, alpha: f64) -> f64 {
    x.abs().powf(alpha) * x
}

/// |v + w|^α(v + w) − |v|^α v without cancellation when |w| ≪ |v|.
pub fn power_difference(v: f64, w: f64, alpha: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    if v == 0.0 {
        return signed_pow(w, alpha);
    }
    let x = w / v;
    if x > -0.5 {
        signed_pow(v, alpha) * ((alpha + 1.0) * x.ln_1p()).exp_m1()
    } else {
        signed_pow(v + w, alpha) - signed_pow(v, alpha)
    }
}

/// Background solution U and its radial derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    Zero,
    SelfSimilar { curve: ProfileCurve, summary: ProfileSummary },
}

impl Background {
    /// (U, ∂_r U). At t = 0 this is the initial value μ r^{−2/α}.
    pub fn eval(&self, t: f64, r: f64) -> (f64, f64) {
        match self {
            Background::Zero => (0.0, 0.0),
            Background::SelfSimilar { curve, summary } => {
                if t > 0.0 {
                    self_similar_eval_with_grad(curve, summary, t, r)
                } else {
                    let beta = 2.0 / curve.spec.alpha;
                    let u = summary.mu * r.powf(-beta);
                    (u, -beta * u / r)
                }
            }
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::SelfSimilar { summary, .. } => summary.mu,
        }
    }

    /// f(0), so that t^{1/α} U(t, 0) = f(0).
    pub fn origin_value(&self) -> f64 {
        match self {
            Background::Zero => 0.0,
            Background::SelfSimilar { curve, .. } => curve.spec.a,
        }
    }
}

/// Ψ ≡ 1, or Ψ = 1 − θ(1 + (r − inner)/width) falling from 1 to 0 on
/// [inner, inner + width].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialCutoff {
    One,
    Step { inner: f64, width: f64 },
}

impl SpatialCutoff {
    /// Ψ = 1 on [0, δ] and 0 on [(δ + R)/2, R].
    pub fn for_ball(delta: f64, radius: f64) -> Self {
        SpatialCutoff::Step { inner: delta, width: 0.5 * (radius - delta) }
    }

    /// (Ψ, Ψ', ΔΨ)
    pub fn eval(&self, dim: usize, r: f64) -> (f64, f64, f64) {
        match *self {
            SpatialCutoff::One => (1.0, 0.0, 0.0),
            SpatialCutoff::Step { inner, width } => {
                if r <= inner {
                    return (1.0, 0.0, 0.0);
                }
                let th = SmoothStep::default();
                let s = 1.0 + (r - inner) / width;
                let d1 = -th.d1(s) / width;
                let d2 = -th.d2(s) / (width * width);
                (1.0 - th.eval(s), d1, d2 + (dim as f64 - 1.0) * d1 / r)
            }
        }
    }

    pub fn norms(&self, dim: usize) -> PsiNorms {
        match *self {
            SpatialCutoff::One => PsiNorms::ONE,
            SpatialCutoff::Step { inner, width } => {
                let g = SmoothStep::D1_SUP / width;
                let d2 = SmoothStep::D2_SUP / (width * width);
                let lap = d2 + (dim as f64 - 1.0) * g / inner;
                PsiNorms { grad_sup: g, lap_sup: lap, w2inf: 1.0 + g + d2.max(g / inner) }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            SpatialCutoff::One => Vec::new(),
            SpatialCutoff::Step { inner, width } => vec![inner, inner + width],
        }
    }
}

/// w̄₀ = amplitude·bump on (inner, outer) + power_mu r^{−2/α}(1 − Ψ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub bump_amplitude: f64,
    pub bump_inner: f64,
    pub bump_outer: f64,
    pub power_mu: f64,
}

impl InitialData {
    pub fn zero() -> Self {
        Self { bump_amplitude: 0.0, bump_inner: 1.0, bump_outer: 2.0, power_mu: 0.0 }
    }

    pub fn bump(amplitude: f64, inner: f64, outer: f64) -> Self {
        Self { bump_amplitude: amplitude, bump_inner: inner, bump_outer: outer, power_mu: 0.0 }
    }

    pub fn eval(&self, alpha: f64, psi: &SpatialCutoff, dim: usize, r: f64) -> f64 {
        let mut v = 0.0;
        if self.bump_amplitude != 0.0 && r > self.bump_inner && r < self.bump_outer {
            let c = 0.5 * (self.bump_inner + self.bump_outer);
            let half = 0.5 * (self.bump_outer - self.bump_inner);
            v += self.bump_amplitude * bump(half, r - c);
        }
        if self.power_mu != 0.0 && r > 0.0 {
            let p = psi.eval(dim, r).0;
            if p < 1.0 {
                v += self.power_mu * r.powf(-2.0 / alpha) * (1.0 - p);
            }
        }
        v
    }

    /// Points where w̄₀ fails to be smooth or starts/stops.
    fn breakpoints(&self, psi: &SpatialCutoff) -> Vec<f64> {
        let mut b = Vec::new();
        if self.bump_amplitude != 0.0 {
            b.extend([self.bump_inner, self.bump_outer]);
        }
        if self.power_mu != 0.0 {
            b.extend(psi.breakpoints());
        }
        b
    }

    /// Start of the support.
    fn support_start(&self, psi: &SpatialCutoff) -> f64 {
        let mut s = f64::INFINITY;
        if self.bump_amplitude != 0.0 {
            s = s.min(self.bump_inner);
        }
        if self.power_mu != 0.0 {
            if let SpatialCutoff::Step { inner, .. } = psi {
                s = s.min(*inner);
            }
        }
        s
    }
}

/// Grid controls. The t-grid is uniform with `n_t << refine` steps; the r-grid
/// follows RGridSpec with its ξ-step halved `refine` times, so every coarse
/// node is a node of the refined problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSettings {
    pub n_t: usize,
    pub refine: u32,
    pub growth: f64,
    pub cluster_growth: f64,
    /// Levels a_j get a graded cluster when (α+1)C1 T^{3/2}/a_j⁴ exceeds this.
    pub cluster_tol: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { n_t: 64, refine: 0, growth: 0.06, cluster_growth: 0.2, cluster_tol: 1e-6 }
    }
}

impl GridSettings {
    pub fn refined(self) -> Self {
        Self { refine: self.refine + 1, ..self }
    }

    pub fn steps(&self) -> usize {
        self.n_t << self.refine
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationProblem {
    pub domain: DomainSpec,
    pub dim: usize,
    pub alpha: f64,
    pub background: Background,
    pub psi: SpatialCutoff,
    pub data: InitialData,
    pub constants: ConstantsBundle,
    pub grids: GridSettings,
}

impl PerturbationProblem {
    pub fn delta(&self) -> f64 {
        self.constants.delta
    }

    pub fn w0(&self, r: f64) -> f64 {
        self.data.eval(self.alpha, &self.psi, self.dim, r)
    }

    pub fn validate(&self) -> Result<(), PerturbError> {
        let bad = |m: String| Err(PerturbError::InvalidProblem(m));
        if self.dim != 1 && self.dim != 3 {
            return Err(PerturbError::Unsupported(format!("N = {} (pointwise kernels exist for N = 1, 3)", self.dim)));
        }
        if !(self.alpha > 0.0) || self.constants.alpha != self.alpha || self.constants.dim != self.dim {
            return bad("alpha/dim disagree with the constants bundle".into());
        }
        if self.grids.n_t < 8 {
            return bad(format!("n_t = {} is below 8", self.grids.n_t));
        }
        let delta = self.delta();
        if let SpatialCutoff::Step { inner, width } = self.psi {
            if inner < delta || !(width > 0.0) {
                return bad(format!("Ψ must equal 1 on |x| < δ = {delta}"));
            }
        }
        if let DomainSpec::Ball { radius } = self.domain {
            if !(delta < radius) {
                return bad(format!("δ = {delta} must be below R = {radius}"));
            }
            match self.psi {
                SpatialCutoff::Step { inner, width } if inner + width < radius => {}
                _ => return bad("Ψ must be compactly supported in the ball".into()),
            }
            if self.data.bump_amplitude != 0.0 && self.data.bump_outer > radius {
                return bad("bump leaves the ball".into());
            }
        }
        if self.domain == DomainSpec::WholeSpace && self.data.power_mu != 0.0 && self.psi != SpatialCutoff::One {
            return Err(PerturbError::Unsupported("a power-law remainder in w̄₀ on the whole space".into()));
        }
        if self.data.bump_amplitude != 0.0 && !(self.data.bump_inner < self.data.bump_outer) {
            return bad("bump needs inner < outer".into());
        }
        if self.data.support_start(&self.psi) < delta {
            return bad(format!("w̄₀ must vanish on |x| < δ = {delta}"));
        }
        Ok(())
    }

    /// Outer end of the r-grid: R on the ball; on the whole space far enough
    /// past the data that the forcing is negligible.
    pub fn r_end(&self) -> f64 {
        match self.domain {
            DomainSpec::Ball { radius } => radius,
            DomainSpec::WholeSpace => {
                let mut end = 2.0 * self.delta();
                if self.data.bump_amplitude != 0.0 {
                    end = end.max(self.data.bump_outer);
                }
                for b in self.data.breakpoints(&self.psi) {
                    end = end.max(b);
                }
                end + 2.0 * crate::heatops::kernel::WINDOW * self.constants.t_max.sqrt()
            }
        }
    }

    pub fn r_grid_spec(&self) -> RGridSpec {
        let g = &self.grids;
        let t = self.constants.t_max;
        let h0 = 0.5 * (t / g.n_t as f64).sqrt();
        let hc = 0.25 * t.sqrt();
        let fam = self.constants.envelope().family;
        let mut clusters = Vec::new();
        for j in 1..=self.constants.m {
            let a = fam.level(j);
            let leak = (self.alpha + 1.0) * self.constants.c1 * t.powf(1.5) / a.powi(4);
            if leak > g.cluster_tol && a > 4.0 * h0 {
                clusters.push((a, hc));
            }
        }
        if let DomainSpec::Ball { radius } = self.domain {
            // Dirichlet boundary layer of width √t
            clusters.push((radius, h0));
        }
        RGridSpec {
            h0,
            growth: g.growth,
            clusters,
            cluster_growth: g.cluster_growth,
            h_max: self.delta() / 16.0,
            r_end: self.r_end(),
            refine: g.refine,
        }
    }

    pub(crate) fn w0_breakpoints(&self) -> Vec<f64> {
        let mut b = self.data.breakpoints(&self.psi);
        b.sort_by(f64::total_cmp);
        b
    }
}

/// Values on the grid t_grid × r_grid, with row 0 at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeField {
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// max over t > 0 of |w|/Θ; zero where not applicable.
    pub envelope_ratio: f64,
}

impl SpaceTimeField {
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|row| row.iter().all(|v| v.is_finite()))
    }

    /// Every `stride`-th node in t and r.
    pub fn subsample(&self, stride: usize) -> SpaceTimeField {
        let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
        SpaceTimeField {
            t_grid: pick(&self.t_grid),
            r_grid: pick(&self.r_grid),
            values: self.values.iter().step_by(stride).map(|row| pick(row)).collect(),
            envelope_ratio: self.envelope_ratio,
        }
    }
}
