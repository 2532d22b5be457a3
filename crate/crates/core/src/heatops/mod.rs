//! Radial heat semigroups on R^N and on a ball with Dirichlet conditions,
//! Duhamel integrals, power moments and the nonexistence criterion.

mod apply;
mod ball;
mod comparison;
mod duhamel;
pub mod kernel;
mod threshold;

pub use apply::{heat_apply, heat_apply_on, heat_eval, HeatEval, HeatOutput, QuadratureSettings};
pub use ball::{ball_eigen_apply, EigenOutput};
pub use comparison::{ball1_series_tail, ball_comparison_check, bump, kernel_floor_margin, ComparisonReport};
pub use duhamel::{duhamel, duhamel_on, graded_s_rule, DuhamelOutput};
pub use threshold::{
    default_t_grid, doubling_detail, doubling_functional, fr3_classifier, mu0_threshold,
    nonexistence_verdict, power_moment, power_moment_closed_form, power_moment_quadrature,
    Condition, DoublingValue, Fr3Result, Outcome, Verdict,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("field exponent gamma = {gamma} is not locally integrable in dimension {dim}")]
    NotIntegrable { dim: usize, gamma: f64 },
    #[error("quadrature failed: error {error:.3e} at rho = {rho}")]
    QuadratureFailure { rho: f64, error: f64 },
    #[error("gamma = {gamma} outside [0, N) for N = {dim}")]
    GammaDomain { dim: usize, gamma: f64 },
    #[error("alpha = {alpha} <= 2/N for N = {dim}")]
    SupercriticalExponentRequired { dim: usize, alpha: f64 },
    #[error("field takes negative values (min {min:.3e})")]
    NegativeField { min: f64 },
    #[error("maximum of the functional {value} lies within the margin {margin:.3e} of 1")]
    Inconclusive { value: f64, margin: f64, witness_t: f64 },
    #[error("forcing sup {sup:.3e} exceeds cap {cap:.3e}")]
    ForcingUnbounded { sup: f64, cap: f64 },
    #[error("duhamel bound violated: {norm:.6e} > t sup|F| = {bound:.6e}")]
    DuhamelBound { norm: f64, bound: f64 },
    #[error("image series not converged: tail {tail:.3e}")]
    SeriesNotConverged { tail: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DomainSpec {
    WholeSpace,
    Ball { radius: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<(), HeatError> {
        match self {
            DomainSpec::Ball { radius } if !(*radius > 0.0 && radius.is_finite()) => Err(
                HeatError::InvalidArgument(format!("ball radius must be positive, got {radius}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            DomainSpec::WholeSpace => None,
            DomainSpec::Ball { radius } => Some(*radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPart {
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FarField {
    Zero,
    Constant { value: f64 },
    PowerLaw { c: f64, gamma: f64 },
}

impl FarField {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            FarField::Zero => 0.0,
            FarField::Constant { value } => value,
            FarField::PowerLaw { c, gamma } => c * r.powf(-gamma),
        }
    }
}

/// c r^{−γ} plus a piecewise-linear bounded part on `grid`, continued by
/// `farfield` beyond the last node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialField {
    pub dim: usize,
    pub singular: SingularPart,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub farfield: FarField,
}

impl RadialField {
    pub fn bounded(dim: usize, grid: Vec<f64>, values: Vec<f64>, farfield: FarField) -> Self {
        Self { dim, singular: SingularPart { c: 0.0, gamma: 0.0 }, grid, values, farfield }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(dim: usize, grid: Vec<f64>, farfield: FarField, f: F) -> Self {
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::bounded(dim, grid, values, farfield)
    }

    pub fn constant(dim: usize, value: f64, grid: Vec<f64>) -> Self {
        let values = vec![value; grid.len()];
        Self::bounded(dim, grid, values, FarField::Constant { value })
    }

    /// c |x|^{−γ} with zero bounded part.
    pub fn pure_power(dim: usize, c: f64, gamma: f64, grid: Vec<f64>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { dim, singular: SingularPart { c, gamma }, grid, values, farfield: FarField::Zero }
    }

    /// The field multiplied by `k`.
    pub fn scaled(mut self, k: f64) -> Self {
        self.singular.c *= k;
        self.values.iter_mut().for_each(|v| *v *= k);
        self.farfield = match self.farfield {
            FarField::Zero => FarField::Zero,
            FarField::Constant { value } => FarField::Constant { value: k * value },
            FarField::PowerLaw { c, gamma } => FarField::PowerLaw { c: k * c, gamma },
        };
        self
    }

    pub fn validate(&self) -> Result<(), HeatError> {
        if self.singular.c != 0.0 && !(self.singular.gamma < self.dim as f64) {
            return Err(HeatError::NotIntegrable { dim: self.dim, gamma: self.singular.gamma });
        }
        if self.singular.c != 0.0 && self.singular.gamma < 0.0 {
            return Err(HeatError::InvalidArgument("singular exponent must be >= 0".into()));
        }
        if self.grid.len() != self.values.len() || self.grid.is_empty() {
            return Err(HeatError::InvalidArgument("grid and values must match and be nonempty".into()));
        }
        if self.grid[0] != 0.0 || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(HeatError::InvalidArgument("grid must start at 0 and increase".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(HeatError::InvalidArgument("bounded values must be finite".into()));
        }
        Ok(())
    }

    pub fn grid_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Bounded part at r: linear interpolation on the grid, far field beyond.
    pub fn bounded_eval(&self, r: f64) -> f64 {
        let end = self.grid_end();
        if r > end {
            return self.farfield.eval(r);
        }
        if self.grid.len() == 1 {
            return self.values[0];
        }
        let i = self.grid.partition_point(|&x| x <= r).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let s = (r - x0) / (x1 - x0);
        self.values[i - 1] + s * (self.values[i] - self.values[i - 1])
    }

    pub fn singular_eval(&self, r: f64) -> f64 {
        if self.singular.c == 0.0 {
            0.0
        } else {
            self.singular.c * r.powf(-self.singular.gamma)
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.singular_eval(r) + self.bounded_eval(r)
    }

    pub fn has_singular(&self) -> bool {
        self.singular.c != 0.0 && self.singular.gamma > 0.0
    }

    /// sup of |field| for a field without singular part.
    pub fn sup_abs(&self) -> f64 {
        let mut s = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        match self.farfield {
            FarField::Zero => {}
            FarField::Constant { value } => s = s.max(value.abs()),
            FarField::PowerLaw { c, gamma } => s = s.max((c * self.grid_end().powf(-gamma)).abs()),
        }
        if self.singular.c != 0.0 {
            if self.singular.gamma > 0.0 {
                return f64::INFINITY;
            }
            s += self.singular.c.abs();
        }
        s
    }

    pub fn min_value(&self) -> f64 {
        let mut s = self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        match self.farfield {
            FarField::Zero => s = s.min(0.0),
            FarField::Constant { value } => s = s.min(value),
            FarField::PowerLaw { c, .. } => s = s.min(c.min(0.0)),
        }
        if self.singular.c < 0.0 {
            return f64::NEG_INFINITY;
        }
        s
    }
}

/// |S^{N−1}| = 2π^{N/2}/Γ(N/2).
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(0.5 * n) / statrs::function::gamma::gamma(0.5 * n)
}
