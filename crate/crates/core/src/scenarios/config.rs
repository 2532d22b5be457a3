use super::ScenarioError;
use crate::perturb::GridSettings;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Threshold,
    Nonexist,
    Perturb,
    Nonunique,
    Ball,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Profile,
        Command::Threshold,
        Command::Nonexist,
        Command::Perturb,
        Command::Nonunique,
        Command::Ball,
        Command::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Threshold => "threshold",
            Command::Nonexist => "nonexist",
            Command::Perturb => "perturb",
            Command::Nonunique => "nonunique",
            Command::Ball => "ball",
            Command::Verify => "verify",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| ScenarioError::Config(format!("unknown command {s:?}")))
    }
}

/// Bounded part of the initial data away from the origin: a smooth bump of
/// the given amplitude on (inner, outer).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub amplitude: f64,
    pub inner: f64,
    pub outer: f64,
}

/// Numerical tolerances and check thresholds. Every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub profile_tol: f64,
    pub r_max: f64,
    pub residual_max: f64,
    pub mu_tol: f64,
    pub samples_per_unit: f64,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    pub contraction_max: f64,
    pub contraction_pairs: usize,
    pub residual_order_min: f64,
    pub trace_variation_max: f64,
    pub separation_band: f64,
    pub functional_tol: f64,
    /// Solve again one refinement level up and check the residual order.
    /// Defaults to on for perturb and off for ball.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refinement: Option<bool>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            profile_tol: 1e-10,
            r_max: 40.0,
            residual_max: 1e-8,
            mu_tol: 1e-10,
            samples_per_unit: 40.0,
            fixed_point_tol: 1e-8,
            max_iter: 60,
            contraction_max: 0.8,
            contraction_pairs: 21,
            residual_order_min: 1.8,
            trace_variation_max: 2.0,
            separation_band: 0.05,
            functional_tol: 1e-4,
            refinement: None,
        }
    }
}

/// One JSON document per run. Unknown keys are rejected; absent keys take
/// command-specific defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Shooting value, used instead of a μ search when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Zero counts for the branch search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grids: Option<GridSettings>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))
    }

    pub fn for_command(command: Command) -> Self {
        Self { command: Some(command), ..Default::default() }
    }

    pub fn command(&self) -> Result<Command, ScenarioError> {
        self.command.ok_or_else(|| ScenarioError::Config("no command given".into()))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Range checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::Config(m));
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(ScenarioError::Config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("alpha", self.alpha)?;
        positive("delta", self.delta)?;
        positive("R", self.radius)?;
        positive("gamma", self.gamma)?;
        if let Some(n) = self.dim {
            if n == 0 {
                return bad("N must be at least 1".into());
            }
        }
        for (name, v) in [("mu", self.mu), ("a", self.a)] {
            if let Some(x) = v {
                if !x.is_finite() {
                    return bad(format!("{name} must be finite"));
                }
            }
        }
        if let Some((lo, hi)) = self.a_window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("a_window must satisfy lo < hi, got ({lo}, {hi})"));
            }
        }
        if let (Some(d), Some(r)) = (self.delta, self.radius) {
            if d >= r {
                return bad(format!("delta = {d} must be below R = {r}"));
            }
        }
        if let Some(g) = &self.grids {
            if g.n_t < 8 || g.refine > 4 {
                return bad(format!("grids need n_t >= 8 and refine <= 4, got n_t={} refine={}", g.n_t, g.refine));
            }
        }
        if let Some(t) = &self.tail {
            if !(t.inner > 0.0 && t.inner < t.outer && t.amplitude.is_finite()) {
                return bad("tail needs 0 < inner < outer and a finite amplitude".into());
            }
        }
        let t = &self.tolerances;
        if !(t.profile_tol > 0.0 && t.r_max > 0.0 && t.fixed_point_tol > 0.0 && t.samples_per_unit > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if t.max_iter == 0 || t.contraction_pairs == 0 {
            return bad("max_iter and contraction_pairs must be positive".into());
        }
        Ok(())
    }
}
