//! wasm-bindgen front for three core operations. The `demo` functions are
//! plain Rust so they can be tested natively; the exported wrappers only
//! turn their errors into JS exceptions.

use wasm_bindgen::prelude::*;

pub mod demo {
    use shl_core::heatops::{
        default_t_grid, heat_apply_on, mu0_threshold, nonexistence_verdict, DomainSpec, HeatError, Outcome,
        QuadratureSettings, RadialField,
    };
    use shl_core::profile::{integrate_profile, subcritical, summarize_profile, ProfileSpec};

    /// A profile f(r) thinned to at most `points` samples.
    #[derive(Debug, Clone, PartialEq)]
    pub struct ProfilePlot {
        pub r: Vec<f64>,
        pub f: Vec<f64>,
        pub mu: f64,
        pub zero_count: usize,
        pub max_residual: f64,
    }

    pub fn profile_curve(dim: usize, alpha: f64, a: f64, r_max: f64, points: usize) -> Result<ProfilePlot, String> {
        if !subcritical(dim, alpha) {
            return Err(format!("profiles need alpha < 4/(N - 2), got N = {dim}, alpha = {alpha}"));
        }
        let c = integrate_profile(ProfileSpec::new(dim, alpha, a), r_max, 1e-10).map_err(|e| e.to_string())?;
        let s = summarize_profile(&c).map_err(|e| e.to_string())?;
        let stride = (c.r_grid.len() / points.max(2)).max(1);
        let pick = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
        Ok(ProfilePlot {
            r: pick(&c.r_grid),
            f: pick(&c.f_values),
            mu: s.mu,
            zero_count: s.zero_count,
            max_residual: c.max_residual(),
        })
    }

    /// μ₀ and the doubling functional along the default t-grid for data
    /// `factor`·μ₀|x|^{−2/α}.
    #[derive(Debug, Clone, PartialEq)]
    pub struct ThresholdPlot {
        pub mu0: f64,
        pub t: Vec<f64>,
        pub functional: Vec<f64>,
        pub verdict: String,
    }

    pub fn threshold(dim: usize, alpha: f64, factor: f64) -> Result<ThresholdPlot, String> {
        let mu0 = mu0_threshold(dim, alpha).map_err(|e| e.to_string())?;
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let field = RadialField::pure_power(dim, factor * mu0, 2.0 / alpha, grid);
        let (samples, verdict) = match nonexistence_verdict(&DomainSpec::WholeSpace, &field, alpha, &default_t_grid(), None) {
            Ok(v) => {
                let word = match v.outcome {
                    Outcome::NoNonnegativeSolution => "no nonnegative solution",
                    Outcome::CriterionNotViolated => "criterion not violated",
                };
                (v.samples, word.to_string())
            }
            Err(HeatError::Inconclusive { value, .. }) => {
                (Vec::new(), format!("inconclusive: functional {value} is within the quadrature margin of 1"))
            }
            Err(e) => return Err(e.to_string()),
        };
        Ok(ThresholdPlot {
            mu0,
            t: samples.iter().map(|s| s.0).collect(),
            functional: samples.iter().map(|s| s.1).collect(),
            verdict,
        })
    }

    /// |x|^{−γ} and e^{tΔ}|x|^{−γ} on r ∈ [0, r_max]; the data are left
    /// out at r = 0.
    #[derive(Debug, Clone, PartialEq)]
    pub struct SmoothingPlot {
        pub r: Vec<f64>,
        pub data: Vec<f64>,
        pub smoothed: Vec<f64>,
        pub max_error: f64,
    }

    pub fn heat_smoothing(dim: usize, gamma: f64, t: f64, r_max: f64, points: usize) -> Result<SmoothingPlot, String> {
        if !(t > 0.0 && r_max > 0.0) || points < 2 {
            return Err("need t > 0, r_max > 0 and at least two points".into());
        }
        let r: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
        let field = RadialField::pure_power(dim, 1.0, gamma, r.clone());
        let out = heat_apply_on(&DomainSpec::WholeSpace, &field, t, &r, &QuadratureSettings::default()).map_err(|e| e.to_string())?;
        Ok(SmoothingPlot {
            data: r.iter().map(|&x| if x > 0.0 { x.powf(-gamma) } else { f64::NAN }).collect(),
            smoothed: out.field.values,
            r,
            max_error: out.max_error,
        })
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct Plot {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    scalar: f64,
    label: String,
}

#[wasm_bindgen]
impl Plot {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// Second series (the initial data for heat smoothing); empty otherwise.
    #[wasm_bindgen(getter)]
    pub fn z(&self) -> Vec<f64> {
        self.z.clone()
    }

    /// μ for profiles, μ₀ for the threshold, quadrature error for smoothing.
    #[wasm_bindgen(getter)]
    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    #[wasm_bindgen(getter)]
    pub fn label(&self) -> String {
        self.label.clone()
    }
}

#[wasm_bindgen]
pub fn profile_curve(dim: usize, alpha: f64, a: f64, r_max: f64) -> Result<Plot, JsError> {
    let p = demo::profile_curve(dim, alpha, a, r_max, 800).map_err(js)?;
    Ok(Plot {
        label: format!("{} sign changes, max ODE residual {:.1e}", p.zero_count, p.max_residual),
        x: p.r,
        y: p.f,
        z: Vec::new(),
        scalar: p.mu,
    })
}

#[wasm_bindgen]
pub fn threshold(dim: usize, alpha: f64, factor: f64) -> Result<Plot, JsError> {
    let p = demo::threshold(dim, alpha, factor).map_err(js)?;
    Ok(Plot { x: p.t, y: p.functional, z: Vec::new(), scalar: p.mu0, label: p.verdict })
}

#[wasm_bindgen]
pub fn heat_smoothing(dim: usize, gamma: f64, t: f64, r_max: f64) -> Result<Plot, JsError> {
    let p = demo::heat_smoothing(dim, gamma, t, r_max, 200).map_err(js)?;
    Ok(Plot { x: p.r, y: p.smoothed, z: p.data, scalar: p.max_error, label: String::new() })
}
