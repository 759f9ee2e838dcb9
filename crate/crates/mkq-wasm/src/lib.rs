//! WebAssembly bindings for the browser demo.
//!
//! Everything here is two-dimensional and uses flattened `[x0, y0, x1, y1,
//! ...]` buffers, which wasm-bindgen maps to `Float64Array`. Build with
//! `wasm-pack build crates/mkq-wasm --target web --out-dir ../../www/pkg`.
//!
//! The fallible logic lives in `*_impl` functions returning
//! `Result<_, String>` so it can be unit-tested on native targets, where
//! constructing a `JsError` is not possible; the exported methods only
//! translate errors at the boundary.

use wasm_bindgen::prelude::*;

use mkq::risk::{generate_scenario, risk_report, ScenarioSpec};
use mkq::tails::{tail_contour, ContourKind, TailOptions};
use mkq::{
    direction_grid, quantile_contour, sign_curve, solve_semidual, FittedPotential, PointCloud,
    ReferenceSpec, SolveOptions,
};

fn flatten(rows: Vec<Vec<f64>>) -> Vec<f64> {
    rows.into_iter().flatten().collect()
}

/// Both clouds of a synthetic scenario, flattened; `second` is empty for
/// single-cloud scenarios.
#[wasm_bindgen]
pub struct ScenarioData {
    first: Vec<f64>,
    second: Vec<f64>,
}

#[wasm_bindgen]
impl ScenarioData {
    #[wasm_bindgen(getter)]
    pub fn first(&self) -> Vec<f64> {
        self.first.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn second(&self) -> Vec<f64> {
        self.second.clone()
    }
}

fn scenario_impl(spec_json: &str) -> Result<ScenarioData, String> {
    let spec: ScenarioSpec = serde_json::from_str(spec_json).map_err(|e| e.to_string())?;
    let sc = generate_scenario(&spec).map_err(|e| e.to_string())?;
    Ok(ScenarioData {
        first: sc.first().as_flat().to_vec(),
        second: sc
            .second()
            .map(|c| c.as_flat().to_vec())
            .unwrap_or_default(),
    })
}

/// `spec_json` is tagged JSON, e.g. `{"kind": "gaussian_outliers",
/// "n": 400, "fraction": 0.05, "radius": 8.0, "seed": 7}`.
#[wasm_bindgen]
pub fn scenario(spec_json: &str) -> Result<ScenarioData, JsError> {
    scenario_impl(spec_json).map_err(|e| JsError::new(&e))
}

/// A fitted center-outward quantile model over a 2-d point cloud.
#[wasm_bindgen]
pub struct Model {
    fit: FittedPotential,
}

fn fit_impl(
    points: Vec<f64>,
    epsilon: f64,
    iterations: u32,
    grid_size: u32,
    seed: u64,
) -> Result<Model, String> {
    if points.len() % 2 != 0 {
        return Err("point buffer length must be even".to_string());
    }
    let cloud = PointCloud::from_flat(points.len() / 2, 2, points).map_err(|e| e.to_string())?;
    let spec = ReferenceSpec::spherical(2).map_err(|e| e.to_string())?;
    let opts = SolveOptions {
        iterations: iterations as usize,
        reference_points: Some(grid_size as usize),
        seed,
        ..SolveOptions::default()
    };
    let fit = solve_semidual(cloud, spec, epsilon, &opts).map_err(|e| e.to_string())?;
    Ok(Model { fit })
}

impl Model {
    fn contour_impl(&self, kind: &str, level: f64, directions: u32) -> Result<Vec<f64>, String> {
        let grid = direction_grid(self.fit.reference(), directions as usize)
            .map_err(|e| e.to_string())?;
        let opts = TailOptions {
            radial_steps: 48,
            ..TailOptions::default()
        };
        let mut vertices = match kind {
            "q" => {
                quantile_contour(&self.fit, level, &grid)
                    .map_err(|e| e.to_string())?
                    .vertices
            }
            "s" => {
                tail_contour(&self.fit, ContourKind::Superquantile, level, &grid, &opts)
                    .map_err(|e| e.to_string())?
                    .vertices
            }
            "e" => {
                tail_contour(&self.fit, ContourKind::Shortfall, level, &grid, &opts)
                    .map_err(|e| e.to_string())?
                    .vertices
            }
            _ => return Err("kind must be one of q, s, e".to_string()),
        };
        if let Some(first) = vertices.first().cloned() {
            vertices.push(first);
        }
        Ok(flatten(vertices))
    }

    fn risk_impl(&self, alpha: f64, directions: u32) -> Result<Vec<f64>, String> {
        let grid = direction_grid(self.fit.reference(), directions as usize)
            .map_err(|e| e.to_string())?;
        let opts = TailOptions {
            radial_steps: 48,
            ..TailOptions::default()
        };
        let report = risk_report(&self.fit, alpha, &grid, &opts).map_err(|e| e.to_string())?;
        Ok(vec![
            report.vector_at_risk[0],
            report.vector_at_risk[1],
            report.conditional_vector_at_risk[0],
            report.conditional_vector_at_risk[1],
            report.rho_q,
            report.rho_s,
        ])
    }

    fn ray_impl(&self, angle: f64, steps: u32) -> Result<Vec<f64>, String> {
        let dir = [angle.cos(), angle.sin()];
        let pts = sign_curve(&self.fit, &dir, steps as usize, 0.99).map_err(|e| e.to_string())?;
        Ok(flatten(pts))
    }
}

#[wasm_bindgen]
impl Model {
    /// Fit the entropic semidual on `points` (flattened 2-d rows).
    #[wasm_bindgen(constructor)]
    pub fn new(
        points: Vec<f64>,
        epsilon: f64,
        iterations: u32,
        grid_size: u32,
        seed: u64,
    ) -> Result<Model, JsError> {
        fit_impl(points, epsilon, iterations, grid_size, seed).map_err(|e| JsError::new(&e))
    }

    pub fn residual(&self) -> f64 {
        self.fit.solve_log().residual
    }

    /// Quantile ("q"), superquantile ("s"), or expected-shortfall ("e")
    /// contour at `level`, flattened and closed (first vertex repeated).
    pub fn contour(&self, kind: &str, level: f64, directions: u32) -> Result<Vec<f64>, JsError> {
        self.contour_impl(kind, level, directions)
            .map_err(|e| JsError::new(&e))
    }

    /// `[VaR_x, VaR_y, CVaR_x, CVaR_y, rho_q, rho_s]` at level `alpha`.
    pub fn risk(&self, alpha: f64, directions: u32) -> Result<Vec<f64>, JsError> {
        self.risk_impl(alpha, directions).map_err(|e| JsError::new(&e))
    }

    /// Image of the ray `r * (cos t, sin t)`, `r` up to 0.99 — the sign
    /// curve of the quantile map, flattened.
    pub fn ray(&self, angle: f64, steps: u32) -> Result<Vec<f64>, JsError> {
        self.ray_impl(angle, steps).map_err(|e| JsError::new(&e))
    }

    /// Center-outward rank of a data-space point: `[rank_x, rank_y]`.
    pub fn rank(&self, x: f64, y: f64) -> Result<Vec<f64>, JsError> {
        self.fit
            .rank(&[x, y])
            .map_err(|e| JsError::new(&e.to_string()))
    }
}
