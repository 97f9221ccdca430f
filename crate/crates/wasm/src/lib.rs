//! Browser demo: three JSON-in, JSON-out operations over a unit-square
//! scene. The logic lives in plain functions so it can be tested natively;
//! the `#[wasm_bindgen]` wrappers only translate errors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use urbsys::analysis::{parameter_sweep, regime_classify, SweepSpec};
use urbsys::fields::amenity_from_function;
use urbsys::render::{region_map_svg, tessellation_svg, SvgStyle};
use urbsys::sustainability::spatial_equilibrium_check;
use urbsys::{assign_labels, build_grid, fixed_point_solve, Geography, ModelParams, Site, SolverOptions};
use wasm_bindgen::prelude::*;

const MAX_RESOLUTION: usize = 256;

#[derive(Deserialize)]
struct SceneSite {
    x: f64,
    y: f64,
    #[serde(default = "one")]
    productivity: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct Scene {
    #[serde(default = "default_resolution")]
    resolution: usize,
    sites: Vec<SceneSite>,
    /// Amenity is `1 + g·x` over the unit square.
    #[serde(default)]
    amenity_gradient: [f64; 2],
}

fn default_resolution() -> usize {
    96
}

#[derive(Deserialize)]
struct ParamsIn {
    sigma: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    #[serde(default)]
    tau: f64,
}

impl ParamsIn {
    fn model(&self) -> ModelParams {
        ModelParams::baseline(self.sigma, self.alpha, self.beta, self.delta, self.tau)
    }
}

fn geography(scene: &Scene, tau: f64) -> Result<Geography, String> {
    let n = scene.resolution;
    if n == 0 || n > MAX_RESOLUTION {
        return Err(format!("resolution must lie in 1..={MAX_RESOLUTION}"));
    }
    if scene.sites.is_empty() {
        return Err("place at least one site".into());
    }
    let grid = Arc::new(build_grid([0.0, 0.0, 1.0, 1.0], (n, n), |_| true).map_err(|e| e.to_string())?);
    let g = scene.amenity_gradient;
    let amenity = amenity_from_function(&grid, move |x| 1.0 + g[0] * x[0] + g[1] * x[1]).map_err(|e| e.to_string())?;
    let sites = scene
        .sites
        .iter()
        .enumerate()
        .map(|(i, s)| Site::new(i, [s.x, s.y], s.productivity))
        .collect();
    Geography::euclidean(grid, sites, Arc::new(amenity), tau).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct TessellateRequest {
    #[serde(flatten)]
    scene: Scene,
    #[serde(default)]
    weights: Vec<f64>,
}

/// Weighted Voronoi partition for hand-picked weights.
pub fn tessellate_json(request: &str) -> Result<String, String> {
    let req: TessellateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let geo = geography(&req.scene, 0.0)?;
    let mut weights = req.weights;
    weights.resize(geo.n_sites(), 0.0);
    let tess = assign_labels(&geo.grid, &geo.sites, &geo.metric, &weights).map_err(|e| e.to_string())?;
    let svg = tessellation_svg(&geo.grid, &tess, &geo.sites, &SvgStyle::default());
    Ok(json!({
        "svg": svg,
        "measures": tess.cell_measure,
        "active": tess.active_set,
        "neighbors": tess.neighbors,
    })
    .to_string())
}

#[derive(Deserialize)]
struct SolveRequest {
    #[serde(flatten)]
    scene: Scene,
    params: ParamsIn,
    /// Indices of the occupied sites; all sites when absent.
    urban_system: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct SolveSummary {
    svg: String,
    site_ids: Vec<usize>,
    labor: Vec<f64>,
    weights: Vec<f64>,
    welfare: f64,
    iterations: usize,
    residual: f64,
    sustainability: Option<serde_json::Value>,
}

/// Equilibrium of the chosen urban system, with a deviation check against
/// the remaining sites.
pub fn solve_json(request: &str) -> Result<String, String> {
    let req: SolveRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let params = req.params.model();
    let geo = geography(&req.scene, params.tau)?;
    let ys = req.urban_system.unwrap_or_else(|| (0..geo.n_sites()).collect());
    let sol = fixed_point_solve(&geo, &params, &ys, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let sustainability = if ys.len() < geo.n_sites() {
        let rep = spatial_equilibrium_check(&sol, &geo, &params).map_err(|e| e.to_string())?;
        Some(serde_json::to_value(rep).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let sub = geo.restrict(&sol.site_ids);
    let style = SvgStyle {
        site_sizes: Some(sol.labor.iter().map(|l| l.sqrt()).collect()),
        title: None,
    };
    let summary = SolveSummary {
        svg: tessellation_svg(&sub.grid, &sol.tessellation, &sub.sites, &style),
        site_ids: sol.site_ids.clone(),
        labor: sol.labor.clone(),
        weights: sol.weight_differences(),
        welfare: sol.welfare,
        iterations: sol.iterations,
        residual: sol.residuals.lambda_eq,
        sustainability,
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

/// Regime report for the parameters plus the (α, σ) region map at their β.
pub fn classify_json(request: &str) -> Result<String, String> {
    let p: ParamsIn = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let report = regime_classify(&p.model()).map_err(|e| e.to_string())?;
    let map = parameter_sweep(&SweepSpec::alpha_sigma(p.beta)).map_err(|e| e.to_string())?;
    Ok(json!({ "report": report, "svg": region_map_svg(&map) }).to_string())
}

#[wasm_bindgen]
pub fn tessellate(request: &str) -> Result<String, JsValue> {
    tessellate_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve(request: &str) -> Result<String, JsValue> {
    solve_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn classify(request: &str) -> Result<String, JsValue> {
    classify_json(request).map_err(|e| JsValue::from_str(&e))
}
