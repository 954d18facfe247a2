//! WebAssembly bindings for the browser demo. Every export takes plain
//! values and returns a JSON string.

use ppdepth::analysis::{run_ranking_experiment, RankingExperiment};
use ppdepth::center::{estimate_center, SsdObjective};
use ppdepth::io::{read_processes, Format};
use ppdepth::numeric::linspace;
use ppdepth::process::IntensitySpec;
use ppdepth::smooth::{curve_value, distance_matrix};
use ppdepth::{CenterConfig, CenterEstimate, CenterMethod, DepthMethod, KernelSpec, Metric, PointProcess};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Annealing budget for interactive use.
const BROWSER_N_MAX: usize = 5000;

#[derive(Serialize)]
struct Curve {
    id: String,
    events: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct RankedCurve {
    #[serde(flatten)]
    curve: Curve,
    depth: f64,
    rank: usize,
}

#[derive(Serialize)]
struct CenterView {
    events: Vec<f64>,
    ssd: f64,
    empty_ssd: f64,
    dimension_bound: usize,
    per_dimension: Vec<(usize, f64)>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct RankView {
    horizon: f64,
    method: String,
    grid: Vec<f64>,
    center: CenterView,
    curves: Vec<RankedCurve>,
}

#[derive(Serialize)]
struct SmoothView {
    horizon: f64,
    grid: Vec<f64>,
    curves: Vec<Curve>,
    distances: Vec<Vec<f64>>,
}

fn curve(spec: &KernelSpec, grid: &[f64], id: String, events: &[f64]) -> Curve {
    Curve {
        id,
        events: events.to_vec(),
        values: grid.iter().map(|&t| curve_value(spec, events, t)).collect(),
    }
}

fn center_view(obj: &SsdObjective, est: &CenterEstimate, grid: &[f64]) -> CenterView {
    CenterView {
        events: est.events.events().to_vec(),
        ssd: est.ssd,
        empty_ssd: obj.empty_ssd(),
        dimension_bound: est.dimension_bound,
        per_dimension: est.per_dimension.iter().map(|d| (d.dimension, d.ssd)).collect(),
        values: grid.iter().map(|&t| curve_value(obj.spec(), est.events.events(), t)).collect(),
    }
}

fn parse_text(text: &str, horizon: f64) -> Result<Vec<PointProcess>, String> {
    let data = read_processes(text.trim_end().as_bytes(), Format::Text, Some(horizon)).map_err(|e| e.to_string())?;
    if data.is_empty() {
        return Err("no processes given".into());
    }
    Ok(data.processes)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Simulates a sample, estimates its center and ranks it. `model` is
/// `hpp` (uses `rate`) or a mixture `w:mu:sd,...`.
pub fn rank_simulated_json(
    model: &str,
    rate: f64,
    n: usize,
    horizon: f64,
    c2: f64,
    method: &str,
    seed: u64,
    points: usize,
) -> Result<String, String> {
    let intensity = if model.trim() == "hpp" {
        IntensitySpec::constant(rate, horizon)
    } else {
        IntensitySpec::parse_mixture(model, horizon)
    }
    .map_err(|e| e.to_string())?;
    let spec = KernelSpec::gaussian(1.0, c2, horizon).map_err(|e| e.to_string())?;
    let method: DepthMethod = method.parse().map_err(|e: ppdepth::Error| e.to_string())?;
    let mut cfg = RankingExperiment::new(intensity, n, spec, seed);
    cfg.methods = vec![method];
    cfg.center.n_max = BROWSER_N_MAX;
    let out = run_ranking_experiment(&cfg).map_err(|e| e.to_string())?;
    let obj = SsdObjective::new(&out.sample, &spec).map_err(|e| e.to_string())?;
    let grid = linspace(0.0, horizon, points.max(2));
    let report = &out.rankings[0];
    let curves = report
        .order()
        .into_iter()
        .map(|i| {
            let e = &report.entries[i];
            RankedCurve {
                curve: curve(&spec, &grid, e.id.clone(), out.sample[i].events()),
                depth: e.depth,
                rank: e.rank,
            }
        })
        .collect();
    to_json(&RankView {
        horizon,
        method: method.to_string(),
        center: center_view(&obj, &out.center, &grid),
        grid,
        curves,
    })
}

/// Smooths processes given one per line (events separated by spaces) and
/// returns their curves and pairwise distances.
pub fn smooth_json(text: &str, horizon: f64, c2: f64, points: usize) -> Result<String, String> {
    let sample = parse_text(text, horizon)?;
    let spec = KernelSpec::gaussian(1.0, c2, horizon).map_err(|e| e.to_string())?;
    let grid = linspace(0.0, horizon, points.max(2));
    let distances = distance_matrix(&Metric::l2(spec), &sample, &sample).map_err(|e| e.to_string())?;
    let curves = sample
        .iter()
        .enumerate()
        .map(|(i, p)| curve(&spec, &grid, p.display_id(i), p.events()))
        .collect();
    to_json(&SmoothView {
        horizon,
        grid,
        curves,
        distances,
    })
}

/// Estimates the center of processes given one per line.
pub fn center_json(
    text: &str,
    horizon: f64,
    c2: f64,
    method: &str,
    seed: u64,
    points: usize,
) -> Result<String, String> {
    let sample = parse_text(text, horizon)?;
    let spec = KernelSpec::gaussian(1.0, c2, horizon).map_err(|e| e.to_string())?;
    let method: CenterMethod = method.parse().map_err(|e: ppdepth::Error| e.to_string())?;
    let obj = SsdObjective::new(&sample, &spec).map_err(|e| e.to_string())?;
    let cfg = CenterConfig {
        n_max: BROWSER_N_MAX,
        ..CenterConfig::default()
    };
    let est = estimate_center(&obj, method, &cfg, seed).map_err(|e| e.to_string())?;
    let grid = linspace(0.0, horizon, points.max(2));
    to_json(&center_view(&obj, &est, &grid))
}

#[wasm_bindgen(js_name = rankSimulated)]
#[allow(clippy::too_many_arguments)]
pub fn rank_simulated(
    model: &str,
    rate: f64,
    n: usize,
    horizon: f64,
    c2: f64,
    method: &str,
    seed: u32,
    points: usize,
) -> Result<String, JsError> {
    rank_simulated_json(model, rate, n, horizon, c2, method, seed as u64, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = smoothCurves)]
pub fn smooth_curves(text: &str, horizon: f64, c2: f64, points: usize) -> Result<String, JsError> {
    smooth_json(text, horizon, c2, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = estimateCenter)]
pub fn estimate_center_js(
    text: &str,
    horizon: f64,
    c2: f64,
    method: &str,
    seed: u32,
    points: usize,
) -> Result<String, JsError> {
    center_json(text, horizon, c2, method, seed as u64, points).map_err(|e| JsError::new(&e))
}
