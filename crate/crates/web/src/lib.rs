//! Browser bindings: lay out a network, optimize one drop, sweep pilot power.
//! Everything crosses the boundary as JSON strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use bibc::harness::{nmse_sweep, NmseRow};
use bibc::optimizer::{alternating_optimization, random_baseline};
use bibc::system::{received_power, sum_rate_exact};
use bibc::units::watts_to_dbm;
use bibc::{draw_channels, place_network, LinkCsi, SystemConfig};

fn config_from(json: &str) -> Result<SystemConfig, JsValue> {
    let text = if json.trim().is_empty() { "{}" } else { json };
    SystemConfig::from_json(text).map_err(to_js)
}

fn to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsValue> {
    serde_json::to_string(value).map_err(to_js)
}

#[derive(Serialize)]
struct Layout {
    area_side: f64,
    aps: Vec<[f64; 2]>,
    tags: Vec<[f64; 2]>,
    reader: [f64; 2],
}

/// AP, tag and reader positions for one drop.
#[wasm_bindgen]
pub fn layout(config_json: &str, seed: u64) -> Result<String, JsValue> {
    let cfg = config_from(config_json)?;
    let geo = place_network(&cfg, seed).map_err(to_js)?;
    let xy = |p: &bibc::geometry::Point| [p.x, p.y];
    to_json(&Layout {
        area_side: cfg.area_side,
        aps: geo.ap_positions.iter().map(xy).collect(),
        tags: geo.tag_positions.iter().map(xy).collect(),
        reader: xy(&geo.reader_position),
    })
}

#[derive(Serialize)]
struct SchemeResult {
    sum_rate: f64,
    tag_power_dbm: Vec<f64>,
    alpha: Vec<f64>,
}

#[derive(Serialize)]
struct DropResult {
    random: SchemeResult,
    optimized: SchemeResult,
    feasible: bool,
    objective_trace: Vec<f64>,
}

/// Random beams against the jointly optimized design on one drop with
/// perfect channel knowledge.
#[wasm_bindgen]
pub fn optimize_drop(config_json: &str, seed: u64) -> Result<String, JsValue> {
    let cfg = config_from(config_json)?;
    let geo = place_network(&cfg, seed).map_err(to_js)?;
    let csi = LinkCsi::from_realization(&draw_channels(&geo, &cfg, seed));
    let (p, noise, psi) = (cfg.tx_power_watts(), cfg.noise_power(), cfg.prelog());
    let summarize = |sol: &bibc::Solution| {
        let v = sol.effective_beam();
        SchemeResult {
            sum_rate: sum_rate_exact(&csi, sol, p, noise, psi),
            tag_power_dbm: (0..cfg.num_tags).map(|k| watts_to_dbm(received_power(&csi, k, &v, p))).collect(),
            alpha: sol.alpha.clone(),
        }
    };
    let random = random_baseline(cfg.num_aps, cfg.num_tags, cfg.reader_antennas, cfg.alpha_fixed, seed);
    let ao = alternating_optimization(&csi, &cfg).map_err(to_js)?;
    to_json(&DropResult {
        random: summarize(&random),
        optimized: summarize(&ao.solution),
        feasible: ao.feasible,
        objective_trace: ao.trace.objectives(),
    })
}

/// LS estimation NMSE against pilot power for one pilot length.
#[wasm_bindgen]
pub fn nmse_curve(config_json: &str, tau: usize, trials: usize, seed: u64) -> Result<String, JsValue> {
    let cfg = config_from(config_json)?;
    let grid: Vec<f64> = (0..=10).map(|i| 2.0 * i as f64).collect();
    let rows: Vec<NmseRow> = nmse_sweep(&cfg, &[tau], &grid, trials.max(1), seed, 1).map_err(to_js)?;
    to_json(&rows)
}
