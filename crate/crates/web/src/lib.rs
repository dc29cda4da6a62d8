//! WebAssembly bindings for the simulator demo page.
//!
//! Every entry point takes a JSON object of config overrides (any subset of
//! `SimConfig` fields, e.g. `{"k_tot": 30, "seed": 4}`) and returns JSON.
//! The `*_json` functions are the native API; the exported wrappers turn
//! their errors into JS exceptions.

use cellfree_core::metrics::empirical_cdf;
use cellfree_core::{engine, run_experiment, summarize, Layout, Policy, SimConfig, Summary};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Work limit for one call, in UE-slots.
pub const MAX_WORK: usize = 2_000_000;

fn parse_config(overrides: &str) -> Result<SimConfig, String> {
    let text = if overrides.trim().is_empty() { "{}" } else { overrides };
    let config: SimConfig = serde_json::from_str(text).map_err(|e| format!("bad config: {e}"))?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn check_work(config: &SimConfig, slots: usize, runs: usize) -> Result<(), String> {
    let work = config.k_tot * slots * config.layouts * runs;
    if work > MAX_WORK {
        return Err(format!("{work} UE-slots requested, the demo allows {MAX_WORK}"));
    }
    Ok(())
}

#[derive(Serialize)]
struct UeView {
    x: f64,
    y: f64,
    cluster: Vec<usize>,
}

#[derive(Serialize)]
struct LayoutView {
    area_side: f64,
    rus: Vec<(f64, f64)>,
    ues: Vec<UeView>,
    uncovered: usize,
    snr_db: f64,
}

/// RU and UE positions with the cluster of every UE.
pub fn layout_view_json(overrides: &str) -> Result<String, String> {
    let config = parse_config(overrides)?;
    let layout = Layout::generate(&config, 0);
    let topo = &layout.topology;
    let view = LayoutView {
        area_side: topo.area_side,
        rus: topo.ru_positions.iter().map(|p| (p.x, p.y)).collect(),
        ues: topo
            .ue_positions
            .iter()
            .zip(&layout.graph.clusters)
            .map(|(p, c)| UeView {
                x: p.x,
                y: p.y,
                cluster: c.clone(),
            })
            .collect(),
        uncovered: layout.graph.clusters.iter().filter(|c| c.is_empty()).count(),
        snr_db: 10.0 * layout.snr().log10(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RateView {
    ue: usize,
    rate: f64,
    success_prob: f64,
    expected_service: f64,
    cdf: Vec<(f64, f64)>,
}

/// Start-up phase on layout 0, then the mutual-information CDF in memory
/// and the allocated rate of `ue`.
pub fn rate_allocation_json(overrides: &str, ue: usize) -> Result<String, String> {
    let config = parse_config(overrides)?;
    if ue >= config.k_tot {
        return Err(format!("ue {ue} out of range (k_tot = {})", config.k_tot));
    }
    check_work(&config, config.n_init, 1)?;
    let layout = Layout::generate(&config, 0);
    let memory = engine::run_startup(&layout, &config);
    let samples: Vec<f64> = memory.samples(ue).collect();
    let choice = memory.choice(ue);
    let view = RateView {
        ue,
        rate: choice.rate,
        success_prob: choice.success_prob,
        expected_service: choice.expected_service(),
        cdf: empirical_cdf(&samples),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PolicyView {
    policy: Policy,
    throughput: Vec<f64>,
    #[serde(flatten)]
    summary: Summary,
}

/// Runs every policy on the same layouts without stopping at steady state.
pub fn compare_json(overrides: &str) -> Result<String, String> {
    let base = SimConfig {
        stop_at_steady_state: false,
        ..parse_config(overrides)?
    };
    check_work(&base, base.n_init + base.slots, Policy::ALL.len())?;
    let mut views = Vec::new();
    for policy in Policy::ALL {
        let config = SimConfig { policy, ..base.clone() };
        let result = run_experiment(&config).map_err(|e| e.to_string())?;
        views.push(PolicyView {
            policy,
            throughput: result
                .layouts
                .iter()
                .flat_map(|o| o.throughput.iter().copied())
                .collect(),
            summary: summarize(&result.layouts, config.log_floor),
        });
    }
    serde_json::to_string(&views).map_err(|e| e.to_string())
}

fn to_js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = layoutView)]
pub fn layout_view(overrides: &str) -> Result<String, JsError> {
    to_js(layout_view_json(overrides))
}

#[wasm_bindgen(js_name = rateAllocation)]
pub fn rate_allocation(overrides: &str, ue: usize) -> Result<String, JsError> {
    to_js(rate_allocation_json(overrides, ue))
}

#[wasm_bindgen(js_name = compareSchedulers)]
pub fn compare_schedulers(overrides: &str) -> Result<String, JsError> {
    to_js(compare_json(overrides))
}

#[wasm_bindgen(js_name = defaultConfig)]
pub fn default_config() -> String {
    serde_json::to_string_pretty(&SimConfig::default()).expect("config serializes")
}
