//! The load-sweep and compare recipes.

use crate::output::{unix_now, OutputDir, Plan};
use crate::CliError;
use cellfree_core::export::{queue_rows, throughput_rows, CdfRow, SumThroughputRow};
use cellfree_core::metrics::empirical_cdf;
use cellfree_core::{run_experiment, summarize, Policy, SimConfig, Summary};
use serde::Serialize;
use std::fmt::Write;
use std::path::Path;

fn run_checked(config: &SimConfig) -> Result<cellfree_core::ExperimentResult, CliError> {
    run_experiment(config).map_err(|e| CliError::Config(e.to_string()))
}

/// Opens `out`, runs `body` and writes the manifest. Anything written is
/// removed again if a step fails.
fn with_output(
    out: &Path,
    force: bool,
    plan: Plan,
    config: &SimConfig,
    body: impl FnOnce(&mut OutputDir) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let started = unix_now();
    let mut dir = OutputDir::open(out, force)?;
    match body(&mut dir).and_then(|_| dir.finish(plan, config, started)) {
        Ok(manifest) => {
            log::info!("wrote {}", manifest.display());
            Ok(())
        }
        Err(e) => {
            dir.discard();
            Err(e)
        }
    }
}

pub fn load_sweep(
    config: &SimConfig,
    k_values: &[usize],
    tau_p_values: &[usize],
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    if k_values.is_empty() || tau_p_values.is_empty() {
        return Err(CliError::Config(
            "--k-values and --tau-p-values must not be empty".into(),
        ));
    }
    let points: Vec<SimConfig> = tau_p_values
        .iter()
        .flat_map(|&tau_p| k_values.iter().map(move |&k| config.load_point(k, tau_p)))
        .collect();
    for p in &points {
        p.validate()
            .map_err(|e| CliError::Config(format!("K = {}, tau_p = {}: {e}", p.k_tot, p.tau_p)))?;
    }
    let plan = Plan::LoadSweep {
        k_values: k_values.to_vec(),
        tau_p_values: tau_p_values.to_vec(),
    };
    with_output(out, force, plan, config, |dir| {
        let mut sums = Vec::new();
        let mut cdf = Vec::new();
        for p in &points {
            log::info!("load sweep K = {}, tau_p = {}", p.k_tot, p.tau_p);
            let result = run_checked(p)?;
            sums.extend(result.layouts.iter().map(|o| SumThroughputRow {
                k: p.k_tot,
                tau_p: p.tau_p,
                layout: o.layout,
                sum_throughput: o.sum_throughput(),
            }));
            let pooled: Vec<f64> = result
                .layouts
                .iter()
                .flat_map(|o| o.throughput.iter().copied())
                .collect();
            cdf.extend(empirical_cdf(&pooled).into_iter().map(|(throughput, cdf)| CdfRow {
                k: p.k_tot,
                tau_p: p.tau_p,
                throughput,
                cdf,
            }));
        }
        dir.csv("sum_throughput.csv", sums)?;
        dir.csv("throughput_cdf.csv", cdf)
    })
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    policy: Policy,
    v: Option<f64>,
    slots: Vec<usize>,
    steady_slots: Vec<Option<usize>>,
    a_max: Vec<f64>,
    #[serde(flatten)]
    summary: &'a Summary,
}

/// File-name tag of one (policy, V) run.
pub fn run_tag(policy: Policy, v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{policy}_V{v}"),
        None => policy.to_string(),
    }
}

pub fn compare(
    config: &SimConfig,
    policies: &[Policy],
    v_values: &[f64],
    out: &Path,
    force: bool,
) -> Result<(), CliError> {
    if policies.is_empty() {
        return Err(CliError::Config("--policies must not be empty".into()));
    }
    if policies.iter().any(|p| p.uses_queues()) && v_values.is_empty() {
        return Err(CliError::Config("--v-values must not be empty".into()));
    }
    let mut runs: Vec<(Policy, Option<f64>)> = Vec::new();
    for &policy in policies {
        if policy.uses_queues() {
            runs.extend(v_values.iter().map(|&v| (policy, Some(v))));
        } else {
            runs.push((policy, None));
        }
    }
    runs.dedup();
    let configs: Vec<SimConfig> = runs
        .iter()
        .map(|&(policy, v)| SimConfig {
            policy,
            v: v.unwrap_or(config.v),
            trace_queues: config.trace_queues && policy.uses_queues(),
            ..config.clone()
        })
        .collect();
    for c in &configs {
        c.validate()
            .map_err(|e| CliError::Config(format!("{}: {e}", run_tag(c.policy, Some(c.v)))))?;
    }
    let plan = Plan::Compare {
        policies: policies.to_vec(),
        v_values: v_values.to_vec(),
    };
    with_output(out, force, plan, config, |dir| {
        for (&(policy, v), c) in runs.iter().zip(&configs) {
            let tag = run_tag(policy, v);
            log::info!("compare {tag}");
            let result = run_checked(c)?;
            let summary = summarize(&result.layouts, c.log_floor);
            dir.csv(&format!("throughput_{tag}.csv"), throughput_rows(&result.layouts))?;
            for o in &result.layouts {
                if let Some(trace) = &o.queue_trace {
                    dir.csv(&format!("queues_{tag}_layout{}.csv", o.layout), queue_rows(trace))?;
                }
            }
            let record = RunSummary {
                policy,
                v,
                slots: result.layouts.iter().map(|o| o.slots).collect(),
                steady_slots: result.layouts.iter().map(|o| o.steady_slot).collect(),
                a_max: result.layouts.iter().map(|o| o.a_max).collect(),
                summary: &summary,
            };
            dir.json(&format!("summary_{tag}.json"), &record)?;
        }
        Ok(())
    })
}

pub fn describe(config: &SimConfig) -> String {
    let mut text = toml::to_string(config).expect("config serializes to TOML");
    let _ = write!(
        text,
        "\n# derived\n# num_rus = {}\n# snr_db = {:.3}\n# tx_power_dbm = {:.3}\n# reference_distance_m = {:.4}\n# normalization_distance_m = {:.4}\n# pilot_overhead_factor = {}\n",
        config.num_rus(),
        10.0 * config.snr().log10(),
        config.tx_power_dbm(),
        config.reference_distance(),
        config.normalization_distance(),
        config.spectral_efficiency_factor()
    );
    text
}
