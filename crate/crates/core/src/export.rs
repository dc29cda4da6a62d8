//! CSV records for plotting and debugging. Every file has a header row and
//! uses `.` as decimal separator.

use crate::association::AssociationGraph;
use crate::engine::{Layout, LayoutOutcome};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub fn write_csv<W, T, I>(writer: W, rows: I) -> Result<(), csv::Error>
where
    W: Write,
    T: Serialize,
    I: IntoIterator<Item = T>,
{
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsfcRow {
    pub ru: usize,
    pub ue: usize,
    pub distance: f64,
    pub los: bool,
    pub beta: f64,
    pub beta_db: f64,
}

pub fn lsfc_rows(layout: &Layout) -> Vec<LsfcRow> {
    let ls = &layout.large_scale;
    (0..ls.num_rus)
        .flat_map(|ru| (0..ls.num_ues).map(move |ue| (ru, ue)))
        .map(|(ru, ue)| LsfcRow {
            ru,
            ue,
            distance: layout.topology.distance(ru, ue),
            los: ls.los[ru * ls.num_ues + ue],
            beta: ls.beta(ru, ue),
            beta_db: 10.0 * ls.beta(ru, ue).log10(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRow {
    pub ru: usize,
    pub ue: usize,
}

pub fn edge_rows(graph: &AssociationGraph) -> Vec<EdgeRow> {
    graph.edges().map(|(ru, ue)| EdgeRow { ru, ue }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueRow {
    pub slot: usize,
    pub ue: usize,
    pub queue: f64,
}

pub fn queue_rows(trace: &[Vec<f64>]) -> impl Iterator<Item = QueueRow> + '_ {
    trace.iter().enumerate().flat_map(|(slot, qs)| {
        qs.iter().enumerate().map(move |(ue, &queue)| QueueRow {
            slot: slot + 1,
            ue,
            queue,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeThroughputRow {
    pub layout: usize,
    pub ue: usize,
    pub covered: bool,
    pub throughput: f64,
}

pub fn throughput_rows(outcomes: &[LayoutOutcome]) -> Vec<UeThroughputRow> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.throughput
                .iter()
                .zip(&o.covered)
                .enumerate()
                .map(move |(ue, (&throughput, &covered))| UeThroughputRow {
                    layout: o.layout,
                    ue,
                    covered,
                    throughput,
                })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumThroughputRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub tau_p: usize,
    pub layout: usize,
    pub sum_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub tau_p: usize,
    pub throughput: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRow {
    pub layout: usize,
    pub ue: usize,
    pub rate: f64,
    pub success_prob: f64,
    pub expected_service: f64,
    pub samples: usize,
}

pub fn memory_rows(outcomes: &[LayoutOutcome]) -> Vec<MemoryRow> {
    outcomes
        .iter()
        .flat_map(|o| {
            o.memory.iter().map(move |m| MemoryRow {
                layout: o.layout,
                ue: m.ue,
                rate: m.rate,
                success_prob: m.success_prob,
                expected_service: m.expected_service,
                samples: m.samples,
            })
        })
        .collect()
}
