//! Slot-level orchestration and multi-layout experiments.
//!
//! One slot runs: arrival solve, activation, per-slot association and pilot
//! assignment, channel draw, estimation, combining, SINR and service, then
//! the queue and rate-memory updates. Every layout owns a ChaCha8 stream
//! family keyed by its seed; stream 0 builds the layout, stream 1 drives
//! the start-up selection, and every later slot gets its own stream, so a
//! run is reproducible regardless of how layouts are spread over threads.

use crate::association::{assign_pilots, estimate_channels, form_clusters, AssociationGraph};
use crate::channel::{realize_channel, AngularSupports, DftBasis, LargeScaleState};
use crate::config::{ConfigError, SimConfig};
use crate::geometry::{drop_ues_with, place_rus, NetworkTopology};
use crate::ratealloc::{realize_service, startup_phase, MiSampler, RateMemory};
use crate::receiver::{mutual_information, subspace_sinrs};
use crate::scheduler::{Policy, SchedulerState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;

const TOPOLOGY_STREAM: u64 = 0;
const STARTUP_SELECTION_STREAM: u64 = 1;
const FIRST_SLOT_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Static state of one layout: placement, large-scale fading and the
/// threshold association graph over all UEs.
#[derive(Debug, Clone)]
pub struct Layout {
    pub index: usize,
    pub seed: u64,
    pub topology: NetworkTopology,
    pub large_scale: LargeScaleState,
    pub supports: AngularSupports,
    pub graph: AssociationGraph,
    pub dft: DftBasis,
    tau_p: usize,
}

impl Layout {
    pub fn generate(config: &SimConfig, index: usize) -> Self {
        let seed = config.layout_seed(index);
        let mut rng = stream_rng(seed, TOPOLOGY_STREAM);
        let rus = place_rus(config.ru_rows, config.ru_cols, config.area_side);
        let ues = drop_ues_with(config.k_tot, config.area_side, &mut rng);
        let topology = NetworkTopology::new(config.area_side, rus, ues);
        let large_scale = LargeScaleState::generate(&topology, config.snr(), &mut rng);
        let supports = AngularSupports::from_topology(&topology, config.antennas, config.delta);
        let graph = form_clusters(&large_scale, config.eta, config.q_max, config.antennas);
        Self {
            index,
            seed,
            topology,
            large_scale,
            supports,
            graph,
            dft: DftBasis::new(config.antennas),
            tau_p: config.tau_p,
        }
    }

    pub fn covered(&self) -> Vec<bool> {
        self.graph.covered_mask()
    }

    pub fn snr(&self) -> f64 {
        self.large_scale.snr
    }

    /// Runs the physical layer for one slot and returns the mutual
    /// information of each UE in `active` (same order).
    pub fn transmit(&self, active: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k_tot = self.topology.num_ues();
        let mut mask = vec![false; k_tot];
        active.iter().for_each(|&k| mask[k] = true);
        let graph = self.graph.restrict(&mask);
        let pilots = assign_pilots(&graph, &self.supports, &self.large_scale, active, self.tau_p);
        let snr = self.snr();
        let channel = realize_channel(&self.large_scale, &self.supports, &self.dft, &mask, rng);
        let estimates = estimate_channels(
            &channel,
            &pilots,
            &graph,
            &self.supports,
            &self.dft,
            snr,
            self.tau_p,
            rng,
        );
        subspace_sinrs(&graph, &estimates, &channel, &self.supports, &self.dft, active, snr)
            .into_iter()
            .map(mutual_information)
            .collect()
    }

    fn slot_rng(&self, slot_stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, FIRST_SLOT_STREAM + slot_stream)
    }
}

struct StartupSampler<'a> {
    layout: &'a Layout,
}

impl MiSampler for StartupSampler<'_> {
    fn sample_slot(&mut self, active: &[usize], slot: u64) -> Vec<f64> {
        let mut rng = self.layout.slot_rng(slot);
        self.layout.transmit(active, &mut rng)
    }
}

/// Start-up phase on a layout: random activation of `k_act` covered UEs
/// for `n_init` slots.
pub fn run_startup(layout: &Layout, config: &SimConfig) -> RateMemory {
    let mut rng = stream_rng(layout.seed, STARTUP_SELECTION_STREAM);
    startup_phase(
        &mut StartupSampler { layout },
        &layout.covered(),
        config.memory,
        config.n_init,
        config.k_act,
        &mut rng,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotResult {
    pub slot: usize,
    pub scheduled: Vec<bool>,
    pub allocated: Vec<f64>,
    /// Realized mutual information; zero for UEs that were not scheduled.
    pub mi: Vec<f64>,
    pub service: Vec<f64>,
    pub queues: Vec<f64>,
}

/// One main-loop slot. Uses only the current queues and rate memories to
/// schedule; the channel of the slot is drawn afterwards.
pub fn run_slot(
    layout: &Layout,
    config: &SimConfig,
    scheduler: &mut SchedulerState,
    memory: &mut RateMemory,
    slot: usize,
) -> SlotResult {
    let mut rng = layout.slot_rng(config.n_init as u64 + slot as u64);
    scheduler.solve_arrivals();
    let scheduled = scheduler.select(&memory.expected_services(), config.k_act, &mut rng);
    let active: Vec<usize> = (0..scheduled.len()).filter(|&k| scheduled[k]).collect();
    let mi_active = layout.transmit(&active, &mut rng);

    let allocated = memory.allocated_rates();
    let mut mi = vec![0.0; scheduled.len()];
    for (&k, &v) in active.iter().zip(&mi_active) {
        mi[k] = v;
    }
    let service: Vec<f64> = (0..scheduled.len())
        .map(|k| realize_service(allocated[k], mi[k], scheduled[k], config.tau_p, config.coherence))
        .collect();
    scheduler.finish_slot(&service);
    for &k in &active {
        memory.record(k, mi[k]);
    }
    SlotResult {
        slot,
        scheduled,
        allocated,
        mi,
        service,
        queues: scheduler.queues.clone(),
    }
}

/// Windowed relative-drift test: for every UE the mean queue over the last
/// `window` entries differs from the mean over the `window` before by less
/// than `tol * (1 + mean)`, where `mean` averages both windows.
pub fn detect_steady_state(history: &[Vec<f64>], window: usize, tol: f64) -> bool {
    if window == 0 || history.len() < 2 * window {
        return false;
    }
    let n = history.len();
    let k = history[0].len();
    (0..k).all(|ue| {
        let recent: f64 = history[n - window..].iter().map(|q| q[ue]).sum::<f64>() / window as f64;
        let older: f64 = history[n - 2 * window..n - window].iter().map(|q| q[ue]).sum::<f64>() / window as f64;
        (recent - older).abs() < tol * (1.0 + 0.5 * (recent + older))
    })
}

/// Incremental form of [`detect_steady_state`] with O(K) work per slot.
#[derive(Debug, Clone)]
pub struct SteadyStateDetector {
    window: usize,
    tol: f64,
    history: VecDeque<Vec<f64>>,
    recent: Vec<f64>,
    older: Vec<f64>,
}

impl SteadyStateDetector {
    pub fn new(num_ues: usize, window: usize, tol: f64) -> Self {
        Self {
            window,
            tol,
            history: VecDeque::with_capacity(2 * window + 1),
            recent: vec![0.0; num_ues],
            older: vec![0.0; num_ues],
        }
    }

    pub fn push(&mut self, queues: &[f64]) {
        for (s, q) in self.recent.iter_mut().zip(queues) {
            *s += q;
        }
        self.history.push_back(queues.to_vec());
        if self.history.len() > self.window {
            let moved = &self.history[self.history.len() - 1 - self.window];
            for ((r, o), q) in self.recent.iter_mut().zip(self.older.iter_mut()).zip(moved) {
                *r -= q;
                *o += q;
            }
        }
        if self.history.len() > 2 * self.window {
            let dropped = self.history.pop_front().unwrap();
            for (o, q) in self.older.iter_mut().zip(&dropped) {
                *o -= q;
            }
        }
    }

    pub fn is_steady(&self) -> bool {
        if self.history.len() < 2 * self.window {
            return false;
        }
        let w = self.window as f64;
        self.recent.iter().zip(&self.older).all(|(r, o)| {
            let (r, o) = (r / w, o / w);
            (r - o).abs() < self.tol * (1.0 + 0.5 * (r + o))
        })
    }
}

/// Rate-memory state of one UE at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryRecord {
    pub ue: usize,
    pub rate: f64,
    pub success_prob: f64,
    pub expected_service: f64,
    pub samples: usize,
}

/// Result of one layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayoutOutcome {
    pub layout: usize,
    pub seed: u64,
    /// Time-averaged service per UE over the main loop.
    pub throughput: Vec<f64>,
    pub covered: Vec<bool>,
    pub slots: usize,
    /// Main-loop slot at which queues were first found steady.
    pub steady_slot: Option<usize>,
    pub a_max: f64,
    pub memory: Vec<MemoryRecord>,
    /// Queue vectors after every main-loop slot, when tracing.
    #[serde(skip)]
    pub queue_trace: Option<Vec<Vec<f64>>>,
}

impl LayoutOutcome {
    pub fn sum_throughput(&self) -> f64 {
        self.throughput.iter().sum()
    }
}

/// Runs one layout: start-up, then the main loop until the slot budget is
/// spent or, for queue-driven policies, the queues are steady.
pub fn run_layout(config: &SimConfig, index: usize) -> LayoutOutcome {
    let layout = Layout::generate(config, index);
    let covered = layout.covered();
    let mut memory = run_startup(&layout, config);
    let a_max = config.a_max.unwrap_or_else(|| {
        config.spectral_efficiency_factor() * memory.allocated_rates().into_iter().fold(0.0, f64::max)
    });
    let mut scheduler = SchedulerState::new(config.policy, covered.clone(), config.v, a_max.max(f64::MIN_POSITIVE));

    let budget = config.slot_budget();
    let watch_steady = config.stop_at_steady_state && config.policy.uses_queues();
    let mut detector = SteadyStateDetector::new(config.k_tot, config.steady_window, config.steady_tol);
    let mut totals = vec![0.0; config.k_tot];
    let mut trace = config.trace_queues.then(Vec::new);
    let mut steady_slot = None;
    let mut slots = 0;
    for slot in 0..budget {
        let res = run_slot(&layout, config, &mut scheduler, &mut memory, slot);
        for (t, s) in totals.iter_mut().zip(&res.service) {
            *t += s;
        }
        slots += 1;
        if let Some(tr) = trace.as_mut() {
            tr.push(res.queues.clone());
        }
        if config.policy.uses_queues() {
            detector.push(&res.queues);
            if steady_slot.is_none() && detector.is_steady() {
                steady_slot = Some(slots);
                if watch_steady {
                    break;
                }
            }
        }
    }
    if watch_steady && steady_slot.is_none() {
        log::warn!("layout {index}: queues not steady after {budget} slots");
    }
    LayoutOutcome {
        layout: index,
        seed: layout.seed,
        throughput: totals.iter().map(|t| t / slots as f64).collect(),
        covered,
        slots,
        steady_slot,
        a_max,
        memory: (0..config.k_tot)
            .map(|ue| {
                let c = memory.choice(ue);
                MemoryRecord {
                    ue,
                    rate: c.rate,
                    success_prob: c.success_prob,
                    expected_service: c.expected_service(),
                    samples: memory.sample_count(ue),
                }
            })
            .collect(),
        queue_trace: trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub policy: Policy,
    pub layouts: Vec<LayoutOutcome>,
}

/// Runs `config.layouts` independent layouts (in parallel when the
/// `parallel` feature is on). Output order follows the layout index.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentResult, ConfigError> {
    config.validate()?;
    #[cfg(feature = "parallel")]
    let layouts = {
        use rayon::prelude::*;
        (0..config.layouts)
            .into_par_iter()
            .map(|i| run_layout(config, i))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let layouts = (0..config.layouts).map(|i| run_layout(config, i)).collect();
    Ok(ExperimentResult {
        policy: config.policy,
        layouts,
    })
}
