use crate::channel::{normalization_distance, snr_for_area};
use crate::geometry::reference_distance;
use crate::scheduler::Policy;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("`{0}` must be at least 1")]
    ZeroCount(&'static str),
    #[error("pilot length tau_p = {tau_p} must be shorter than the coherence block T = {coherence}")]
    PilotTooLong { tau_p: usize, coherence: usize },
    #[error("k_act = {k_act} exceeds k_tot = {k_tot}")]
    TooManyActive { k_act: usize, k_tot: usize },
    #[error("`{name}` = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
}

/// Every system and experiment parameter. Defaults reproduce the dense
/// 12-RU scenario with 100 UEs, 40 of them active per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub ru_rows: usize,
    pub ru_cols: usize,
    /// Antennas per RU (M).
    pub antennas: usize,
    /// Side of the square torus in meters.
    pub area_side: f64,
    pub k_tot: usize,
    pub k_act: usize,
    pub tau_p: usize,
    /// Coherence block length T in symbols.
    pub coherence: usize,
    /// Width of the angular spread interval in radians.
    pub delta: f64,
    /// Association SNR threshold (linear).
    pub eta: f64,
    /// Maximum cluster size.
    pub q_max: usize,
    /// Rate-allocation window N.
    pub memory: usize,
    /// Start-up slots N_init.
    pub n_init: usize,
    pub v: f64,
    /// Arrival cap. When unset it is frozen after start-up at the best
    /// allocated rate times `1 - tau_p / T`.
    pub a_max: Option<f64>,
    pub policy: Policy,
    /// Main-loop slot limit T_s.
    pub slots: usize,
    /// Stop queue-driven policies once their queues are steady.
    pub stop_at_steady_state: bool,
    /// Main-loop slots for queue-free policies when stopping at steady state.
    pub baseline_slots: usize,
    pub steady_window: usize,
    pub steady_tol: f64,
    /// Topologies per scheduler comparison.
    pub layouts: usize,
    /// Topologies per load-sweep point.
    pub sweep_layouts: usize,
    /// All-active main-loop slots per load-sweep point.
    pub sweep_slots: usize,
    pub seed: u64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    /// Floor applied to throughputs inside the sum-log metric.
    pub log_floor: f64,
    pub trace_queues: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ru_rows: 3,
            ru_cols: 4,
            antennas: 8,
            area_side: 50.0,
            k_tot: 100,
            k_act: 40,
            tau_p: 20,
            coherence: 200,
            delta: PI / 8.0,
            eta: 1.0,
            q_max: 10,
            memory: 100,
            n_init: 500,
            v: 10_000.0,
            a_max: None,
            policy: Policy::Hfs,
            slots: 20_000,
            stop_at_steady_state: true,
            baseline_slots: 2_000,
            steady_window: 500,
            steady_tol: 0.05,
            layouts: 5,
            sweep_layouts: 50,
            sweep_slots: 500,
            seed: 1,
            bandwidth_hz: 10e6,
            noise_psd_dbm_hz: -174.0,
            log_floor: 1e-3,
            trace_queues: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("ru_rows", self.ru_rows),
            ("ru_cols", self.ru_cols),
            ("antennas", self.antennas),
            ("k_tot", self.k_tot),
            ("k_act", self.k_act),
            ("tau_p", self.tau_p),
            ("q_max", self.q_max),
            ("memory", self.memory),
            ("n_init", self.n_init),
            ("slots", self.slots),
            ("baseline_slots", self.baseline_slots),
            ("steady_window", self.steady_window),
            ("layouts", self.layouts),
            ("sweep_layouts", self.sweep_layouts),
            ("sweep_slots", self.sweep_slots),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::ZeroCount(name));
        }
        if self.tau_p >= self.coherence {
            return Err(ConfigError::PilotTooLong {
                tau_p: self.tau_p,
                coherence: self.coherence,
            });
        }
        if self.k_act > self.k_tot {
            return Err(ConfigError::TooManyActive {
                k_act: self.k_act,
                k_tot: self.k_tot,
            });
        }
        let positive = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange {
                    name,
                    value,
                    expected: "finite and > 0",
                })
            }
        };
        positive("area_side", self.area_side)?;
        positive("eta", self.eta)?;
        positive("v", self.v)?;
        positive("steady_tol", self.steady_tol)?;
        positive("log_floor", self.log_floor)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        if let Some(a) = self.a_max {
            positive("a_max", a)?;
        }
        if !(self.delta > 0.0 && self.delta <= TAU) {
            return Err(ConfigError::OutOfRange {
                name: "delta",
                value: self.delta,
                expected: "(0, 2 pi]",
            });
        }
        Ok(())
    }

    pub fn num_rus(&self) -> usize {
        self.ru_rows * self.ru_cols
    }

    pub fn area(&self) -> f64 {
        self.area_side * self.area_side
    }

    /// Per-symbol SNR after normalization.
    pub fn snr(&self) -> f64 {
        snr_for_area(self.area(), self.num_rus(), self.antennas)
    }

    pub fn reference_distance(&self) -> f64 {
        reference_distance(self.area(), self.num_rus())
    }

    pub fn normalization_distance(&self) -> f64 {
        normalization_distance(self.area(), self.num_rus())
    }

    /// Physical UE transmit power `SNR * N0 * W` in dBm.
    pub fn tx_power_dbm(&self) -> f64 {
        10.0 * self.snr().log10() + self.noise_psd_dbm_hz + 10.0 * self.bandwidth_hz.log10()
    }

    /// Pilot overhead factor `1 - tau_p / T`.
    pub fn spectral_efficiency_factor(&self) -> f64 {
        1.0 - self.tau_p as f64 / self.coherence as f64
    }

    pub fn layout_seed(&self, layout: usize) -> u64 {
        self.seed ^ layout as u64
    }

    /// All-active configuration for one load-sweep point.
    pub fn load_point(&self, k: usize, tau_p: usize) -> SimConfig {
        SimConfig {
            k_tot: k,
            k_act: k,
            tau_p,
            policy: Policy::Random,
            slots: self.sweep_slots,
            stop_at_steady_state: false,
            layouts: self.sweep_layouts,
            ..self.clone()
        }
    }

    /// Number of main-loop slots this configuration may run.
    pub fn slot_budget(&self) -> usize {
        if self.stop_at_steady_state && !self.policy.uses_queues() {
            self.baseline_slots
        } else {
            self.slots
        }
    }
}
