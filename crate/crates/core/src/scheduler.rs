//! Drift-plus-penalty scheduling with virtual queues, plus baselines.
//!
//! Each slot the fairness policies first choose virtual arrivals by
//! maximizing `V g(a) - sum_k Q_k a_k` over the box `[0, A_max]^K`, then
//! activate the `K_act` UEs with the largest `Q_k E[R_k]`. Queues evolve as
//! `Q_k <- max(Q_k - R_k, 0) + A_k`.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Policy {
    /// Hard fairness: max-min utility.
    Hfs,
    /// Proportional fairness: sum-log utility.
    Pfs,
    Random,
    RoundRobin,
    MaxSumRate,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Hfs,
        Policy::Pfs,
        Policy::Random,
        Policy::RoundRobin,
        Policy::MaxSumRate,
    ];

    /// Whether the policy is driven by virtual queues.
    pub fn uses_queues(self) -> bool {
        matches!(self, Policy::Hfs | Policy::Pfs)
    }

    pub fn name(self) -> &'static str {
        match self {
            Policy::Hfs => "HFS",
            Policy::Pfs => "PFS",
            Policy::Random => "RANDOM",
            Policy::RoundRobin => "ROUND_ROBIN",
            Policy::MaxSumRate => "MAX_SUM_RATE",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown policy `{0}` (expected HFS, PFS, RANDOM, ROUND_ROBIN or MAX_SUM_RATE)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| UnknownPolicy(s.to_string()))
    }
}

/// Proportional-fairness arrivals `min(V / Q_k, A_max)`; an empty queue
/// gets `A_max`.
pub fn arrivals_pfs(queues: &[f64], v: f64, a_max: f64) -> Vec<f64> {
    queues
        .iter()
        .map(|&q| if q > 0.0 { (v / q).min(a_max) } else { a_max })
        .collect()
}

/// Hard-fairness arrivals: everyone gets `A_max` when `V` exceeds the total
/// backlog, nobody otherwise.
pub fn arrivals_hfs(queues: &[f64], v: f64, a_max: f64) -> Vec<f64> {
    let total: f64 = queues.iter().sum();
    let a = if v > total { a_max } else { 0.0 };
    vec![a; queues.len()]
}

/// Sorts eligible UEs by decreasing weight, lower index first on ties, and
/// keeps the first `k_act`.
fn top_by_weight(weights: &[f64], k_act: usize, eligible: &[bool]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..weights.len()).filter(|&k| eligible[k]).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut x = vec![false; weights.len()];
    for &k in order.iter().take(k_act) {
        x[k] = true;
    }
    x
}

/// Max-weight activation: the `k_act` eligible UEs with the largest
/// `Q_k * E[R_k]`.
pub fn select_topk(queues: &[f64], expected_service: &[f64], k_act: usize, eligible: &[bool]) -> Vec<bool> {
    let products: Vec<f64> = queues.iter().zip(expected_service).map(|(q, r)| q * r).collect();
    top_by_weight(&products, k_act, eligible)
}

/// `Q_k <- max(Q_k - R_k, 0) + A_k` for every UE.
pub fn update_queues(queues: &mut [f64], service: &[f64], arrivals: &[f64]) {
    for ((q, r), a) in queues.iter_mut().zip(service).zip(arrivals) {
        *q = (*q - r).max(0.0) + a;
    }
}

/// Mutable scheduling state of one layout.
#[derive(Debug, Clone)]
pub struct SchedulerState {
    pub policy: Policy,
    pub queues: Vec<f64>,
    pub arrivals: Vec<f64>,
    pub v_param: f64,
    pub a_max: f64,
    pub rr_cursor: usize,
    eligible: Vec<bool>,
}

impl SchedulerState {
    pub fn new(policy: Policy, eligible: Vec<bool>, v_param: f64, a_max: f64) -> Self {
        let n = eligible.len();
        Self {
            policy,
            queues: vec![0.0; n],
            arrivals: vec![0.0; n],
            v_param,
            a_max,
            rr_cursor: 0,
            eligible,
        }
    }

    pub fn eligible(&self) -> &[bool] {
        &self.eligible
    }

    /// Solves for this slot's arrivals (queue-driven policies only). Queues
    /// of ineligible UEs never receive arrivals.
    pub fn solve_arrivals(&mut self) {
        if !self.policy.uses_queues() {
            return;
        }
        let mut a = match self.policy {
            Policy::Pfs => arrivals_pfs(&self.queues, self.v_param, self.a_max),
            _ => arrivals_hfs(&self.queues, self.v_param, self.a_max),
        };
        for (a, &e) in a.iter_mut().zip(&self.eligible) {
            if !e {
                *a = 0.0;
            }
        }
        self.arrivals = a;
    }

    /// Activity vector for this slot.
    pub fn select<R: Rng + ?Sized>(&mut self, expected_service: &[f64], k_act: usize, rng: &mut R) -> Vec<bool> {
        match self.policy {
            Policy::Hfs | Policy::Pfs => select_topk(&self.queues, expected_service, k_act, &self.eligible),
            _ => baseline_select(
                self.policy,
                &mut self.rr_cursor,
                expected_service,
                k_act,
                &self.eligible,
                rng,
            ),
        }
    }

    /// Applies the realized service of the slot to the queues.
    pub fn finish_slot(&mut self, service: &[f64]) {
        if self.policy.uses_queues() {
            update_queues(&mut self.queues, service, &self.arrivals);
        }
    }
}

/// Random, round-robin and max-sum-rate activation over the eligible UEs.
///
/// Round robin walks the eligible UEs in index order, wrapping around, and
/// advances the cursor by `k_act`.
pub fn baseline_select<R: Rng + ?Sized>(
    policy: Policy,
    rr_cursor: &mut usize,
    expected_service: &[f64],
    k_act: usize,
    eligible: &[bool],
    rng: &mut R,
) -> Vec<bool> {
    let pool: Vec<usize> = (0..eligible.len()).filter(|&k| eligible[k]).collect();
    let take = k_act.min(pool.len());
    let mut x = vec![false; eligible.len()];
    match policy {
        Policy::Random => {
            for i in index::sample(rng, pool.len(), take) {
                x[pool[i]] = true;
            }
        }
        Policy::RoundRobin => {
            if !pool.is_empty() {
                for i in 0..take {
                    x[pool[(*rr_cursor + i) % pool.len()]] = true;
                }
                *rr_cursor = (*rr_cursor + k_act) % pool.len();
            }
        }
        Policy::MaxSumRate => return top_by_weight(expected_service, k_act, eligible),
        Policy::Hfs | Policy::Pfs => panic!("{policy} is not a baseline policy"),
    }
    x
}
