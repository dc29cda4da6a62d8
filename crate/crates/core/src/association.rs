//! UE–RU association graph, pilot assignment with subspace-aware reuse, and
//! subspace-projection channel estimation.

use crate::channel::{complex_gaussian, AngularSupports, ChannelRealization, DftBasis, LargeScaleState};
use num_complex::Complex64;
use rand::Rng;

/// Bipartite UE–RU graph. `clusters[k]` lists the RUs serving UE `k` in
/// decreasing LSFC order; `served[l]` lists the UEs of RU `l` in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationGraph {
    pub num_rus: usize,
    pub num_ues: usize,
    pub clusters: Vec<Vec<usize>>,
    pub served: Vec<Vec<usize>>,
    member: Vec<bool>,
}

impl AssociationGraph {
    pub fn from_clusters(num_rus: usize, clusters: Vec<Vec<usize>>) -> Self {
        let num_ues = clusters.len();
        let mut served = vec![Vec::new(); num_rus];
        let mut member = vec![false; num_rus * num_ues];
        for (ue, cluster) in clusters.iter().enumerate() {
            for &ru in cluster {
                served[ru].push(ue);
                member[ru * num_ues + ue] = true;
            }
        }
        Self {
            num_rus,
            num_ues,
            clusters,
            served,
            member,
        }
    }

    #[inline]
    pub fn has_edge(&self, ru: usize, ue: usize) -> bool {
        self.member[ru * self.num_ues + ue]
    }

    pub fn is_covered(&self, ue: usize) -> bool {
        !self.clusters[ue].is_empty()
    }

    pub fn covered_mask(&self) -> Vec<bool> {
        (0..self.num_ues).map(|k| self.is_covered(k)).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.served
            .iter()
            .enumerate()
            .flat_map(|(ru, ues)| ues.iter().map(move |&ue| (ru, ue)))
    }

    /// The graph seen in a slot: edges of inactive UEs removed.
    pub fn restrict(&self, active: &[bool]) -> Self {
        let clusters = self
            .clusters
            .iter()
            .zip(active)
            .map(|(c, &a)| if a { c.clone() } else { Vec::new() })
            .collect();
        Self::from_clusters(self.num_rus, clusters)
    }

    /// Checks that the cluster, served-set and edge views agree.
    pub fn is_consistent(&self) -> bool {
        let from_clusters = self.clusters.iter().enumerate().all(|(ue, c)| {
            c.iter()
                .all(|&ru| self.served[ru].contains(&ue) && self.has_edge(ru, ue))
        });
        let from_served = self
            .served
            .iter()
            .enumerate()
            .all(|(ru, s)| s.iter().all(|&ue| self.clusters[ue].contains(&ru)));
        let edge_count = self.member.iter().filter(|&&b| b).count();
        let cluster_edges: usize = self.clusters.iter().map(Vec::len).sum();
        let served_edges: usize = self.served.iter().map(Vec::len).sum();
        from_clusters && from_served && edge_count == cluster_edges && edge_count == served_edges
    }
}

/// Associates every UE with the RUs whose LSFC reaches `eta / (M * SNR)`,
/// keeping at most `q_max` of them (largest LSFC first, lower RU index on
/// ties). UEs with an empty cluster are uncovered.
pub fn form_clusters(large_scale: &LargeScaleState, eta: f64, q_max: usize, m: usize) -> AssociationGraph {
    assert!(eta > 0.0 && q_max >= 1);
    let threshold = eta / (m as f64 * large_scale.snr);
    let clusters = (0..large_scale.num_ues)
        .map(|ue| {
            let mut rus: Vec<usize> = (0..large_scale.num_rus)
                .filter(|&ru| large_scale.beta(ru, ue) >= threshold)
                .collect();
            rus.sort_by(|&a, &b| {
                large_scale
                    .beta(b, ue)
                    .total_cmp(&large_scale.beta(a, ue))
                    .then(a.cmp(&b))
            });
            rus.truncate(q_max);
            rus
        })
        .collect();
    let graph = AssociationGraph::from_clusters(large_scale.num_rus, clusters);
    for ue in (0..graph.num_ues).filter(|&k| !graph.is_covered(k)) {
        log::debug!("UE {ue} has no RU above the association threshold");
    }
    graph
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotFallback {
    pub ue: usize,
    pub pilot: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotAssignment {
    pub tau_p: usize,
    pub pilot_of: Vec<Option<usize>>,
    /// UEs that could not satisfy the reuse condition on any pilot.
    pub fallbacks: Vec<PilotFallback>,
}

impl PilotAssignment {
    /// Active UEs holding `pilot`, in index order.
    pub fn users_of(&self, pilot: usize) -> Vec<usize> {
        (0..self.pilot_of.len())
            .filter(|&k| self.pilot_of[k] == Some(pilot))
            .collect()
    }

    /// True when every co-pilot pair sharing a serving RU has disjoint
    /// supports there, except for UEs placed by the fallback path.
    pub fn is_valid(&self, graph: &AssociationGraph, supports: &AngularSupports) -> bool {
        let fell_back = |k: usize| self.fallbacks.iter().any(|f| f.ue == k);
        graph.served.iter().enumerate().all(|(ru, ues)| {
            ues.iter().enumerate().all(|(i, &a)| {
                ues[i + 1..].iter().all(|&b| {
                    self.pilot_of[a].is_none()
                        || self.pilot_of[a] != self.pilot_of[b]
                        || supports.disjoint(ru, a, b)
                        || fell_back(a)
                        || fell_back(b)
                })
            })
        })
    }
}

/// Greedy pilot assignment for the active UEs.
///
/// UEs are visited by decreasing strongest LSFC. Each takes the least-used
/// pilot among those where every already-placed co-pilot UE sharing one of
/// its serving RUs has a disjoint angular support at that RU (lowest index on
/// ties). If no pilot qualifies, it takes the pilot with the smallest
/// contamination score, the sum over conflicting RUs of support overlap
/// times the contaminating UE's LSFC.
pub fn assign_pilots(
    graph: &AssociationGraph,
    supports: &AngularSupports,
    large_scale: &LargeScaleState,
    active: &[usize],
    tau_p: usize,
) -> PilotAssignment {
    assert!(tau_p >= 1);
    let mut order: Vec<usize> = active.to_vec();
    let mut max_beta = vec![0.0; graph.num_ues];
    for &k in active {
        max_beta[k] = large_scale.max_beta(k);
    }
    order.sort_by(|&a, &b| max_beta[b].total_cmp(&max_beta[a]).then(a.cmp(&b)));

    let mut pilot_of = vec![None; graph.num_ues];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); tau_p];
    let mut fallbacks = Vec::new();

    for &ue in &order {
        let conflicts = |pilot: usize| {
            graph.clusters[ue].iter().any(|&ru| {
                users[pilot]
                    .iter()
                    .any(|&j| graph.has_edge(ru, j) && !supports.disjoint(ru, ue, j))
            })
        };
        let feasible = (0..tau_p)
            .filter(|&p| !conflicts(p))
            .min_by_key(|&p| (users[p].len(), p));
        let pilot = match feasible {
            Some(p) => p,
            None => {
                let score = |pilot: usize| -> f64 {
                    graph.clusters[ue]
                        .iter()
                        .map(|&ru| {
                            users[pilot]
                                .iter()
                                .filter(|&&j| graph.has_edge(ru, j))
                                .map(|&j| supports.overlap_fraction(ru, ue, j) * large_scale.beta(ru, j))
                                .sum::<f64>()
                        })
                        .sum()
                };
                let (p, s) = (0..tau_p)
                    .map(|p| (p, score(p)))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                    .expect("tau_p >= 1");
                log::trace!("UE {ue}: no orthogonal pilot, reusing {p} with contamination score {s:e}");
                fallbacks.push(PilotFallback { ue, pilot: p, score: s });
                p
            }
        };
        pilot_of[ue] = Some(pilot);
        users[pilot].push(ue);
    }
    PilotAssignment {
        tau_p,
        pilot_of,
        fallbacks,
    }
}

/// Per-edge channel estimates, stored in the same layout as the channel
/// matrix. Blocks of non-edges are zero.
pub type ChannelEstimates = ChannelRealization;

/// Subspace-projection estimation from orthogonal length-`tau_p` pilots.
///
/// RU `l` observes, for pilot `p`, the sum of the channels of all active
/// UEs holding `p` plus noise of variance `1 / (tau_p * snr)` per antenna.
/// The estimate for edge `(l, k)` projects that observation onto the span
/// of `F(:, S_{l,k})`. An infinite `snr` gives noiseless observations.
#[allow(clippy::too_many_arguments)]
pub fn estimate_channels<R: Rng + ?Sized>(
    channel: &ChannelRealization,
    assignment: &PilotAssignment,
    graph: &AssociationGraph,
    supports: &AngularSupports,
    dft: &DftBasis,
    snr: f64,
    tau_p: usize,
    rng: &mut R,
) -> ChannelEstimates {
    let m = channel.antennas;
    let noise_std = (1.0 / (tau_p as f64 * snr)).sqrt();
    let mut est = ChannelRealization::zeros(channel.num_rus, m, channel.num_ues);
    est.active = channel.active.clone();

    let mut users: Vec<Vec<usize>> = vec![Vec::new(); assignment.tau_p];
    for (k, p) in assignment.pilot_of.iter().enumerate() {
        if let Some(p) = p {
            users[*p].push(k);
        }
    }
    let mut y = vec![Complex64::new(0.0, 0.0); m];
    let mut targets = Vec::new();
    for ru in 0..channel.num_rus {
        for (pilot, holders) in users.iter().enumerate() {
            targets.clear();
            targets.extend(holders.iter().copied().filter(|&k| graph.has_edge(ru, k)));
            if targets.is_empty() {
                continue;
            }
            y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for &j in holders {
                for (v, h) in y.iter_mut().zip(channel.block(ru, j)) {
                    *v += h;
                }
            }
            if noise_std > 0.0 {
                for v in y.iter_mut() {
                    *v += complex_gaussian(rng) * noise_std;
                }
            }
            log::trace!("RU {ru} pilot {pilot}: {} co-pilot UEs", holders.len());
            for &k in &targets {
                dft.project(supports.get(ru, k), &y, est.block_mut(ru, k));
            }
        }
    }
    est
}
