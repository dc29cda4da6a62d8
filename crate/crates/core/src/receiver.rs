//! Two-stage uplink combining.
//!
//! Every RU runs a local MMSE filter over the estimates of the active UEs it
//! serves, normalized to unit norm. The cluster of each UE then weights its
//! RUs' filter outputs to maximize the SINR computable from the estimates it
//! knows, and the resulting aggregate receiver is scaled to unit norm. The
//! instantaneous SINR is always evaluated against the true channel.

use crate::association::{AssociationGraph, ChannelEstimates};
use crate::channel::{AngularSupports, ChannelRealization, DftBasis};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `(I / snr + sum_j g_j g_j^H) x = rhs_i` for every right-hand side.
fn regularized_solve(vectors: &[&[Complex64]], rhs: &[&[Complex64]], dim: usize, snr: f64) -> Vec<Vec<Complex64>> {
    assert!(snr > 0.0 && snr.is_finite(), "regularizer needs a finite positive SNR");
    let mut a = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(1.0 / snr, 0.0);
    let mut nz = Vec::with_capacity(dim);
    for g in vectors {
        // Zero entries contribute nothing, and gain vectors are mostly zero.
        nz.clear();
        nz.extend((0..dim).filter(|&i| g[i] != ZERO));
        for &c in &nz {
            let gc = g[c].conj();
            for &r in &nz {
                a[(r, c)] += g[r] * gc;
            }
        }
    }
    let chol = a.cholesky().expect("regularized Gram matrix is positive definite");
    rhs.iter()
        .map(|b| chol.solve(&DVector::from_column_slice(b)).as_slice().to_vec())
        .collect()
}

/// Unit-norm local MMSE combiners at one RU, one per served active UE, in
/// the order of `estimates`. A zero estimate yields a zero combiner.
pub fn local_mmse(estimates: &[&[Complex64]], snr: f64) -> Vec<Vec<Complex64>> {
    let Some(first) = estimates.first() else {
        return Vec::new();
    };
    let dim = first.len();
    regularized_solve(estimates, estimates, dim, snr)
        .into_iter()
        .map(|mut v| {
            let n = norm(&v);
            if n > 0.0 {
                v.iter_mut().for_each(|z| *z /= n);
            }
            v
        })
        .collect()
}

/// Per-RU combining weights for one cluster.
///
/// `desired[i]` is the effective gain `v_i^H h_hat_{i,k}` of the UE itself
/// at the i-th cluster RU; `interferers` holds the same gains for the other
/// UEs known to the cluster. The weights maximize the nominal SINR
/// `|w^H g_k|^2 / (|w|^2 / snr + sum_j |w^H g_j|^2)`; the maximizer is
/// `w ~ (I / snr + sum_j g_j g_j^H)^{-1} g_k`. Returned with unit norm and
/// the phase chosen so that `w^H g_k` is real and positive.
pub fn cluster_weights(desired: &[Complex64], interferers: &[Vec<Complex64>], snr: f64) -> Vec<Complex64> {
    let n = desired.len();
    if n == 0 {
        return Vec::new();
    }
    if norm(desired) == 0.0 {
        log::debug!("cluster has no desired signal gain, using equal weights");
        return vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    }
    let refs: Vec<&[Complex64]> = interferers.iter().map(Vec::as_slice).collect();
    let mut w = regularized_solve(&refs, &[desired], n, snr).pop().unwrap();
    let scale = norm(&w);
    let phase = dot_conj(&w, desired);
    let rot = phase / phase.norm();
    w.iter_mut().for_each(|z| *z = *z * rot / scale);
    w
}

/// SINR of a weight vector against the cluster's nominal gains.
pub fn nominal_sinr(w: &[Complex64], desired: &[Complex64], interferers: &[Vec<Complex64>], snr: f64) -> f64 {
    let signal = dot_conj(w, desired).norm_sqr();
    let noise = w.iter().map(|z| z.norm_sqr()).sum::<f64>() / snr;
    let interference: f64 = interferers.iter().map(|g| dot_conj(w, g).norm_sqr()).sum();
    signal / (noise + interference)
}

/// Aggregate receiver of one UE: its non-zero blocks `w_l v_l` for the RUs
/// of its cluster. The stacked vector has unit norm.
#[derive(Debug, Clone)]
pub struct AggregateReceiver {
    pub ue: usize,
    pub rus: Vec<usize>,
    pub blocks: Vec<Vec<Complex64>>,
}

impl AggregateReceiver {
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| norm(b).powi(2)).sum::<f64>().sqrt()
    }

    /// `v^H h_j` against column `j` of the channel matrix.
    pub fn response(&self, channel: &ChannelRealization, ue: usize) -> Complex64 {
        self.rus
            .iter()
            .zip(&self.blocks)
            .map(|(&ru, b)| dot_conj(b, channel.block(ru, ue)))
            .sum()
    }

    /// The full `LM` vector.
    pub fn to_dense(&self, num_rus: usize, antennas: usize) -> Vec<Complex64> {
        let mut v = vec![ZERO; num_rus * antennas];
        for (&ru, b) in self.rus.iter().zip(&self.blocks) {
            v[ru * antennas..(ru + 1) * antennas].copy_from_slice(b);
        }
        v
    }

    /// SINR against the true channel, interference summed over `active`.
    pub fn sinr(&self, channel: &ChannelRealization, active: &[usize], snr: f64) -> f64 {
        let signal = self.response(channel, self.ue).norm_sqr();
        let interference: f64 = active
            .iter()
            .filter(|&&j| j != self.ue)
            .map(|&j| self.response(channel, j).norm_sqr())
            .sum();
        signal / (1.0 / snr + interference)
    }
}

/// SINR of an arbitrary unit-norm `LM` receiver for UE `ue`, with
/// interference summed over every other column of the channel matrix.
pub fn sinr_dense(v: &[Complex64], channel: &ChannelRealization, ue: usize, snr: f64) -> f64 {
    let signal = dot_conj(v, channel.column(ue)).norm_sqr();
    let interference: f64 = (0..channel.num_ues)
        .filter(|&j| j != ue)
        .map(|j| dot_conj(v, channel.column(j)).norm_sqr())
        .sum();
    signal / (1.0 / snr + interference)
}

/// Instantaneous mutual information in bit/s/Hz.
pub fn mutual_information(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// Builds the aggregate receivers of all active UEs in a slot. `graph` must
/// already be restricted to the active set.
pub fn build_receivers(
    graph: &AssociationGraph,
    estimates: &ChannelEstimates,
    active: &[usize],
    snr: f64,
) -> Vec<AggregateReceiver> {
    let (l, m, k_tot) = (graph.num_rus, estimates.antennas, graph.num_ues);

    // Local combiners v_{l,k}, stored like a channel matrix.
    let mut local = ChannelRealization::zeros(l, m, k_tot);
    for ru in 0..l {
        let served = &graph.served[ru];
        if served.is_empty() {
            continue;
        }
        let est: Vec<&[Complex64]> = served.iter().map(|&k| estimates.block(ru, k)).collect();
        for (&k, v) in served.iter().zip(local_mmse(&est, snr)) {
            local.block_mut(ru, k).copy_from_slice(&v);
        }
    }

    let mut seen = vec![false; k_tot];
    active
        .iter()
        .map(|&ue| {
            let cluster = &graph.clusters[ue];
            let desired: Vec<Complex64> = cluster
                .iter()
                .map(|&ru| dot_conj(local.block(ru, ue), estimates.block(ru, ue)))
                .collect();

            let mut others = Vec::new();
            for &ru in cluster {
                for &j in &graph.served[ru] {
                    if j != ue && !seen[j] {
                        seen[j] = true;
                        others.push(j);
                    }
                }
            }
            others.iter().for_each(|&j| seen[j] = false);
            let interferers: Vec<Vec<Complex64>> = others
                .iter()
                .map(|&j| {
                    cluster
                        .iter()
                        .map(|&ru| {
                            if graph.has_edge(ru, j) {
                                dot_conj(local.block(ru, ue), estimates.block(ru, j))
                            } else {
                                ZERO
                            }
                        })
                        .collect()
                })
                .collect();

            let w = cluster_weights(&desired, &interferers, snr);
            let mut blocks: Vec<Vec<Complex64>> = cluster
                .iter()
                .zip(&w)
                .map(|(&ru, wl)| local.block(ru, ue).iter().map(|v| wl * v).collect())
                .collect();
            let n = blocks.iter().map(|b| norm(b).powi(2)).sum::<f64>().sqrt();
            if n > 0.0 {
                blocks.iter_mut().flatten().for_each(|z| *z /= n);
            }
            AggregateReceiver {
                ue,
                rus: cluster.clone(),
                blocks,
            }
        })
        .collect()
}

/// Per RU and DFT column, the `(ue, coefficient)` pairs of every block with
/// that column in its support.
type BeamLists = Vec<Vec<Vec<(usize, Complex64)>>>;

/// SINRs of the active UEs (same order as `active`) for the same two-stage
/// receiver as [`build_receivers`], computed in the angular domain.
///
/// Every channel and estimate block must lie in the span of the DFT columns
/// of its support. The unitary DFT preserves inner products, so the local
/// filters can be solved on support coefficients, and an inner product with
/// a block only involves the columns of its support.
#[allow(clippy::too_many_arguments)]
pub fn subspace_sinrs(
    graph: &AssociationGraph,
    estimates: &ChannelEstimates,
    channel: &ChannelRealization,
    supports: &AngularSupports,
    dft: &DftBasis,
    active: &[usize],
    snr: f64,
) -> Vec<f64> {
    let (l, m, k_tot) = (graph.num_rus, dft.m(), graph.num_ues);

    let mut chan: BeamLists = vec![vec![Vec::new(); m]; l];
    let mut est: BeamLists = vec![vec![Vec::new(); m]; l];
    for &ue in active {
        for (ru, beams) in chan.iter_mut().enumerate() {
            let block = channel.block(ru, ue);
            for &n in supports.get(ru, ue) {
                beams[n].push((ue, dot_conj(dft.column(n), block)));
            }
        }
    }
    for (ru, beams) in est.iter_mut().enumerate() {
        for &ue in &graph.served[ru] {
            let block = estimates.block(ru, ue);
            for &n in supports.get(ru, ue) {
                beams[n].push((ue, dot_conj(dft.column(n), block)));
            }
        }
    }

    // Unit-norm local filters in the angular domain, keyed by (ru, ue).
    let mut local: Vec<Vec<Complex64>> = vec![Vec::new(); l * k_tot];
    for ru in 0..l {
        let served = &graph.served[ru];
        if served.is_empty() {
            continue;
        }
        let mut col_of = vec![usize::MAX; k_tot];
        for (i, &k) in served.iter().enumerate() {
            col_of[k] = i;
        }
        // Estimate coefficients, one column per served UE.
        let mut rhs = DMatrix::<Complex64>::zeros(m, served.len());
        for (n, list) in est[ru].iter().enumerate() {
            for &(k, c) in list {
                rhs[(n, col_of[k])] = c;
            }
        }
        let mut a = DMatrix::<Complex64>::identity(m, m) * Complex64::new(1.0 / snr, 0.0);
        for &k in served {
            let s = supports.get(ru, k);
            let col = col_of[k];
            for &nc in s {
                let cc = rhs[(nc, col)].conj();
                for &nr in s {
                    a[(nr, nc)] += rhs[(nr, col)] * cc;
                }
            }
        }
        let chol = a.cholesky().expect("regularized Gram matrix is positive definite");
        chol.solve_mut(&mut rhs);
        for (i, &k) in served.iter().enumerate() {
            let mut v = rhs.column(i).as_slice().to_vec();
            let n = norm(&v);
            if n > 0.0 {
                v.iter_mut().for_each(|z| *z /= n);
            }
            local[ru * k_tot + k] = v;
        }
    }

    let mut row_of = vec![usize::MAX; k_tot];
    let mut resp = vec![ZERO; k_tot];
    active
        .iter()
        .map(|&ue| {
            let cluster = &graph.clusters[ue];
            let q = cluster.len();
            // Effective gains v_{l,ue}^H h_hat_{l,j} of every UE the cluster
            // estimates, zero-free rows only.
            let mut desired = vec![ZERO; q];
            let mut touched: Vec<usize> = Vec::new();
            let mut interferers: Vec<Vec<Complex64>> = Vec::new();
            for (i, &ru) in cluster.iter().enumerate() {
                let v = &local[ru * k_tot + ue];
                for (n, list) in est[ru].iter().enumerate() {
                    if v[n] == ZERO {
                        continue;
                    }
                    let vc = v[n].conj();
                    for &(j, c) in list {
                        if j == ue {
                            desired[i] += vc * c;
                            continue;
                        }
                        if row_of[j] == usize::MAX {
                            row_of[j] = interferers.len();
                            interferers.push(vec![ZERO; q]);
                            touched.push(j);
                        }
                        interferers[row_of[j]][i] += vc * c;
                    }
                }
            }
            touched.iter().for_each(|&j| row_of[j] = usize::MAX);
            interferers.retain(|g| g.iter().any(|z| *z != ZERO));

            let w = cluster_weights(&desired, &interferers, snr);
            let mut blocks: Vec<Vec<Complex64>> = cluster
                .iter()
                .zip(&w)
                .map(|(&ru, wl)| local[ru * k_tot + ue].iter().map(|v| wl * v).collect())
                .collect();
            let n = blocks.iter().map(|b| norm(b).powi(2)).sum::<f64>().sqrt();
            if n > 0.0 {
                blocks.iter_mut().flatten().for_each(|z| *z /= n);
            }

            for (&ru, b) in cluster.iter().zip(&blocks) {
                for (n, list) in chan[ru].iter().enumerate() {
                    if b[n] == ZERO {
                        continue;
                    }
                    let bc = b[n].conj();
                    for &(j, c) in list {
                        resp[j] += bc * c;
                    }
                }
            }
            let signal = resp[ue].norm_sqr();
            let interference: f64 = active.iter().filter(|&&j| j != ue).map(|&j| resp[j].norm_sqr()).sum();
            active.iter().for_each(|&j| resp[j] = ZERO);
            signal / (1.0 / snr + interference)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::form_clusters;
    use crate::channel::{complex_gaussian, LargeScaleState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| complex_gaussian(rng)).collect()
    }

    /// Explicit inverse oracle for the MMSE filter.
    fn mmse_by_inverse(est: &[Vec<Complex64>], k: usize, snr: f64) -> Vec<Complex64> {
        let m = est[0].len();
        let mut a = DMatrix::<Complex64>::identity(m, m) / Complex64::new(snr, 0.0);
        for h in est {
            let v = DVector::from_column_slice(h);
            a += &v * v.adjoint();
        }
        let inv = a.try_inverse().unwrap();
        let v = inv * DVector::from_column_slice(&est[k]);
        let n = v.norm();
        v.as_slice().iter().map(|z| z / n).collect()
    }

    #[test]
    fn single_user_high_snr_is_matched_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = random_vec(8, &mut rng);
        let v = local_mmse(&[&h], 1e9).pop().unwrap();
        let n = norm(&h);
        let corr = dot_conj(&v, &h).norm() / n;
        assert!((corr - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_users_are_nulled() {
        let mut a = vec![ZERO; 4];
        let mut b = vec![ZERO; 4];
        a[0] = Complex64::new(1.0, 0.5);
        a[1] = Complex64::new(-0.3, 0.2);
        b[2] = Complex64::new(0.7, -1.0);
        b[3] = Complex64::new(0.1, 0.4);
        let v = local_mmse(&[&a, &b], 2.0);
        assert!(dot_conj(&v[0], &b).norm() < 1e-14);
        assert!(dot_conj(&v[1], &a).norm() < 1e-14);
    }

    #[test]
    fn mmse_matches_explicit_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let est: Vec<Vec<Complex64>> = (0..3).map(|_| random_vec(8, &mut rng)).collect();
        let refs: Vec<&[Complex64]> = est.iter().map(Vec::as_slice).collect();
        let v = local_mmse(&refs, 3.0);
        for (k, vk) in v.iter().enumerate() {
            let want = mmse_by_inverse(&est, k, 3.0);
            for (a, b) in vk.iter().zip(&want) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_ru_cluster_weight_is_a_phase() {
        let g = [Complex64::new(-0.3, 0.8)];
        let w = cluster_weights(&g, &[vec![Complex64::new(1.0, 1.0)]], 1.0);
        assert!((w[0].norm() - 1.0).abs() < 1e-12);
        let p = dot_conj(&w, &g);
        assert!(p.im.abs() < 1e-12 && p.re > 0.0);
    }

    #[test]
    fn no_interference_gives_mrc() {
        let g = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.0, 3.0),
        ];
        let w = cluster_weights(&g, &[], 5.0);
        let n = norm(&g);
        let corr = dot_conj(&w, &g).norm() / n;
        assert!((corr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimized_weights_beat_equal_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = random_vec(3, &mut rng);
            let ints: Vec<Vec<Complex64>> = (0..2).map(|_| random_vec(3, &mut rng)).collect();
            let w = cluster_weights(&g, &ints, 2.0);
            let eq = vec![Complex64::new(1.0 / 3f64.sqrt(), 0.0); 3];
            assert!(nominal_sinr(&w, &g, &ints, 2.0) >= nominal_sinr(&eq, &g, &ints, 2.0) - 1e-12);
            assert!((norm(&w) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gain_falls_back_to_equal_weights() {
        let w = cluster_weights(&[ZERO, ZERO], &[], 1.0);
        assert!(w.iter().all(|z| (z.re - 0.5f64.sqrt()).abs() < 1e-15));
    }

    fn channel_from(l: usize, m: usize, cols: &[Vec<Complex64>]) -> ChannelRealization {
        let mut h = ChannelRealization::zeros(l, m, cols.len());
        for (k, c) in cols.iter().enumerate() {
            h.column_mut(k).copy_from_slice(c);
            h.active[k] = true;
        }
        h
    }

    #[test]
    fn sinr_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cols: Vec<Vec<Complex64>> = (0..4).map(|_| random_vec(6, &mut rng)).collect();
        let h = channel_from(2, 3, &cols);
        // Orthogonal receiver: zero SINR.
        let mut v = vec![ZERO; 6];
        v[0] = Complex64::new(1.0, 0.0);
        let hz = channel_from(2, 3, &[vec![ZERO; 6], cols[1].clone()]);
        assert_eq!(sinr_dense(&v, &hz, 0, 1.0), 0.0);
        assert_eq!(mutual_information(0.0), 0.0);

        // Single active UE with matched filter.
        let single = channel_from(2, 3, &cols[..1]);
        let n = norm(&cols[0]);
        let mf: Vec<Complex64> = cols[0].iter().map(|z| z / n).collect();
        let s = sinr_dense(&mf, &single, 0, 2.5);
        assert!((s - 2.5 * n * n).abs() < 1e-10);

        // Scalar re-evaluation from raw inner products.
        let v = random_vec(6, &mut rng);
        let nv = norm(&v);
        let v: Vec<Complex64> = v.iter().map(|z| z / nv).collect();
        let mut num = 0.0;
        let mut den = 1.0 / 0.7;
        for (j, c) in cols.iter().enumerate() {
            let mut ip = ZERO;
            for i in 0..6 {
                ip += v[i].conj() * c[i];
            }
            if j == 1 {
                num = ip.norm_sqr();
            } else {
                den += ip.norm_sqr();
            }
        }
        assert!((sinr_dense(&v, &h, 1, 0.7) - num / den).abs() < 1e-12);

        // Sparse evaluation agrees with dense, and phase rotation is harmless.
        let r = AggregateReceiver {
            ue: 1,
            rus: vec![0, 1],
            blocks: vec![v[..3].to_vec(), v[3..].to_vec()],
        };
        assert!((r.sinr(&h, &[0, 1, 2, 3], 0.7) - num / den).abs() < 1e-12);
        let rot = Complex64::from_polar(1.0, 1.3);
        let vr: Vec<Complex64> = v.iter().map(|z| z * rot).collect();
        assert!((sinr_dense(&vr, &h, 1, 0.7) - num / den).abs() < 1e-12);
    }

    /// With perfect CSI on a single RU, local MMSE is the full MMSE receiver,
    /// whose SINR has the closed form `h_k^H (I/snr + sum_{j!=k} h_j h_j^H)^{-1} h_k`.
    #[test]
    fn perfect_csi_single_ru_reaches_mmse_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (m, k) in [(8, 3), (4, 2), (2, 3), (8, 1)] {
            let ls = LargeScaleState::from_beta(1, k, vec![1.0; k], 1.0);
            let graph = form_clusters(&ls, 1.0, 1, m);
            let cols: Vec<Vec<Complex64>> = (0..k).map(|_| random_vec(m, &mut rng)).collect();
            let h = channel_from(1, m, &cols);
            let active: Vec<usize> = (0..k).collect();
            let snr = 1.7;
            let recv = build_receivers(&graph, &h, &active, snr);
            for (ue, r) in recv.iter().enumerate() {
                assert!((r.norm() - 1.0).abs() < 1e-10);
                let mut a = DMatrix::<Complex64>::identity(m, m) / Complex64::new(snr, 0.0);
                for (j, c) in cols.iter().enumerate().filter(|(j, _)| *j != ue) {
                    let _ = j;
                    let v = DVector::from_column_slice(c);
                    a += &v * v.adjoint();
                }
                let hk = DVector::from_column_slice(&cols[ue]);
                let bound = (hk.adjoint() * a.try_inverse().unwrap() * &hk)[(0, 0)].re;
                let got = r.sinr(&h, &active, snr);
                assert!(
                    (got - bound).abs() < 1e-6 * bound.max(1.0),
                    "m={m} k={k}: {got} vs {bound}"
                );
            }
        }
    }

    #[test]
    fn multi_ru_never_exceeds_centralized_mmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (l, m, k) = (2, 4, 3);
        let ls = LargeScaleState::from_beta(l, k, vec![1.0; l * k], 1.0);
        let graph = form_clusters(&ls, 1.0, 10, m);
        for _ in 0..20 {
            let cols: Vec<Vec<Complex64>> = (0..k).map(|_| random_vec(l * m, &mut rng)).collect();
            let h = channel_from(l, m, &cols);
            let active: Vec<usize> = (0..k).collect();
            let recv = build_receivers(&graph, &h, &active, 1.0);
            for (ue, r) in recv.iter().enumerate() {
                let mut a = DMatrix::<Complex64>::identity(l * m, l * m);
                for c in cols.iter().enumerate().filter(|(j, _)| *j != ue).map(|(_, c)| c) {
                    let v = DVector::from_column_slice(c);
                    a += &v * v.adjoint();
                }
                let hk = DVector::from_column_slice(&cols[ue]);
                let bound = (hk.adjoint() * a.try_inverse().unwrap() * &hk)[(0, 0)].re;
                assert!(r.sinr(&h, &active, 1.0) <= bound * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn removing_an_interferer_never_hurts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cols: Vec<Vec<Complex64>> = (0..3).map(|_| random_vec(8, &mut rng)).collect();
        let h = channel_from(2, 4, &cols);
        let r = AggregateReceiver {
            ue: 0,
            rus: vec![0, 1],
            blocks: vec![
                cols[0][..4].iter().map(|z| z / norm(&cols[0])).collect(),
                cols[0][4..].iter().map(|z| z / norm(&cols[0])).collect(),
            ],
        };
        let full = r.sinr(&h, &[0, 1, 2], 1.0);
        let mut reduced = h.clone();
        reduced.column_mut(2).iter_mut().for_each(|z| *z = ZERO);
        assert!(r.sinr(&reduced, &[0, 1, 2], 1.0) >= full);
    }

    #[test]
    fn angular_path_matches_antenna_path() {
        use crate::association::{assign_pilots, estimate_channels};
        use crate::channel::realize_channel;
        use crate::config::SimConfig;
        use crate::engine::Layout;

        for (delta, k_tot) in [(std::f64::consts::PI / 8.0, 40), (1.3, 24)] {
            let config = SimConfig {
                k_tot,
                delta,
                ..SimConfig::default()
            };
            let layout = Layout::generate(&config, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let active: Vec<usize> = (0..k_tot).filter(|k| k % 3 != 1).collect();
            let mut mask = vec![false; k_tot];
            active.iter().for_each(|&k| mask[k] = true);
            let graph = layout.graph.restrict(&mask);
            let pilots = assign_pilots(&graph, &layout.supports, &layout.large_scale, &active, config.tau_p);
            let snr = layout.snr();
            let h = realize_channel(&layout.large_scale, &layout.supports, &layout.dft, &mask, &mut rng);
            let est = estimate_channels(
                &h,
                &pilots,
                &graph,
                &layout.supports,
                &layout.dft,
                snr,
                config.tau_p,
                &mut rng,
            );

            let fast = subspace_sinrs(&graph, &est, &h, &layout.supports, &layout.dft, &active, snr);
            let slow: Vec<f64> = build_receivers(&graph, &est, &active, snr)
                .iter()
                .map(|r| r.sinr(&h, &active, snr))
                .collect();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-8 * b.max(1.0), "delta={delta}: {a} vs {b}");
            }
        }
    }
}
