//! Single-ring local scattering channel model with DFT angular subspaces.
//!
//! Each RU–UE block is `h = sqrt(beta * M / |S|) * F_S * nu`, where `F_S`
//! picks the DFT columns in the angular support `S` and `nu` is i.i.d.
//! `CN(0, 1)`. Large-scale state (LSFCs, LOS flags, supports) is fixed per
//! layout; the small-scale part is redrawn every slot.

use crate::geometry::{reference_distance, NetworkTopology};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::Serialize;
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

/// Pathloss intercepts (dB at 1 m) and slopes (dB/decade).
pub const LOS_INTERCEPT_DB: f64 = 30.5;
pub const LOS_SLOPE_DB: f64 = 20.0;
pub const NLOS_INTERCEPT_DB: f64 = 36.7;
pub const NLOS_SLOPE_DB: f64 = 30.0;
pub const LOS_SHADOWING_DB: f64 = 4.0;
pub const NLOS_SHADOWING_DB: f64 = 8.0;

/// Unitary `m x m` DFT matrix, `[F]_{a,b} = exp(-j 2 pi a b / m) / sqrt(m)`.
pub fn dft_matrix(m: usize) -> DMatrix<Complex64> {
    assert!(m >= 1);
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, m, |a, b| {
        // Reduce the exponent mod m first to keep the phase accurate.
        let k = (a * b) % m;
        Complex64::from_polar(scale, -TAU * k as f64 / m as f64)
    })
}

/// DFT columns stored contiguously, so `column(n)` is `F(:, n)`.
#[derive(Debug, Clone)]
pub struct DftBasis {
    m: usize,
    cols: Vec<Complex64>,
}

impl DftBasis {
    pub fn new(m: usize) -> Self {
        let f = dft_matrix(m);
        // nalgebra is column-major, which is exactly the layout we want.
        Self {
            m,
            cols: f.as_slice().to_vec(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn column(&self, n: usize) -> &[Complex64] {
        &self.cols[n * self.m..(n + 1) * self.m]
    }

    /// Orthogonal projection of `y` onto `span(F(:, support))`.
    pub fn project(&self, support: &[usize], y: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for &n in support {
            let col = self.column(n);
            let coef: Complex64 = col.iter().zip(y).map(|(f, v)| f.conj() * v).sum();
            for (o, f) in out.iter_mut().zip(col) {
                *o += f * coef;
            }
        }
    }
}

/// Indices `n` whose quantized angle `2 pi n / m` falls strictly inside the
/// interval of width `delta` centered on `azimuth` (mod 2 pi). When no
/// quantized angle falls inside, the nearest one is used alone.
pub fn angular_support(azimuth: f64, m: usize, delta: f64) -> Vec<usize> {
    assert!(m >= 1 && delta > 0.0 && delta <= TAU);
    let offset = |n: usize| {
        let d = (TAU * n as f64 / m as f64 - azimuth).rem_euclid(TAU);
        if d > PI {
            TAU - d
        } else {
            d
        }
    };
    let inside: Vec<usize> = (0..m).filter(|&n| offset(n) < delta / 2.0).collect();
    if !inside.is_empty() {
        return inside;
    }
    let nearest = (0..m).min_by(|&a, &b| offset(a).total_cmp(&offset(b))).expect("m >= 1");
    vec![nearest]
}

pub fn pathloss_db(distance: f64, los: bool) -> f64 {
    let d = distance.max(1.0);
    if los {
        LOS_INTERCEPT_DB + LOS_SLOPE_DB * d.log10()
    } else {
        NLOS_INTERCEPT_DB + NLOS_SLOPE_DB * d.log10()
    }
}

/// Shadowing-free linear channel gain. Distances below 1 m are clamped.
pub fn pathloss(distance: f64, los: bool) -> f64 {
    10f64.powf(-pathloss_db(distance, los) / 10.0)
}

pub fn los_probability(distance: f64) -> f64 {
    let d = distance.max(1.0);
    let decay = (-d / 36.0).exp();
    (18.0 / d).min(1.0) * (1.0 - decay) + decay
}

/// LOS-probability weighted gain at `distance`.
pub fn expected_pathloss(distance: f64) -> f64 {
    let p = los_probability(distance);
    p * pathloss(distance, true) + (1.0 - p) * pathloss(distance, false)
}

/// Distance at which the SNR normalization is evaluated: three RU radii.
pub fn normalization_distance(area: f64, l: usize) -> f64 {
    3.0 * reference_distance(area, l)
}

/// Per-antenna SNR such that `expected_pathloss(3 d_L) * m * snr == 1`.
pub fn normalize_snr(topology: &NetworkTopology, m: usize) -> f64 {
    snr_for_area(topology.area(), topology.num_rus(), m)
}

pub fn snr_for_area(area: f64, l: usize, m: usize) -> f64 {
    1.0 / (expected_pathloss(normalization_distance(area, l)) * m as f64)
}

/// LSFCs, LOS flags and SNR for one layout. Matrices are indexed `(ru, ue)`
/// and stored row-major by RU.
#[derive(Debug, Clone, Serialize)]
pub struct LargeScaleState {
    pub num_rus: usize,
    pub num_ues: usize,
    pub beta: Vec<f64>,
    pub los: Vec<bool>,
    pub snr: f64,
}

impl LargeScaleState {
    /// Draws LOS flags and log-normal shadowing for every link.
    pub fn generate<R: Rng + ?Sized>(topology: &NetworkTopology, snr: f64, rng: &mut R) -> Self {
        let (l, k) = (topology.num_rus(), topology.num_ues());
        let los_shadow = Normal::new(0.0, LOS_SHADOWING_DB).unwrap();
        let nlos_shadow = Normal::new(0.0, NLOS_SHADOWING_DB).unwrap();
        let mut beta = Vec::with_capacity(l * k);
        let mut los = Vec::with_capacity(l * k);
        for ru in 0..l {
            for ue in 0..k {
                let d = topology.distance(ru, ue);
                let is_los = rng.random::<f64>() < los_probability(d);
                let shadow_db = if is_los {
                    los_shadow.sample(rng)
                } else {
                    nlos_shadow.sample(rng)
                };
                beta.push(10f64.powf(-(pathloss_db(d, is_los) + shadow_db) / 10.0));
                los.push(is_los);
            }
        }
        Self {
            num_rus: l,
            num_ues: k,
            beta,
            los,
            snr,
        }
    }

    /// Builds a state from explicit values, mostly for tests.
    pub fn from_beta(num_rus: usize, num_ues: usize, beta: Vec<f64>, snr: f64) -> Self {
        assert_eq!(beta.len(), num_rus * num_ues);
        Self {
            num_rus,
            num_ues,
            los: vec![true; beta.len()],
            beta,
            snr,
        }
    }

    #[inline]
    pub fn beta(&self, ru: usize, ue: usize) -> f64 {
        self.beta[ru * self.num_ues + ue]
    }

    pub fn max_beta(&self, ue: usize) -> f64 {
        (0..self.num_rus).map(|ru| self.beta(ru, ue)).fold(0.0, f64::max)
    }
}

/// Angular support sets for every `(ru, ue)` pair.
#[derive(Debug, Clone)]
pub struct AngularSupports {
    num_ues: usize,
    m: usize,
    sets: Vec<Vec<usize>>,
}

impl AngularSupports {
    pub fn from_topology(topology: &NetworkTopology, m: usize, delta: f64) -> Self {
        let k = topology.num_ues();
        let sets = (0..topology.num_rus())
            .flat_map(|ru| (0..k).map(move |ue| (ru, ue)))
            .map(|(ru, ue)| angular_support(topology.azimuth(ru, ue), m, delta))
            .collect();
        Self { num_ues: k, m, sets }
    }

    pub fn from_sets(num_rus: usize, num_ues: usize, m: usize, sets: Vec<Vec<usize>>) -> Self {
        assert_eq!(sets.len(), num_rus * num_ues);
        assert!(sets.iter().flatten().all(|&n| n < m));
        Self { num_ues, m, sets }
    }

    #[inline]
    pub fn get(&self, ru: usize, ue: usize) -> &[usize] {
        &self.sets[ru * self.num_ues + ue]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn disjoint(&self, ru: usize, a: usize, b: usize) -> bool {
        let sb = self.get(ru, b);
        !self.get(ru, a).iter().any(|n| sb.contains(n))
    }

    /// Fraction of `a`'s support at `ru` that is shared with `b`.
    pub fn overlap_fraction(&self, ru: usize, a: usize, b: usize) -> f64 {
        let (sa, sb) = (self.get(ru, a), self.get(ru, b));
        sa.iter().filter(|n| sb.contains(n)).count() as f64 / sa.len() as f64
    }
}

/// The stacked `LM x K` channel matrix. Column `k` is contiguous and made of
/// `L` blocks of `M` entries.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub num_rus: usize,
    pub antennas: usize,
    pub num_ues: usize,
    data: Vec<Complex64>,
    pub active: Vec<bool>,
}

impl ChannelRealization {
    pub fn zeros(num_rus: usize, antennas: usize, num_ues: usize) -> Self {
        Self {
            num_rus,
            antennas,
            num_ues,
            data: vec![Complex64::new(0.0, 0.0); num_rus * antennas * num_ues],
            active: vec![false; num_ues],
        }
    }

    #[inline]
    pub fn block(&self, ru: usize, ue: usize) -> &[Complex64] {
        let start = (ue * self.num_rus + ru) * self.antennas;
        &self.data[start..start + self.antennas]
    }

    #[inline]
    pub fn block_mut(&mut self, ru: usize, ue: usize) -> &mut [Complex64] {
        let start = (ue * self.num_rus + ru) * self.antennas;
        &mut self.data[start..start + self.antennas]
    }

    pub fn column(&self, ue: usize) -> &[Complex64] {
        let len = self.num_rus * self.antennas;
        &self.data[ue * len..(ue + 1) * len]
    }

    pub fn column_mut(&mut self, ue: usize) -> &mut [Complex64] {
        let len = self.num_rus * self.antennas;
        &mut self.data[ue * len..(ue + 1) * len]
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws a fresh small-scale realization for the active UEs. Inactive
/// columns are left at zero.
pub fn realize_channel<R: Rng + ?Sized>(
    large_scale: &LargeScaleState,
    supports: &AngularSupports,
    dft: &DftBasis,
    active_mask: &[bool],
    rng: &mut R,
) -> ChannelRealization {
    let m = dft.m();
    let mut h = ChannelRealization::zeros(large_scale.num_rus, m, large_scale.num_ues);
    h.active = active_mask.to_vec();
    for ue in (0..large_scale.num_ues).filter(|&k| active_mask[k]) {
        for ru in 0..large_scale.num_rus {
            let support = supports.get(ru, ue);
            let scale = (large_scale.beta(ru, ue) * m as f64 / support.len() as f64).sqrt();
            let block = h.block_mut(ru, ue);
            for &n in support {
                let nu = complex_gaussian(rng) * scale;
                for (b, f) in block.iter_mut().zip(dft.column(n)) {
                    *b += f * nu;
                }
            }
        }
    }
    h
}
