//! Outage-rate allocation learned from a sliding window of mutual
//! information samples.
//!
//! The allocated rate maximizes `r` times the empirical probability that the
//! mutual information reaches `r`. Only sample values are candidates: between
//! two consecutive samples the success probability is flat, so the product
//! is maximized at the upper end of each step.

use rand::seq::index;
use rand::Rng;
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("no CSI history: rate allocation needs at least one mutual information sample")]
    NoHistory,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateChoice {
    pub rate: f64,
    pub success_prob: f64,
}

impl RateChoice {
    pub const ZERO: Self = Self {
        rate: 0.0,
        success_prob: 0.0,
    };

    pub fn expected_service(&self) -> f64 {
        self.rate * self.success_prob
    }
}

/// Picks the sample value `s` maximizing `s * #{x >= s} / n`; ties go to
/// the smaller rate.
pub fn allocate_rate(samples: &[f64]) -> Result<RateChoice, RateError> {
    if samples.is_empty() {
        return Err(RateError::NoHistory);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut best = RateChoice::ZERO;
    let mut best_obj = f64::NEG_INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i];
        let p = (sorted.len() - i) as f64 / n;
        let obj = s * p;
        if obj > best_obj {
            best_obj = obj;
            best = RateChoice {
                rate: s,
                success_prob: p,
            };
        }
        while i < sorted.len() && sorted[i] == s {
            i += 1;
        }
    }
    Ok(best)
}

/// Realized service rate of one slot. A transmission succeeds only when the
/// allocated rate is strictly below the mutual information; the pilot
/// overhead scales the delivered rate by `1 - tau_p / t_dim`.
pub fn realize_service(rate: f64, mi: f64, scheduled: bool, tau_p: usize, t_dim: usize) -> f64 {
    debug_assert!(t_dim > tau_p);
    if scheduled && rate < mi {
        (1.0 - tau_p as f64 / t_dim as f64) * rate
    } else {
        0.0
    }
}

/// Per-UE windows of the last `capacity` mutual information samples and the
/// rates allocated from them.
#[derive(Debug, Clone)]
pub struct RateMemory {
    capacity: usize,
    samples: Vec<VecDeque<f64>>,
    choices: Vec<RateChoice>,
}

impl RateMemory {
    pub fn new(num_ues: usize, capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            samples: vec![VecDeque::with_capacity(capacity); num_ues],
            choices: vec![RateChoice::ZERO; num_ues],
        }
    }

    pub fn num_ues(&self) -> usize {
        self.samples.len()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends a sample, evicting the oldest when full, and re-allocates.
    pub fn record(&mut self, ue: usize, mi: f64) {
        let buf = &mut self.samples[ue];
        if buf.len() == self.capacity {
            buf.pop_front();
        }
        buf.push_back(mi);
        self.refresh(ue);
    }

    /// Appends without re-allocating; call [`RateMemory::refresh_all`] after.
    pub fn push_raw(&mut self, ue: usize, mi: f64) {
        let buf = &mut self.samples[ue];
        if buf.len() == self.capacity {
            buf.pop_front();
        }
        buf.push_back(mi);
    }

    fn refresh(&mut self, ue: usize) {
        let (a, b) = self.samples[ue].as_slices();
        let window: Vec<f64> = a.iter().chain(b).copied().collect();
        self.choices[ue] = allocate_rate(&window).unwrap_or(RateChoice::ZERO);
    }

    pub fn refresh_all(&mut self) {
        for ue in 0..self.samples.len() {
            self.refresh(ue);
        }
    }

    pub fn samples(&self, ue: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples[ue].iter().copied()
    }

    pub fn sample_count(&self, ue: usize) -> usize {
        self.samples[ue].len()
    }

    pub fn choice(&self, ue: usize) -> RateChoice {
        self.choices[ue]
    }

    pub fn allocated_rate(&self, ue: usize) -> f64 {
        self.choices[ue].rate
    }

    pub fn expected_service(&self, ue: usize) -> f64 {
        self.choices[ue].expected_service()
    }

    pub fn expected_services(&self) -> Vec<f64> {
        self.choices.iter().map(RateChoice::expected_service).collect()
    }

    pub fn allocated_rates(&self) -> Vec<f64> {
        self.choices.iter().map(|c| c.rate).collect()
    }
}

/// Source of mutual information samples: transmits one slot with the given
/// active UEs and reports the realized MI of each, in the same order.
pub trait MiSampler {
    fn sample_slot(&mut self, active: &[usize], slot: u64) -> Vec<f64>;
}

/// Start-up phase: `n_init` slots with `k_act` eligible UEs picked uniformly
/// at random per slot, recording every observed sample. Eligible UEs that
/// were never picked keep a zero rate.
pub fn startup_phase<S: MiSampler, R: Rng + ?Sized>(
    sampler: &mut S,
    eligible: &[bool],
    capacity: usize,
    n_init: usize,
    k_act: usize,
    rng: &mut R,
) -> RateMemory {
    assert!(n_init >= 1);
    let pool: Vec<usize> = (0..eligible.len()).filter(|&k| eligible[k]).collect();
    let mut memory = RateMemory::new(eligible.len(), capacity);
    let take = k_act.min(pool.len());
    for slot in 0..n_init {
        let mut active: Vec<usize> = index::sample(rng, pool.len(), take)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        active.sort_unstable();
        let mi = sampler.sample_slot(&active, slot as u64);
        for (&ue, &v) in active.iter().zip(&mi) {
            memory.push_raw(ue, v);
        }
    }
    memory.refresh_all();
    for &ue in &pool {
        if memory.sample_count(ue) == 0 {
            log::warn!("UE {ue} was never sampled during start-up; its rate stays at zero");
        }
    }
    memory
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn degenerate_distribution() {
        let c = allocate_rate(&[1.7; 5]).unwrap();
        assert_eq!(
            c,
            RateChoice {
                rate: 1.7,
                success_prob: 1.0
            }
        );
        assert_eq!(c.expected_service(), 1.7);
    }

    #[test]
    fn three_point_example() {
        let c = allocate_rate(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.rate, 2.0);
        assert!((c.success_prob - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.expected_service() - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_example() {
        let c = allocate_rate(&[0.5, 4.0]).unwrap();
        assert_eq!(
            c,
            RateChoice {
                rate: 4.0,
                success_prob: 0.5
            }
        );
    }

    #[test]
    fn ties_prefer_smaller_rate() {
        // 1 * 1 == 2 * 1/2.
        let c = allocate_rate(&[1.0, 2.0]).unwrap();
        assert_eq!(c.rate, 1.0);
    }

    #[test]
    fn empty_history_is_an_error() {
        assert_eq!(allocate_rate(&[]), Err(RateError::NoHistory));
    }

    #[test]
    fn service_realization() {
        assert!((realize_service(2.0, 3.0, true, 20, 200) - 1.8).abs() < 1e-15);
        assert_eq!(realize_service(2.0, 2.0, true, 20, 200), 0.0);
        assert_eq!(realize_service(2.0, 3.0, false, 20, 200), 0.0);
    }

    #[test]
    fn window_evicts_oldest() {
        let mut mem = RateMemory::new(1, 100);
        for i in 0..100 {
            mem.record(0, i as f64);
        }
        assert_eq!(mem.sample_count(0), 100);
        mem.record(0, 1000.0);
        assert_eq!(mem.sample_count(0), 100);
        assert_eq!(mem.samples(0).next(), Some(1.0));

        let mut small = RateMemory::new(1, 100);
        small.record(0, 1.0);
        small.record(0, 2.0);
        assert_eq!(small.sample_count(0), 2);
    }

    #[test]
    fn larger_sample_never_lowers_rate_of_flat_window() {
        let mut mem = RateMemory::new(1, 10);
        for _ in 0..9 {
            mem.record(0, 2.0);
        }
        let before = mem.allocated_rate(0);
        mem.record(0, 5.0);
        assert!(mem.allocated_rate(0) >= before);
        assert!(mem.expected_service(0) <= 5.0);
    }

    struct FixedMi;
    impl MiSampler for FixedMi {
        fn sample_slot(&mut self, active: &[usize], _slot: u64) -> Vec<f64> {
            active.iter().map(|&k| 1.0 + k as f64).collect()
        }
    }

    #[test]
    fn startup_with_full_activation_samples_everyone_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mem = startup_phase(&mut FixedMi, &[true; 5], 100, 1, 5, &mut rng);
        assert!((0..5).all(|k| mem.sample_count(k) == 1));
        assert_eq!(mem.allocated_rate(3), 4.0);
    }

    #[test]
    fn startup_sampling_rate_and_determinism() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mem = startup_phase(&mut FixedMi, &[true; 100], 1000, 500, 40, &mut rng);
            (0..100).map(|k| mem.sample_count(k)).collect::<Vec<_>>()
        };
        let counts = run(9);
        assert_eq!(counts, run(9));
        let mean = counts.iter().sum::<usize>() as f64 / 100.0;
        assert!((mean - 200.0).abs() < 1e-9);
        assert!(counts.iter().all(|&c| (150..250).contains(&c)));
    }

    #[test]
    fn startup_skips_ineligible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mem = startup_phase(&mut FixedMi, &[true, false, true], 10, 5, 3, &mut rng);
        assert_eq!(mem.sample_count(1), 0);
        assert_eq!(mem.allocated_rate(1), 0.0);
        assert_eq!(mem.sample_count(0), 5);
    }

    /// Exhaustive oracle: evaluate the strict-success objective right at
    /// every sample value with `>=`, then pick by maximum and smallest rate.
    fn brute(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &s in samples {
            let p = samples.iter().filter(|&&x| x >= s).count() as f64 / n;
            let obj = s * p;
            if obj > best.0 || (obj == best.0 && s < best.1) {
                best = (obj, s);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(samples in prop::collection::vec(0.0..8.0f64, 1..60)) {
            let c = allocate_rate(&samples).unwrap();
            let (obj, rate) = brute(&samples);
            prop_assert_eq!(c.rate, rate);
            prop_assert!((c.expected_service() - obj).abs() < 1e-12);
        }

        #[test]
        fn objective_ignores_duplication(samples in prop::collection::vec(0.0..8.0f64, 1..40)) {
            let twice: Vec<f64> = samples.iter().chain(&samples).copied().collect();
            let a = allocate_rate(&samples).unwrap();
            let b = allocate_rate(&twice).unwrap();
            prop_assert!((a.expected_service() - b.expected_service()).abs() < 1e-12);
        }

        #[test]
        fn service_is_bounded(r in 0.0..10.0f64, mi in 0.0..10.0f64, on: bool) {
            let s = realize_service(r, mi, on, 20, 200);
            prop_assert!(s >= 0.0 && s <= 0.9 * r + 1e-15);
        }
    }
}
