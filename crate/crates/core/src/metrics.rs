//! Throughput statistics over the layouts of an experiment.

use crate::engine::LayoutOutcome;
use serde::Serialize;

/// Lower empirical quantile: the smallest value whose CDF reaches `q`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Empirical CDF points `(value, fraction <= value)` of a sample.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as f64 / n))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub layouts: usize,
    pub ues: usize,
    /// Mean over layouts of the per-layout sum throughput.
    pub sum_throughput: f64,
    pub sum_throughput_per_layout: Vec<f64>,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub mean: f64,
    /// Smallest throughput among covered UEs.
    pub min_covered: f64,
    /// Mean over layouts of `sum_k log2(max(R_k, floor))`.
    pub sum_log: f64,
    pub log_floor: f64,
    /// UEs whose throughput was raised to the floor inside `sum_log`.
    pub floored: usize,
    pub zero_throughput: usize,
    pub zero_throughput_covered: usize,
    pub uncovered: usize,
    /// Mean main-loop slots to steady state over layouts that got there.
    pub mean_steady_slot: Option<f64>,
}

/// Summarizes pooled per-UE throughputs. Uncovered UEs count with zero
/// throughput everywhere except `min_covered` and `zero_throughput_covered`.
pub fn summarize(outcomes: &[LayoutOutcome], log_floor: f64) -> Summary {
    assert!(!outcomes.is_empty(), "nothing to summarize");
    let pooled: Vec<f64> = outcomes.iter().flat_map(|o| o.throughput.iter().copied()).collect();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let covered_vals = outcomes
        .iter()
        .flat_map(|o| o.throughput.iter().zip(&o.covered).filter(|(_, &c)| c).map(|(&t, _)| t));
    let min_covered = covered_vals.clone().fold(f64::INFINITY, f64::min);
    let zero_throughput_covered = covered_vals.filter(|&t| t == 0.0).count();

    let per_layout: Vec<f64> = outcomes.iter().map(LayoutOutcome::sum_throughput).collect();
    let sum_log = outcomes
        .iter()
        .map(|o| o.throughput.iter().map(|&t| t.max(log_floor).log2()).sum::<f64>())
        .sum::<f64>()
        / outcomes.len() as f64;
    let steady: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.steady_slot)
        .map(|s| s as f64)
        .collect();

    Summary {
        layouts: outcomes.len(),
        ues: pooled.len(),
        sum_throughput: per_layout.iter().sum::<f64>() / outcomes.len() as f64,
        sum_throughput_per_layout: per_layout,
        p10: quantile(&sorted, 0.1),
        p50: quantile(&sorted, 0.5),
        p90: quantile(&sorted, 0.9),
        mean: pooled.iter().sum::<f64>() / pooled.len() as f64,
        min_covered,
        sum_log,
        log_floor,
        floored: pooled.iter().filter(|&&t| t < log_floor).count(),
        zero_throughput: pooled.iter().filter(|&&t| t == 0.0).count(),
        zero_throughput_covered,
        uncovered: outcomes.iter().flat_map(|o| &o.covered).filter(|&&c| !c).count(),
        mean_steady_slot: (!steady.is_empty()).then(|| steady.iter().sum::<f64>() / steady.len() as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(throughput: Vec<f64>) -> LayoutOutcome {
        LayoutOutcome {
            layout: 0,
            seed: 0,
            covered: vec![true; throughput.len()],
            throughput,
            slots: 1,
            steady_slot: None,
            a_max: 1.0,
            memory: Vec::new(),
            queue_trace: None,
        }
    }

    #[test]
    fn singleton() {
        let s = summarize(&[outcome(vec![2.0])], 1e-3);
        assert_eq!(s.sum_throughput, 2.0);
        assert_eq!(s.sum_log, 1.0);
        assert_eq!(s.p10, 2.0);
    }

    #[test]
    fn sum_log_is_averaged_over_layouts() {
        let s = summarize(&[outcome(vec![2.0, 4.0]), outcome(vec![8.0, 8.0])], 1e-3);
        assert!((s.sum_log - (3.0 + 6.0) / 2.0).abs() < 1e-12);
        assert!((s.sum_throughput - 11.0).abs() < 1e-12);
    }

    #[test]
    fn zeros_are_floored_and_counted() {
        let mut o = outcome(vec![0.0, 1.0, 0.0]);
        o.covered[2] = false;
        let s = summarize(&[o], 1e-3);
        assert_eq!(s.floored, 2);
        assert_eq!(s.zero_throughput, 2);
        assert_eq!(s.zero_throughput_covered, 1);
        assert_eq!(s.uncovered, 1);
        assert!((s.sum_log - 2.0 * (1e-3f64).log2()).abs() < 1e-12);
        assert_eq!(s.min_covered, 0.0);
    }

    #[test]
    fn quantiles() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.1), 1.0);
        assert_eq!(quantile(&v, 0.5), 5.0);
        assert_eq!(quantile(&v, 1.0), 10.0);
        let cdf = empirical_cdf(&[3.0, 1.0]);
        assert_eq!(cdf, vec![(1.0, 0.5), (3.0, 1.0)]);
    }
}
