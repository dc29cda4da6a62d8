use cellfree_core::export::{queue_rows, throughput_rows};
use cellfree_core::{run_experiment, run_layout, summarize, Policy, SimConfig};

fn small(policy: Policy) -> SimConfig {
    SimConfig {
        k_tot: 24,
        k_act: 8,
        n_init: 40,
        memory: 20,
        slots: 150,
        stop_at_steady_state: false,
        layouts: 3,
        policy,
        v: 200.0,
        ..SimConfig::default()
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let config = SimConfig {
        trace_queues: true,
        ..small(Policy::Hfs)
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_experiment(&config).unwrap())
    };
    let one = run(1);
    let many = run(3);
    assert_eq!(one, many);
    for (a, b) in one.layouts.iter().zip(&many.layouts) {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.throughput), bits(&b.throughput));
    }
}

#[test]
fn hfs_total_backlog_stays_near_v() {
    let config = SimConfig {
        trace_queues: true,
        ..small(Policy::Hfs)
    };
    for i in 0..config.layouts {
        let o = run_layout(&config, i);
        let trace = o.queue_trace.unwrap();
        assert_eq!(trace.len(), config.slots);
        let cap = config.v + config.k_tot as f64 * o.a_max;
        for q in &trace {
            assert!(q.iter().all(|&x| x >= 0.0));
            assert!(q.iter().sum::<f64>() <= cap + 1e-9);
        }
    }
}

#[test]
fn baselines_keep_empty_queues_and_uncovered_ues_get_nothing() {
    for policy in [Policy::Random, Policy::RoundRobin, Policy::MaxSumRate] {
        let config = SimConfig {
            trace_queues: true,
            ..small(policy)
        };
        let result = run_experiment(&config).unwrap();
        for o in &result.layouts {
            let trace = o.queue_trace.as_ref().unwrap();
            assert!(queue_rows(trace).all(|r| r.queue == 0.0));
            for (t, c) in o.throughput.iter().zip(&o.covered) {
                assert!(*c || *t == 0.0);
            }
        }
        let rows = throughput_rows(&result.layouts);
        assert_eq!(rows.len(), config.k_tot * config.layouts);
    }
}

#[test]
fn round_robin_serves_every_covered_ue() {
    let result = run_experiment(&small(Policy::RoundRobin)).unwrap();
    let s = summarize(&result.layouts, 1e-3);
    assert_eq!(s.zero_throughput_covered, 0);
}

#[test]
fn stopping_at_steady_state_ends_the_run() {
    let config = SimConfig {
        stop_at_steady_state: true,
        steady_window: 5,
        steady_tol: 10.0,
        slots: 400,
        ..small(Policy::Pfs)
    };
    let o = run_layout(&config, 0);
    assert_eq!(o.steady_slot, Some(10));
    assert_eq!(o.slots, 10);

    let strict = SimConfig {
        steady_tol: 1e-12,
        ..config
    };
    let o = run_layout(&strict, 0);
    assert_eq!(o.steady_slot, None);
    assert_eq!(o.slots, 400);
}

#[test]
fn baselines_use_the_baseline_budget_when_stopping() {
    let config = SimConfig {
        stop_at_steady_state: true,
        baseline_slots: 37,
        ..small(Policy::Random)
    };
    assert_eq!(run_layout(&config, 1).slots, 37);
}
