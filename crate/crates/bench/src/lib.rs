//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use scalelab_core::autoscalers::estimator::EstimatorNode;
use scalelab_core::autoscalers::EstimatorModel;
use scalelab_core::cluster::CpuClaim;
use scalelab_core::{scenario, ScenarioConfig, SeededRng};

/// A shipped preset, shortened to `duration_ms`.
pub fn preset(name: &str, duration_ms: u64) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name);
    let mut sc = scenario::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    sc.duration_ms = duration_ms;
    sc
}

/// `n` contended pods on one node, some unbounded.
pub fn claims(n: usize, seed: u64) -> Vec<CpuClaim> {
    let mut rng = SeededRng::new(seed, "bench-claims");
    (0..n)
        .map(|i| CpuClaim {
            demand_mcores: 200.0 + rng.next_uniform() * 1500.0,
            request_mcores: 100.0 + rng.next_uniform() * 400.0,
            limit_mcores: (i % 3 != 0).then_some(600.0),
        })
        .collect()
}

/// Latency-like samples: a window's worth at a few hundred requests/s.
pub fn samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::new(seed, "bench-samples");
    (0..n)
        .map(|_| -20.0 * (1.0 - rng.next_uniform()).ln())
        .collect()
}

/// The three-service fan-out the search-based policies plan against.
pub fn fan_out_model() -> EstimatorModel {
    let node = |service, demand_ms, children| EstimatorNode {
        service,
        demand_ms,
        children,
    };
    EstimatorModel {
        work_ms: vec![2.0, 4.0, 5.0],
        capacity_mcores: vec![500.0; 3],
        nodes: vec![
            node(0, 2.0, vec![1, 2]),
            node(1, 4.0, vec![]),
            node(2, 5.0, vec![]),
        ],
        slo_ms: 150.0,
    }
}
