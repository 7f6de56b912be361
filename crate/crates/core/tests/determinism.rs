use std::path::PathBuf;

use scalelab_core::autoscalers::PolicyKind;
use scalelab_core::telemetry::export::{decisions_csv, summary_csv, timeseries_csv};
use scalelab_core::{run_scenario, scenario, AutoscalerSpec, ScenarioConfig};

fn short(policy: PolicyKind, seed: u64) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets/paper-evaluation.json");
    let mut sc = scenario::load(&p).unwrap();
    sc.duration_ms = 300_000;
    sc.seed = seed;
    sc.autoscaler = AutoscalerSpec {
        policy,
        params: serde_json::Value::Null,
    };
    sc
}

#[test]
fn same_seed_gives_identical_outputs() {
    for kind in PolicyKind::SIX {
        let sc = short(kind, 42);
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        assert_eq!(timeseries_csv(&a), timeseries_csv(&b), "{}", kind.as_str());
        assert_eq!(summary_csv(&a), summary_csv(&b), "{}", kind.as_str());
        assert_eq!(decisions_csv(&a), decisions_csv(&b), "{}", kind.as_str());
    }
}

#[test]
fn seed_changes_the_arrivals() {
    let a = run_scenario(&short(PolicyKind::Khpa, 1)).unwrap();
    let b = run_scenario(&short(PolicyKind::Khpa, 2)).unwrap();
    assert_ne!(a.requests, b.requests);
}
