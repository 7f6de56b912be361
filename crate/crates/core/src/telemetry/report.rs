use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRecord {
    pub sync_ms: u64,
    pub service: String,
    pub current: u32,
    /// What the policy asked for, before bounds were applied.
    pub target_pre_clamp: i64,
    pub target_actuated: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceRow {
    pub ready: u32,
    pub desired: u32,
    pub utilization: Option<f64>,
    pub p90_observed_ms: Option<f64>,
    /// Mean CPU consumed by the service's pods over the step.
    pub cpu_mcores: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeseriesRow {
    pub step_ms: u64,
    pub services: Vec<ServiceRow>,
    pub p90_observed_ms: Option<f64>,
    pub p90_ground_truth_ms: Option<f64>,
    /// Entry requests that ended in an error response.
    pub status_errors: u64,
    /// Σ of the explicit error counters; stays 0 unless error metrics are emitted.
    pub downstream_errors: u64,
    pub masked_failures: u64,
    pub slo_violations: u64,
    pub ground_truth_violations: u64,
    pub core_minutes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceSummary {
    pub name: String,
    pub max_replicas: u32,
    /// Most pods in the Ready phase at any step end.
    pub max_ready: u32,
    pub final_desired: u32,
    pub restarts: u64,
    pub core_minutes: f64,
    /// Explicit error counters in `ErrorKind::ALL` order.
    pub error_counts: [u64; 4],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LatencySummary {
    pub observed_mean_ms: Option<f64>,
    pub observed_p90_ms: Option<f64>,
    pub ground_truth_mean_ms: Option<f64>,
    pub ground_truth_p90_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub policy: String,
    pub seed: u64,
    pub steps: u64,
    pub duration_ms: u64,
    pub slo_ms: f64,
    pub requests: u64,
    pub finished: u64,
    pub successes: u64,
    pub errors: u64,
    pub masked_failures: u64,
    /// Finished requests that erred or, as the user saw them, took longer than the SLO.
    pub slo_violations: u64,
    /// `slo_violations` plus masked failures that looked fast.
    pub ground_truth_violations: u64,
    pub cpu_core_minutes: f64,
    pub latency: LatencySummary,
    pub services: Vec<ServiceSummary>,
    pub status_errors: u64,
    pub quota_exceeded: u64,
    pub graph_unavailable_syncs: u64,
    pub invariant_violations: Vec<String>,
    pub decisions: Vec<DecisionRecord>,
    /// Call graph as traced over the last window of the run.
    pub call_graph: super::callgraph::CallGraphObservation,
    pub timeseries: Vec<TimeseriesRow>,
    pub requests_log: Vec<crate::app::RequestRecord>,
}

impl RunReport {
    pub fn service(&self, name: &str) -> Option<&ServiceSummary> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.services.iter().position(|s| s.name == name)
    }

    /// Decisions for `service` that asked for more replicas than it had.
    pub fn scale_ups(&self, service: &str) -> usize {
        self.decisions
            .iter()
            .filter(|d| d.service == service && d.target_pre_clamp > i64::from(d.current))
            .count()
    }

    pub fn downstream_error_total(&self) -> u64 {
        self.services.iter().flat_map(|s| s.error_counts).sum()
    }
}
