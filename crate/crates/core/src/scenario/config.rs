use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::app::Topology;
use crate::autoscalers::AutoscalerSpec;
use crate::cluster::{BootProfile, NamespaceQuota, ProbeSet, ResourceSpec};
use crate::gaps::{GapConfig, RemediationSet};
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_ms: u64,
    #[serde(default = "d_step")]
    pub step_ms: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_slo")]
    pub slo_ms: f64,
    #[serde(default = "d_sync")]
    pub sync_period_ms: u64,
    pub cluster: ClusterSpec,
    pub topology: Topology,
    pub deployments: Vec<DeploymentSpec>,
    #[serde(default)]
    pub quotas: Vec<NamespaceQuota>,
    pub workload: WorkloadSpec,
    #[serde(default)]
    pub gaps: GapConfig,
    #[serde(default)]
    pub remediations: RemediationSet,
    #[serde(default)]
    pub autoscaler: AutoscalerSpec,
    #[serde(default)]
    pub telemetry: TelemetrySpec,
    #[serde(default)]
    pub demand: DemandDistribution,
    /// Keep a per-request record (span tree and outcome) in the report.
    #[serde(default)]
    pub record_requests: bool,
    /// Directory relative paths resolve against; set by the loader.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn d_step() -> u64 {
    100
}
fn d_slo() -> f64 {
    150.0
}
fn d_sync() -> u64 {
    15_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub capacity_mcores: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub nodes: Vec<NodeSpec>,
    /// CPU-ms a health check costs a healthy, uncontended pod.
    #[serde(default = "d_health")]
    pub health_check_cost_ms: f64,
    #[serde(default = "d_drain")]
    pub drain_timeout_ms: u64,
}

fn d_health() -> f64 {
    10.0
}
fn d_drain() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentSpec {
    pub service: String,
    #[serde(default = "d_ns")]
    pub namespace: String,
    #[serde(default = "d_min")]
    pub min_replicas: u32,
    #[serde(default = "d_max")]
    pub max_replicas: u32,
    #[serde(default)]
    pub initial_replicas: Option<u32>,
    /// Most replicas added per sync; absent means unlimited.
    #[serde(default)]
    pub scale_up_limit: Option<u32>,
    pub resources: ResourceSpec,
    /// CPU a pod burns with no requests in flight.
    #[serde(default)]
    pub idle_cpu_mcores: f64,
    #[serde(default)]
    pub probes: ProbeSet,
    #[serde(default)]
    pub boot: BootProfile,
    /// Scales every endpoint's CPU demand.
    #[serde(default = "d_one")]
    pub demand_multiplier: f64,
    /// Ignore all scaling decisions.
    #[serde(default)]
    pub frozen: bool,
    /// Initial pods start ready instead of booting.
    #[serde(default = "d_true")]
    pub warm_start: bool,
    /// Pin every pod to this node.
    #[serde(default)]
    pub node: Option<usize>,
}

fn d_ns() -> String {
    "default".to_string()
}
fn d_min() -> u32 {
    1
}
fn d_max() -> u32 {
    20
}
fn d_one() -> f64 {
    1.0
}
fn d_true() -> bool {
    true
}

impl DeploymentSpec {
    pub fn initial(&self) -> u32 {
        self.initial_replicas.unwrap_or(self.min_replicas)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetrySpec {
    pub utilization_window_ms: u64,
    pub latency_window_ms: u64,
    pub rate_window_ms: u64,
    /// Time between timeseries rows.
    pub sample_interval_ms: u64,
    /// Application-level metrics (per-service latency and call spans).
    pub app_metrics: bool,
    pub error_metrics: bool,
    /// Service mesh tracing of inter-service calls.
    pub mesh_observability: bool,
}

impl Default for TelemetrySpec {
    fn default() -> Self {
        Self {
            utilization_window_ms: 60_000,
            latency_window_ms: 60_000,
            rate_window_ms: 15_000,
            sample_interval_ms: 1_000,
            app_metrics: true,
            error_metrics: true,
            mesh_observability: true,
        }
    }
}

/// Per-request CPU demand around an endpoint's mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandDistribution {
    Deterministic,
    #[default]
    Exponential,
}
