//! Scaling policies behind one interface, plus the analytic latency
//! estimator used by the search-based ones.

pub mod estimator;
pub mod fixed_pid;
pub mod ga;
pub mod gp;
pub mod heat;
pub mod khpa;
pub mod leastsq;
pub mod microscaler;
pub mod pagerank;
pub mod pbscaler;
pub mod pid;

use serde::{Deserialize, Serialize};

pub use estimator::{estimate_p90, EstimatorModel};

/// What a policy may see about one service at a sync point. Only observed
/// series: values hidden by missing instrumentation are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceView {
    pub name: String,
    pub desired: u32,
    /// Pods not terminating.
    pub live: u32,
    pub ready: u32,
    /// Pods whose CPU counts toward utilization.
    pub counted: u32,
    pub min_replicas: u32,
    pub max_replicas: u32,
    pub utilization: Option<f64>,
    pub p90_ms: Option<f64>,
    pub mean_latency_ms: Option<f64>,
    /// Exclusive (local processing) latency.
    pub self_p90_ms: Option<f64>,
    pub self_mean_ms: Option<f64>,
    pub request_rate: Option<f64>,
}

impl ServiceView {
    /// Minimal view for tests and benches.
    pub fn bare(name: &str, desired: u32, max_replicas: u32) -> Self {
        Self {
            name: name.to_string(),
            desired,
            live: desired,
            ready: desired,
            counted: desired,
            min_replicas: 1,
            max_replicas,
            utilization: None,
            p90_ms: None,
            mean_latency_ms: None,
            self_p90_ms: None,
            self_mean_ms: None,
            request_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyInput {
    pub now_ms: u64,
    pub sync_period_ms: u64,
    pub slo_ms: f64,
    pub entry: usize,
    pub services: Vec<ServiceView>,
    /// Caller → callee edges, when a call graph is available at all.
    pub call_graph: Option<Vec<(usize, usize)>>,
    pub estimator: Option<EstimatorModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingDecision {
    pub service: usize,
    /// Requested replicas before clamping; may fall outside the bounds.
    pub target: i64,
    pub reason: String,
}

pub trait Autoscaler: Send {
    fn name(&self) -> &'static str;

    /// Decisions for this sync. Must be a pure function of the input and the
    /// policy's own state.
    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision>;

    /// Notable conditions since the last call (e.g. "graph-unavailable").
    fn drain_events(&mut self) -> Vec<&'static str> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Never scales.
    None,
    Khpa,
    Heat,
    Showar,
    FixedPid,
    Microscaler,
    Pbscaler,
}

impl PolicyKind {
    pub const SIX: [PolicyKind; 6] = [
        PolicyKind::Khpa,
        PolicyKind::Heat,
        PolicyKind::Showar,
        PolicyKind::FixedPid,
        PolicyKind::Microscaler,
        PolicyKind::Pbscaler,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::None => "none",
            PolicyKind::Khpa => "khpa",
            PolicyKind::Heat => "heat",
            PolicyKind::Showar => "showar",
            PolicyKind::FixedPid => "fixed_pid",
            PolicyKind::Microscaler => "microscaler",
            PolicyKind::Pbscaler => "pbscaler",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            PolicyKind::None => "None",
            PolicyKind::Khpa => "KHPA",
            PolicyKind::Heat => "HEAT",
            PolicyKind::Showar => "SHOWAR",
            PolicyKind::FixedPid => "Fixed-PID",
            PolicyKind::Microscaler => "MicroScaler",
            PolicyKind::Pbscaler => "PBScaler",
        }
    }

    /// Accepts "KHPA", "fixed-pid", "Fixed_PID", "PBScaler", ...
    pub fn parse(s: &str) -> Option<Self> {
        let k: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        Some(match k.as_str() {
            "none" | "static" => PolicyKind::None,
            "khpa" | "hpa" => PolicyKind::Khpa,
            "heat" => PolicyKind::Heat,
            "showar" => PolicyKind::Showar,
            "fixedpid" => PolicyKind::FixedPid,
            "microscaler" => PolicyKind::Microscaler,
            "pbscaler" => PolicyKind::Pbscaler,
            _ => return None,
        })
    }
}

/// Policy selection as written in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoscalerSpec {
    pub policy: PolicyKind,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl Default for AutoscalerSpec {
    fn default() -> Self {
        Self {
            policy: PolicyKind::Khpa,
            params: serde_json::Value::Null,
        }
    }
}

fn params<T: serde::de::DeserializeOwned + Default>(v: &serde_json::Value) -> Result<T, String> {
    if v.is_null() {
        return Ok(T::default());
    }
    serde_path_to_error::deserialize(v.clone()).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        }
    })
}

struct Static;

impl Autoscaler for Static {
    fn name(&self) -> &'static str {
        "none"
    }

    fn decide(&mut self, _: &PolicyInput) -> Vec<ScalingDecision> {
        Vec::new()
    }
}

/// Instantiate a policy. `seed` feeds any internal search.
pub fn build(spec: &AutoscalerSpec, seed: u64) -> Result<Box<dyn Autoscaler>, String> {
    Ok(match spec.policy {
        PolicyKind::None => Box::new(Static),
        PolicyKind::Khpa => Box::new(khpa::Khpa::new(params(&spec.params)?)),
        PolicyKind::Heat => Box::new(heat::Heat::new(params(&spec.params)?)),
        PolicyKind::Showar => Box::new(pid::Showar::new(params(&spec.params)?)),
        PolicyKind::FixedPid => Box::new(fixed_pid::FixedPid::new(params(&spec.params)?)),
        PolicyKind::Microscaler => Box::new(microscaler::MicroScaler::new(params(&spec.params)?)),
        PolicyKind::Pbscaler => Box::new(pbscaler::PbScaler::new(params(&spec.params)?, seed)),
    })
}

/// `ceil` that ignores float noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}
