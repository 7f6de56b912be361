use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallPattern {
    /// Each downstream call is issued by the previous callee.
    Chained,
    /// All downstream calls are issued concurrently by this endpoint.
    FanOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    Propagate,
    /// Downstream failures are turned into a success response.
    Mask,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallRef {
    pub service: String,
    pub endpoint: String,
}

impl std::fmt::Display for CallRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.service, self.endpoint)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    pub name: String,
    /// CPU-ms at 1000 mcores per request, excluding downstream waits.
    pub cpu_demand_ms: f64,
    #[serde(default)]
    pub downstream: Vec<CallRef>,
    #[serde(default = "default_pattern")]
    pub call_pattern: CallPattern,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_queue")]
    pub max_queue: u32,
    #[serde(default = "default_error_mode")]
    pub error_mode: ErrorMode,
}

fn default_pattern() -> CallPattern {
    CallPattern::FanOut
}
fn default_timeout() -> u64 {
    10_000
}
fn default_max_queue() -> u32 {
    100
}
fn default_error_mode() -> ErrorMode {
    ErrorMode::Propagate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSpec {
    pub name: String,
    pub endpoints: Vec<EndpointSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    /// Endpoint receiving the workload.
    pub entry: CallRef,
    pub services: Vec<ServiceSpec>,
}

impl Topology {
    pub fn service_index(&self, name: &str) -> Option<usize> {
        self.services.iter().position(|s| s.name == name)
    }

    pub fn resolve(&self, call: &CallRef) -> Option<(usize, usize)> {
        let s = self.service_index(&call.service)?;
        let e = self.services[s]
            .endpoints
            .iter()
            .position(|e| e.name == call.endpoint)?;
        Some((s, e))
    }

    pub fn endpoint(&self, service: usize, endpoint: usize) -> &EndpointSpec {
        &self.services[service].endpoints[endpoint]
    }

    pub fn entry_service(&self) -> usize {
        self.service_index(&self.entry.service)
            .expect("entry service resolved at validation")
    }

    pub fn has_downstream_calls(&self) -> bool {
        self.services
            .iter()
            .any(|s| s.endpoints.iter().any(|e| !e.downstream.is_empty()))
    }
}
