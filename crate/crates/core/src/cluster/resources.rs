use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// CPU limit in millicores, or no limit at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CpuLimit {
    Bounded(f64),
    Unbounded,
}

impl CpuLimit {
    pub fn mcores(&self) -> Option<f64> {
        match self {
            CpuLimit::Bounded(v) => Some(*v),
            CpuLimit::Unbounded => None,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, CpuLimit::Bounded(_))
    }

    /// Effective cap on a node of the given capacity.
    pub fn cap_on(&self, node_capacity: f64) -> f64 {
        match self {
            CpuLimit::Bounded(v) => v.min(node_capacity),
            CpuLimit::Unbounded => node_capacity,
        }
    }
}

impl Serialize for CpuLimit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            CpuLimit::Bounded(v) => s.serialize_f64(*v),
            CpuLimit::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for CpuLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(CpuLimit::Bounded(v)),
            Raw::Word(w) if w == "unbounded" => Ok(CpuLimit::Unbounded),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "expected millicores or \"unbounded\", got \"{w}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    pub request_mcores: f64,
    pub limit_mcores: CpuLimit,
    #[serde(default)]
    pub memory_mb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Readiness,
    Liveness,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub initial_delay_ms: u64,
    pub period_ms: u64,
    pub timeout_ms: u64,
    #[serde(default = "default_failure_threshold")]
    pub failure_threshold: u32,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: u32,
}

fn default_failure_threshold() -> u32 {
    3
}
fn default_success_threshold() -> u32 {
    1
}

impl ProbeConfig {
    /// Time from process start until the failure threshold is reached for a
    /// process that never answers its health check.
    pub fn failure_deadline_ms(&self) -> u64 {
        self.initial_delay_ms + self.period_ms * u64::from(self.failure_threshold)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.period_ms == 0 || self.timeout_ms == 0 {
            return Err("probe period and timeout must be > 0".into());
        }
        if self.failure_threshold == 0 || self.success_threshold == 0 {
            return Err("probe thresholds must be >= 1".into());
        }
        Ok(())
    }
}

/// Readiness and liveness probes; either may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSet {
    #[serde(default)]
    pub readiness: Option<ProbeConfig>,
    #[serde(default)]
    pub liveness: Option<ProbeConfig>,
}

impl ProbeSet {
    pub fn is_empty(&self) -> bool {
        self.readiness.is_none() && self.liveness.is_none()
    }
}

/// Startup cost of a pod: an init phase, then a CPU-heavy warm-up of the main
/// process before it can serve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootProfile {
    #[serde(default)]
    pub init_duration_ms: u64,
    /// Warm-up time when the pod receives `boot_cpu_demand_mcores`.
    #[serde(default)]
    pub boot_duration_ms: u64,
    #[serde(default)]
    pub boot_cpu_demand_mcores: f64,
    /// Startup work runs outside the main container and is invisible to
    /// deployment metrics.
    #[serde(default = "yes")]
    pub init_isolated: bool,
    /// Temporary CPU allowance while booting; raises both demand and limit.
    #[serde(default)]
    pub boot_burst_limit_mcores: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for BootProfile {
    fn default() -> Self {
        Self {
            init_duration_ms: 0,
            boot_duration_ms: 0,
            boot_cpu_demand_mcores: 0.0,
            init_isolated: true,
            boot_burst_limit_mcores: None,
        }
    }
}

impl BootProfile {
    /// CPU-milliseconds of warm-up work.
    pub fn boot_work_cpu_ms(&self) -> f64 {
        self.boot_duration_ms as f64 * self.boot_cpu_demand_mcores / 1000.0
    }

    /// Demand while booting.
    pub fn boot_demand_mcores(&self) -> f64 {
        match self.boot_burst_limit_mcores {
            Some(b) => b.max(self.boot_cpu_demand_mcores),
            None => self.boot_cpu_demand_mcores,
        }
    }

    /// Boot time on an uncontended node with the given container limit.
    pub fn nominal_boot_ms(&self, limit: CpuLimit) -> f64 {
        let work = self.boot_work_cpu_ms();
        if work <= 0.0 {
            return 0.0;
        }
        let cap = match (self.boot_burst_limit_mcores, limit) {
            (Some(b), CpuLimit::Bounded(l)) => b.max(l),
            (_, CpuLimit::Unbounded) => f64::INFINITY,
            (None, CpuLimit::Bounded(l)) => l,
        };
        let rate = self.boot_demand_mcores().min(cap);
        if rate <= 0.0 {
            return f64::INFINITY;
        }
        work * 1000.0 / rate
    }

    pub fn has_boot_work(&self) -> bool {
        self.boot_work_cpu_ms() > 0.0
    }
}

/// Aggregate request cap for one namespace. `None` means absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamespaceQuota {
    pub namespace: String,
    #[serde(default)]
    pub cpu_request_cap_mcores: Option<f64>,
    #[serde(default)]
    pub memory_cap_mb: Option<f64>,
}

impl NamespaceQuota {
    pub fn is_absent(&self) -> bool {
        self.cpu_request_cap_mcores.is_none() && self.memory_cap_mb.is_none()
    }
}
