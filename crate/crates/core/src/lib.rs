//! Deterministic fixed-step simulator of a three-service login flow under
//! pluggable autoscalers, with ten lifecycle gaps that can be injected or
//! remediated one at a time.

pub mod app;
pub mod autoscalers;
pub mod cluster;
pub mod error;
pub mod gaps;
pub mod kernel;
pub mod scenario;
pub mod telemetry;
pub mod workload;

pub use autoscalers::{
    Autoscaler, AutoscalerSpec, PolicyInput, PolicyKind, ScalingDecision, ServiceView,
};
pub use error::{Error, Result};
pub use gaps::{assemble, AssembledConfig, GapId, GapStatus};
pub use kernel::{run_scenario, SeededRng, SimClock, Simulation};
pub use scenario::{load, validate, ScenarioConfig, Validation};
pub use telemetry::RunReport;
