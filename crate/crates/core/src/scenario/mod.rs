//! Scenario files: format, loading, validation.

pub mod config;
pub mod load;
pub mod validate;

pub use config::{
    ClusterSpec, DemandDistribution, DeploymentSpec, NodeSpec, ScenarioConfig, TelemetrySpec,
};
pub use load::{load, parse_str, resolve_paths};
pub use validate::{validate, validate_file, Validation};
