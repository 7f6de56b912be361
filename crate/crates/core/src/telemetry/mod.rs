//! Metrics: windows, percentiles, SLO accounting, call graphs, exports.

pub mod callgraph;
pub mod collector;
pub mod export;
pub mod report;
pub mod window;

pub use callgraph::{CallGraphObservation, CallGraphRecorder, EdgeStats};
pub use collector::{core_minutes, utilization, Telemetry, TelemetryConfig};
pub use report::{
    DecisionRecord, LatencySummary, RunReport, ServiceRow, ServiceSummary, TimeseriesRow,
};
pub use window::{nearest_rank, p_quantile, SlidingWindow};
