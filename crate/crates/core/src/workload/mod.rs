//! Request arrivals: rate traces, synthetic shapes, open and closed loop.

pub mod arrivals;
pub mod generators;
pub mod trace;

pub use arrivals::{arrival_times, arrivals_in_step, UserPool};
pub use generators::{synthetic_rate, RateSource, WorkloadSpec};
pub use trace::RateTrace;
