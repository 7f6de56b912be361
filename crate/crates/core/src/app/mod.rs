//! Services, call trees, and request execution primitives.

pub mod outcome;
pub mod plan;
pub mod ps;
pub mod router;
pub mod topology;

pub use outcome::{ErrorKind, Outcome, RequestRecord, SpanRecord};
pub use plan::{CallPlan, PlanNode};
pub use ps::PsQueue;
pub use router::{admit, route, Admission};
pub use topology::{CallPattern, CallRef, EndpointSpec, ErrorMode, ServiceSpec, Topology};
