//! Nodes, pods, probes, and CPU sharing.

pub mod alloc;
pub mod pod;
pub mod probes;
pub mod resources;
pub mod scale;

pub use alloc::{allocate_cpu, CpuClaim};
pub use pod::{Pod, PodPhase};
pub use probes::{probe_tick, HealthContext, ProbeEvent};
pub use resources::{
    BootProfile, CpuLimit, NamespaceQuota, ProbeConfig, ProbeKind, ProbeSet, ResourceSpec,
};
pub use scale::{scale_to, QuotaRoom, ScaleBounds, ScalePlan};
