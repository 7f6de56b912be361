//! Readiness and liveness probe evaluation.
//!
//! Probes fire at `process_start + initial_delay + k * period` for k >= 1, so
//! a process that never answers is declared dead at exactly
//! `initial_delay + period * failure_threshold` after it starts.

use super::pod::{Pod, PodPhase};
use super::resources::{ProbeConfig, ProbeSet};

/// Inputs for the modeled health-endpoint response.
#[derive(Debug, Clone, Copy)]
pub struct HealthContext {
    /// CPU-ms needed to answer one health check at full allocation.
    pub cost_ms: f64,
    pub demand_mcores: f64,
    pub alloc_mcores: f64,
}

impl HealthContext {
    /// Response time of the health endpoint. Starvation stretches it by the
    /// demanded/allocated ratio.
    pub fn response_ms(&self) -> f64 {
        if self.demand_mcores <= 0.0 {
            return self.cost_ms;
        }
        if self.alloc_mcores <= 0.0 {
            return f64::INFINITY;
        }
        self.cost_ms * (self.demand_mcores / self.alloc_mcores).max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeEvent {
    BecameReady,
    BecameNotReady,
    /// Liveness failure threshold reached at the given probe time.
    Restart {
        at_ms: u64,
    },
}

fn check_passes(pod: &Pod, probe: &ProbeConfig, health: &HealthContext) -> bool {
    pod.boot_complete() && probe.timeout_ms as f64 >= health.response_ms()
}

fn first_due(pod: &Pod, probe: &ProbeConfig) -> u64 {
    pod.process_start_ms + probe.initial_delay_ms + probe.period_ms
}

/// Evaluate every probe due at or before `until_ms`. Returns the phase
/// change the caller must apply, if any. `Init` and `Terminating` pods are
/// not probed.
pub fn probe_tick(
    pod: &mut Pod,
    probes: &ProbeSet,
    until_ms: u64,
    health: &HealthContext,
) -> Option<ProbeEvent> {
    if matches!(pod.phase, PodPhase::Init | PodPhase::Terminating) {
        return None;
    }
    let mut event = None;

    if let Some(live) = &probes.liveness {
        let mut due = pod.next_liveness_ms.unwrap_or_else(|| first_due(pod, live));
        while due <= until_ms {
            if check_passes(pod, live, health) {
                pod.liveness_failure_streak = 0;
            } else {
                pod.liveness_failure_streak += 1;
                if pod.liveness_failure_streak >= live.failure_threshold {
                    return Some(ProbeEvent::Restart { at_ms: due });
                }
            }
            due += live.period_ms;
        }
        pod.next_liveness_ms = Some(due);
    }

    if let Some(ready) = &probes.readiness {
        let mut due = pod
            .next_readiness_ms
            .unwrap_or_else(|| first_due(pod, ready));
        while due <= until_ms {
            if check_passes(pod, ready, health) {
                pod.readiness_success_streak += 1;
                pod.readiness_failure_streak = 0;
                if pod.phase == PodPhase::NotReady
                    && pod.readiness_success_streak >= ready.success_threshold
                {
                    pod.set_phase(PodPhase::Ready, due);
                    event = Some(ProbeEvent::BecameReady);
                }
            } else {
                pod.readiness_failure_streak += 1;
                pod.readiness_success_streak = 0;
                if pod.phase == PodPhase::Ready
                    && pod.readiness_failure_streak >= ready.failure_threshold
                {
                    pod.set_phase(PodPhase::NotReady, due);
                    event = Some(ProbeEvent::BecameNotReady);
                }
            }
            due += ready.period_ms;
        }
        pod.next_readiness_ms = Some(due);
    }
    event
}
