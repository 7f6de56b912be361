use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PodPhase {
    Init,
    Booting,
    Ready,
    NotReady,
    Terminating,
}

impl PodPhase {
    pub fn as_str(&self) -> &'static str {
        match self {
            PodPhase::Init => "init",
            PodPhase::Booting => "booting",
            PodPhase::Ready => "ready",
            PodPhase::NotReady => "not_ready",
            PodPhase::Terminating => "terminating",
        }
    }

    /// Edges of the lifecycle graph. Restarts re-enter `Init` from any live
    /// phase; termination is reachable from everywhere.
    pub fn can_transition(self, to: PodPhase) -> bool {
        use PodPhase::*;
        match (self, to) {
            (Terminating, _) => false,
            (_, Terminating) => true,
            (_, Init) => true,
            (Init, Booting) => true,
            (Booting, Ready) | (Booting, NotReady) => true,
            (Ready, NotReady) | (NotReady, Ready) => true,
            _ => false,
        }
    }
}

/// Lifecycle state of one pod. Request execution state lives with the
/// engine; this is what the control plane sees.
#[derive(Debug, Clone)]
pub struct Pod {
    pub id: u64,
    pub deployment: usize,
    pub node: usize,
    pub phase: PodPhase,
    pub phase_entered_ms: u64,
    pub created_ms: u64,
    /// When the main process started (or will start, while in `Init`).
    pub process_start_ms: u64,
    pub boot_remaining_cpu_ms: f64,
    pub restart_count: u32,
    pub liveness_failure_streak: u32,
    pub readiness_success_streak: u32,
    pub readiness_failure_streak: u32,
    pub cpu_demand_mcores: f64,
    pub cpu_alloc_mcores: f64,
    pub next_readiness_ms: Option<u64>,
    pub next_liveness_ms: Option<u64>,
}

impl Pod {
    pub fn new(id: u64, deployment: usize, node: usize, now_ms: u64) -> Self {
        Self {
            id,
            deployment,
            node,
            phase: PodPhase::Init,
            phase_entered_ms: now_ms,
            created_ms: now_ms,
            process_start_ms: now_ms,
            boot_remaining_cpu_ms: 0.0,
            restart_count: 0,
            liveness_failure_streak: 0,
            readiness_success_streak: 0,
            readiness_failure_streak: 0,
            cpu_demand_mcores: 0.0,
            cpu_alloc_mcores: 0.0,
            next_readiness_ms: None,
            next_liveness_ms: None,
        }
    }

    pub fn set_phase(&mut self, to: PodPhase, now_ms: u64) {
        assert!(
            self.phase.can_transition(to),
            "illegal pod transition {:?} -> {:?}",
            self.phase,
            to
        );
        self.phase = to;
        self.phase_entered_ms = now_ms;
    }

    pub fn boot_complete(&self) -> bool {
        matches!(self.phase, PodPhase::Ready | PodPhase::NotReady)
            || (self.phase == PodPhase::Terminating && self.boot_remaining_cpu_ms <= 0.0)
    }

    pub fn is_terminating(&self) -> bool {
        self.phase == PodPhase::Terminating
    }

    /// Back to `Init` after a failed liveness check.
    pub fn restart(&mut self, now_ms: u64, init_duration_ms: u64, boot_work_cpu_ms: f64) {
        self.set_phase(PodPhase::Init, now_ms);
        self.restart_count += 1;
        self.process_start_ms = now_ms + init_duration_ms;
        self.boot_remaining_cpu_ms = boot_work_cpu_ms;
        self.liveness_failure_streak = 0;
        self.readiness_success_streak = 0;
        self.readiness_failure_streak = 0;
        self.next_readiness_ms = None;
        self.next_liveness_ms = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle_edges() {
        use PodPhase::*;
        assert!(Init.can_transition(Booting));
        assert!(Booting.can_transition(NotReady));
        assert!(Ready.can_transition(Init));
        assert!(!Init.can_transition(Ready));
        assert!(!Terminating.can_transition(Ready));
        assert!(!Ready.can_transition(Booting));
    }

    #[test]
    fn restart_bumps_count_and_resets_streaks() {
        let mut p = Pod::new(1, 0, 0, 0);
        p.set_phase(PodPhase::Booting, 100);
        p.liveness_failure_streak = 3;
        p.restart(60_000, 0, 120_000.0);
        assert_eq!(p.phase, PodPhase::Init);
        assert_eq!(p.restart_count, 1);
        assert_eq!(p.liveness_failure_streak, 0);
        assert_eq!(p.process_start_ms, 60_000);
    }

    #[test]
    #[should_panic(expected = "illegal pod transition")]
    fn illegal_transition_panics() {
        let mut p = Pod::new(1, 0, 0, 0);
        p.set_phase(PodPhase::Ready, 10);
    }
}
