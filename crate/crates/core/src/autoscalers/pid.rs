//! PID control of replica count around a utilization target (SHOWAR).

use serde::{Deserialize, Serialize};

use super::{Autoscaler, PolicyInput, ScalingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: Option<f64>,
    pub last_ms: Option<u64>,
}

/// Error in replica units.
pub fn replica_error(counted: u32, utilization: f64, target: f64) -> f64 {
    counted as f64 * (utilization - target) / target
}

/// One controller step; returns the desired replica count (unclamped).
/// `dt` is the time since the previous step, or one sync period on the
/// first step; the derivative term is zero on the first step.
pub fn pid_step(
    state: &mut PidState,
    gains: PidGains,
    error: f64,
    current: u32,
    now_ms: u64,
    sync_period_ms: u64,
    max_replicas: u32,
) -> i64 {
    let dt_ms = match state.last_ms {
        Some(t) if now_ms > t => now_ms - t,
        _ => sync_period_ms.max(1),
    };
    let dt = dt_ms as f64 / 1000.0;
    let bound = 2.0 * max_replicas as f64;
    state.integral = (state.integral + error * dt).clamp(-bound, bound);
    let deriv = state.prev_error.map_or(0.0, |p| (error - p) / dt);
    state.prev_error = Some(error);
    state.last_ms = Some(now_ms);
    let u = gains.kp * error + gains.ki * state.integral + gains.kd * deriv;
    i64::from(current) + u.round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShowarParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub target_utilization: f64,
}

impl Default for ShowarParams {
    fn default() -> Self {
        Self {
            kp: 0.6,
            ki: 0.02,
            kd: 0.1,
            target_utilization: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Showar {
    params: ShowarParams,
    state: Vec<PidState>,
}

impl Showar {
    pub fn new(params: ShowarParams) -> Self {
        Self {
            params,
            state: Vec::new(),
        }
    }
}

impl Autoscaler for Showar {
    fn name(&self) -> &'static str {
        "showar"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        if self.state.len() < input.services.len() {
            self.state.resize(input.services.len(), PidState::default());
        }
        let p = self.params;
        let gains = PidGains {
            kp: p.kp,
            ki: p.ki,
            kd: p.kd,
        };
        let mut out = Vec::new();
        for (i, s) in input.services.iter().enumerate() {
            let Some(u) = s.utilization else { continue };
            let e = replica_error(s.counted, u, p.target_utilization);
            let target = pid_step(
                &mut self.state[i],
                gains,
                e,
                s.desired,
                input.now_ms,
                input.sync_period_ms,
                s.max_replicas,
            );
            if target != i64::from(s.desired) {
                out.push(ScalingDecision {
                    service: i,
                    target,
                    reason: "pid".to_string(),
                });
            }
        }
        out
    }
}
