//! Threshold policy in the style of the Kubernetes HPA.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ceil_tol, Autoscaler, PolicyInput, ScalingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KhpaParams {
    pub target_utilization: f64,
    pub tolerance: f64,
    pub downscale_stabilization_ms: u64,
}

impl Default for KhpaParams {
    fn default() -> Self {
        Self {
            target_utilization: 0.5,
            tolerance: 0.1,
            downscale_stabilization_ms: 300_000,
        }
    }
}

/// Replica recommendation for one service: `ceil(counted * u / target)`,
/// or `current` inside the tolerance band.
pub fn recommend(counted: u32, utilization: f64, target: f64, tolerance: f64, current: u32) -> u32 {
    let ratio = utilization / target;
    if (ratio - 1.0).abs() <= tolerance {
        return current;
    }
    ceil_tol(counted as f64 * ratio).max(0.0) as u32
}

/// Recommendation history for downscale stabilization.
#[derive(Debug, Clone, Default)]
pub struct Stabilizer {
    history: VecDeque<(u64, u32)>,
}

impl Stabilizer {
    /// Record `rec` and return the stabilized value: scale-ups pass
    /// through, scale-downs go only as low as the highest recommendation
    /// inside the window.
    pub fn apply(&mut self, now_ms: u64, rec: u32, current: u32, window_ms: u64) -> u32 {
        while self
            .history
            .front()
            .is_some_and(|&(t, _)| t + window_ms <= now_ms)
        {
            self.history.pop_front();
        }
        self.history.push_back((now_ms, rec));
        if rec >= current || window_ms == 0 {
            return rec;
        }
        self.history
            .iter()
            .map(|&(_, r)| r)
            .max()
            .unwrap_or(rec)
            .min(current)
    }
}

#[derive(Debug, Clone)]
pub struct Khpa {
    params: KhpaParams,
    stab: Vec<Stabilizer>,
}

impl Khpa {
    pub fn new(params: KhpaParams) -> Self {
        Self {
            params,
            stab: Vec::new(),
        }
    }

    pub(crate) fn decide_with_reason(
        &mut self,
        input: &PolicyInput,
        reason: &str,
    ) -> Vec<ScalingDecision> {
        if self.stab.len() < input.services.len() {
            self.stab
                .resize_with(input.services.len(), Stabilizer::default);
        }
        let p = self.params;
        let mut out = Vec::new();
        for (i, s) in input.services.iter().enumerate() {
            let Some(u) = s.utilization else { continue };
            if s.counted == 0 {
                continue;
            }
            let rec = recommend(s.counted, u, p.target_utilization, p.tolerance, s.desired);
            let target =
                self.stab[i].apply(input.now_ms, rec, s.desired, p.downscale_stabilization_ms);
            if target != s.desired {
                out.push(ScalingDecision {
                    service: i,
                    target: i64::from(target),
                    reason: reason.to_string(),
                });
            }
        }
        out
    }
}

impl Autoscaler for Khpa {
    fn name(&self) -> &'static str {
        "khpa"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        self.decide_with_reason(input, "threshold")
    }
}
