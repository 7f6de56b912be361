//! Threshold scaling on a regression forecast of utilization.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::khpa::{recommend, Khpa, KhpaParams, Stabilizer};
use super::leastsq::fit_line;
use super::{Autoscaler, PolicyInput, ScalingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatParams {
    pub window_samples: usize,
    pub horizon_ms: u64,
    pub target_utilization: f64,
    pub tolerance: f64,
    pub downscale_stabilization_ms: u64,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self {
            window_samples: 8,
            horizon_ms: 60_000,
            target_utilization: 0.5,
            tolerance: 0.1,
            downscale_stabilization_ms: 0,
        }
    }
}

/// Utilization forecast `horizon_ms` past the last sample, or `None` with
/// fewer than two samples. Times are in seconds.
pub fn forecast(samples: &[(f64, f64)], now_s: f64, horizon_s: f64) -> Option<f64> {
    let (a, b) = fit_line(samples)?;
    Some((a + b * (now_s + horizon_s)).max(0.0))
}

#[derive(Debug, Clone)]
pub struct Heat {
    params: HeatParams,
    samples: Vec<VecDeque<(f64, f64)>>,
    stab: Vec<Stabilizer>,
    fallback: Khpa,
}

impl Heat {
    pub fn new(params: HeatParams) -> Self {
        Self {
            params,
            samples: Vec::new(),
            stab: Vec::new(),
            fallback: Khpa::new(KhpaParams {
                target_utilization: params.target_utilization,
                tolerance: params.tolerance,
                downscale_stabilization_ms: params.downscale_stabilization_ms,
            }),
        }
    }
}

impl Autoscaler for Heat {
    fn name(&self) -> &'static str {
        "heat"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        let n = input.services.len();
        if self.samples.len() < n {
            self.samples.resize_with(n, VecDeque::new);
            self.stab.resize_with(n, Stabilizer::default);
        }
        let p = self.params;
        let now_s = input.now_ms as f64 / 1000.0;
        let mut out = Vec::new();
        let mut fallback = Vec::new();
        for (i, s) in input.services.iter().enumerate() {
            let Some(u) = s.utilization else { continue };
            if s.counted == 0 {
                continue;
            }
            let hist = &mut self.samples[i];
            hist.push_back((now_s, u));
            while hist.len() > p.window_samples.max(2) {
                hist.pop_front();
            }
            let pts: Vec<(f64, f64)> = hist.iter().copied().collect();
            let Some(pred) = forecast(&pts, now_s, p.horizon_ms as f64 / 1000.0) else {
                fallback.push(i);
                continue;
            };
            let rec = recommend(
                s.counted,
                pred,
                p.target_utilization,
                p.tolerance,
                s.desired,
            );
            let target =
                self.stab[i].apply(input.now_ms, rec, s.desired, p.downscale_stabilization_ms);
            if target != s.desired {
                out.push(ScalingDecision {
                    service: i,
                    target: i64::from(target),
                    reason: "regression".to_string(),
                });
            }
        }
        if !fallback.is_empty() {
            let k = self.fallback.decide_with_reason(input, "threshold");
            out.extend(k.into_iter().filter(|d| fallback.contains(&d.service)));
            out.sort_by_key(|d| d.service);
        }
        out
    }
}
