//! PID with gains looked up from a schedule keyed by request-rate bucket and
//! utilization trend, standing in for an offline-trained gain tuner.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::leastsq::fit_line;
use super::pid::{pid_step, replica_error, PidGains, PidState};
use super::{Autoscaler, PolicyInput, ScalingDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBucket {
    Low,
    Mid,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Trend {
    #[serde(rename = "-")]
    Falling,
    #[serde(rename = "0")]
    Flat,
    #[serde(rename = "+")]
    Rising,
}

impl RateBucket {
    fn ordinal(self) -> i32 {
        self as i32
    }
}

impl Trend {
    fn ordinal(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainEntry {
    pub rate: RateBucket,
    pub trend: Trend,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainSchedule {
    /// Rates below this are "low" (requests/s at the service).
    pub low_below_rps: f64,
    /// Rates at or above this are "high".
    pub high_from_rps: f64,
    /// Utilization slope (per second) treated as flat.
    pub trend_deadband: f64,
    pub trend_samples: usize,
    pub entries: Vec<GainEntry>,
}

impl Default for GainSchedule {
    fn default() -> Self {
        use RateBucket::*;
        use Trend::*;
        let e = |rate, trend, kp, ki, kd| GainEntry {
            rate,
            trend,
            kp,
            ki,
            kd,
        };
        Self {
            low_below_rps: 20.0,
            high_from_rps: 80.0,
            trend_deadband: 0.001,
            trend_samples: 4,
            entries: vec![
                e(Low, Falling, 0.4, 0.01, 0.05),
                e(Low, Flat, 0.5, 0.01, 0.05),
                e(Low, Rising, 0.7, 0.02, 0.1),
                e(Mid, Falling, 0.5, 0.01, 0.1),
                e(Mid, Flat, 0.6, 0.02, 0.1),
                e(Mid, Rising, 0.9, 0.03, 0.15),
                e(High, Falling, 0.6, 0.02, 0.1),
                e(High, Flat, 0.8, 0.03, 0.15),
                e(High, Rising, 1.2, 0.04, 0.2),
            ],
        }
    }
}

impl GainSchedule {
    pub fn bucket(&self, rps: f64) -> RateBucket {
        if rps < self.low_below_rps {
            RateBucket::Low
        } else if rps < self.high_from_rps {
            RateBucket::Mid
        } else {
            RateBucket::High
        }
    }

    pub fn trend(&self, samples: &[(f64, f64)]) -> Trend {
        match fit_line(samples) {
            Some((_, b)) if b > self.trend_deadband => Trend::Rising,
            Some((_, b)) if b < -self.trend_deadband => Trend::Falling,
            _ => Trend::Flat,
        }
    }

    /// Gains for a key; a missing key takes the nearest entry in L1
    /// distance over (bucket, trend), first entry on ties.
    pub fn lookup(&self, rate: RateBucket, trend: Trend) -> Option<PidGains> {
        let best = self.entries.iter().min_by_key(|g| {
            (g.rate.ordinal() - rate.ordinal()).abs() + (g.trend.ordinal() - trend.ordinal()).abs()
        })?;
        if best.rate != rate || best.trend != trend {
            log::debug!(
                "gain schedule has no ({rate:?}, {trend:?}); using ({:?}, {:?})",
                best.rate,
                best.trend
            );
        }
        Some(PidGains {
            kp: best.kp,
            ki: best.ki,
            kd: best.kd,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedPidParams {
    pub target_utilization: f64,
    pub schedule: GainSchedule,
}

impl Default for FixedPidParams {
    fn default() -> Self {
        Self {
            target_utilization: 0.5,
            schedule: GainSchedule::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPid {
    params: FixedPidParams,
    state: Vec<PidState>,
    samples: Vec<VecDeque<(f64, f64)>>,
}

impl FixedPid {
    pub fn new(params: FixedPidParams) -> Self {
        Self {
            params,
            state: Vec::new(),
            samples: Vec::new(),
        }
    }
}

impl Autoscaler for FixedPid {
    fn name(&self) -> &'static str {
        "fixed_pid"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        let n = input.services.len();
        if self.state.len() < n {
            self.state.resize(n, PidState::default());
            self.samples.resize_with(n, VecDeque::new);
        }
        let sched = &self.params.schedule;
        let entry_rate = input.services[input.entry].request_rate;
        let mut out = Vec::new();
        for (i, s) in input.services.iter().enumerate() {
            let Some(u) = s.utilization else { continue };
            let hist = &mut self.samples[i];
            hist.push_back((input.now_ms as f64 / 1000.0, u));
            while hist.len() > sched.trend_samples.max(2) {
                hist.pop_front();
            }
            let pts: Vec<(f64, f64)> = hist.iter().copied().collect();
            let trend = sched.trend(&pts);
            let rate = s.request_rate.or(entry_rate).unwrap_or(0.0);
            let Some(gains) = sched.lookup(sched.bucket(rate), trend) else {
                continue;
            };
            let e = replica_error(s.counted, u, self.params.target_utilization);
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
