use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::trace::RateTrace;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadSpec {
    /// Replay a rate trace. `time_scale` < 1 compresses it: simulated time
    /// `t` reads the trace at `t / time_scale`.
    Trace {
        path: PathBuf,
        #[serde(default = "one")]
        scale_factor: f64,
        #[serde(default = "one")]
        time_scale: f64,
        #[serde(default, rename = "loop")]
        looped: bool,
    },
    Constant {
        rate_rps: f64,
    },
    Step {
        base_rps: f64,
        step_rps: f64,
        at_ms: u64,
    },
    Sinusoid {
        mean_rps: f64,
        amplitude_rps: f64,
        period_ms: u64,
        #[serde(default)]
        phase_ms: u64,
    },
    FlashCrowd {
        base_rps: f64,
        multiplier: f64,
        start_ms: u64,
        duration_ms: u64,
    },
    /// Fixed user population, each alternating request and think time.
    ClosedLoop {
        users: u32,
        think_time_ms: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Open-loop rate as a function of simulated time.
#[derive(Debug, Clone)]
pub enum RateSource {
    Trace { trace: RateTrace, time_scale: f64 },
    Synthetic(WorkloadSpec),
}

impl RateSource {
    /// `None` for closed-loop workloads. Trace paths must already be resolved.
    pub fn from_spec(spec: &WorkloadSpec) -> Result<Option<Self>> {
        Ok(match spec {
            WorkloadSpec::Trace {
                path,
                scale_factor,
                time_scale,
                looped,
            } => {
                let mut trace = RateTrace::load(path)?;
                trace.scale_factor = *scale_factor;
                trace.looped = *looped;
                Some(RateSource::Trace {
                    trace,
                    time_scale: *time_scale,
                })
            }
            WorkloadSpec::ClosedLoop { .. } => None,
            other => Some(RateSource::Synthetic(other.clone())),
        })
    }

    pub fn rate_at(&self, t_ms: f64) -> f64 {
        match self {
            RateSource::Trace { trace, time_scale } => trace.rate_at(t_ms / 1000.0 / time_scale),
            RateSource::Synthetic(spec) => synthetic_rate(spec, t_ms),
        }
    }
}

pub fn synthetic_rate(spec: &WorkloadSpec, t_ms: f64) -> f64 {
    let r = match *spec {
        WorkloadSpec::Constant { rate_rps } => rate_rps,
        WorkloadSpec::Step {
            base_rps,
            step_rps,
            at_ms,
        } => {
            if t_ms < at_ms as f64 {
                base_rps
            } else {
                step_rps
            }
        }
        WorkloadSpec::Sinusoid {
            mean_rps,
            amplitude_rps,
            period_ms,
            phase_ms,
        } => {
            let x = (t_ms + phase_ms as f64) / period_ms as f64;
            mean_rps + amplitude_rps * (std::f64::consts::TAU * x).sin()
        }
        WorkloadSpec::FlashCrowd {
            base_rps,
            multiplier,
            start_ms,
            duration_ms,
        } => {
            let s = start_ms as f64;
            if t_ms >= s && t_ms < s + duration_ms as f64 {
                base_rps * multiplier
            } else {
                base_rps
            }
        }
        WorkloadSpec::Trace { .. } | WorkloadSpec::ClosedLoop { .. } => 0.0,
    };
    r.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_and_flash_crowd() {
        let s = WorkloadSpec::Step {
            base_rps: 5.0,
            step_rps: 50.0,
            at_ms: 1_000,
        };
        assert_eq!(synthetic_rate(&s, 999.0), 5.0);
        assert_eq!(synthetic_rate(&s, 1_000.0), 50.0);
        let f = WorkloadSpec::FlashCrowd {
            base_rps: 10.0,
            multiplier: 4.0,
            start_ms: 100,
            duration_ms: 100,
        };
        assert_eq!(synthetic_rate(&f, 150.0), 40.0);
        assert_eq!(synthetic_rate(&f, 200.0), 10.0);
    }

    #[test]
    fn sinusoid_never_negative() {
        let s = WorkloadSpec::Sinusoid {
            mean_rps: 1.0,
            amplitude_rps: 3.0,
            period_ms: 1_000,
            phase_ms: 0,
        };
        assert!((0..1000).all(|t| synthetic_rate(&s, t as f64) >= 0.0));
        assert!((synthetic_rate(&s, 250.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn workload_json_shape() {
        let w: WorkloadSpec =
            serde_json::from_str(r#"{"kind":"trace","path":"t.csv","time_scale":0.1,"loop":true}"#)
                .unwrap();
        assert!(matches!(w, WorkloadSpec::Trace { looped: true, .. }));
    }
}
