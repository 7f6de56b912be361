//! Flag services that overrun their latency budget and search their replica
//! count with Bayesian optimization, one probe per sync.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::gp::{argmax_ei, GpParams};
use super::{Autoscaler, PolicyInput, ScalingDecision, ServiceView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MicroScalerParams {
    pub alpha: f64,
    pub beta: f64,
    pub gp: GpParams,
}

impl Default for MicroScalerParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.3,
            gp: GpParams::default(),
        }
    }
}

/// Latency budget: the SLO scaled by the service's share of end-to-end
/// mean latency.
pub fn budget_ms(slo_ms: f64, service_mean: f64, entry_mean: f64) -> f64 {
    if entry_mean <= 0.0 {
        return slo_ms;
    }
    slo_ms * (service_mean / entry_mean).min(1.0)
}

pub fn cost(p: &MicroScalerParams, p90: f64, budget: f64, replicas: u32, max_replicas: u32) -> f64 {
    p.alpha * (p90 / budget - 1.0).max(0.0) + p.beta * replicas as f64 / max_replicas.max(1) as f64
}

/// Per-replica-count observed costs for one service: (sum, count).
pub type Episode = BTreeMap<u32, (f64, u32)>;

/// Next replica count to try given this episode's observations.
pub fn propose(episode: &Episode, current: u32, lo: u32, hi: u32, gp: GpParams) -> u32 {
    if episode.is_empty() {
        return (current + 1).min(hi);
    }
    let candidates: Vec<i64> = (lo..=hi).map(i64::from).collect();
    if (lo..=hi).all(|c| episode.contains_key(&c)) {
        let mut best = (lo, f64::INFINITY);
        for (&r, &(sum, n)) in episode.range(lo..=hi) {
            let m = sum / n as f64;
            if m < best.1 {
                best = (r, m);
            }
        }
        return best.0;
    }
    let obs: Vec<(f64, f64)> = episode
        .iter()
        .map(|(&r, &(sum, n))| (r as f64, sum / n as f64))
        .collect();
    argmax_ei(&obs, &candidates, gp).map_or(current, |c| c as u32)
}

fn flagged(input: &PolicyInput) -> Vec<(usize, f64)> {
    let entry_mean = input.services[input.entry].mean_latency_ms;
    let mut out = Vec::new();
    for (i, s) in input.services.iter().enumerate() {
        let (Some(p90), Some(mean), Some(em)) = (s.p90_ms, s.mean_latency_ms, entry_mean) else {
            continue;
        };
        let b = budget_ms(input.slo_ms, mean, em);
        if b > 0.0 && p90 > b {
            out.push((i, b));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MicroScaler {
    params: MicroScalerParams,
    flagged: Vec<usize>,
    episodes: BTreeMap<usize, Episode>,
}

impl MicroScaler {
    pub fn new(params: MicroScalerParams) -> Self {
        Self {
            params,
            flagged: Vec::new(),
            episodes: BTreeMap::new(),
        }
    }

    fn observe(&mut self, i: usize, s: &ServiceView, budget: f64) {
        let Some(p90) = s.p90_ms else { return };
        let c = cost(&self.params, p90, budget, s.desired, s.max_replicas);
        let e = self
            .episodes
            .entry(i)
            .or_default()
            .entry(s.desired)
            .or_insert((0.0, 0));
        e.0 += c;
        e.1 += 1;
    }
}

impl Autoscaler for MicroScaler {
    fn name(&self) -> &'static str {
        "microscaler"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        let flags = flagged(input);
        let ids: Vec<usize> = flags.iter().map(|f| f.0).collect();
        if ids != self.flagged {
            self.episodes.clear();
            self.flagged = ids;
        }
        let mut out = Vec::new();
        for &(i, budget) in &flags {
            let s = &input.services[i];
            let had_history = self.episodes.get(&i).is_some_and(|e| !e.is_empty());
            let lo = s.min_replicas.max(1);
            let hi = s.max_replicas.max(lo);
            let target = if had_history {
                self.observe(i, s, budget);
                propose(&self.episodes[&i], s.desired, lo, hi, self.params.gp)
            } else {
                // bootstrap: record where we are, then probe one up
                self.observe(i, s, budget);
                (s.desired + 1).min(hi)
            };
            if target != s.desired {
                out.push(ScalingDecision {
                    service: i,
                    target: i64::from(target),
                    reason: "bo".to_string(),
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_episode_probes_up() {
        assert_eq!(propose(&Episode::new(), 3, 1, 20, GpParams::default()), 4);
        assert_eq!(propose(&Episode::new(), 20, 1, 20, GpParams::default()), 20);
    }

    #[test]
    fn fully_observed_equal_costs_pick_smallest() {
        let ep: Episode = (2..=5).map(|r| (r, (0.4, 1))).collect();
        assert_eq!(propose(&ep, 4, 2, 5, GpParams::default()), 2);
    }

    #[test]
    fn budget_and_cost() {
        assert_eq!(budget_ms(150.0, 50.0, 100.0), 75.0);
        let p = MicroScalerParams::default();
        assert!((cost(&p, 150.0, 75.0, 5, 20) - (1.0 + 0.075)).abs() < 1e-12);
        assert!((cost(&p, 50.0, 75.0, 5, 20) - 0.075).abs() < 1e-12);
    }

    #[test]
    fn episode_resets_when_flags_change() {
        let mut m = MicroScaler::new(MicroScalerParams::default());
        let mk = |p90_user: f64| {
            let mut fe = ServiceView::bare("front-end", 1, 20);
            fe.p90_ms = Some(200.0);
            fe.mean_latency_ms = Some(100.0);
            let mut u = ServiceView::bare("user", 2, 20);
            u.p90_ms = Some(p90_user);
            u.mean_latency_ms = Some(50.0);
            PolicyInput {
                now_ms: 0,
                sync_period_ms: 15_000,
                slo_ms: 150.0,
                entry: 0,
                services: vec![fe, u],
                call_graph: None,
                estimator: None,
            }
        };
        let d = m.decide(&mk(120.0));
        assert_eq!(d.len(), 2);
        assert_eq!(m.episodes.len(), 2);
        m.decide(&mk(10.0));
        assert_eq!(m.flagged, vec![0]);
        assert_eq!(m.episodes.len(), 1);
    }
}
