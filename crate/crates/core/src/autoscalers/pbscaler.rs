//! Bottleneck-targeted scaling: rank services on the observed call graph
//! with personalized PageRank, then search replica counts for the top
//! candidates with a genetic algorithm scored by the latency estimator.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::estimator::EstimatorModel;
use super::ga::{minimize, GaParams};
use super::khpa::{Khpa, KhpaParams};
use super::pagerank::{personalized_pagerank, top_k};
use super::{Autoscaler, PolicyInput, ScalingDecision};
use crate::kernel::rng::{SeededRng, GA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Demands from the scenario's topology.
    Topology,
    /// Demands fitted from the lowest observed local latency.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PbScalerParams {
    pub top_k: usize,
    pub damping: f64,
    pub iterations: usize,
    pub ga: GaParams,
    pub w_slo: f64,
    pub w_cost: f64,
    /// Below this fraction of the SLO, try to release replicas.
    pub scale_in_below: f64,
    /// Load multiplier the search plans for.
    pub load_headroom: f64,
    /// Fraction of the SLO the search treats as its latency budget.
    pub plan_target: f64,
    pub down_step: i64,
    pub up_step: i64,
    pub history: usize,
    /// Cap on the observed/predicted latency correction.
    pub max_calibration: f64,
    pub estimator: EstimatorMode,
    pub fallback: KhpaParams,
}

impl Default for PbScalerParams {
    fn default() -> Self {
        Self {
            top_k: 2,
            damping: 0.85,
            iterations: 50,
            ga: GaParams::default(),
            w_slo: 10.0,
            w_cost: 1.0,
            scale_in_below: 0.5,
            load_headroom: 1.0,
            plan_target: 1.0,
            down_step: 2,
            up_step: 5,
            history: 240,
            max_calibration: 10.0,
            estimator: EstimatorMode::Topology,
            fallback: KhpaParams::default(),
        }
    }
}

fn median(v: &VecDeque<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s: Vec<f64> = v.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    Some(s[(s.len() - 1) / 2])
}

#[derive(Debug, Clone)]
pub struct PbScaler {
    params: PbScalerParams,
    rng: SeededRng,
    history: Vec<VecDeque<f64>>,
    min_self_mean: Vec<Option<f64>>,
    fallback: Khpa,
    candidates: Vec<usize>,
    calibration: f64,
    events: Vec<&'static str>,
}

impl PbScaler {
    pub fn new(params: PbScalerParams, seed: u64) -> Self {
        Self {
            params,
            rng: SeededRng::new(seed, GA),
            history: Vec::new(),
            min_self_mean: Vec::new(),
            fallback: Khpa::new(params.fallback),
            candidates: Vec::new(),
            calibration: 1.0,
            events: Vec::new(),
        }
    }

    /// Candidates chosen at the most recent scale-out trigger, best first.
    pub fn last_candidates(&self) -> &[usize] {
        &self.candidates
    }

    /// Latency correction used by the most recent search.
    pub fn last_calibration(&self) -> f64 {
        self.calibration
    }

    fn record(&mut self, input: &PolicyInput) {
        let n = input.services.len();
        if self.history.len() < n {
            self.history.resize_with(n, VecDeque::new);
            self.min_self_mean.resize(n, None);
        }
        for (i, s) in input.services.iter().enumerate() {
            if let Some(v) = s.self_p90_ms.or(s.p90_ms) {
                let h = &mut self.history[i];
                h.push_back(v);
                while h.len() > self.params.history.max(1) {
                    h.pop_front();
                }
            }
            if let Some(m) = s.self_mean_ms {
                let cur = &mut self.min_self_mean[i];
                *cur = Some(cur.map_or(m, |c| c.min(m)));
            }
        }
    }

    fn estimator(&self, input: &PolicyInput) -> Option<EstimatorModel> {
        let model = input.estimator.as_ref()?;
        match self.params.estimator {
            EstimatorMode::Topology => Some(model.clone()),
            EstimatorMode::Fitted => {
                let mut per = Vec::with_capacity(self.min_self_mean.len());
                for (i, m) in self.min_self_mean.iter().enumerate() {
                    per.push((*m)? * model.capacity_mcores[i] / 1000.0);
                }
                Some(model.with_demands(&per))
            }
        }
    }

    fn degrade(&mut self, input: &PolicyInput, why: &'static str) -> Vec<ScalingDecision> {
        log::debug!("pbscaler at {} ms: {why}", input.now_ms);
        self.events.push(why);
        self.fallback.decide_with_reason(input, why)
    }

    fn search(
        &mut self,
        input: &PolicyInput,
        model: &EstimatorModel,
        cands: &[usize],
        bounds: &[(i64, i64)],
        reason: &dyn Fn(usize) -> String,
    ) -> Vec<ScalingDecision> {
        let p = self.params;
        let lambda = input.services[input.entry].request_rate.unwrap_or(0.0) * p.load_headroom;
        let mut replicas: Vec<u32> = input.services.iter().map(|s| s.desired.max(1)).collect();
        let maxes: Vec<f64> = cands
            .iter()
            .map(|&c| input.services[c].max_replicas.max(1) as f64)
            .collect();
        let seed: Vec<i64> = cands
            .iter()
            .map(|&c| i64::from(input.services[c].desired))
            .collect();
        let slo = input.slo_ms * p.plan_target.clamp(0.05, 1.0);
        // Where the model disagrees with what the entry observes, trust the
        // observation: scale every estimate by the observed/predicted ratio
        // at the current replica counts. Only pessimistic corrections apply.
        let calib = match input.services[input.entry].p90_ms {
            Some(obs) => {
                let predicted = model.entry_p90(lambda, &replicas);
                if predicted > 0.0 {
                    (obs / predicted).clamp(1.0, p.max_calibration.max(1.0))
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.calibration = calib;
        let (best, _) = minimize(bounds, &p.ga, Some(&seed), &mut self.rng, &mut |x| {
            for (k, &c) in cands.iter().enumerate() {
                replicas[c] = x[k].max(1) as u32;
            }
            let est = calib * model.entry_p90(lambda, &replicas);
            let cost: f64 = x.iter().zip(&maxes).map(|(&r, &m)| r as f64 / m).sum();
            p.w_slo * (est / slo - 1.0).max(0.0) + p.w_cost * cost
        });
        cands
            .iter()
            .zip(best)
            .filter(|&(&c, t)| t != i64::from(input.services[c].desired))
            .map(|(&c, t)| ScalingDecision {
                service: c,
                target: t,
                reason: reason(c),
            })
            .collect()
    }
}

impl Autoscaler for PbScaler {
    fn name(&self) -> &'static str {
        "pbscaler"
    }

    fn decide(&mut self, input: &PolicyInput) -> Vec<ScalingDecision> {
        self.record(input);
        let Some(fe_p90) = input.services[input.entry].p90_ms else {
            return Vec::new();
        };
        let graph = match &input.call_graph {
            Some(g) if !g.is_empty() => g.clone(),
            _ => return self.degrade(input, "graph-unavailable"),
        };
        let Some(model) = self.estimator(input) else {
            return self.degrade(input, "estimator-unavailable");
        };
        let p = self.params;
        let n = input.services.len();
        if fe_p90 > input.slo_ms {
            let pers: Vec<f64> = (0..n)
                .map(|i| {
                    let cur = input.services[i].self_p90_ms.or(input.services[i].p90_ms);
                    match (cur, median(&self.history[i])) {
                        (Some(c), Some(m)) if m > 0.0 => (c / m).max(1.0),
                        _ => 1.0,
                    }
                })
                .collect();
            let rank = personalized_pagerank(n, &graph, &pers, p.damping, p.iterations);
            let cands = top_k(&rank, p.top_k.max(1));
            self.candidates = cands.clone();
            let bounds: Vec<(i64, i64)> = cands
                .iter()
                .map(|&c| {
                    let s = &input.services[c];
                    let cur = i64::from(s.desired);
                    let lo = (cur - p.down_step).max(i64::from(s.min_replicas.max(1)));
                    let hi = (cur + p.up_step).min(i64::from(s.max_replicas)).max(lo);
                    (lo, hi)
                })
                .collect();
            let names: Vec<String> = input.services.iter().map(|s| s.name.clone()).collect();
            return self.search(input, &model, &cands, &bounds, &|c| {
                format!("bottleneck:{}", names[c])
            });
        }
        if fe_p90 < p.scale_in_below * input.slo_ms {
            let cands: Vec<usize> = (0..n)
                .filter(|&i| input.services[i].desired > input.services[i].min_replicas.max(1))
                .collect();
            if cands.is_empty() {
                return Vec::new();
            }
            let bounds: Vec<(i64, i64)> = cands
                .iter()
                .map(|&c| {
                    let s = &input.services[c];
                    let cur = i64::from(s.desired);
                    (
                        (cur - p.down_step).max(i64::from(s.min_replicas.max(1))),
                        cur,
                    )
                })
                .collect();
            return self.search(input, &model, &cands, &bounds, &|_| "scale-in".to_string());
        }
        Vec::new()
    }

    fn drain_events(&mut self) -> Vec<&'static str> {
        std::mem::take(&mut self.events)
    }
}
