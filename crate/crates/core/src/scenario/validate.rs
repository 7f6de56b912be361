use std::collections::BTreeSet;
use std::path::Path;

use super::config::ScenarioConfig;
use super::load::load;
use crate::app::CallPlan;
use crate::autoscalers;
use crate::cluster::CpuLimit;
use crate::gaps::{assemble, GapId};
use crate::workload::{RateSource, WorkloadSpec};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate_file(path: &Path) -> Validation {
    match load(path) {
        Ok(sc) => validate(&sc),
        Err(e) => Validation {
            errors: vec![e.to_string()],
            warnings: Vec::new(),
        },
    }
}

pub fn validate(sc: &ScenarioConfig) -> Validation {
    let mut v = Validation::default();
    let mut err = |m: String| v.errors.push(m);

    if sc.step_ms == 0 {
        err("step_ms: must be > 0".into());
    } else if sc.sync_period_ms == 0 || sc.sync_period_ms % sc.step_ms != 0 {
        err("sync_period_ms: must be a positive multiple of step_ms".into());
    }
    if !(sc.slo_ms > 0.0) {
        err("slo_ms: must be > 0".into());
    }
    if sc.cluster.nodes.is_empty() {
        err("cluster.nodes: at least one node is required".into());
    }
    for (i, n) in sc.cluster.nodes.iter().enumerate() {
        if !(n.capacity_mcores > 0.0) {
            err(format!("cluster.nodes[{i}].capacity_mcores: must be > 0"));
        }
    }

    let topo = &sc.topology;
    let mut names = BTreeSet::new();
    for (i, s) in topo.services.iter().enumerate() {
        if !names.insert(s.name.as_str()) {
            err(format!(
                "topology.services[{i}].name: duplicate service {}",
                s.name
            ));
        }
        if s.endpoints.is_empty() {
            err(format!(
                "topology.services[{i}].endpoints: at least one endpoint is required"
            ));
        }
        for (j, ep) in s.endpoints.iter().enumerate() {
            let at = format!("topology.services[{i}].endpoints[{j}]");
            if !(ep.cpu_demand_ms >= 0.0) {
                err(format!("{at}.cpu_demand_ms: must be >= 0"));
            }
            if ep.max_queue == 0 {
                err(format!("{at}.max_queue: must be >= 1"));
            }
            for (k, c) in ep.downstream.iter().enumerate() {
                if topo.resolve(c).is_none() {
                    err(format!("{at}.downstream[{k}]: unknown endpoint {c}"));
                }
            }
        }
    }
    let entry_ok = topo.resolve(&topo.entry).is_some();
    if !entry_ok {
        err(format!("topology.entry: unknown endpoint {}", topo.entry));
    }

    for (i, d) in sc.deployments.iter().enumerate() {
        let at = format!("deployments[{i}]");
        if topo.service_index(&d.service).is_none() {
            err(format!("{at}.service: unknown service {}", d.service));
        }
        if sc.deployments[..i].iter().any(|o| o.service == d.service) {
            err(format!(
                "{at}.service: duplicate deployment for {}",
                d.service
            ));
        }
        if d.min_replicas > d.max_replicas {
            err(format!(
                "{at}: min>max ({} > {})",
                d.min_replicas, d.max_replicas
            ));
        }
        let init = d.initial();
        if init < d.min_replicas || init > d.max_replicas {
            err(format!(
                "{at}.initial_replicas: {init} outside [{}, {}]",
                d.min_replicas, d.max_replicas
            ));
        }
        let r = &d.resources;
        if !(r.request_mcores >= 0.0) {
            err(format!("{at}.resources.request_mcores: must be >= 0"));
        }
        match r.limit_mcores {
            CpuLimit::Bounded(l) if !(l > 0.0) => {
                err(format!("{at}.resources.limit_mcores: must be > 0"))
            }
            CpuLimit::Bounded(l) if l < r.request_mcores => err(format!(
                "{at}.resources: limit {l} below request {}",
                r.request_mcores
            )),
            CpuLimit::Unbounded if !sc.gaps.is_active(GapId::G9) => err(format!(
                "{at}.resources.limit_mcores: \"unbounded\" requires gaps.g9.active"
            )),
            _ => {}
        }
        if !(d.idle_cpu_mcores >= 0.0) || !(d.demand_multiplier >= 0.0) {
            err(format!(
                "{at}: idle_cpu_mcores and demand_multiplier must be >= 0"
            ));
        }
        for (kind, p) in [
            ("readiness", d.probes.readiness),
            ("liveness", d.probes.liveness),
        ] {
            if let Some(p) = p {
                if let Err(m) = p.validate() {
                    err(format!("{at}.probes.{kind}: {m}"));
                }
            }
        }
        if let Some(n) = d.node {
            if n >= sc.cluster.nodes.len() {
                err(format!("{at}.node: no node {n}"));
            }
        }
    }
    for s in &topo.services {
        if !sc.deployments.iter().any(|d| d.service == s.name) {
            err(format!("deployments: service {} has no deployment", s.name));
        }
    }
    for (i, q) in sc.quotas.iter().enumerate() {
        if !sc.deployments.iter().any(|d| d.namespace == q.namespace) {
            v.warnings.push(format!(
                "quotas[{i}]: namespace {} has no deployments",
                q.namespace
            ));
        }
    }

    match &sc.workload {
        WorkloadSpec::Trace { path, .. } if !path.exists() => {
            v.errors
                .push(format!("workload.path: {} does not exist", path.display()));
        }
        WorkloadSpec::ClosedLoop { think_time_ms, .. } if !(*think_time_ms >= 0.0) => {
            v.errors.push("workload.think_time_ms: must be >= 0".into());
        }
        spec => {
            if let Err(e) = RateSource::from_spec(spec) {
                v.errors.push(format!("workload: {e}"));
            }
        }
    }

    if let Err(m) = autoscalers::build(&sc.autoscaler, sc.seed) {
        v.errors.push(format!("autoscaler.params: {m}"));
    }

    if !v.errors.is_empty() {
        return v;
    }
    let asm = match assemble(sc) {
        Ok(a) => a,
        Err(e) => {
            v.errors.push(e.to_string());
            return v;
        }
    };
    let topo = asm.effective_topology();
    let patterns = &asm.call_graph.patterns;
    if let Err(m) = CallPlan::compile(&topo, &|s, e| patterns[s][e]) {
        v.errors.push(format!("topology: {m}"));
    }
    for (s, d) in asm.base.deployments.iter().enumerate() {
        if asm.scale_limits[s].min_replicas > asm.scale_limits[s].max_replicas {
            v.errors.push(format!(
                "remediations.g2: cap for {} is below its min_replicas",
                d.service
            ));
        }
        let Some(l) = asm.probes[s].liveness else {
            continue;
        };
        let boot = asm.startup[s];
        let limit = match asm.limits[s] {
            CpuLimit::Unbounded => CpuLimit::Bounded(
                sc.cluster
                    .nodes
                    .iter()
                    .map(|n| n.capacity_mcores)
                    .fold(0.0, f64::max),
            ),
            b => b,
        };
        let boot_ms = boot.init_duration_ms as f64 + boot.nominal_boot_ms(limit);
        if (l.failure_deadline_ms() as f64) < boot_ms {
            v.warnings.push(format!(
                "{}: liveness deadline {} ms < boot {:.0} ms, restart loop likely",
                d.service,
                l.failure_deadline_ms(),
                boot_ms
            ));
        }
    }
    v
}
