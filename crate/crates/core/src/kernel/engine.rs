//! The fixed-step simulation loop.
//!
//! Each step: start pending boots, replay the step's arrivals and every
//! completion, boot, and timeout inside it in time order, then account CPU,
//! run probes, retire drained pods, and (on sync boundaries) let the policy
//! act. CPU shares are recomputed per node whenever a pod's demand changes.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::clock::SimClock;
use super::rng::{SeededRng, ARRIVALS, JITTER};
use crate::app::{
    admit, route, Admission, CallPlan, ErrorKind, ErrorMode, Outcome, PsQueue, RequestRecord,
    SpanRecord,
};
use crate::autoscalers::estimator::EstimatorNode;
use crate::autoscalers::{self, Autoscaler, EstimatorModel, PolicyInput, ServiceView};
use crate::cluster::{
    allocate_cpu, probe_tick, scale_to, BootProfile, CpuClaim, CpuLimit, HealthContext, Pod,
    PodPhase, ProbeEvent, ProbeSet, QuotaRoom, ScaleBounds,
};
use crate::error::{Error, Result};
use crate::gaps::AssembledConfig;
use crate::scenario::{DemandDistribution, ScenarioConfig};
use crate::telemetry::{
    utilization, DecisionRecord, RunReport, ServiceRow, ServiceSummary, SlidingWindow, Telemetry,
    TelemetryConfig, TimeseriesRow,
};
use crate::workload::{arrival_times, arrivals_in_step, RateSource, UserPool, WorkloadSpec};

/// Tolerance for the conservation checks, in mcores.
const ALLOC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Key(u64);

impl Key {
    fn new(idx: usize, gen: u32) -> Self {
        Key(((idx as u64) << 32) | u64::from(gen))
    }
    fn idx(self) -> usize {
        (self.0 >> 32) as usize
    }
    fn gen(self) -> u32 {
        self.0 as u32
    }
}

/// Generational slab: keys of removed entries never resolve again.
struct Slab<T> {
    slots: Vec<(u32, Option<T>)>,
    free: Vec<usize>,
}

impl<T> Slab<T> {
    fn new() -> Self {
        Self {
            slots: Vec::new(),
            free: Vec::new(),
        }
    }

    fn insert(&mut self, v: T) -> Key {
        if let Some(i) = self.free.pop() {
            self.slots[i].1 = Some(v);
            Key::new(i, self.slots[i].0)
        } else {
            self.slots.push((0, Some(v)));
            Key::new(self.slots.len() - 1, 0)
        }
    }

    fn get(&self, k: Key) -> Option<&T> {
        match self.slots.get(k.idx()) {
            Some((g, Some(v))) if *g == k.gen() => Some(v),
            _ => None,
        }
    }

    fn get_mut(&mut self, k: Key) -> Option<&mut T> {
        match self.slots.get_mut(k.idx()) {
            Some((g, Some(v))) if *g == k.gen() => Some(v),
            _ => None,
        }
    }

    fn remove(&mut self, k: Key) -> Option<T> {
        let slot = self.slots.get_mut(k.idx())?;
        if slot.0 != k.gen() || slot.1.is_none() {
            return None;
        }
        slot.0 = slot.0.wrapping_add(1);
        self.free.push(k.idx());
        slot.1.take()
    }

    fn len(&self) -> usize {
        self.slots.len() - self.free.len()
    }
}

struct Span {
    request: Key,
    plan_node: usize,
    service: usize,
    parent: Option<Key>,
    pod: u64,
    start_ms: f64,
    local_done_ms: Option<f64>,
    /// Finish tag while the span's local work sits in the pod's PS queue.
    ps_tag: Option<f64>,
    children: Vec<Key>,
    pending: u32,
}

struct Request {
    id: u64,
    arrival_ms: f64,
    user: Option<u32>,
    any_error: bool,
    record: Option<RequestRecord>,
}

struct PodRt {
    pod: Pod,
    ps: PsQueue,
    /// Spans holding a queue slot: running locally or waiting on children.
    in_flight: u32,
    resident: BTreeSet<Key>,
    t_last: f64,
    version: u64,
    step_cpu_ms: f64,
    util: SlidingWindow,
    drain_deadline_ms: Option<u64>,
}

struct Deploy {
    name: String,
    namespace: String,
    desired: u32,
    min: u32,
    max: u32,
    scale_up_limit: Option<u32>,
    frozen: bool,
    request: f64,
    limit: CpuLimit,
    idle: f64,
    boot: BootProfile,
    probes: ProbeSet,
    node_pin: Option<usize>,
    pods: BTreeSet<u64>,
    restarts: u64,
    max_desired: u32,
    max_ready: u32,
    cpu_ms: f64,
    sample_cpu_ms: f64,
}

impl Deploy {
    fn boot_work(&self) -> f64 {
        self.boot.boot_work_cpu_ms()
    }
}

struct NodeInfo {
    demand_ms: f64,
    error_mode: ErrorMode,
    timeout_ms: f64,
    max_queue: u32,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    clock: SimClock,
    steps: u64,
    deploys: Vec<Deploy>,
    node_caps: Vec<f64>,
    pods: BTreeMap<u64, PodRt>,
    next_pod_id: u64,
    placed: u64,
    plan: CallPlan,
    plan_info: Vec<NodeInfo>,
    entry: usize,
    spans: Slab<Span>,
    requests: Slab<Request>,
    next_request_id: u64,
    pod_events: BinaryHeap<Reverse<(u64, u64, u64)>>,
    deadlines: BinaryHeap<Reverse<(u64, Key)>>,
    dirty: BTreeSet<usize>,
    rate: Option<RateSource>,
    users: Option<UserPool>,
    arrivals_rng: SeededRng,
    jitter_rng: SeededRng,
    tel: Telemetry,
    policy: Box<dyn Autoscaler>,
    policy_name: String,
    app_metrics: bool,
    graph_visible: bool,
    hard_coded_edges: Option<Vec<(usize, usize)>>,
    estimator: EstimatorModel,
    quotas: BTreeMap<String, f64>,
    report: RunReport,
    requests_seen: u64,
    health_cost_ms: f64,
    drain_timeout_ms: u64,
}

fn bits(t: f64) -> u64 {
    debug_assert!(t >= 0.0 && t.is_finite(), "bad event time {t}");
    t.max(0.0).to_bits()
}

impl Simulation {
    /// Build a simulation with the policy named in the scenario.
    pub fn new(asm: &AssembledConfig) -> Result<Self> {
        let policy =
            autoscalers::build(&asm.base.autoscaler, asm.base.seed).map_err(Error::Invalid)?;
        Self::with_policy(asm, policy)
    }

    pub fn with_policy(asm: &AssembledConfig, policy: Box<dyn Autoscaler>) -> Result<Self> {
        let cfg = asm.base.clone();
        if cfg.step_ms == 0 {
            return Err(Error::Invalid("step_ms must be > 0".into()));
        }
        if cfg.cluster.nodes.is_empty() {
            return Err(Error::Invalid("cluster has no nodes".into()));
        }
        let topo = asm.effective_topology();
        let patterns = &asm.call_graph.patterns;
        let plan = CallPlan::compile(&topo, &|s, e| patterns[s][e]).map_err(Error::Invalid)?;
        let entry = topo.entry_service();
        let n = topo.services.len();

        let deploys: Vec<Deploy> = (0..n)
            .map(|s| {
                let d = asm.deployment(s);
                let sl = asm.scale_limits[s];
                let init = d.initial().clamp(sl.min_replicas, sl.max_replicas);
                Deploy {
                    name: d.service.clone(),
                    namespace: d.namespace.clone(),
                    desired: init,
                    min: sl.min_replicas,
                    max: sl.max_replicas,
                    scale_up_limit: sl.scale_up_limit,
                    frozen: d.frozen,
                    request: d.resources.request_mcores,
                    limit: asm.limits[s],
                    idle: d.idle_cpu_mcores,
                    boot: asm.startup[s],
                    probes: asm.probes[s],
                    node_pin: d.node,
                    pods: BTreeSet::new(),
                    restarts: 0,
                    max_desired: init,
                    max_ready: 0,
                    cpu_ms: 0.0,
                    sample_cpu_ms: 0.0,
                }
            })
            .collect();

        let plan_info: Vec<NodeInfo> = plan
            .nodes
            .iter()
            .map(|pn| {
                let ep = topo.endpoint(pn.service, pn.endpoint);
                NodeInfo {
                    demand_ms: ep.cpu_demand_ms * asm.deployment(pn.service).demand_multiplier,
                    error_mode: ep.error_mode,
                    timeout_ms: ep.timeout_ms as f64,
                    max_queue: ep.max_queue,
                }
            })
            .collect();

        let node_caps: Vec<f64> = cfg
            .cluster
            .nodes
            .iter()
            .map(|n| n.capacity_mcores)
            .collect();
        let biggest = node_caps.iter().copied().fold(0.0, f64::max);
        let mut work_ms = vec![0.0; n];
        for (pn, info) in plan.nodes.iter().zip(&plan_info) {
            work_ms[pn.service] += info.demand_ms;
        }
        let estimator = EstimatorModel {
            work_ms,
            capacity_mcores: deploys.iter().map(|d| d.limit.cap_on(biggest)).collect(),
            nodes: plan
                .nodes
                .iter()
                .zip(&plan_info)
                .map(|(pn, info)| EstimatorNode {
                    service: pn.service,
                    demand_ms: info.demand_ms,
                    children: pn.children.clone(),
                })
                .collect(),
            slo_ms: cfg.slo_ms,
        };

        let tcfg = TelemetryConfig {
            slo_ms: cfg.slo_ms,
            latency_window_ms: cfg.telemetry.latency_window_ms as f64,
            rate_window_ms: cfg.telemetry.rate_window_ms.max(1) as f64,
            error_metrics: asm.error_metrics,
        };
        let mut arrivals_rng = SeededRng::new(cfg.seed, ARRIVALS);
        let rate = RateSource::from_spec(&cfg.workload)?;
        let users = match cfg.workload {
            WorkloadSpec::ClosedLoop {
                users,
                think_time_ms,
            } => Some(UserPool::new(users, think_time_ms, &mut arrivals_rng)),
            _ => None,
        };
        let quotas = asm
            .quotas
            .iter()
            .filter_map(|q| q.cpu_request_cap_mcores.map(|c| (q.namespace.clone(), c)))
            .collect();
        let hard_coded_edges = asm
            .call_graph
            .hard_coded
            .then(|| plan.service_edges().into_iter().collect());

        let steps = SimClock::new(cfg.step_ms).steps_for(cfg.duration_ms);
        let policy_name = policy.name().to_string();
        let mut sim = Self {
            clock: SimClock::new(cfg.step_ms),
            steps,
            deploys,
            node_caps,
            pods: BTreeMap::new(),
            next_pod_id: 0,
            placed: 0,
            plan,
            plan_info,
            entry,
            spans: Slab::new(),
            requests: Slab::new(),
            next_request_id: 0,
            pod_events: BinaryHeap::new(),
            deadlines: BinaryHeap::new(),
            dirty: BTreeSet::new(),
            rate,
            users,
            arrivals_rng,
            jitter_rng: SeededRng::new(cfg.seed, JITTER),
            tel: Telemetry::new(n, tcfg),
            policy,
            policy_name,
            app_metrics: asm.app_metrics,
            graph_visible: asm.call_graph.mesh_observability && asm.app_metrics,
            hard_coded_edges,
            estimator,
            quotas,
            report: RunReport::default(),
            requests_seen: 0,
            health_cost_ms: cfg.cluster.health_check_cost_ms,
            drain_timeout_ms: cfg.cluster.drain_timeout_ms,
            cfg,
        };
        for s in 0..n {
            let target = sim.deploys[s].desired;
            let warm = asm.deployment(s).warm_start;
            sim.reconcile(s, target, 0, warm, false);
        }
        sim.flush_dirty(0.0);
        Ok(sim)
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn is_done(&self) -> bool {
        self.clock.step_index() >= self.steps
    }

    pub fn pods(&self) -> impl Iterator<Item = &Pod> {
        self.pods.values().map(|p| &p.pod)
    }

    pub fn desired(&self, service: usize) -> u32 {
        self.deploys[service].desired
    }

    pub fn in_flight_spans(&self) -> usize {
        self.spans.len()
    }

    /// Run to the configured duration and return the report.
    pub fn run(mut self) -> RunReport {
        while !self.is_done() {
            self.step();
        }
        self.finish()
    }

    // ---- pods and CPU -------------------------------------------------

    fn pod_cap(&self, p: &PodRt) -> Option<f64> {
        let d = &self.deploys[p.pod.deployment];
        let base = d.limit.mcores();
        match (p.pod.phase, d.boot.boot_burst_limit_mcores) {
            (PodPhase::Booting, Some(b)) => base.map(|l| l.max(b)),
            _ => base,
        }
    }

    fn pod_demand(&self, p: &PodRt) -> f64 {
        let d = &self.deploys[p.pod.deployment];
        let busy = d.limit.cap_on(self.node_caps[p.pod.node]);
        match p.pod.phase {
            PodPhase::Init => 0.0,
            PodPhase::Booting => d.boot.boot_demand_mcores(),
            PodPhase::Ready | PodPhase::NotReady => {
                if p.ps.is_empty() {
                    d.idle
                } else {
                    busy
                }
            }
            PodPhase::Terminating => {
                if p.pod.boot_remaining_cpu_ms > 0.0 {
                    0.0
                } else if p.ps.is_empty() {
                    d.idle
                } else {
                    busy
                }
            }
        }
    }

    fn sync_pod(&mut self, id: u64, t: f64) {
        let Some(p) = self.pods.get_mut(&id) else {
            return;
        };
        let dt = t - p.t_last;
        if dt <= 0.0 {
            return;
        }
        let alloc = p.pod.cpu_alloc_mcores;
        let cpu = alloc * dt / 1000.0;
        p.step_cpu_ms += cpu;
        if p.pod.phase == PodPhase::Booting {
            p.pod.boot_remaining_cpu_ms = (p.pod.boot_remaining_cpu_ms - cpu).max(0.0);
        } else if p.pod.boot_complete() {
            p.ps.advance(alloc, dt);
        }
        p.t_last = t;
    }

    fn next_event(p: &PodRt) -> Option<f64> {
        let alloc = p.pod.cpu_alloc_mcores;
        if alloc <= 0.0 {
            return None;
        }
        if p.pod.phase == PodPhase::Booting {
            return Some(p.t_last + p.pod.boot_remaining_cpu_ms * 1000.0 / alloc);
        }
        if p.pod.boot_complete() {
            return p.ps.time_to_next(alloc).map(|dt| p.t_last + dt);
        }
        None
    }

    fn reschedule(&mut self, id: u64) {
        let Some(p) = self.pods.get_mut(&id) else {
            return;
        };
        p.version += 1;
        if let Some(t) = Self::next_event(p) {
            self.pod_events.push(Reverse((bits(t), id, p.version)));
        }
    }

    /// Recompute demand; a change marks the node for reallocation.
    fn refresh_pod(&mut self, id: u64) {
        let Some(p) = self.pods.get(&id) else { return };
        let d = self.pod_demand(p);
        let node = p.pod.node;
        let p = self.pods.get_mut(&id).expect("checked above");
        if p.pod.cpu_demand_mcores != d {
            p.pod.cpu_demand_mcores = d;
            self.dirty.insert(node);
        }
        self.reschedule(id);
    }

    fn flush_dirty(&mut self, t: f64) {
        while let Some(node) = self.dirty.pop_first() {
            let ids: Vec<u64> = self
                .pods
                .iter()
                .filter(|(_, p)| p.pod.node == node)
                .map(|(&id, _)| id)
                .collect();
            for &id in &ids {
                self.sync_pod(id, t);
            }
            let claims: Vec<CpuClaim> = ids
                .iter()
                .map(|id| {
                    let p = &self.pods[id];
                    CpuClaim {
                        demand_mcores: p.pod.cpu_demand_mcores,
                        request_mcores: self.deploys[p.pod.deployment].request,
                        limit_mcores: self.pod_cap(p),
                    }
                })
                .collect();
            let alloc = allocate_cpu(self.node_caps[node], &claims);
            for (&id, a) in ids.iter().zip(alloc) {
                self.pods.get_mut(&id).expect("listed").pod.cpu_alloc_mcores = a;
                self.reschedule(id);
            }
        }
    }

    fn create_pod(&mut self, s: usize, now: u64, warm: bool) {
        let id = self.next_pod_id;
        self.next_pod_id += 1;
        let node = match self.deploys[s].node_pin {
            Some(n) => n,
            None => {
                let n = (self.placed % self.node_caps.len() as u64) as usize;
                self.placed += 1;
                n
            }
        };
        let d = &self.deploys[s];
        let mut pod = Pod::new(id, s, node, now);
        pod.boot_remaining_cpu_ms = d.boot_work();
        pod.process_start_ms = now + d.boot.init_duration_ms;
        if warm {
            pod.process_start_ms = now;
            pod.boot_remaining_cpu_ms = 0.0;
            pod.set_phase(PodPhase::Booting, now);
            pod.set_phase(PodPhase::Ready, now);
        }
        let util = SlidingWindow::new(self.cfg.telemetry.utilization_window_ms as f64);
        self.pods.insert(
            id,
            PodRt {
                pod,
                ps: PsQueue::new(),
                in_flight: 0,
                resident: BTreeSet::new(),
                t_last: now as f64,
                version: 0,
                step_cpu_ms: 0.0,
                util,
                drain_deadline_ms: None,
            },
        );
        self.deploys[s].pods.insert(id);
        self.refresh_pod(id);
        self.dirty.insert(node);
    }

    fn remove_pod(&mut self, id: u64, t: f64) {
        self.drop_spans(id, t);
        self.sync_pod(id, t);
        if let Some(p) = self.pods.remove(&id) {
            let d = &mut self.deploys[p.pod.deployment];
            d.cpu_ms += p.step_cpu_ms;
            d.sample_cpu_ms += p.step_cpu_ms;
            d.pods.remove(&id);
            self.tel.core_minutes += p.step_cpu_ms / 60_000.0;
            self.dirty.insert(p.pod.node);
        }
    }

    /// Fail every span holding a slot on the pod.
    fn drop_spans(&mut self, id: u64, t: f64) {
        let keys: Vec<Key> = match self.pods.get(&id) {
            Some(p) => p.resident.iter().copied().collect(),
            None => return,
        };
        for k in keys {
            if self.spans.get(k).is_some() {
                self.finish_span(k, t, Outcome::Error(ErrorKind::DependencyUnavailable));
            }
        }
    }

    fn complete_boot(&mut self, id: u64, now: u64) {
        let has_readiness = {
            let p = &self.pods[&id];
            self.deploys[p.pod.deployment].probes.readiness.is_some()
        };
        let p = self.pods.get_mut(&id).expect("booting pod exists");
        p.pod.boot_remaining_cpu_ms = 0.0;
        let to = if has_readiness {
            PodPhase::NotReady
        } else {
            PodPhase::Ready
        };
        p.pod.set_phase(to, now);
    }

    fn routable(&self, p: &PodRt) -> bool {
        match p.pod.phase {
            PodPhase::Ready => true,
            PodPhase::Booting => self.deploys[p.pod.deployment].probes.readiness.is_none(),
            _ => false,
        }
    }

    /// Pods whose CPU the metrics pipeline attributes to the deployment.
    fn in_view(&self, p: &PodRt) -> bool {
        let d = &self.deploys[p.pod.deployment];
        match p.pod.phase {
            PodPhase::Ready => true,
            PodPhase::Booting => d.probes.readiness.is_none() || !d.boot.init_isolated,
            _ => false,
        }
    }

    // ---- requests and spans -------------------------------------------

    fn demand_sample(&mut self, mean: f64) -> f64 {
        match self.cfg.demand {
            DemandDistribution::Deterministic => mean,
            DemandDistribution::Exponential => -mean * (1.0 - self.jitter_rng.next_uniform()).ln(),
        }
    }

    fn new_request(&mut self, t: f64, user: Option<u32>) {
        let id = self.next_request_id;
        self.next_request_id += 1;
        self.requests_seen += 1;
        let record = self.cfg.record_requests.then(|| RequestRecord {
            id,
            arrival_ms: t,
            completion_ms: None,
            outcome: None,
            spans: Vec::new(),
        });
        let rk = self.requests.insert(Request {
            id,
            arrival_ms: t,
            user,
            any_error: false,
            record,
        });
        self.start_span(rk, 0, None, t);
    }

    fn start_span(&mut self, req: Key, plan_node: usize, parent: Option<Key>, t: f64) {
        let service = self.plan.nodes[plan_node].service;
        self.tel.span_started(service, t);
        let info = &self.plan_info[plan_node];
        let (max_queue, timeout, demand) = (info.max_queue, info.timeout_ms, info.demand_ms);
        let target = route(
            self.deploys[service]
                .pods
                .iter()
                .map(|id| &self.pods[id])
                .filter(|p| self.routable(p))
                .map(|p| (p.pod.id, p.in_flight)),
        );
        let Some(pid) =
            target.filter(|id| admit(self.pods[id].in_flight, max_queue) == Admission::Accepted)
        else {
            self.fail_unplaced(req, plan_node, parent, t);
            return;
        };
        let work = self.demand_sample(demand);
        self.sync_pod(pid, t);
        let key = self.spans.insert(Span {
            request: req,
            plan_node,
            service,
            parent,
            pod: pid,
            start_ms: t,
            local_done_ms: None,
            ps_tag: None,
            children: Vec::new(),
            pending: 0,
        });
        let p = self.pods.get_mut(&pid).expect("routed pod exists");
        let tag = p.ps.push(key.0, work);
        p.in_flight += 1;
        p.resident.insert(key);
        self.spans.get_mut(key).expect("just inserted").ps_tag = Some(tag);
        if let Some(pk) = parent {
            if let Some(ps) = self.spans.get_mut(pk) {
                ps.children.push(key);
            }
        }
        self.deadlines.push(Reverse((bits(t + timeout), key)));
        self.refresh_pod(pid);
    }

    /// A call that found no pod to take it.
    fn fail_unplaced(&mut self, req: Key, plan_node: usize, parent: Option<Key>, t: f64) {
        let service = self.plan.nodes[plan_node].service;
        let outcome = Outcome::Error(ErrorKind::DependencyUnavailable);
        let caller = parent.and_then(|pk| self.spans.get(pk)).map(|s| s.service);
        self.tel.span_finished(service, caller, t, None, t, outcome);
        self.note_span(req, service, t, t, outcome);
        match parent {
            Some(pk) => self.child_finished(pk, t, outcome),
            None => self.request_done(req, t, outcome),
        }
    }

    fn note_span(&mut self, req: Key, service: usize, start: f64, end: f64, outcome: Outcome) {
        if let Some(r) = self.requests.get_mut(req) {
            if outcome.is_error() {
                r.any_error = true;
            }
            if let Some(rec) = r.record.as_mut() {
                rec.spans.push(SpanRecord {
                    service,
                    start_ms: start,
                    end_ms: end,
                    outcome,
                });
            }
        }
    }

    fn local_done(&mut self, key: Key, t: f64) {
        let Some(span) = self.spans.get_mut(key) else {
            return;
        };
        span.local_done_ms = Some(t);
        span.ps_tag = None;
        let (req, pn) = (span.request, span.plan_node);
        let children = self.plan.nodes[pn].children.clone();
        if children.is_empty() {
            self.finish_span(key, t, Outcome::Success);
            return;
        }
        self.spans.get_mut(key).expect("alive").pending = children.len() as u32;
        for c in children {
            if self.spans.get(key).is_none() {
                break;
            }
            self.start_span(req, c, Some(key), t);
        }
    }

    /// Release the span's slot and remove its remaining subtree silently.
    fn release(&mut self, key: Key, t: f64) -> Option<Span> {
        let span = self.spans.remove(key)?;
        if span.ps_tag.is_some() {
            self.sync_pod(span.pod, t);
        }
        if let Some(p) = self.pods.get_mut(&span.pod) {
            if let Some(tag) = span.ps_tag {
                p.ps.remove(key.0, tag);
            }
            p.in_flight -= 1;
            p.resident.remove(&key);
            self.refresh_pod(span.pod);
        }
        for &c in &span.children {
            self.cancel(c, t);
        }
        Some(span)
    }

    fn cancel(&mut self, key: Key, t: f64) {
        self.release(key, t);
    }

    fn finish_span(&mut self, key: Key, t: f64, outcome: Outcome) {
        let Some(span) = self.release(key, t) else {
            return;
        };
        let caller = span
            .parent
            .and_then(|pk| self.spans.get(pk))
            .map(|s| s.service);
        self.tel.span_finished(
            span.service,
            caller,
            span.start_ms,
            span.local_done_ms,
            t,
            outcome,
        );
        self.note_span(span.request, span.service, span.start_ms, t, outcome);
        match span.parent {
            Some(pk) => self.child_finished(pk, t, outcome),
            None => self.request_done(span.request, t, outcome),
        }
    }

    fn child_finished(&mut self, parent: Key, t: f64, outcome: Outcome) {
        let Some(p) = self.spans.get_mut(parent) else {
            return;
        };
        if outcome.is_error() {
            let mode = self.plan_info[p.plan_node].error_mode;
            let out = match mode {
                ErrorMode::Propagate => Outcome::Error(ErrorKind::DownstreamError),
                ErrorMode::Mask => Outcome::MaskedSuccess,
            };
            self.finish_span(parent, t, out);
            return;
        }
        p.pending -= 1;
        if p.pending == 0 {
            self.finish_span(parent, t, Outcome::Success);
        }
    }

    fn request_done(&mut self, req: Key, t: f64, outcome: Outcome) {
        let Some(r) = self.requests.remove(req) else {
            return;
        };
        let outcome = match outcome {
            Outcome::Error(k) => Outcome::Error(k),
            _ if r.any_error => Outcome::MaskedSuccess,
            _ => Outcome::Success,
        };
        self.tel.request_finished(t - r.arrival_ms, t, outcome);
        if let Some(mut rec) = r.record {
            rec.completion_ms = Some(t);
            rec.outcome = Some(outcome);
            debug_assert_eq!(rec.id, r.id);
            self.report.requests_log.push(rec);
        }
        if let (Some(u), Some(pool)) = (r.user, self.users.as_mut()) {
            pool.completed(u, t, &mut self.arrivals_rng);
        }
    }

    // ---- the step -----------------------------------------------------

    fn peek_pod_event(&mut self) -> Option<(f64, u64)> {
        while let Some(&Reverse((tb, id, v))) = self.pod_events.peek() {
            match self.pods.get(&id) {
                Some(p) if p.version == v => return Some((f64::from_bits(tb), id)),
                _ => {
                    self.pod_events.pop();
                }
            }
        }
        None
    }

    fn peek_deadline(&mut self) -> Option<(f64, Key)> {
        while let Some(&Reverse((tb, k))) = self.deadlines.peek() {
            if self.spans.get(k).is_some() {
                return Some((f64::from_bits(tb), k));
            }
            self.deadlines.pop();
        }
        None
    }

    fn arrivals(&mut self, t0: u64, t1: u64) -> Vec<(f64, Option<u32>)> {
        let dt = (t1 - t0) as f64;
        if let Some(pool) = self.users.as_mut() {
            return pool
                .due(t1 as f64)
                .into_iter()
                .map(|(t, u)| (t.max(t0 as f64), Some(u)))
                .collect();
        }
        let Some(src) = &self.rate else {
            return Vec::new();
        };
        let rate = src.rate_at(t0 as f64);
        let n = arrivals_in_step(rate, dt, &mut self.arrivals_rng);
        arrival_times(n, t0 as f64, dt, &mut self.arrivals_rng)
            .into_iter()
            .map(|t| (t, None))
            .collect()
    }

    fn on_pod_event(&mut self, id: u64, t: f64) {
        self.pod_events.pop();
        self.sync_pod(id, t);
        let p = &self.pods[&id];
        if p.pod.phase == PodPhase::Booting {
            let work = self.deploys[p.pod.deployment].boot_work();
            if p.pod.boot_remaining_cpu_ms <= 1e-9 * work.max(1.0) {
                self.complete_boot(id, t.floor() as u64);
            }
        } else {
            let mut done = Vec::new();
            let p = self.pods.get_mut(&id).expect("event pod exists");
            while let Some(k) = p.ps.pop_finished() {
                done.push(Key(k));
            }
            for k in done {
                self.local_done(k, t);
            }
        }
        self.refresh_pod(id);
    }

    pub fn step(&mut self) {
        let t0 = self.clock.now_ms();
        let t1 = self.clock.step_end_ms();
        let t1f = t1 as f64;

        let starting: Vec<u64> = self
            .pods
            .iter()
            .filter(|(_, p)| p.pod.phase == PodPhase::Init && p.pod.process_start_ms <= t0)
            .map(|(&id, _)| id)
            .collect();
        for id in starting {
            self.sync_pod(id, t0 as f64);
            let p = self.pods.get_mut(&id).expect("listed");
            p.pod.set_phase(PodPhase::Booting, t0);
            if p.pod.boot_remaining_cpu_ms <= 0.0 {
                self.complete_boot(id, t0);
            }
            self.refresh_pod(id);
        }
        self.flush_dirty(t0 as f64);

        let arrivals = self.arrivals(t0, t1);
        let mut ai = 0;
        loop {
            let ta = arrivals.get(ai).map(|a| a.0);
            let tp = self.peek_pod_event();
            let td = self.peek_deadline();
            let t = [ta, tp.map(|x| x.0), td.map(|x| x.0)]
                .into_iter()
                .flatten()
                .fold(f64::INFINITY, f64::min);
            if t >= t1f {
                break;
            }
            if let Some((tp, id)) = tp.filter(|x| x.0 == t) {
                self.on_pod_event(id, tp);
            } else if let Some((td, k)) = td.filter(|x| x.0 == t) {
                self.deadlines.pop();
                self.finish_span(k, td, Outcome::Error(ErrorKind::Timeout));
            } else {
                let (ta, user) = arrivals[ai];
                ai += 1;
                self.new_request(ta, user);
            }
            self.flush_dirty(t);
        }

        let ids: Vec<u64> = self.pods.keys().copied().collect();
        for &id in &ids {
            self.sync_pod(id, t1f);
        }
        self.check_conservation(t1);
        self.account_step(t1);
        self.run_probes(t1);
        self.retire_drained(t1);
        self.tel.evict(t1f);
        if t1 % self.cfg.sync_period_ms.max(1) == 0 {
            self.sync(t1);
        }
        let every = self.cfg.telemetry.sample_interval_ms.max(self.cfg.step_ms);
        if t1 % every == 0 {
            self.sample(t1);
        }
        self.flush_dirty(t1f);
        self.clock.tick();
    }

    fn check_conservation(&mut self, t1: u64) {
        let mut node_sum = vec![0.0; self.node_caps.len()];
        let mut violations = Vec::new();
        for p in self.pods.values() {
            let a = p.pod.cpu_alloc_mcores;
            node_sum[p.pod.node] += a;
            if let Some(cap) = self.pod_cap(p) {
                if a > cap + ALLOC_TOL {
                    violations.push(format!("pod {} allocated {a} above limit {cap}", p.pod.id));
                }
            }
        }
        for (n, (&s, &cap)) in node_sum.iter().zip(&self.node_caps).enumerate() {
            if s > cap + ALLOC_TOL {
                violations.push(format!("node {n} allocated {s} of {cap}"));
            }
        }
        for (ns, &cap) in &self.quotas {
            let used = self.namespace_requests(ns);
            if used > cap + ALLOC_TOL {
                violations.push(format!("namespace {ns} requests {used} above quota {cap}"));
            }
        }
        for v in violations {
            let e = Error::Invariant {
                at_ms: t1,
                message: v,
            };
            log::error!("{e}");
            if self.report.invariant_violations.len() < 1_000 {
                self.report.invariant_violations.push(e.to_string());
            }
        }
    }

    fn namespace_requests(&self, ns: &str) -> f64 {
        self.deploys
            .iter()
            .filter(|d| d.namespace == ns)
            .map(|d| d.request * d.pods.len() as f64)
            .sum()
    }

    fn account_step(&mut self, t1: u64) {
        let step = self.cfg.step_ms as f64;
        let ids: Vec<u64> = self.pods.keys().copied().collect();
        for id in ids {
            let in_view = self.in_view(&self.pods[&id]);
            let p = self.pods.get_mut(&id).expect("listed");
            let cpu = std::mem::take(&mut p.step_cpu_ms);
            if in_view {
                p.util.push(t1 as f64, cpu * 1000.0 / step);
            }
            p.util.evict(t1 as f64);
            let d = &mut self.deploys[p.pod.deployment];
            d.cpu_ms += cpu;
            d.sample_cpu_ms += cpu;
            self.tel.core_minutes += cpu / 60_000.0;
        }
        for d in &mut self.deploys {
            let ready = d
                .pods
                .iter()
                .filter(|id| self.pods[id].pod.phase == PodPhase::Ready)
                .count() as u32;
            d.max_ready = d.max_ready.max(ready);
        }
    }

    fn run_probes(&mut self, t1: u64) {
        let ids: Vec<u64> = self.pods.keys().copied().collect();
        for id in ids {
            let (probes, health) = {
                let p = &self.pods[&id];
                let health = HealthContext {
                    cost_ms: self.health_cost_ms,
                    demand_mcores: p.pod.cpu_demand_mcores,
                    alloc_mcores: p.pod.cpu_alloc_mcores,
                };
                (self.deploys[p.pod.deployment].probes, health)
            };
            if probes.is_empty() {
                continue;
            }
            let p = self.pods.get_mut(&id).expect("listed");
            match probe_tick(&mut p.pod, &probes, t1, &health) {
                Some(ProbeEvent::Restart { at_ms }) => {
                    self.drop_spans(id, t1 as f64);
                    let s = self.pods[&id].pod.deployment;
                    let (init, work) = (
                        self.deploys[s].boot.init_duration_ms,
                        self.deploys[s].boot_work(),
                    );
                    let p = self.pods.get_mut(&id).expect("listed");
                    p.pod.restart(at_ms, init, work);
                    p.ps = PsQueue::new();
                    self.deploys[s].restarts += 1;
                    self.refresh_pod(id);
                }
                Some(_) | None => {}
            }
        }
    }

    fn retire_drained(&mut self, t1: u64) {
        let done: Vec<u64> = self
            .pods
            .iter()
            .filter(|(_, p)| {
                p.pod.is_terminating()
                    && (p.in_flight == 0 || p.drain_deadline_ms.is_some_and(|d| t1 >= d))
            })
            .map(|(&id, _)| id)
            .collect();
        for id in done {
            self.remove_pod(id, t1 as f64);
        }
    }

    /// Move a deployment toward `target` pods.
    fn reconcile(&mut self, s: usize, target: u32, now: u64, warm: bool, rate_limited: bool) {
        let d = &self.deploys[s];
        let live: Vec<u64> = d
            .pods
            .iter()
            .copied()
            .filter(|id| !self.pods[id].pod.is_terminating())
            .collect();
        let bounds = ScaleBounds {
            min_replicas: d.min,
            max_replicas: d.max,
            rate_limit: if rate_limited { d.scale_up_limit } else { None },
        };
        let quota = self.quotas.get(&d.namespace).map(|&cap| QuotaRoom {
            used_mcores: self.namespace_requests(&d.namespace),
            cap_mcores: cap,
            request_mcores: d.request,
        });
        let plan = scale_to(target, live.len() as u32, bounds, quota);
        if plan.quota_clamped {
            self.report.quota_exceeded += 1;
        }
        for _ in 0..plan.create {
            self.create_pod(s, now, warm);
        }
        if plan.terminate > 0 {
            let mut victims = live;
            victims.sort_by_key(|id| Reverse((self.pods[id].pod.created_ms, *id)));
            for id in victims.into_iter().take(plan.terminate as usize) {
                self.sync_pod(id, now as f64);
                let p = self.pods.get_mut(&id).expect("live pod");
                p.pod.set_phase(PodPhase::Terminating, now);
                p.drain_deadline_ms = Some(now + self.drain_timeout_ms);
                if p.in_flight == 0 {
                    self.remove_pod(id, now as f64);
                } else {
                    self.refresh_pod(id);
                }
            }
        }
    }

    fn service_view(&self, s: usize) -> ServiceView {
        let d = &self.deploys[s];
        let mut live = 0;
        let mut ready = 0;
        let mut means = Vec::new();
        for id in &d.pods {
            let p = &self.pods[id];
            if p.pod.is_terminating() {
                continue;
            }
            live += 1;
            if p.pod.phase == PodPhase::Ready {
                ready += 1;
            }
            if self.in_view(p) {
                if let Some(m) = p.util.mean() {
                    means.push(m);
                }
            }
        }
        let visible = self.app_metrics || s == self.entry;
        let app = |v: Option<f64>| if visible { v } else { None };
        ServiceView {
            name: d.name.clone(),
            desired: d.desired,
            live,
            ready,
            counted: means.len() as u32,
            min_replicas: d.min,
            max_replicas: d.max,
            utilization: utilization(&means, d.request),
            p90_ms: app(self.tel.service_p90(s)),
            mean_latency_ms: app(self.tel.service_mean(s)),
            self_p90_ms: if self.app_metrics {
                self.tel.service_self_p90(s)
            } else {
                None
            },
            self_mean_ms: if self.app_metrics {
                self.tel.service_self_mean(s)
            } else {
                None
            },
            request_rate: app(Some(self.tel.service_rate(s))),
        }
    }

    fn sync(&mut self, now: u64) {
        let services: Vec<ServiceView> = (0..self.deploys.len())
            .map(|s| self.service_view(s))
            .collect();
        let call_graph = match &self.hard_coded_edges {
            Some(e) => Some(e.clone()),
            None if self.graph_visible => Some(self.tel.graph.edges().into_iter().collect()),
            None => None,
        };
        let input = PolicyInput {
            now_ms: now,
            sync_period_ms: self.cfg.sync_period_ms,
            slo_ms: self.cfg.slo_ms,
            entry: self.entry,
            services,
            call_graph,
            estimator: Some(self.estimator.clone()),
        };
        let decisions = self.policy.decide(&input);
        for e in self.policy.drain_events() {
            if e == "graph-unavailable" {
                self.report.graph_unavailable_syncs += 1;
            }
        }
        for dec in decisions {
            let Some(d) = self.deploys.get_mut(dec.service) else {
                continue;
            };
            let current = d.desired;
            let actuated = if d.frozen {
                current
            } else {
                dec.target.clamp(i64::from(d.min), i64::from(d.max)) as u32
            };
            d.desired = actuated;
            d.max_desired = d.max_desired.max(actuated);
            self.report.decisions.push(DecisionRecord {
                sync_ms: now,
                service: d.name.clone(),
                current,
                target_pre_clamp: dec.target,
                target_actuated: actuated,
                reason: dec.reason,
            });
        }
        for s in 0..self.deploys.len() {
            let target = self.deploys[s].desired;
            self.reconcile(s, target, now, false, true);
        }
    }

    fn sample(&mut self, t1: u64) {
        let since = self.report.timeseries.last().map_or(0, |r| r.step_ms);
        let span = (t1 - since).max(1) as f64;
        let mut rows = Vec::with_capacity(self.deploys.len());
        for s in 0..self.deploys.len() {
            let v = self.service_view(s);
            let d = &mut self.deploys[s];
            let cpu = std::mem::take(&mut d.sample_cpu_ms) * 1000.0 / span;
            rows.push(ServiceRow {
                ready: v.ready,
                desired: v.desired,
                utilization: v.utilization,
                p90_observed_ms: v.p90_ms,
                cpu_mcores: cpu,
            });
        }
        self.report.timeseries.push(TimeseriesRow {
            step_ms: t1,
            services: rows,
            p90_observed_ms: self.tel.observed_p90(),
            p90_ground_truth_ms: self.tel.ground_truth_p90(),
            status_errors: self.tel.status_errors,
            downstream_errors: self.tel.downstream_error_total(),
            masked_failures: self.tel.masked_failures,
            slo_violations: self.tel.slo_violations,
            ground_truth_violations: self.tel.ground_truth_violations,
            core_minutes: self.tel.core_minutes,
        });
    }

    fn finish(mut self) -> RunReport {
        let names: Vec<String> = self.deploys.iter().map(|d| d.name.clone()).collect();
        let mut r = std::mem::take(&mut self.report);
        r.scenario = self.cfg.name.clone();
        r.policy = self.policy_name.clone();
        r.seed = self.cfg.seed;
        r.steps = self.clock.step_index();
        r.duration_ms = self.clock.now_ms();
        r.slo_ms = self.cfg.slo_ms;
        r.requests = self.requests_seen;
        r.finished = self.tel.finished;
        r.successes = self.tel.successes;
        r.errors = self.tel.errors;
        r.masked_failures = self.tel.masked_failures;
        r.slo_violations = self.tel.slo_violations;
        r.ground_truth_violations = self.tel.ground_truth_violations;
        r.cpu_core_minutes = self.tel.core_minutes;
        r.status_errors = self.tel.status_errors;
        r.latency = self.tel.run_latency();
        r.call_graph = self.tel.graph.observe(self.graph_visible, &names);
        r.services = self
            .deploys
            .iter()
            .enumerate()
            .map(|(s, d)| ServiceSummary {
                name: d.name.clone(),
                max_replicas: d.max_desired,
                max_ready: d.max_ready,
                final_desired: d.desired,
                restarts: d.restarts,
                core_minutes: d.cpu_ms / 60_000.0,
                error_counts: self.tel.error_counts[s],
            })
            .collect();
        r
    }
}

/// Assemble and run a scenario with its own policy.
pub fn run_scenario(sc: &ScenarioConfig) -> Result<RunReport> {
    let asm = crate::gaps::assemble(sc)?;
    Ok(Simulation::new(&asm)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slab_generations() {
        let mut s: Slab<u32> = Slab::new();
        let a = s.insert(1);
        assert_eq!(s.get(a), Some(&1));
        assert_eq!(s.remove(a), Some(1));
        let b = s.insert(2);
        assert_eq!(a.idx(), b.idx());
        assert!(s.get(a).is_none());
        assert_eq!(s.get(b), Some(&2));
        assert_eq!(s.len(), 1);
    }
}
