//! Resolve gaps and remediations into the configuration a simulation runs.
//!
//! Each gap owns exactly one subtree of [`AssembledConfig`]; everything the
//! toggles do not touch stays in `base`, copied verbatim from the scenario.

use std::collections::BTreeMap;

use super::catalog::GapId;
use crate::app::{CallPattern, ErrorMode, Topology};
use crate::cluster::{BootProfile, CpuLimit, NamespaceQuota, ProbeConfig, ProbeSet};
use crate::error::{Error, Result};
use crate::scenario::{DeploymentSpec, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GapStatus {
    Remediated,
    Active,
    Inactive,
    NotRepresentable,
}

impl GapStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapStatus::Remediated => "remediated",
            GapStatus::Active => "active",
            GapStatus::Inactive => "inactive",
            GapStatus::NotRepresentable => "not-representable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleLimit {
    pub min_replicas: u32,
    pub max_replicas: u32,
    pub scale_up_limit: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallGraphConfig {
    /// Per service, per endpoint.
    pub patterns: Vec<Vec<CallPattern>>,
    pub mesh_observability: bool,
    /// Policies receive the static call graph rather than the traced one.
    pub hard_coded: bool,
}

/// Per-service vectors are indexed like `base.topology.services`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledConfig {
    /// The scenario with gaps and remediations cleared and deployments in
    /// topology order.
    pub base: ScenarioConfig,
    pub startup: Vec<BootProfile>,
    pub scale_limits: Vec<ScaleLimit>,
    pub app_metrics: bool,
    pub probes: Vec<ProbeSet>,
    pub error_handling: Vec<Vec<ErrorMode>>,
    pub error_metrics: bool,
    pub call_graph: CallGraphConfig,
    pub limits: Vec<CpuLimit>,
    pub quotas: Vec<NamespaceQuota>,
    pub status: BTreeMap<GapId, GapStatus>,
}

impl AssembledConfig {
    pub fn deployment(&self, service: usize) -> &DeploymentSpec {
        &self.base.deployments[service]
    }

    /// Topology with the resolved call patterns and error modes.
    pub fn effective_topology(&self) -> Topology {
        let mut t = self.base.topology.clone();
        for (s, svc) in t.services.iter_mut().enumerate() {
            for (e, ep) in svc.endpoints.iter_mut().enumerate() {
                ep.call_pattern = self.call_graph.patterns[s][e];
                ep.error_mode = self.error_handling[s][e];
            }
        }
        t
    }

    /// Names of the gap-controlled subtrees that differ between two
    /// assemblies, plus "base" if the untouched part differs.
    pub fn differing_subtrees(&self, other: &Self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut check = |name: &'static str, same: bool| {
            if !same {
                out.push(name);
            }
        };
        check("base", self.base == other.base);
        check("startup", self.startup == other.startup);
        check("scale_limits", self.scale_limits == other.scale_limits);
        check("app_metrics", self.app_metrics == other.app_metrics);
        check("probes", self.probes == other.probes);
        check(
            "error_handling",
            self.error_handling == other.error_handling,
        );
        check("error_metrics", self.error_metrics == other.error_metrics);
        check("call_graph", self.call_graph == other.call_graph);
        check("limits", self.limits == other.limits);
        check("quotas", self.quotas == other.quotas);
        out
    }
}

fn inconsistent(first: GapId, second: &str, reason: &str) -> Error {
    Error::InconsistentConfig {
        first: first.code(),
        second: second.to_string(),
        reason: reason.to_string(),
    }
}

/// Warm-up time used to derive probe timings. Taken from the authored
/// profile and limit so probe tuning does not move when other toggles do.
fn authored_boot_ms(d: &DeploymentSpec) -> f64 {
    let limit = match d.resources.limit_mcores {
        CpuLimit::Unbounded => CpuLimit::Bounded(d.resources.request_mcores.max(1.0)),
        l => l,
    };
    let b = d.boot.nominal_boot_ms(limit);
    d.boot.init_duration_ms as f64 + if b.is_finite() { b } else { 0.0 }
}

pub fn default_readiness() -> ProbeConfig {
    ProbeConfig {
        initial_delay_ms: 5_000,
        period_ms: 5_000,
        timeout_ms: 1_000,
        failure_threshold: 3,
        success_threshold: 1,
    }
}

pub fn default_liveness(boot_ms: f64) -> ProbeConfig {
    ProbeConfig {
        initial_delay_ms: boot_ms.ceil() as u64 + 60_000,
        period_ms: 10_000,
        timeout_ms: 1_000,
        failure_threshold: 3,
        success_threshold: 1,
    }
}

/// Order deployments like the topology's services. Missing or duplicate
/// deployments are reported by validation; here they are an error.
fn ordered_deployments(sc: &ScenarioConfig) -> Result<Vec<DeploymentSpec>> {
    let mut out = Vec::with_capacity(sc.topology.services.len());
    for s in &sc.topology.services {
        let mut it = sc.deployments.iter().filter(|d| d.service == s.name);
        let d = it
            .next()
            .ok_or_else(|| Error::Invalid(format!("service {} has no deployment", s.name)))?;
        if it.next().is_some() {
            return Err(Error::Invalid(format!(
                "service {} has more than one deployment",
                s.name
            )));
        }
        out.push(d.clone());
    }
    if sc.deployments.len() != out.len() {
        return Err(Error::Invalid(
            "deployment refers to an unknown service".into(),
        ));
    }
    Ok(out)
}

pub fn assemble(sc: &ScenarioConfig) -> Result<AssembledConfig> {
    let gaps = &sc.gaps;
    let fix = &sc.remediations;
    let deps = ordered_deployments(sc)?;
    let has_boot_work = deps.iter().any(|d| d.boot.boot_duration_ms > 0);
    let has_calls = sc.topology.has_downstream_calls();
    let on = |g: GapId| gaps.is_active(g) && !fix.is_applied(g);

    for (g, ok, why) in [
        (GapId::G1, has_boot_work, "no service has warm-up work"),
        (GapId::G6, has_calls, "no downstream calls"),
        (GapId::G7, has_calls, "no downstream calls"),
        (GapId::G8, has_calls, "no downstream calls"),
    ] {
        if fix.is_applied(g) && !ok {
            return Err(inconsistent(g, "topology", why));
        }
    }

    let startup: Vec<BootProfile> = deps
        .iter()
        .map(|d| {
            let mut b = d.boot;
            if fix.g1.applied {
                b.init_isolated = true;
                if b.boot_duration_ms > 0 {
                    b.boot_burst_limit_mcores = Some(fix.g1.params.burst_limit_mcores);
                }
            } else if gaps.g1.active {
                b.init_isolated = false;
                if let (Some(c), true) = (gaps.g1.params.boot_cpu_mcores, b.boot_duration_ms > 0) {
                    b.boot_cpu_demand_mcores = c;
                }
            }
            b
        })
        .collect();

    let mut scale_limits = Vec::with_capacity(deps.len());
    for d in &deps {
        let mut l = ScaleLimit {
            min_replicas: d.min_replicas,
            max_replicas: d.max_replicas,
            scale_up_limit: d.scale_up_limit,
        };
        if fix.g2.applied {
            if let Some(&cap) = fix.g2.params.replica_caps.get(&d.service) {
                l.max_replicas = l.max_replicas.min(cap);
            }
            if fix.g2.params.scale_up_limit.is_some() {
                l.scale_up_limit = fix.g2.params.scale_up_limit;
            }
        } else if gaps.g2.active {
            l.scale_up_limit = None;
        }
        scale_limits.push(l);
    }
    if fix.g2.applied {
        for name in fix.g2.params.replica_caps.keys() {
            if !deps.iter().any(|d| &d.service == name) {
                return Err(Error::Invalid(format!(
                    "remediations.g2.params.replica_caps: unknown service {name}"
                )));
            }
        }
    }

    let app_metrics = if fix.g3.applied {
        true
    } else if gaps.g3.active {
        false
    } else {
        sc.telemetry.app_metrics
    };

    let mut probes: Vec<ProbeSet> = deps.iter().map(|d| d.probes).collect();
    if fix.g4.applied {
        for (p, d) in probes.iter_mut().zip(&deps) {
            p.readiness.get_or_insert_with(default_readiness);
            p.liveness
                .get_or_insert_with(|| default_liveness(authored_boot_ms(d)));
        }
    } else if gaps.g4.active {
        probes.iter_mut().for_each(|p| *p = ProbeSet::default());
    }
    let any_probes = probes.iter().any(|p| !p.is_empty());
    if fix.g5.applied {
        if on(GapId::G4) {
            return Err(inconsistent(
                GapId::G5,
                "G4",
                "probes are removed by an active G4",
            ));
        }
        if !any_probes {
            return Err(inconsistent(
                GapId::G5,
                "G4",
                "no probes are defined to tune",
            ));
        }
        for (p, d) in probes.iter_mut().zip(&deps) {
            if let Some(l) = p.liveness.as_mut() {
                let tuned = (authored_boot_ms(d) * 1.5).ceil() as u64 + 30_000;
                let floor = fix.g5.params.min_initial_delay_ms.unwrap_or(0);
                l.initial_delay_ms = l.initial_delay_ms.max(tuned).max(floor);
            }
        }
    } else if gaps.g5.active {
        for p in probes.iter_mut() {
            if p.liveness.is_some() {
                p.liveness = Some(gaps.g5.params.liveness);
            }
        }
    }

    let entry = sc.topology.service_index(&sc.topology.entry.service);
    let error_handling: Vec<Vec<ErrorMode>> = sc
        .topology
        .services
        .iter()
        .enumerate()
        .map(|(s, svc)| {
            svc.endpoints
                .iter()
                .map(|ep| {
                    if fix.g6.applied {
                        ErrorMode::Propagate
                    } else if gaps.g6.active && Some(s) == entry && !ep.downstream.is_empty() {
                        ErrorMode::Mask
                    } else {
                        ep.error_mode
                    }
                })
                .collect()
        })
        .collect();

    let error_metrics = if fix.g7.applied {
        true
    } else if gaps.g7.active {
        false
    } else {
        sc.telemetry.error_metrics
    };

    let authored_patterns: Vec<Vec<CallPattern>> = sc
        .topology
        .services
        .iter()
        .map(|s| s.endpoints.iter().map(|e| e.call_pattern).collect())
        .collect();
    let call_graph = if fix.g8.applied {
        CallGraphConfig {
            patterns: authored_patterns,
            mesh_observability: true,
            hard_coded: fix.g8.params.hard_coded_graph,
        }
    } else if gaps.g8.active {
        CallGraphConfig {
            patterns: authored_patterns
                .iter()
                .map(|v| vec![CallPattern::FanOut; v.len()])
                .collect(),
            mesh_observability: false,
            hard_coded: false,
        }
    } else {
        CallGraphConfig {
            patterns: authored_patterns,
            mesh_observability: sc.telemetry.mesh_observability,
            hard_coded: false,
        }
    };

    let limits: Vec<CpuLimit> = deps
        .iter()
        .map(|d| {
            let authored = d.resources.limit_mcores;
            if fix.g9.applied {
                match authored {
                    CpuLimit::Unbounded => CpuLimit::Bounded(d.resources.request_mcores),
                    l => l,
                }
            } else if gaps.g9.active {
                CpuLimit::Unbounded
            } else {
                authored
            }
        })
        .collect();

    let quotas = if fix.g10.applied {
        let mut q = sc.quotas.clone();
        let mut namespaces: Vec<&str> = deps.iter().map(|d| d.namespace.as_str()).collect();
        namespaces.sort_unstable();
        namespaces.dedup();
        for ns in namespaces {
            match q.iter_mut().find(|x| x.namespace == ns) {
                Some(x) if x.cpu_request_cap_mcores.is_some() => {}
                Some(x) => x.cpu_request_cap_mcores = Some(fix.g10.params.cpu_request_cap_mcores),
                None => q.push(NamespaceQuota {
                    namespace: ns.to_string(),
                    cpu_request_cap_mcores: Some(fix.g10.params.cpu_request_cap_mcores),
                    memory_cap_mb: None,
                }),
            }
        }
        q
    } else if gaps.g10.active {
        Vec::new()
    } else {
        sc.quotas.clone()
    };

    let representable = |g: GapId| match g {
        GapId::G1 => has_boot_work,
        GapId::G5 => any_probes,
        GapId::G6 | GapId::G7 | GapId::G8 => has_calls,
        _ => true,
    };
    let status = GapId::ALL
        .iter()
        .map(|&g| {
            let s = if fix.is_applied(g) {
                GapStatus::Remediated
            } else if gaps.is_active(g) {
                if representable(g) {
                    GapStatus::Active
                } else {
                    GapStatus::NotRepresentable
                }
            } else {
                GapStatus::Inactive
            };
            (g, s)
        })
        .collect();

    let mut base = sc.clone();
    base.gaps = Default::default();
    base.remediations = Default::default();
    base.deployments = deps;

    Ok(AssembledConfig {
        base,
        startup,
        scale_limits,
        app_metrics,
        probes,
        error_handling,
        error_metrics,
        call_graph,
        limits,
        quotas,
        status,
    })
}
