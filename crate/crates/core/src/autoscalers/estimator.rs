//! Queueing estimate of front-end latency for a candidate replica vector.
//!
//! Each pod is an M/M/1-PS server; the sojourn time is approximated as
//! exponential, so P90 = mean * ln(10).

use std::f64::consts::LN_10;

/// P90 sojourn in ms for one visit with `demand_ms` CPU-ms of work at a
/// service receiving `lambda_rps` across `replicas` pods, where `busy_ms`
/// is the service's total work per arriving request (for utilization).
pub fn visit_p90(
    demand_ms: f64,
    busy_ms: f64,
    lambda_rps: f64,
    replicas: u32,
    capacity_mcores: f64,
    slo_ms: f64,
) -> f64 {
    let replicas = replicas.max(1) as f64;
    let scale = 1000.0 / capacity_mcores;
    let rho = lambda_rps / replicas * busy_ms * scale / 1000.0;
    if rho >= 1.0 {
        // Saturated: a large penalty that still falls as replicas are added,
        // so a search stuck in saturation keeps a direction.
        return 10.0 * slo_ms * rho;
    }
    demand_ms * scale / (1.0 - rho) * LN_10
}

/// Single-visit form.
pub fn estimate_p90(
    demand_ms: f64,
    lambda_rps: f64,
    replicas: u32,
    capacity_mcores: f64,
    slo_ms: f64,
) -> f64 {
    visit_p90(
        demand_ms,
        demand_ms,
        lambda_rps,
        replicas,
        capacity_mcores,
        slo_ms,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorNode {
    pub service: usize,
    pub demand_ms: f64,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorModel {
    /// CPU-ms of work per entry request, per service.
    pub work_ms: Vec<f64>,
    pub capacity_mcores: Vec<f64>,
    /// The call tree; node 0 is the entry.
    pub nodes: Vec<EstimatorNode>,
    pub slo_ms: f64,
}

impl EstimatorModel {
    /// Estimated entry P90 with `replicas[s]` pods per service under
    /// `entry_rps` of load: a node costs its own P90 plus the slowest of its
    /// concurrent children, so chained hops add and fan-out hops take the max.
    pub fn entry_p90(&self, entry_rps: f64, replicas: &[u32]) -> f64 {
        self.node_p90(0, entry_rps, replicas)
    }

    fn node_p90(&self, id: usize, rps: f64, replicas: &[u32]) -> f64 {
        let n = &self.nodes[id];
        let own = visit_p90(
            n.demand_ms,
            self.work_ms[n.service],
            rps,
            replicas[n.service],
            self.capacity_mcores[n.service],
            self.slo_ms,
        );
        let below = n
            .children
            .iter()
            .map(|&c| self.node_p90(c, rps, replicas))
            .fold(0.0, f64::max);
        own + below
    }

    /// Replace per-visit demands, keeping the tree. `per_service[s]` is the
    /// mean local demand of one visit.
    pub fn with_demands(&self, per_service: &[f64]) -> Self {
        let mut m = self.clone();
        m.work_ms = vec![0.0; m.work_ms.len()];
        for n in &mut m.nodes {
            n.demand_ms = per_service[n.service];
            m.work_ms[n.service] += n.demand_ms;
        }
        m
    }
}
