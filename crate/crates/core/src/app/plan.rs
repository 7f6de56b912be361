//! The call tree one entry request unfolds into.

use std::collections::BTreeSet;

use super::topology::{CallPattern, Topology};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanNode {
    pub service: usize,
    pub endpoint: usize,
    pub parent: Option<usize>,
    /// Calls issued concurrently once local work is done.
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CallPlan {
    pub nodes: Vec<PlanNode>,
}

/// Deepest call tree we are willing to unfold; also catches cycles.
pub const MAX_DEPTH: usize = 32;

impl CallPlan {
    /// Unfold the entry endpoint. `pattern_of(service, endpoint)` gives the
    /// effective call pattern, which gap wiring may override.
    pub fn compile(
        topology: &Topology,
        pattern_of: &dyn Fn(usize, usize) -> CallPattern,
    ) -> Result<Self, String> {
        let (s, e) = topology
            .resolve(&topology.entry)
            .ok_or_else(|| format!("entry {} does not resolve", topology.entry))?;
        let mut plan = CallPlan { nodes: Vec::new() };
        plan.unfold(topology, pattern_of, s, e, None, &[], 0)?;
        Ok(plan)
    }

    #[allow(clippy::too_many_arguments)]
    fn unfold(
        &mut self,
        topo: &Topology,
        pattern_of: &dyn Fn(usize, usize) -> CallPattern,
        service: usize,
        endpoint: usize,
        parent: Option<usize>,
        // remaining chained calls this node must issue after its own calls
        chain_tail: &[(usize, usize)],
        depth: usize,
    ) -> Result<usize, String> {
        if depth > MAX_DEPTH {
            return Err(format!(
                "call tree deeper than {MAX_DEPTH} (cycle through {}.{}?)",
                topo.services[service].name,
                topo.endpoint(service, endpoint).name
            ));
        }
        let id = self.nodes.len();
        self.nodes.push(PlanNode {
            service,
            endpoint,
            parent,
            children: Vec::new(),
        });
        let spec = topo.endpoint(service, endpoint);
        let mut calls = Vec::with_capacity(spec.downstream.len());
        for c in &spec.downstream {
            calls.push(
                topo.resolve(c)
                    .ok_or_else(|| format!("downstream {c} does not resolve"))?,
            );
        }
        let mut children = Vec::new();
        if !calls.is_empty() {
            match pattern_of(service, endpoint) {
                CallPattern::FanOut => {
                    for &(cs, ce) in &calls {
                        children.push(self.unfold(
                            topo,
                            pattern_of,
                            cs,
                            ce,
                            Some(id),
                            &[],
                            depth + 1,
                        )?);
                    }
                }
                CallPattern::Chained => {
                    let (cs, ce) = calls[0];
                    children.push(self.unfold(
                        topo,
                        pattern_of,
                        cs,
                        ce,
                        Some(id),
                        &calls[1..],
                        depth + 1,
                    )?);
                }
            }
        }
        if let Some((&(ts, te), rest)) = chain_tail.split_first() {
            children.push(self.unfold(topo, pattern_of, ts, te, Some(id), rest, depth + 1)?);
        }
        self.nodes[id].children = children;
        Ok(id)
    }

    /// Caller → callee service edges present in the tree.
    pub fn service_edges(&self) -> BTreeSet<(usize, usize)> {
        self.nodes
            .iter()
            .filter_map(|n| n.parent.map(|p| (self.nodes[p].service, n.service)))
            .collect()
    }

    /// How many times each service is visited per entry request.
    pub fn visits(&self, n_services: usize) -> Vec<u32> {
        let mut v = vec![0; n_services];
        for n in &self.nodes {
            v[n.service] += 1;
        }
        v
    }
}
