//! Caller → callee edges inferred from finished spans, as a mesh would see them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeStats {
    pub calls: u64,
    pub errors: u64,
    pub mean_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CallGraphObservation {
    pub enabled: bool,
    pub edges: BTreeMap<(String, String), EdgeStats>,
}

impl CallGraphObservation {
    pub fn edge_names(&self) -> BTreeSet<(String, String)> {
        self.edges.keys().cloned().collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    calls: u64,
    errors: u64,
    latency_sum: f64,
}

#[derive(Debug, Clone)]
pub struct CallGraphRecorder {
    window_ms: f64,
    events: VecDeque<(f64, usize, usize, f64, bool)>,
    acc: BTreeMap<(usize, usize), Acc>,
}

impl CallGraphRecorder {
    pub fn new(window_ms: f64) -> Self {
        Self {
            window_ms,
            events: VecDeque::new(),
            acc: BTreeMap::new(),
        }
    }

    pub fn record(
        &mut self,
        t_ms: f64,
        caller: usize,
        callee: usize,
        latency_ms: f64,
        error: bool,
    ) {
        self.events
            .push_back((t_ms, caller, callee, latency_ms, error));
        let a = self.acc.entry((caller, callee)).or_default();
        a.calls += 1;
        a.errors += u64::from(error);
        a.latency_sum += latency_ms;
    }

    pub fn evict(&mut self, now_ms: f64) {
        let horizon = now_ms - self.window_ms;
        while let Some(&(t, a, b, lat, err)) = self.events.front() {
            if t > horizon {
                break;
            }
            self.events.pop_front();
            let e = self
                .acc
                .get_mut(&(a, b))
                .expect("edge accumulated on record");
            e.calls -= 1;
            e.errors -= u64::from(err);
            e.latency_sum -= lat;
            if e.calls == 0 {
                self.acc.remove(&(a, b));
            }
        }
    }

    /// Edges crossed at least once inside the window, by service index.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.acc.keys().copied().collect()
    }

    pub fn observe(&self, enabled: bool, names: &[String]) -> CallGraphObservation {
        if !enabled {
            return CallGraphObservation::default();
        }
        let edges = self
            .acc
            .iter()
            .map(|(&(a, b), acc)| {
                (
                    (names[a].clone(), names[b].clone()),
                    EdgeStats {
                        calls: acc.calls,
                        errors: acc.errors,
                        mean_latency_ms: acc.latency_sum / acc.calls as f64,
                    },
                )
            })
            .collect();
        CallGraphObservation {
            enabled: true,
            edges,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_expire_with_the_window() {
        let mut g = CallGraphRecorder::new(1_000.0);
        g.record(0.0, 0, 1, 5.0, false);
        g.record(600.0, 0, 2, 7.0, true);
        g.evict(1_200.0);
        assert_eq!(g.edges(), BTreeSet::from([(0, 2)]));
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let obs = g.observe(true, &names);
        let e = obs.edges[&("a".to_string(), "c".to_string())];
        assert_eq!((e.calls, e.errors, e.mean_latency_ms), (1, 1, 7.0));
    }

    #[test]
    fn disabled_mesh_sees_nothing() {
        let mut g = CallGraphRecorder::new(1_000.0);
        g.record(0.0, 0, 1, 5.0, false);
        let obs = g.observe(false, &["a".into(), "b".into()]);
        assert!(obs.edges.is_empty());
    }

    #[test]
    fn zero_traffic_empty_graph() {
        let g = CallGraphRecorder::new(1_000.0);
        assert!(g.edges().is_empty());
    }
}
