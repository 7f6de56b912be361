//! Per-run metric collection: latency windows, counters, SLO accounting.

use std::collections::VecDeque;

use super::callgraph::CallGraphRecorder;
use super::window::{p_quantile, SlidingWindow};
use crate::app::{ErrorKind, Outcome};

#[derive(Debug, Clone, Copy)]
pub struct TelemetryConfig {
    pub slo_ms: f64,
    pub latency_window_ms: f64,
    pub rate_window_ms: f64,
    /// Explicit error counters (`downstream_error`, ...) are emitted.
    pub error_metrics: bool,
}

#[derive(Debug, Clone)]
pub struct Telemetry {
    cfg: TelemetryConfig,
    /// Span latency of successful and masked spans, per service.
    latency: Vec<SlidingWindow>,
    /// Local (exclusive) processing time per service.
    self_time: Vec<SlidingWindow>,
    starts: Vec<VecDeque<f64>>,
    /// End-to-end latency the users (and monitors) see: errors excluded.
    e2e_observed: SlidingWindow,
    /// Every finished request.
    e2e_truth: SlidingWindow,
    run_observed: Vec<f64>,
    run_truth: Vec<f64>,
    pub graph: CallGraphRecorder,
    pub error_counts: Vec<[u64; 4]>,
    pub status_errors: u64,
    pub finished: u64,
    pub successes: u64,
    pub errors: u64,
    pub masked_failures: u64,
    pub slo_violations: u64,
    pub ground_truth_violations: u64,
    pub core_minutes: f64,
}

impl Telemetry {
    pub fn new(n_services: usize, cfg: TelemetryConfig) -> Self {
        let w = cfg.latency_window_ms;
        Self {
            cfg,
            latency: (0..n_services).map(|_| SlidingWindow::new(w)).collect(),
            self_time: (0..n_services).map(|_| SlidingWindow::new(w)).collect(),
            starts: vec![VecDeque::new(); n_services],
            e2e_observed: SlidingWindow::new(w),
            e2e_truth: SlidingWindow::new(w),
            run_observed: Vec::new(),
            run_truth: Vec::new(),
            graph: CallGraphRecorder::new(w),
            error_counts: vec![[0; 4]; n_services],
            status_errors: 0,
            finished: 0,
            successes: 0,
            errors: 0,
            masked_failures: 0,
            slo_violations: 0,
            ground_truth_violations: 0,
            core_minutes: 0.0,
        }
    }

    pub fn config(&self) -> &TelemetryConfig {
        &self.cfg
    }

    pub fn span_started(&mut self, service: usize, t_ms: f64) {
        self.starts[service].push_back(t_ms);
    }

    pub fn span_finished(
        &mut self,
        service: usize,
        caller: Option<usize>,
        start_ms: f64,
        local_done_ms: Option<f64>,
        end_ms: f64,
        outcome: Outcome,
    ) {
        let latency = end_ms - start_ms;
        match outcome {
            Outcome::Success | Outcome::MaskedSuccess => {
                self.latency[service].push(end_ms, latency)
            }
            Outcome::Error(kind) => {
                if self.cfg.error_metrics {
                    self.error_counts[service][kind.index()] += 1;
                }
            }
        }
        if let Some(done) = local_done_ms {
            self.self_time[service].push(end_ms, done - start_ms);
        }
        if let Some(c) = caller {
            self.graph
                .record(end_ms, c, service, latency, outcome.is_error());
        }
    }

    /// Account one finished entry request.
    pub fn request_finished(&mut self, latency_ms: f64, end_ms: f64, outcome: Outcome) {
        let slo = self.cfg.slo_ms;
        self.finished += 1;
        self.e2e_truth.push(end_ms, latency_ms);
        self.run_truth.push(latency_ms);
        match outcome {
            Outcome::Success => {
                self.successes += 1;
                self.e2e_observed.push(end_ms, latency_ms);
                self.run_observed.push(latency_ms);
                if latency_ms > slo {
                    self.slo_violations += 1;
                    self.ground_truth_violations += 1;
                }
            }
            Outcome::MaskedSuccess => {
                self.masked_failures += 1;
                self.e2e_observed.push(end_ms, latency_ms);
                self.run_observed.push(latency_ms);
                if latency_ms > slo {
                    self.slo_violations += 1;
                }
                self.ground_truth_violations += 1;
            }
            Outcome::Error(_) => {
                self.errors += 1;
                self.status_errors += 1;
                self.slo_violations += 1;
                self.ground_truth_violations += 1;
            }
        }
    }

    pub fn evict(&mut self, now_ms: f64) {
        for w in self.latency.iter_mut().chain(self.self_time.iter_mut()) {
            w.evict(now_ms);
        }
        self.e2e_observed.evict(now_ms);
        self.e2e_truth.evict(now_ms);
        self.graph.evict(now_ms);
        let horizon = now_ms - self.cfg.rate_window_ms;
        for q in &mut self.starts {
            while q.front().is_some_and(|&t| t <= horizon) {
                q.pop_front();
            }
        }
    }

    pub fn service_p90(&self, service: usize) -> Option<f64> {
        self.latency[service].quantile(0.9)
    }

    pub fn service_mean(&self, service: usize) -> Option<f64> {
        self.latency[service].mean()
    }

    pub fn service_self_p90(&self, service: usize) -> Option<f64> {
        self.self_time[service].quantile(0.9)
    }

    pub fn service_self_mean(&self, service: usize) -> Option<f64> {
        self.self_time[service].mean()
    }

    /// Span starts per second over the rate window.
    pub fn service_rate(&self, service: usize) -> f64 {
        self.starts[service].len() as f64 * 1000.0 / self.cfg.rate_window_ms
    }

    pub fn observed_p90(&self) -> Option<f64> {
        self.e2e_observed.quantile(0.9)
    }

    pub fn ground_truth_p90(&self) -> Option<f64> {
        self.e2e_truth.quantile(0.9)
    }

    pub fn downstream_error_total(&self) -> u64 {
        self.error_counts.iter().flatten().sum()
    }

    pub fn error_count(&self, service: usize, kind: ErrorKind) -> u64 {
        self.error_counts[service][kind.index()]
    }

    pub fn run_latency(&self) -> super::report::LatencySummary {
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        super::report::LatencySummary {
            observed_mean_ms: mean(&self.run_observed),
            observed_p90_ms: p_quantile(&self.run_observed, 0.9),
            ground_truth_mean_ms: mean(&self.run_truth),
            ground_truth_p90_ms: p_quantile(&self.run_truth, 0.9),
        }
    }
}

/// Mean over included pods of (mean in-window allocation / request).
/// `None` when no pod is included.
pub fn utilization(pod_mean_alloc: &[f64], request_mcores: f64) -> Option<f64> {
    if pod_mean_alloc.is_empty() || request_mcores <= 0.0 {
        return None;
    }
    let s: f64 = pod_mean_alloc.iter().map(|a| a / request_mcores).sum();
    Some(s / pod_mean_alloc.len() as f64)
}

/// Core-minutes for `mcores` held over `dt_ms`.
pub fn core_minutes(mcores: f64, dt_ms: f64) -> f64 {
    mcores * dt_ms / (1000.0 * 60_000.0)
}
