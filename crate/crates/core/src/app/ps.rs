//! Processor-sharing execution inside one pod.
//!
//! Uses attained-service ("virtual") time: every job in the queue has
//! received the same CPU-ms since it arrived, so a job finishes when the
//! queue's virtual clock reaches `virtual_at_arrival + demand`.

use std::collections::BTreeSet;

#[derive(Debug, Clone, Default)]
pub struct PsQueue {
    /// CPU-ms each resident job has received since the queue was created.
    v: f64,
    /// (finish virtual time as order-preserving bits, job key)
    jobs: BTreeSet<(u64, u64)>,
}

fn key_bits(x: f64) -> u64 {
    debug_assert!(x >= 0.0 && x.is_finite());
    // for non-negative floats the IEEE bit pattern sorts like the value
    x.to_bits()
}

impl PsQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn virtual_time(&self) -> f64 {
        self.v
    }

    /// Enqueue `work_cpu_ms`; returns the finish tag needed for removal.
    pub fn push(&mut self, key: u64, work_cpu_ms: f64) -> f64 {
        let finish = self.v + work_cpu_ms.max(0.0);
        self.jobs.insert((key_bits(finish), key));
        finish
    }

    pub fn remove(&mut self, key: u64, finish: f64) -> bool {
        self.jobs.remove(&(key_bits(finish), key))
    }

    /// Run for `dt_ms` at `alloc_mcores`. Returns CPU-ms consumed.
    pub fn advance(&mut self, alloc_mcores: f64, dt_ms: f64) -> f64 {
        if self.jobs.is_empty() || dt_ms <= 0.0 {
            return 0.0;
        }
        let work = alloc_mcores * dt_ms / 1000.0;
        self.v += work / self.jobs.len() as f64;
        work
    }

    /// Milliseconds until the next job finishes at a constant allocation.
    pub fn time_to_next(&self, alloc_mcores: f64) -> Option<f64> {
        let &(bits, _) = self.jobs.first()?;
        if alloc_mcores <= 0.0 {
            return None;
        }
        let left = (f64::from_bits(bits) - self.v).max(0.0);
        Some(left * self.jobs.len() as f64 * 1000.0 / alloc_mcores)
    }

    fn eps(&self) -> f64 {
        1e-9 * self.v.abs().max(1.0)
    }

    /// Remove and return the next job whose work is done.
    pub fn pop_finished(&mut self) -> Option<u64> {
        let &(bits, key) = self.jobs.first()?;
        let finish = f64::from_bits(bits);
        if finish <= self.v + self.eps() {
            self.jobs.pop_first();
            self.v = self.v.max(finish);
            Some(key)
        } else {
            None
        }
    }
}
