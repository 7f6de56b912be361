//! Time-windowed samples with nearest-rank quantiles.

use std::collections::VecDeque;

/// 1-based nearest rank `ceil(q * n)`, robust to `q * n` landing a hair
/// above an integer.
pub fn nearest_rank(q: f64, n: usize) -> usize {
    let r = (q * n as f64 - 1e-9).ceil() as usize;
    r.clamp(1, n.max(1))
}

/// Nearest-rank quantile of `samples` (any order). `None` when empty.
pub fn p_quantile(samples: &[f64], q: f64) -> Option<f64> {
    assert!(q > 0.0 && q < 1.0, "quantile must be in (0, 1)");
    if samples.is_empty() {
        return None;
    }
    let mut v = samples.to_vec();
    let k = nearest_rank(q, v.len()) - 1;
    let (_, x, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Some(*x)
}

/// Samples younger than `window_ms`. Quantiles are selected on demand:
/// queries come once per sample interval, inserts once per request.
#[derive(Debug, Clone)]
pub struct SlidingWindow {
    window_ms: f64,
    samples: VecDeque<(f64, f64)>,
    sum: f64,
}

impl SlidingWindow {
    pub fn new(window_ms: f64) -> Self {
        Self {
            window_ms,
            samples: VecDeque::new(),
            sum: 0.0,
        }
    }

    pub fn window_ms(&self) -> f64 {
        self.window_ms
    }

    /// Samples must arrive in time order.
    pub fn push(&mut self, t_ms: f64, value: f64) {
        debug_assert!(self.samples.back().map_or(true, |&(t, _)| t <= t_ms));
        self.samples.push_back((t_ms, value));
        self.sum += value;
    }

    /// Drop samples at or before `now_ms - window_ms`.
    pub fn evict(&mut self, now_ms: f64) {
        let horizon = now_ms - self.window_ms;
        while let Some(&(t, v)) = self.samples.front() {
            if t > horizon {
                break;
            }
            self.samples.pop_front();
            self.sum -= v;
        }
        if self.samples.is_empty() {
            self.sum = 0.0;
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some(self.sum / self.samples.len() as f64)
        }
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        let v: Vec<f64> = self.values().collect();
        p_quantile(&v, q)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p90_of_ten() {
        let v: Vec<f64> = (1..=10).map(|i| (i * 10) as f64).collect();
        assert_eq!(p_quantile(&v, 0.9), Some(90.0));
    }

    #[test]
    fn single_sample() {
        assert_eq!(p_quantile(&[42.0], 0.01), Some(42.0));
        assert_eq!(p_quantile(&[42.0], 0.99), Some(42.0));
        assert_eq!(p_quantile(&[], 0.5), None);
    }

    #[test]
    fn window_evicts_old_samples() {
        let mut w = SlidingWindow::new(1_000.0);
        w.push(0.0, 5.0);
        w.push(500.0, 1.0);
        w.push(900.0, 3.0);
        w.evict(1_000.0);
        assert_eq!(w.len(), 2);
        assert_eq!(w.mean(), Some(2.0));
        assert_eq!(w.quantile(0.5), Some(1.0));
        w.evict(5_000.0);
        assert_eq!(w.quantile(0.9), None);
        assert_eq!(w.mean(), None);
    }

    proptest! {
        #[test]
        fn window_quantile_matches_sort(vals in prop::collection::vec(0.0f64..1e4, 1..300), q in 0.01f64..0.99) {
            let mut w = SlidingWindow::new(1e12);
            for (i, v) in vals.iter().enumerate() {
                w.push(i as f64, *v);
            }
            let mut s = vals.clone();
            s.sort_by(f64::total_cmp);
            let k = ((q * s.len() as f64) - 1e-9).ceil().max(1.0) as usize;
            prop_assert_eq!(w.quantile(q), Some(s[k - 1]));
        }
    }
}
