use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::kernel::rng::SeededRng;

/// Poisson count of open-loop arrivals in a step of `dt_ms` at `rate_rps`.
pub fn arrivals_in_step(rate_rps: f64, dt_ms: f64, rng: &mut SeededRng) -> u64 {
    rng.next_poisson(rate_rps * dt_ms / 1000.0)
}

/// Given a Poisson count, arrival instants are i.i.d. uniform over the step.
pub fn arrival_times(n: u64, t0_ms: f64, dt_ms: f64, rng: &mut SeededRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| t0_ms + rng.next_uniform() * dt_ms).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Closed-loop users: each issues a request, waits for it to finish, then
/// thinks for an exponentially distributed time.
#[derive(Debug, Clone)]
pub struct UserPool {
    think_time_ms: f64,
    /// (time the user issues its next request, user id)
    pending: BinaryHeap<Reverse<(u64, u32)>>,
}

impl UserPool {
    pub fn new(users: u32, think_time_ms: f64, rng: &mut SeededRng) -> Self {
        let mut pool = Self {
            think_time_ms,
            pending: BinaryHeap::new(),
        };
        for u in 0..users {
            let t = rng.next_uniform() * think_time_ms.max(0.0);
            pool.pending.push(Reverse((t.to_bits(), u)));
        }
        pool
    }

    /// Users issuing a request before `until_ms`, in time order.
    pub fn due(&mut self, until_ms: f64) -> Vec<(f64, u32)> {
        let mut out = Vec::new();
        while let Some(&Reverse((bits, u))) = self.pending.peek() {
            let t = f64::from_bits(bits);
            if t >= until_ms {
                break;
            }
            self.pending.pop();
            out.push((t, u));
        }
        out
    }

    /// The user's request finished at `t_ms`; schedule its next one.
    pub fn completed(&mut self, user: u32, t_ms: f64, rng: &mut SeededRng) {
        let u = rng.next_uniform();
        let think = -self.think_time_ms * (1.0 - u).ln();
        self.pending.push(Reverse(((t_ms + think).to_bits(), user)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::rng::ARRIVALS;

    #[test]
    fn zero_rate_zero_arrivals() {
        let mut rng = SeededRng::new(1, ARRIVALS);
        assert!((0..1000).all(|_| arrivals_in_step(0.0, 100.0, &mut rng) == 0));
    }

    #[test]
    fn total_within_three_sigma() {
        let mut rng = SeededRng::new(3, ARRIVALS);
        let total: u64 = (0..10_000)
            .map(|_| arrivals_in_step(100.0, 100.0, &mut rng))
            .sum();
        let sigma = 100_000f64.sqrt();
        assert!((total as f64 - 100_000.0).abs() <= 3.0 * sigma, "{total}");
    }

    #[test]
    fn same_seed_same_arrivals() {
        let mut a = SeededRng::new(11, ARRIVALS);
        let mut b = SeededRng::new(11, ARRIVALS);
        for _ in 0..500 {
            let na = arrivals_in_step(37.0, 100.0, &mut a);
            let nb = arrivals_in_step(37.0, 100.0, &mut b);
            assert_eq!(na, nb);
            assert_eq!(
                arrival_times(na, 0.0, 100.0, &mut a),
                arrival_times(nb, 0.0, 100.0, &mut b)
            );
        }
    }

    #[test]
    fn arrival_times_sorted_within_step() {
        let mut rng = SeededRng::new(5, ARRIVALS);
        let v = arrival_times(50, 200.0, 100.0, &mut rng);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(v.iter().all(|&t| (200.0..300.0).contains(&t)));
    }

    #[test]
    fn closed_loop_users_wait_for_completion() {
        let mut rng = SeededRng::new(2, ARRIVALS);
        let mut pool = UserPool::new(3, 1_000.0, &mut rng);
        let first = pool.due(1_000.0);
        assert_eq!(first.len(), 3);
        // nobody completed, so nobody issues again
        assert!(pool.due(1e9).is_empty());
        pool.completed(first[0].1, 1_500.0, &mut rng);
        let next = pool.due(1e12);
        assert_eq!(next.len(), 1);
        assert!(next[0].0 >= 1_500.0);
    }
}
