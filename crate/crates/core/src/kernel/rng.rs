//! Named, seeded random substreams.
//!
//! Each consumer (arrivals, policy search, demand jitter) draws from its own
//! ChaCha8 stream. The stream number is derived from the consumer's label, so
//! adding a consumer never shifts the values another consumer sees.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ARRIVALS: &str = "arrivals";
pub const GA: &str = "ga";
pub const JITTER: &str = "jitter";

/// 64-bit FNV-1a; stable across platforms and releases.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream_id: String,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: &str) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(label_hash(stream_id));
        Self {
            seed,
            stream_id: stream_id.to_string(),
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> &str {
        &self.stream_id
    }

    /// Next value in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn next_in_range(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        self.inner.random_range(lo..=hi)
    }

    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_uniform() < p
    }

    pub fn next_poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let dist = rand_distr::Poisson::new(mean).expect("finite positive mean");
        let x: f64 = self.inner.sample(dist);
        x as u64
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean_within_three_sigma() {
        // sd of the mean of n U(0,1) draws is sqrt(1/12/n) ~ 0.000913 for n = 1e5
        let mut rng = SeededRng::new(7, ARRIVALS);
        let n = 100_000;
        let mean = (0..n).map(|_| rng.next_uniform()).sum::<f64>() / n as f64;
        assert!((0.497..=0.503).contains(&mean), "mean {mean}");
    }

    #[test]
    fn same_seed_same_stream_is_identical() {
        let mut a = SeededRng::new(99, "arrivals");
        let mut b = SeededRng::new(99, "arrivals");
        for _ in 0..1_000 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn values_in_unit_interval() {
        let mut rng = SeededRng::new(1, JITTER);
        for _ in 0..10_000 {
            let x = rng.next_uniform();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn distinct_streams_differ() {
        // Golden first draws, recorded once from this implementation.
        let a = SeededRng::new(42, ARRIVALS).next_uniform();
        let b = SeededRng::new(42, GA).next_uniform();
        assert_ne!(a.to_bits(), b.to_bits());
        assert_eq!(a.to_bits(), GOLDEN_ARRIVALS_42);
        assert_eq!(b.to_bits(), GOLDEN_GA_42);
    }

    const GOLDEN_ARRIVALS_42: u64 = 4605046218891075294;
    const GOLDEN_GA_42: u64 = 4606659177397150321;
}
