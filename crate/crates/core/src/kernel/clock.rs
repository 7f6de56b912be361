/// Fixed-step simulation clock. `now_ms` is always `step_index * step_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    step_ms: u64,
    step_index: u64,
}

impl SimClock {
    pub fn new(step_ms: u64) -> Self {
        assert!(step_ms > 0, "step_ms must be positive");
        Self {
            step_ms,
            step_index: 0,
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.step_index * self.step_ms
    }

    pub fn step_ms(&self) -> u64 {
        self.step_ms
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    /// End of the step currently being executed.
    pub fn step_end_ms(&self) -> u64 {
        self.now_ms() + self.step_ms
    }

    pub fn tick(&mut self) {
        self.step_index += 1;
    }

    /// Number of steps needed to cover `duration_ms`.
    pub fn steps_for(&self, duration_ms: u64) -> u64 {
        duration_ms.div_ceil(self.step_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn now_tracks_step_index() {
        let mut clock = SimClock::new(100);
        for _ in 0..37 {
            clock.tick();
            assert_eq!(clock.now_ms(), clock.step_index() * 100);
        }
        assert_eq!(clock.now_ms(), 3_700);
    }

    #[test]
    fn ten_minutes_is_six_thousand_steps() {
        assert_eq!(SimClock::new(100).steps_for(600_000), 6_000);
        assert_eq!(SimClock::new(100).steps_for(0), 0);
        assert_eq!(SimClock::new(100).steps_for(150), 2);
    }

    #[test]
    #[should_panic]
    fn zero_step_rejected() {
        SimClock::new(0);
    }
}
