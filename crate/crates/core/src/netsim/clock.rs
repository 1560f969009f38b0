//! Monotone virtual clock. All simulated latencies are virtual time; the
//! wall clock never enters the event loop.

#[derive(Debug, Clone, Copy, Default)]
pub struct VirtualClock {
    now: f64,
}

impl VirtualClock {
    pub fn new() -> VirtualClock {
        VirtualClock { now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Advance to `t`; earlier targets are ignored so the clock never runs
    /// backwards.
    pub fn advance_to(&mut self, t: f64) {
        if t > self.now {
            self.now = t;
        }
    }

    pub fn advance_by(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0);
        self.now += dt;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_runs_backwards() {
        let mut c = VirtualClock::new();
        c.advance_to(5.0);
        c.advance_to(3.0);
        assert_eq!(c.now(), 5.0);
        c.advance_by(1.5);
        assert_eq!(c.now(), 6.5);
    }
}
