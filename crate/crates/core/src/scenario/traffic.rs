use crate::kernel::{RandomStream, SimTime};

/// Per-source data generation: one event every `1/rate` seconds with
/// uniform +/-`jitter` relative spread and a random initial phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficModel {
    pub rate: f64,
    pub jitter: f64,
}

impl TrafficModel {
    pub fn new(rate: f64) -> Self {
        Self { rate, jitter: 0.5 }
    }

    pub fn period(&self) -> SimTime {
        1.0 / self.rate
    }

    pub fn first_time(&self, rng: &mut RandomStream) -> SimTime {
        rng.uniform() * self.period()
    }

    pub fn next_gap(&self, rng: &mut RandomStream) -> SimTime {
        self.period() * (1.0 + self.jitter * (2.0 * rng.uniform() - 1.0))
    }

    /// Generation times of one source over `[0, duration]`.
    pub fn schedule(&self, duration: SimTime, rng: &mut RandomStream) -> Vec<SimTime> {
        let mut out = Vec::new();
        if !(self.rate > 0.0) {
            return out;
        }
        let mut t = self.first_time(rng);
        while t <= duration {
            out.push(t);
            t += self.next_gap(rng);
        }
        out
    }
}
