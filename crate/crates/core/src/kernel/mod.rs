//! Deterministic discrete-event engine: virtual clock, event queue and
//! seeded random streams.

mod queue;
mod rng;

pub use queue::{Classify, EventClass, Scheduler, SimEvent, TraceEntry};
pub use rng::{derive_seed, label_hash, RandomStream, StreamId};

/// Virtual time in seconds.
pub type SimTime = f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("event at t={time} is earlier than the clock ({now})")]
    PastEvent { time: SimTime, now: SimTime },
    #[error("event time {0} is not finite")]
    NonFiniteTime(SimTime),
    #[error("negative delay {0}")]
    NegativeDelay(SimTime),
    #[error("cannot advance to {until}: an event is pending at {next}")]
    SkippedEvents { until: SimTime, next: SimTime },
    #[error("standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
}
