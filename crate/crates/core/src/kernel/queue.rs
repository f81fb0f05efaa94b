//! Virtual clock and priority event queue.
//!
//! Events are dispatched in `(time, sequence)` order. The sequence number is
//! assigned at enqueue time, so events sharing a timestamp leave the queue in
//! FIFO order regardless of heap internals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{KernelError, SimTime};

/// Coarse classification of an event, used for traces and statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventClass {
    TxStart,
    TxEnd,
    AntLaunch,
    DataGeneration,
    SinkMove,
    CacheTimeout,
    Timer,
    RunEnd,
}

impl EventClass {
    pub fn label(self) -> &'static str {
        match self {
            EventClass::TxStart => "tx-start",
            EventClass::TxEnd => "tx-end",
            EventClass::AntLaunch => "ant-launch",
            EventClass::DataGeneration => "data-generation",
            EventClass::SinkMove => "sink-move",
            EventClass::CacheTimeout => "cache-timeout",
            EventClass::Timer => "timer",
            EventClass::RunEnd => "run-end",
        }
    }
}

/// Implemented by event payloads so the kernel can label dispatches.
pub trait Classify {
    fn class(&self) -> EventClass;
}

/// A timestamped event as stored in and dispatched from the queue.
#[derive(Debug, Clone)]
pub struct SimEvent<P> {
    pub time: SimTime,
    pub sequence: u64,
    pub payload: P,
}

struct Queued<P>(SimEvent<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse so the earliest event pops first.
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.sequence.cmp(&self.0.sequence))
    }
}

/// One line of the optional dispatch trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub time: SimTime,
    pub sequence: u64,
    pub class: EventClass,
}

/// The discrete-event scheduler: a virtual clock plus a priority queue.
pub struct Scheduler<P> {
    now: SimTime,
    next_sequence: u64,
    heap: BinaryHeap<Queued<P>>,
    dispatched: u64,
    trace: Option<Vec<TraceEntry>>,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Self {
            now: 0.0,
            next_sequence: 0,
            heap: BinaryHeap::new(),
            dispatched: 0,
            trace: None,
        }
    }

    /// Record `(time, sequence, class)` for every dispatched event.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Enqueue `payload` at absolute time `time`.
    ///
    /// Scheduling into the past is a logic error in the caller and is
    /// rejected rather than silently clamped.
    pub fn schedule(&mut self, time: SimTime, payload: P) -> Result<u64, KernelError> {
        if !time.is_finite() {
            return Err(KernelError::NonFiniteTime(time));
        }
        if time < self.now {
            return Err(KernelError::PastEvent { time, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(Queued(SimEvent {
            time,
            sequence,
            payload,
        }));
        Ok(sequence)
    }

    /// Enqueue `payload` `delay` seconds from now.
    pub fn schedule_in(&mut self, delay: SimTime, payload: P) -> Result<u64, KernelError> {
        if !(delay >= 0.0) {
            return Err(KernelError::NegativeDelay(delay));
        }
        self.schedule(self.now + delay, payload)
    }

    /// Time of the earliest pending event.
    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|q| q.0.time)
    }

    /// Pop the next event if it is due at or before `t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<SimEvent<P>>
    where
        P: Classify,
    {
        if self.peek_time()? > t_end {
            return None;
        }
        let event = self.heap.pop()?.0;
        debug_assert!(event.time >= self.now);
        self.now = event.time;
        self.dispatched += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEntry {
                time: event.time,
                sequence: event.sequence,
                class: event.payload.class(),
            });
        }
        Some(event)
    }

    /// Move the clock forward to `t` without dispatching.
    pub fn advance_to(&mut self, t: SimTime) -> Result<(), KernelError> {
        if t < self.now {
            return Err(KernelError::PastEvent { time: t, now: self.now });
        }
        if let Some(next) = self.peek_time() {
            if next <= t {
                return Err(KernelError::SkippedEvents { until: t, next });
            }
        }
        self.now = t;
        Ok(())
    }

    /// Dispatch every event with `time <= t_end` (inclusive), then set the
    /// clock to `t_end`. The handler may schedule further events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64, KernelError>
    where
        P: Classify,
        F: FnMut(&mut Self, SimEvent<P>),
    {
        if t_end < self.now {
            return Err(KernelError::PastEvent {
                time: t_end,
                now: self.now,
            });
        }
        let mut count = 0;
        while let Some(event) = self.pop_until(t_end) {
            handler(self, event);
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}
