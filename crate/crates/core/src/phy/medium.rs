//! Shared radio channel with a CSMA MAC.
//!
//! Every node owns a FIFO transmit queue. The head frame waits a random
//! fraction of one slot-time (one slot = the frame's airtime) and senses the
//! channel. If it is busy the frame backs off a random number of slots from
//! the contention window, which doubles on every further busy sample; after
//! `max_retries` busy samples the frame is dropped. A frame on air reaches
//! every live node whose perturbed received power clears the threshold;
//! two audible frames overlapping at one receiver are both lost there.
//! Weaker frames above the carrier-sense threshold only mark the channel busy.

use std::collections::{BTreeMap, VecDeque};

use super::energy::{ChargeKind, EnergyLedger, EnergyModel};
use super::radio::{ideal_reception, perturbed_reception, RadioParams};
use super::PhyError;
use crate::geom::{NodeId, Point};
use crate::kernel::{RandomStream, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub struct MacParams {
    /// Channel bitrate in bits per second.
    pub bitrate: f64,
    /// Initial contention window, in slot-times.
    pub contention_window: u32,
    /// Busy-channel retries before a frame is dropped.
    pub max_retries: u32,
    /// Frames a node may hold in its transmit queue.
    pub queue_capacity: usize,
}

impl Default for MacParams {
    fn default() -> Self {
        Self {
            bitrate: 40_000.0,
            contention_window: 32,
            max_retries: 5,
            queue_capacity: 64,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.bitrate > 0.0) {
            return Err(PhyError::Invalid("bitrate must be positive".into()));
        }
        if self.contention_window == 0 {
            return Err(PhyError::Invalid("contention window must be at least 1".into()));
        }
        if self.queue_capacity == 0 {
            return Err(PhyError::Invalid("queue capacity must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Unicast(NodeId),
    Broadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameKind {
    ForwardAnt,
    BackwardAnt,
    DataAnt,
    Data,
}

#[derive(Debug, Clone)]
pub struct Frame<P> {
    pub src: NodeId,
    pub dst: Dest,
    pub kind: FrameKind,
    pub size_bits: u32,
    pub airtime: SimTime,
    pub payload: P,
}

impl<P> Frame<P> {
    pub fn new(
        src: NodeId,
        dst: Dest,
        kind: FrameKind,
        size_bits: u32,
        bitrate: f64,
        payload: P,
    ) -> Result<Self, PhyError> {
        if size_bits == 0 {
            return Err(PhyError::EmptyFrame);
        }
        Ok(Self {
            src,
            dst,
            kind,
            size_bits,
            airtime: f64::from(size_bits) / bitrate,
            payload,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub u64);

/// A MAC timer the caller must put on the event queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MacEvent {
    Attempt(NodeId),
    TxEnd(TxId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    QueueFull,
    MaxBackoff,
    Energy,
    SenderDead,
    Suppressed,
}

/// Side effects of a MAC operation.
#[derive(Debug)]
pub struct MacOutput<P> {
    pub schedule: Vec<(SimTime, MacEvent)>,
    pub dropped: Vec<(Frame<P>, DropReason)>,
    pub deaths: Vec<NodeId>,
}

impl<P> Default for MacOutput<P> {
    fn default() -> Self {
        Self {
            schedule: Vec::new(),
            dropped: Vec::new(),
            deaths: Vec::new(),
        }
    }
}

/// Outcome of a completed transmission.
#[derive(Debug)]
pub struct TxCompletion<P> {
    pub frame: Frame<P>,
    /// Receivers that got the frame intact, in node-id order.
    pub delivered: Vec<NodeId>,
    /// Receivers that heard it but lost it to a collision.
    pub collided: Vec<NodeId>,
    pub output: MacOutput<P>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MacState {
    Idle,
    Backoff,
    Transmitting,
}

#[derive(Debug)]
struct MacNode<P> {
    queue: VecDeque<Frame<P>>,
    state: MacState,
    retries: u32,
    incoming: Vec<TxId>,
    /// Frames sensed but too weak to decode.
    sensed: Vec<TxId>,
    transmitting: Option<TxId>,
}

#[derive(Debug)]
struct Transmission<P> {
    frame: Frame<P>,
    receivers: Vec<(NodeId, bool)>,
    listeners: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MacStats {
    pub transmissions: u64,
    pub busy_deferrals: u64,
    pub drops_queue_full: u64,
    pub drops_max_backoff: u64,
    pub drops_energy: u64,
    pub drops_sender_dead: u64,
    pub receptions_ok: u64,
    pub receptions_collided: u64,
}

pub struct Medium<P> {
    params: MacParams,
    radio: RadioParams,
    energy: EnergyModel,
    threshold: f64,
    cs_threshold: f64,
    cutoff: f64,
    nodes: Vec<MacNode<P>>,
    active: BTreeMap<TxId, Transmission<P>>,
    next_tx: u64,
    stats: MacStats,
}

impl<P> Medium<P> {
    pub fn new(node_count: usize, params: MacParams, radio: RadioParams, energy: EnergyModel) -> Self {
        let threshold = radio.threshold();
        let cs_threshold = radio.cs_threshold();
        let cutoff = radio.audible_cutoff();
        let nodes = (0..node_count)
            .map(|_| MacNode {
                queue: VecDeque::new(),
                state: MacState::Idle,
                retries: 0,
                incoming: Vec::new(),
                sensed: Vec::new(),
                transmitting: None,
            })
            .collect();
        Self {
            params,
            radio,
            energy,
            threshold,
            cs_threshold,
            cutoff,
            nodes,
            active: BTreeMap::new(),
            next_tx: 0,
            stats: MacStats::default(),
        }
    }

    pub fn params(&self) -> &MacParams {
        &self.params
    }

    pub fn stats(&self) -> &MacStats {
        &self.stats
    }

    pub fn queue_len(&self, node: NodeId) -> usize {
        self.nodes[node.index()].queue.len()
    }

    /// Frames waiting in a node's queue (not yet on air).
    pub fn queued(&self, node: NodeId) -> impl Iterator<Item = &Frame<P>> {
        self.nodes[node.index()].queue.iter()
    }

    /// Frames currently on air.
    pub fn on_air(&self) -> impl Iterator<Item = &Frame<P>> {
        self.active.values().map(|t| &t.frame)
    }

    /// True if `node` currently senses an audible transmission.
    pub fn is_busy(&self, node: NodeId) -> bool {
        let n = &self.nodes[node.index()];
        !n.incoming.is_empty() || !n.sensed.is_empty()
    }

    /// Random wait before the first channel sample of a frame.
    fn initial_wait(airtime: SimTime, rng: &mut RandomStream) -> SimTime {
        rng.uniform() * airtime
    }

    /// Back-off after the `retries`-th busy sample (`retries >= 1`).
    fn backoff_delay(&self, airtime: SimTime, retries: u32, rng: &mut RandomStream) -> SimTime {
        let window = u64::from(self.params.contention_window) << retries.saturating_sub(1).min(16);
        let slots = rng.int_inclusive(1, window);
        slots as f64 * airtime
    }

    /// Hand a frame to the MAC of `frame.src`.
    pub fn enqueue(&mut self, now: SimTime, frame: Frame<P>, rng: &mut RandomStream) -> MacOutput<P> {
        let mut out = MacOutput::default();
        let idx = frame.src.index();
        if self.nodes[idx].queue.len() >= self.params.queue_capacity {
            self.stats.drops_queue_full += 1;
            out.dropped.push((frame, DropReason::QueueFull));
            return out;
        }
        let airtime = frame.airtime;
        self.nodes[idx].queue.push_back(frame);
        if self.nodes[idx].state == MacState::Idle {
            self.nodes[idx].state = MacState::Backoff;
            self.nodes[idx].retries = 0;
            let delay = Self::initial_wait(airtime, rng);
            out.schedule.push((now + delay, MacEvent::Attempt(NodeId::new(idx))));
        }
        out
    }

    /// Remove queued (not yet transmitting) frames matching `pred`.
    pub fn cancel_queued<F>(&mut self, node: NodeId, mut pred: F) -> Vec<Frame<P>>
    where
        F: FnMut(&Frame<P>) -> bool,
    {
        let n = &mut self.nodes[node.index()];
        let mut kept = VecDeque::with_capacity(n.queue.len());
        let mut removed = Vec::new();
        for (i, f) in n.queue.drain(..).enumerate() {
            if pred(&f) {
                if i == 0 {
                    n.retries = 0;
                }
                removed.push(f);
            } else {
                kept.push_back(f);
            }
        }
        n.queue = kept;
        removed
    }

    /// Flush the queue of a node that has died.
    pub fn kill(&mut self, node: NodeId) -> Vec<(Frame<P>, DropReason)> {
        let n = &mut self.nodes[node.index()];
        if n.state != MacState::Transmitting {
            n.state = MacState::Idle;
        }
        let drained: Vec<_> = n.queue.drain(..).map(|f| (f, DropReason::SenderDead)).collect();
        self.stats.drops_sender_dead += drained.len() as u64;
        drained
    }

    fn schedule_next(&mut self, now: SimTime, idx: usize, rng: &mut RandomStream, out: &mut MacOutput<P>) {
        self.nodes[idx].retries = 0;
        match self.nodes[idx].queue.front().map(|f| f.airtime) {
            Some(airtime) => {
                self.nodes[idx].state = MacState::Backoff;
                let delay = Self::initial_wait(airtime, rng);
                out.schedule.push((now + delay, MacEvent::Attempt(NodeId::new(idx))));
            }
            None => self.nodes[idx].state = MacState::Idle,
        }
    }

    /// A back-off timer expired: sense the channel and transmit or defer.
    pub fn attempt(
        &mut self,
        now: SimTime,
        node: NodeId,
        positions: &[Point],
        ledger: &mut EnergyLedger,
        mac_rng: &mut RandomStream,
        radio_rng: &mut RandomStream,
    ) -> Result<MacOutput<P>, PhyError>
    where
        P: Clone,
    {
        let mut out = MacOutput::default();
        let idx = node.index();
        if self.nodes[idx].state != MacState::Backoff {
            return Ok(out);
        }
        if !ledger.is_alive(node) {
            out.dropped.extend(self.kill(node));
            return Ok(out);
        }
        let Some(airtime) = self.nodes[idx].queue.front().map(|f| f.airtime) else {
            self.nodes[idx].state = MacState::Idle;
            return Ok(out);
        };

        if self.is_busy(node) {
            self.stats.busy_deferrals += 1;
            self.nodes[idx].retries += 1;
            if self.nodes[idx].retries > self.params.max_retries {
                let frame = self.nodes[idx].queue.pop_front().expect("head frame");
                self.stats.drops_max_backoff += 1;
                out.dropped.push((frame, DropReason::MaxBackoff));
                self.schedule_next(now, idx, mac_rng, &mut out);
            } else {
                let retries = self.nodes[idx].retries;
                let delay = self.backoff_delay(airtime, retries, mac_rng);
                out.schedule.push((now + delay, MacEvent::Attempt(node)));
            }
            return Ok(out);
        }

        let frame = self.nodes[idx].queue.pop_front().expect("head frame");
        let cost = self.energy.tx_cost(frame.size_bits);
        let e = ledger.node(node);
        if !e.mains && e.residual < cost {
            ledger.charge(node, ChargeKind::Tx, cost)?;
            self.stats.drops_energy += 1;
            out.dropped.push((frame, DropReason::Energy));
            out.deaths.push(node);
            out.dropped.extend(self.kill(node));
            return Ok(out);
        }
        if ledger.charge(node, ChargeKind::Tx, cost)?.died {
            out.deaths.push(node);
        }

        let tx = TxId(self.next_tx);
        self.next_tx += 1;
        let src_pos = positions[idx];
        let mut receivers = Vec::new();
        let mut listeners = Vec::new();
        for (j, pos) in positions.iter().enumerate() {
            if j == idx {
                continue;
            }
            let receiver = NodeId::new(j);
            if !ledger.is_alive(receiver) {
                continue;
            }
            let d = src_pos.distance(pos);
            if d > self.cutoff {
                continue;
            }
            let ideal = ideal_reception(self.radio.p_transmit, d, self.radio.gamma);
            let alpha = radio_rng.normal(self.radio.sigma_alpha)?;
            let beta = radio_rng.normal(self.radio.sigma_beta)?;
            let power = perturbed_reception(ideal, alpha, beta);
            if power < self.threshold {
                if power >= self.cs_threshold {
                    self.nodes[j].sensed.push(tx);
                    listeners.push(receiver);
                }
                continue;
            }
            let rx = &mut self.nodes[j];
            let mut collided = rx.transmitting.is_some();
            if !rx.incoming.is_empty() {
                collided = true;
                for other in &rx.incoming {
                    if let Some(t) = self.active.get_mut(other) {
                        if let Some(slot) = t.receivers.iter_mut().find(|(r, _)| *r == receiver) {
                            slot.1 = true;
                        }
                    }
                }
            }
            rx.incoming.push(tx);
            receivers.push((receiver, collided));
        }

        // A node that starts sending loses whatever it was receiving.
        self.nodes[idx].transmitting = Some(tx);
        self.nodes[idx].state = MacState::Transmitting;
        self.stats.transmissions += 1;
        self.active.insert(tx, Transmission { frame, receivers, listeners });
        out.schedule.push((now + airtime, MacEvent::TxEnd(tx)));
        Ok(out)
    }

    /// A transmission finished: settle receptions and start the next frame.
    pub fn tx_end(
        &mut self,
        now: SimTime,
        tx: TxId,
        ledger: &mut EnergyLedger,
        mac_rng: &mut RandomStream,
    ) -> Result<TxCompletion<P>, PhyError> {
        let Transmission { frame, receivers, listeners } = self
            .active
            .remove(&tx)
            .ok_or(PhyError::UnknownTransmission(tx.0))?;
        let mut out = MacOutput::default();
        let mut delivered = Vec::new();
        let mut collided_at = Vec::new();
        let rx_cost = self.energy.rx_cost(frame.size_bits);
        for l in listeners {
            self.nodes[l.index()].sensed.retain(|t| *t != tx);
        }
        for (receiver, collided) in receivers {
            self.nodes[receiver.index()].incoming.retain(|t| *t != tx);
            if !ledger.is_alive(receiver) {
                continue;
            }
            if ledger.charge(receiver, ChargeKind::Rx, rx_cost)?.died {
                out.deaths.push(receiver);
                continue;
            }
            if collided {
                self.stats.receptions_collided += 1;
                collided_at.push(receiver);
            } else {
                self.stats.receptions_ok += 1;
                delivered.push(receiver);
            }
        }
        let src = frame.src.index();
        self.nodes[src].transmitting = None;
        if ledger.is_alive(frame.src) {
            self.schedule_next(now, src, mac_rng, &mut out);
        } else {
            self.nodes[src].state = MacState::Idle;
            out.dropped.extend(self.kill(frame.src));
        }
        Ok(TxCompletion {
            frame,
            delivered,
            collided: collided_at,
            output: out,
        })
    }
}
