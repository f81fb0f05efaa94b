//! One simulation run: wires topology, medium, energy ledger and one
//! protocol instance per node onto the event queue.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::config::{ConfigError, SimConfig};
use crate::geom::{NodeId, Point};
use crate::harness::RunMetrics;
use crate::kernel::{Classify, EventClass, KernelError, RandomStream, Scheduler, SimTime, StreamId};
use crate::phy::{ChargeKind, Dest, DropReason, EnergyLedger, Frame, FrameKind, MacEvent, MacOutput, MacStats, Medium, PhyError};
use crate::protocols::{Action, DropCause, NodeCtx, Note, ProtocolError, ProtocolParams, ProtocolRegistry, RoutingProtocol};
use crate::routing::{Ant, AntId, AntKind, DataId, DataPacket, Packet, RoutingTable};
use crate::scenario::{density_side, Layout, ScenarioError, ScenarioKind, SinkTrajectory, Topology, TrafficModel};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("topology has {got} nodes, configuration expects {expected}")]
    NodeCount { expected: usize, got: usize },
    #[error("the run has already finished")]
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Mac(MacEvent),
    AntTick(NodeId),
    Data(NodeId),
    SinkMove,
    CacheSweep,
    Delayed { node: NodeId, key: AntId },
    Sample,
    RunEnd,
}

impl Classify for Event {
    fn class(&self) -> EventClass {
        match self {
            Event::Mac(MacEvent::Attempt(_)) => EventClass::TxStart,
            Event::Mac(MacEvent::TxEnd(_)) => EventClass::TxEnd,
            Event::AntTick(_) => EventClass::AntLaunch,
            Event::Data(_) => EventClass::DataGeneration,
            Event::SinkMove => EventClass::SinkMove,
            Event::CacheSweep => EventClass::CacheTimeout,
            Event::Delayed { .. } | Event::Sample => EventClass::Timer,
            Event::RunEnd => EventClass::RunEnd,
        }
    }
}

/// Protocol-level counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AntStats {
    pub launched: u64,
    pub deferred: u64,
    pub completed: u64,
    pub suppressed: u64,
    pub dropped_loop: u64,
    pub dropped_dead_end: u64,
    pub dropped_cache_miss: u64,
    pub dropped_link: u64,
    pub dropped_too_long: u64,
    pub data_dropped: u64,
    pub frames_dropped: u64,
    pub duplicate_deliveries: u64,
    pub deaths: u64,
}

/// One point of the run timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub time: SimTime,
    pub energy_j: f64,
    pub generated: u64,
    pub delivered: u64,
    pub alive: usize,
    pub live_forward_ants: usize,
}

/// What happened to an ant at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntStep {
    Received { from: NodeId },
    Dropped(DropCause),
    Completed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntTraceEntry {
    pub time: SimTime,
    pub node: NodeId,
    pub ant: AntId,
    pub kind: AntKind,
    pub step: AntStep,
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub ants: AntStats,
    pub mac: MacStats,
    pub timeline: Vec<Sample>,
    pub max_live_forward_ants: usize,
    pub events: u64,
    pub alive_at_end: usize,
}

pub struct Simulation {
    config: SimConfig,
    params: ProtocolParams,
    initial_energy: f64,
    sched: Scheduler<Event>,
    topology: Topology,
    medium: Medium<Packet>,
    ledger: EnergyLedger,
    protocols: Vec<Box<dyn RoutingProtocol>>,
    dead: Vec<bool>,
    radio_rng: RandomStream,
    mac_rng: RandomStream,
    protocol_rng: RandomStream,
    traffic_rng: RandomStream,
    traffic: TrafficModel,
    trajectory: SinkTrajectory,
    pending: BTreeMap<(NodeId, AntId), Packet>,
    data_seq: Vec<u64>,
    delivered_ids: BTreeSet<DataId>,
    live_forward: usize,
    max_live_forward: usize,
    live_trace: Option<Vec<(SimTime, usize)>>,
    ant_trace: Option<Vec<AntTraceEntry>>,
    metrics: RunMetrics,
    ants: AntStats,
    timeline: Vec<Sample>,
    last_idle_charge: SimTime,
    started: bool,
    finished: bool,
}

impl Simulation {
    /// Build the topology described by `config` and instantiate the protocol.
    pub fn new(config: SimConfig, registry: &ProtocolRegistry) -> Result<Self, SimError> {
        config.validate()?;
        let mut topo_rng = RandomStream::new(config.seed, StreamId::Topology);
        let mut mob_rng = RandomStream::new(config.seed, StreamId::Mobility);
        let side = match config.layout {
            Layout::Grid => {
                let s = (config.nodes as f64).sqrt().round();
                (s - 1.0) * config.grid_spacing
            }
            Layout::RandomSquare => density_side(config.nodes),
        };
        // Drawn in both scenarios so the other streams line up; only the
        // dynamic scenario moves the sink.
        let trajectory = SinkTrajectory::random(
            side,
            config.mobility.radius_fraction,
            config.duration,
            config.mobility.update_period,
            &mut mob_rng,
        );
        let dynamic = config.scenario == ScenarioKind::Dynamic;
        let start = trajectory.position(0.0);
        let radius = config.radio.tx_radius;
        let topology = match config.layout {
            Layout::Grid => {
                let mut t = Topology::grid(config.nodes, config.grid_spacing, radius)?;
                if dynamic {
                    place_sink(&mut t, start, config.mobility.node_attached);
                }
                t
            }
            Layout::RandomSquare => Topology::random_square(
                config.nodes,
                radius,
                config.max_topology_attempts,
                &mut topo_rng,
                |t| {
                    if dynamic {
                        place_sink(t, start, config.mobility.node_attached);
                    }
                },
            )?,
        };
        Self::build(config, registry, topology, trajectory)
    }

    /// Run on a caller-supplied topology; the configured layout is ignored.
    pub fn with_topology(config: SimConfig, registry: &ProtocolRegistry, topology: Topology) -> Result<Self, SimError> {
        config.validate()?;
        if topology.len() != config.nodes {
            return Err(SimError::NodeCount {
                expected: config.nodes,
                got: topology.len(),
            });
        }
        let mut mob_rng = RandomStream::new(config.seed, StreamId::Mobility);
        let trajectory = SinkTrajectory::random(
            topology.side(),
            config.mobility.radius_fraction,
            config.duration,
            config.mobility.update_period,
            &mut mob_rng,
        );
        Self::build(config, registry, topology, trajectory)
    }

    fn build(
        config: SimConfig,
        registry: &ProtocolRegistry,
        topology: Topology,
        trajectory: SinkTrajectory,
    ) -> Result<Self, SimError> {
        let factory = registry.get(&config.protocol)?;
        let n = topology.len();
        let initial_energy = config.effective_energy();
        let mut ledger = EnergyLedger::new(n, initial_energy);
        ledger.set_mains(topology.sink(), true);
        let protocols = topology.nodes().map(|v| factory(v, topology.neighbors(v))).collect();
        let medium = Medium::new(n, config.mac.clone(), config.radio.clone(), config.energy.clone());
        let seed = config.seed;
        Ok(Self {
            params: config.routing.clone(),
            initial_energy,
            sched: Scheduler::new(),
            medium,
            ledger,
            protocols,
            dead: vec![false; n],
            radio_rng: RandomStream::new(seed, StreamId::Radio),
            mac_rng: RandomStream::new(seed, StreamId::Mac),
            protocol_rng: RandomStream::new(seed, StreamId::Protocol),
            traffic_rng: RandomStream::new(seed, StreamId::Traffic),
            traffic: TrafficModel {
                rate: config.traffic_rate,
                jitter: config.traffic_jitter,
            },
            trajectory,
            pending: BTreeMap::new(),
            data_seq: vec![0; n],
            delivered_ids: BTreeSet::new(),
            live_forward: 0,
            max_live_forward: 0,
            live_trace: None,
            ant_trace: None,
            metrics: RunMetrics::default(),
            ants: AntStats::default(),
            timeline: Vec::new(),
            last_idle_charge: 0.0,
            started: false,
            finished: false,
            topology,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn trajectory(&self) -> &SinkTrajectory {
        &self.trajectory
    }

    pub fn table(&self, node: NodeId) -> Option<&RoutingTable> {
        self.protocols.get(node.index()).map(|p| p.table())
    }

    pub fn live_forward_ants(&self) -> usize {
        self.live_forward
    }

    /// Record `(time, live forward ants)` after every event.
    pub fn enable_live_trace(&mut self) {
        self.live_trace = Some(Vec::new());
    }

    pub fn live_trace(&self) -> Option<&[(SimTime, usize)]> {
        self.live_trace.as_deref()
    }

    /// Record every ant reception, drop and completion.
    pub fn enable_ant_trace(&mut self) {
        self.ant_trace = Some(Vec::new());
    }

    pub fn ant_trace(&self) -> Option<&[AntTraceEntry]> {
        self.ant_trace.as_deref()
    }

    pub fn enable_event_trace(&mut self) {
        self.sched.enable_trace();
    }

    pub fn event_trace(&self) -> Option<&[crate::kernel::TraceEntry]> {
        self.sched.trace()
    }

    /// Initialise protocols and seed the periodic events. Called by
    /// [`run_until`](Self::run_until) if needed.
    pub fn start(&mut self) -> Result<(), SimError> {
        if self.started {
            return Ok(());
        }
        self.started = true;
        let duration = self.config.duration;
        let sink = self.topology.sink();
        for v in self.topology.nodes().collect::<Vec<_>>() {
            self.call(v, |p, ctx| p.on_start(ctx))?;
        }
        for v in self.topology.nodes().collect::<Vec<_>>() {
            if v == sink {
                continue;
            }
            if self.protocols[v.index()].launches_ants() {
                let t = self.protocol_rng.uniform() * self.params.ant_interval;
                self.sched.schedule(t, Event::AntTick(v))?;
            }
            let t = self.traffic.first_time(&mut self.traffic_rng);
            if t <= duration {
                self.sched.schedule(t, Event::Data(v))?;
            }
        }
        if self.config.scenario == ScenarioKind::Dynamic {
            self.sched.schedule(self.config.mobility.update_period, Event::SinkMove)?;
        }
        self.sched.schedule(self.params.cache_timeout, Event::CacheSweep)?;
        self.sched.schedule(0.0, Event::Sample)?;
        self.sched.schedule(duration, Event::RunEnd)?;
        Ok(())
    }

    /// Dispatch every event up to and including `t`.
    pub fn run_until(&mut self, t: SimTime) -> Result<(), SimError> {
        if self.finished {
            return Err(SimError::Finished);
        }
        self.start()?;
        let t = t.min(self.config.duration);
        while let Some(ev) = self.sched.pop_until(t) {
            self.handle(ev.payload)?;
            if let Some(trace) = self.live_trace.as_mut() {
                trace.push((self.sched.now(), self.live_forward));
            }
        }
        self.sched.advance_to(t)?;
        Ok(())
    }

    /// Run to the configured duration and report.
    pub fn run(mut self) -> Result<RunReport, SimError> {
        self.run_until(self.config.duration)?;
        Ok(self.finish())
    }

    /// Close the run and compute the report.
    pub fn finish(&mut self) -> RunReport {
        self.charge_idle(self.sched.now());
        self.finished = true;
        let mut metrics = self.metrics.clone();
        metrics.energy_total = self.ledger.total_drawn();
        metrics.energy_by_category = self.ledger.total_spent();
        metrics.per_node_residual = self.ledger.nodes().iter().map(|e| e.residual).collect();
        RunReport {
            metrics,
            ants: self.ants.clone(),
            mac: self.medium.stats().clone(),
            timeline: self.timeline.clone(),
            max_live_forward_ants: self.max_live_forward,
            events: self.sched.dispatched(),
            alive_at_end: self.ledger.alive_count(),
        }
    }

    /// Hand `ant` to `node` as if it had just been received from `from`.
    pub fn inject_ant(&mut self, node: NodeId, from: NodeId, ant: Ant) -> Result<(), SimError> {
        self.start()?;
        self.trace_ant(node, &ant, AntStep::Received { from });
        self.call(node, |p, ctx| p.on_ant(ctx, from, ant))
    }

    fn handle(&mut self, ev: Event) -> Result<(), SimError> {
        let now = self.sched.now();
        let duration = self.config.duration;
        match ev {
            Event::Mac(MacEvent::Attempt(v)) => {
                let out = self.medium.attempt(
                    now,
                    v,
                    self.topology.positions(),
                    &mut self.ledger,
                    &mut self.mac_rng,
                    &mut self.radio_rng,
                )?;
                self.apply_mac(out)?;
            }
            Event::Mac(MacEvent::TxEnd(tx)) => {
                let done = self.medium.tx_end(now, tx, &mut self.ledger, &mut self.mac_rng)?;
                if done.frame.kind == FrameKind::ForwardAnt {
                    self.live_forward -= 1;
                }
                self.apply_mac(done.output)?;
                let src = done.frame.src;
                for r in done.delivered {
                    if self.dead[r.index()] || !self.ledger.is_alive(r) {
                        continue;
                    }
                    if self.topology.neighbors(r).binary_search(&src).is_err() {
                        continue;
                    }
                    if let Dest::Unicast(x) = done.frame.dst {
                        if x != r {
                            continue;
                        }
                    }
                    self.deliver(r, src, done.frame.payload.clone())?;
                }
            }
            Event::AntTick(v) => {
                if self.is_up(v) {
                    self.call(v, |p, ctx| p.on_ant_tick(ctx))?;
                    let next = now + self.params.ant_interval;
                    if next <= duration {
                        self.sched.schedule(next, Event::AntTick(v))?;
                    }
                }
            }
            Event::Data(v) => {
                if self.is_up(v) {
                    let seq = self.data_seq[v.index()];
                    self.data_seq[v.index()] += 1;
                    self.metrics.generated += 1;
                    let data = DataPacket {
                        id: DataId { source: v, seq },
                        created: now,
                        visited: Vec::new(),
                    };
                    if v == self.topology.sink() {
                        self.record_delivery(&data);
                    } else {
                        self.call(v, |p, ctx| p.on_data(ctx, data))?;
                    }
                    let next = now + self.traffic.next_gap(&mut self.traffic_rng);
                    if next <= duration {
                        self.sched.schedule(next, Event::Data(v))?;
                    }
                }
            }
            Event::SinkMove => {
                self.move_sink(now)?;
                let next = now + self.config.mobility.update_period;
                if next <= duration {
                    self.sched.schedule(next, Event::SinkMove)?;
                }
            }
            Event::CacheSweep => {
                for p in &mut self.protocols {
                    p.on_cache_sweep(now);
                }
                let next = now + self.params.cache_timeout;
                if next <= duration {
                    self.sched.schedule(next, Event::CacheSweep)?;
                }
            }
            Event::Delayed { node, key } => {
                if let Some(packet) = self.pending.remove(&(node, key)) {
                    if packet.frame_kind() == FrameKind::ForwardAnt {
                        self.live_forward -= 1;
                    }
                    if self.is_up(node) {
                        self.send(node, Dest::Broadcast, packet)?;
                    }
                }
            }
            Event::Sample => {
                self.charge_idle(now);
                self.timeline.push(Sample {
                    time: now,
                    energy_j: self.ledger.total_drawn(),
                    generated: self.metrics.generated,
                    delivered: self.metrics.delivered,
                    alive: self.ledger.alive_count(),
                    live_forward_ants: self.live_forward,
                });
                let next = now + self.config.sample_period;
                if next <= duration {
                    self.sched.schedule(next, Event::Sample)?;
                }
            }
            Event::RunEnd => {}
        }
        Ok(())
    }

    fn is_up(&self, v: NodeId) -> bool {
        !self.dead[v.index()] && self.ledger.is_alive(v)
    }

    fn charge_idle(&mut self, now: SimTime) {
        let dt = now - self.last_idle_charge;
        self.last_idle_charge = now;
        let rate = self.config.energy.idle_per_second;
        if !(dt > 0.0) || rate == 0.0 {
            return;
        }
        let mut died = Vec::new();
        for v in self.topology.nodes() {
            if self.is_up(v) {
                if let Ok(c) = self.ledger.charge(v, ChargeKind::Idle, rate * dt) {
                    if c.died {
                        died.push(v);
                    }
                }
            }
        }
        for v in died {
            // Errors here only come from protocol sends on a finished clock.
            let _ = self.kill(v);
        }
    }

    fn deliver(&mut self, r: NodeId, from: NodeId, packet: Packet) -> Result<(), SimError> {
        let sink = self.topology.sink();
        match packet {
            Packet::Data(d) => {
                if r == sink {
                    self.record_delivery(&d);
                    Ok(())
                } else {
                    self.call(r, |p, ctx| p.on_data(ctx, d))
                }
            }
            Packet::Ant(a) => {
                if r == sink {
                    if let Some(d) = &a.data {
                        self.record_delivery(d);
                    }
                }
                self.trace_ant(r, &a, AntStep::Received { from });
                self.call(r, |p, ctx| p.on_ant(ctx, from, a))
            }
        }
    }

    fn record_delivery(&mut self, d: &DataPacket) {
        if !self.delivered_ids.insert(d.id) {
            self.ants.duplicate_deliveries += 1;
            return;
        }
        let latency = self.sched.now() - d.created;
        let bits = u64::from(self.config.frames.data_bits());
        self.metrics.record_delivery(latency, bits);
    }

    fn trace_ant(&mut self, node: NodeId, ant: &Ant, step: AntStep) {
        if let Some(trace) = self.ant_trace.as_mut() {
            trace.push(AntTraceEntry {
                time: self.sched.now(),
                node,
                ant: ant.id,
                kind: ant.kind,
                step,
            });
        }
    }

    /// Run one protocol callback at `node` and carry out its actions.
    fn call<F>(&mut self, node: NodeId, f: F) -> Result<(), SimError>
    where
        F: FnOnce(&mut dyn RoutingProtocol, &mut NodeCtx<'_>),
    {
        let mut actions = Vec::new();
        {
            let mut ctx = NodeCtx {
                node,
                now: self.sched.now(),
                sink: self.topology.sink(),
                neighbors: self.topology.neighbors(node),
                node_count: self.topology.len(),
                positions: self.topology.positions(),
                tx_radius: self.topology.tx_radius(),
                energy: &self.ledger,
                initial_energy: self.initial_energy,
                live_forward_ants: self.live_forward,
                params: &self.params,
                rng: &mut self.protocol_rng,
                actions: &mut actions,
            };
            f(self.protocols[node.index()].as_mut(), &mut ctx);
        }
        for action in actions {
            self.apply(node, action)?;
        }
        Ok(())
    }

    fn apply(&mut self, node: NodeId, action: Action) -> Result<(), SimError> {
        match action {
            Action::Send { dst, packet } => self.send(node, dst, packet),
            Action::SendDelayed { delay, packet, key } => {
                if packet.frame_kind() == FrameKind::ForwardAnt {
                    self.live_forward += 1;
                    self.max_live_forward = self.max_live_forward.max(self.live_forward);
                }
                if let Some(old) = self.pending.insert((node, key), packet) {
                    if old.frame_kind() == FrameKind::ForwardAnt {
                        self.live_forward -= 1;
                    }
                }
                self.sched.schedule_in(delay.max(0.0), Event::Delayed { node, key })?;
                Ok(())
            }
            Action::CancelDelayed { key } => {
                // Only the random delay is cancellable; a frame already
                // handed to the MAC goes out.
                if let Some(p) = self.pending.remove(&(node, key)) {
                    if p.frame_kind() == FrameKind::ForwardAnt {
                        self.live_forward -= 1;
                    }
                }
                Ok(())
            }
            Action::Note(note) => {
                self.note(node, note);
                Ok(())
            }
        }
    }

    fn note(&mut self, node: NodeId, note: Note) {
        let s = &mut self.ants;
        match note {
            Note::AntLaunched { .. } => s.launched += 1,
            Note::AntDeferred => s.deferred += 1,
            Note::AntCompleted { id } => {
                s.completed += 1;
                if let Some(trace) = self.ant_trace.as_mut() {
                    trace.push(AntTraceEntry {
                        time: self.sched.now(),
                        node,
                        ant: id,
                        kind: AntKind::Backward,
                        step: AntStep::Completed,
                    });
                }
            }
            Note::RebroadcastSuppressed { .. } => s.suppressed += 1,
            Note::AntDropped { id, kind, cause } => {
                match cause {
                    DropCause::Loop => s.dropped_loop += 1,
                    DropCause::DeadEnd => s.dropped_dead_end += 1,
                    DropCause::CacheMiss => s.dropped_cache_miss += 1,
                    DropCause::LinkBroken => s.dropped_link += 1,
                    DropCause::TooLong => s.dropped_too_long += 1,
                }
                if let Some(trace) = self.ant_trace.as_mut() {
                    trace.push(AntTraceEntry {
                        time: self.sched.now(),
                        node,
                        ant: id,
                        kind,
                        step: AntStep::Dropped(cause),
                    });
                }
            }
            Note::DataDropped { .. } => s.data_dropped += 1,
        }
    }

    fn send(&mut self, node: NodeId, dst: Dest, packet: Packet) -> Result<(), SimError> {
        if !self.is_up(node) {
            return Ok(());
        }
        let kind = packet.frame_kind();
        let bits = packet.size_bits(&self.config.frames);
        let frame = Frame::new(node, dst, kind, bits, self.config.mac.bitrate, packet)?;
        if kind == FrameKind::ForwardAnt {
            self.live_forward += 1;
            self.max_live_forward = self.max_live_forward.max(self.live_forward);
        }
        let out = self.medium.enqueue(self.sched.now(), frame, &mut self.mac_rng);
        self.apply_mac(out)
    }

    fn apply_mac(&mut self, out: MacOutput<Packet>) -> Result<(), SimError> {
        for (t, ev) in out.schedule {
            self.sched.schedule(t, Event::Mac(ev))?;
        }
        for (frame, reason) in out.dropped {
            self.frame_dropped(&frame, reason);
        }
        for v in out.deaths {
            self.kill(v)?;
        }
        Ok(())
    }

    fn frame_dropped(&mut self, frame: &Frame<Packet>, _reason: DropReason) {
        self.ants.frames_dropped += 1;
        if frame.kind == FrameKind::ForwardAnt {
            self.live_forward -= 1;
        }
    }

    /// A node ran out of energy: unlink it and tell its former neighbors.
    fn kill(&mut self, v: NodeId) -> Result<(), SimError> {
        if self.dead[v.index()] {
            return Ok(());
        }
        self.dead[v.index()] = true;
        self.ants.deaths += 1;
        for (frame, reason) in self.medium.kill(v) {
            self.frame_dropped(&frame, reason);
        }
        let keys: Vec<_> = self.pending.range((v, AntId { source: NodeId(0), seq: 0 })..).take_while(|(k, _)| k.0 == v).map(|(k, _)| *k).collect();
        for k in keys {
            if let Some(p) = self.pending.remove(&k) {
                if p.frame_kind() == FrameKind::ForwardAnt {
                    self.live_forward -= 1;
                }
            }
        }
        let former = self.topology.detach(v);
        for n in former {
            if self.is_up(n) {
                self.call(n, |p, ctx| p.on_neighbors_changed(ctx, &[], &[v]))?;
            }
        }
        Ok(())
    }

    fn move_sink(&mut self, now: SimTime) -> Result<(), SimError> {
        let target = self.trajectory.position(now);
        if self.config.mobility.node_attached {
            let alive: Vec<(usize, Point)> = self
                .topology
                .positions()
                .iter()
                .copied()
                .enumerate()
                .filter(|(i, _)| !self.dead[*i])
                .collect();
            let Some(&(best, _)) = alive
                .iter()
                .min_by(|a, b| a.1.distance(&target).total_cmp(&b.1.distance(&target)))
            else {
                return Ok(());
            };
            let old = self.topology.sink();
            let new = NodeId::new(best);
            if new != old {
                self.ledger.set_mains(old, false);
                self.ledger.set_mains(new, true);
                self.topology.set_sink(new);
            }
            return Ok(());
        }
        let sink = self.topology.sink();
        let (added, removed) = self.topology.move_node(sink, target);
        let mut gained = Vec::new();
        for a in added {
            if self.is_up(a) {
                gained.push(a);
            } else {
                // dead nodes stay unlinked
                self.topology.detach(a);
            }
        }
        let lost: Vec<NodeId> = removed.into_iter().filter(|r| self.is_up(*r)).collect();
        if gained.is_empty() && lost.is_empty() {
            return Ok(());
        }
        self.call(sink, |p, ctx| p.on_neighbors_changed(ctx, &gained, &lost))?;
        for &a in &gained {
            self.call(a, |p, ctx| p.on_neighbors_changed(ctx, &[sink], &[]))?;
        }
        for &r in &lost {
            self.call(r, |p, ctx| p.on_neighbors_changed(ctx, &[], &[sink]))?;
        }
        Ok(())
    }
}

/// Put the sink at `at`, either by moving the sink node or by handing the
/// sink role to the node nearest `at`.
fn place_sink(t: &mut Topology, at: Point, node_attached: bool) {
    if node_attached {
        let nearest = crate::scenario::nearest_node(t.positions(), at);
        t.set_sink(nearest);
    } else {
        let sink = t.sink();
        t.move_node(sink, at);
    }
}

/// Build and run one configuration.
pub fn run_config(config: SimConfig, registry: &ProtocolRegistry) -> Result<RunReport, SimError> {
    Simulation::new(config, registry)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(protocol: &str) -> SimConfig {
        SimConfig {
            nodes: 9,
            layout: Layout::Grid,
            duration: 20.0,
            protocol: protocol.into(),
            ..SimConfig::default()
        }
    }

    #[test]
    fn every_protocol_delivers_on_small_grid() {
        let reg = ProtocolRegistry::with_builtins();
        for name in crate::protocols::BUILTIN_PROTOCOLS {
            let r = run_config(small(name), &reg).unwrap();
            assert!(r.metrics.generated > 0, "{name}");
            assert!(r.metrics.delivered > 0, "{name} delivered nothing");
            assert!(r.metrics.delivered <= r.metrics.generated);
            assert!(r.metrics.energy_total > 0.0);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let reg = ProtocolRegistry::with_builtins();
        let a = run_config(small("IEEABR"), &reg).unwrap();
        let b = run_config(small("IEEABR"), &reg).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.events, b.events);
    }

    #[test]
    fn energy_books_balance() {
        let reg = ProtocolRegistry::with_builtins();
        let r = run_config(small("FF"), &reg).unwrap();
        let m = &r.metrics;
        assert!((m.energy_total - m.energy_by_category).abs() <= 1e-9 * m.energy_total);
    }

    #[test]
    fn live_counter_returns_to_consistent_state() {
        let reg = ProtocolRegistry::with_builtins();
        let mut sim = Simulation::new(small("FF"), &reg).unwrap();
        sim.run_until(20.0).unwrap();
        let in_network = sim
            .medium
            .on_air()
            .chain(sim.topology.nodes().flat_map(|v| sim.medium.queued(v)))
            .filter(|f| f.kind == FrameKind::ForwardAnt)
            .count()
            + sim.pending.values().filter(|p| p.frame_kind() == FrameKind::ForwardAnt).count();
        assert_eq!(sim.live_forward_ants(), in_network);
    }

    #[test]
    fn dynamic_sink_moves() {
        let reg = ProtocolRegistry::with_builtins();
        let cfg = SimConfig {
            scenario: ScenarioKind::Dynamic,
            nodes: 16,
            duration: 10.0,
            ..SimConfig::default()
        };
        let mut sim = Simulation::new(cfg, &reg).unwrap();
        let sink = sim.topology().sink();
        sim.run_until(5.0).unwrap();
        let expected = sim.trajectory().position(5.0);
        assert_eq!(sim.topology().position(sink), expected);
        assert!(sim.ledger().node(sink).mains);
    }

    #[test]
    fn unknown_protocol_rejected() {
        let reg = ProtocolRegistry::with_builtins();
        assert!(matches!(
            Simulation::new(small("AODV"), &reg),
            Err(SimError::Protocol(ProtocolError::Unknown(_)))
        ));
    }
}
