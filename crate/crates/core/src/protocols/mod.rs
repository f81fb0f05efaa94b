//! The six routing protocols behind one trait, selected by name at runtime.

mod antnet;
mod babr;
mod eeabr;
mod energy_aware;
mod ff;
mod fp;
mod ieeabr;
pub mod rules;
mod sc;

use std::collections::BTreeMap;

pub use babr::Babr;
pub use eeabr::Eeabr;
pub use ff::Ff;
pub use fp::Fp;
pub use ieeabr::Ieeabr;
pub use sc::Sc;

use crate::geom::{NodeId, Point};
use crate::kernel::{RandomStream, SimTime};
use crate::phy::{Dest, EnergyLedger};
use crate::routing::{Ant, AntId, AntKind, DataPacket, Packet, RoutingTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unknown protocol `{0}`")]
    Unknown(String),
    #[error("protocol `{0}` registered twice")]
    Duplicate(String),
    #[error("invalid protocol parameter: {0}")]
    Invalid(String),
}

/// Tunables shared by all protocols; each protocol reads the ones it uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub c1: f64,
    pub c2: f64,
    /// Trip-model learning weight.
    pub eta: f64,
    /// Trip-time observation window.
    pub window: usize,
    /// Confidence level for the upper trip-time bound.
    pub confidence: f64,
    /// Lifetime of ant-cache records.
    pub cache_timeout: SimTime,
    pub alpha: f64,
    pub beta: f64,
    pub rho: f64,
    pub phi: f64,
    pub sc_beta: f64,
    pub delta_tau_max: f64,
    /// Visibility floor as a fraction of the initial energy.
    pub epsilon_fraction: f64,
    /// Period of forward-ant launches at every source.
    pub ant_interval: SimTime,
    pub ant_cap_multiplier: usize,
    /// Upper bound of the random rebroadcast delay used by flooding.
    pub flood_delay: SimTime,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            c1: 0.7,
            c2: 0.3,
            eta: 0.2,
            window: 10,
            confidence: 0.75,
            cache_timeout: 3.0,
            alpha: 1.0,
            beta: 1.0,
            rho: 0.1,
            phi: 1.0,
            sc_beta: 1.0,
            delta_tau_max: 1.0,
            epsilon_fraction: 1e-3,
            ant_interval: 1.0,
            ant_cap_multiplier: 5,
            flood_delay: 0.05,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::Invalid(m.to_string()));
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) || (self.c1 + self.c2 - 1.0).abs() > 1e-9 {
            return bad("c1 and c2 must be non-negative and sum to 1");
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0, 1)");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.phi > 0.0) {
            return bad("phi must be positive");
        }
        if !(self.cache_timeout > 0.0) || !(self.ant_interval > 0.0) || !(self.flood_delay >= 0.0) {
            return bad("timeouts and intervals must be positive");
        }
        if self.ant_cap_multiplier == 0 {
            return bad("ant cap multiplier must be at least 1");
        }
        if !(self.delta_tau_max > 0.0) || !(self.epsilon_fraction > 0.0) {
            return bad("delta_tau_max and epsilon_fraction must be positive");
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.sc_beta >= 0.0) {
            return bad("exponents must be non-negative");
        }
        Ok(())
    }
}

/// Why an ant or data packet was discarded by a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropCause {
    Loop,
    DeadEnd,
    CacheMiss,
    LinkBroken,
    TooLong,
}

/// Bookkeeping notes a protocol hands back to the simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Note {
    AntLaunched { id: AntId, kind: AntKind },
    AntDeferred,
    AntDropped { id: AntId, kind: AntKind, cause: DropCause },
    AntCompleted { id: AntId },
    RebroadcastSuppressed { id: AntId },
    DataDropped { data: DataPacket, cause: DropCause },
}

/// Requests emitted by a protocol callback.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send { dst: Dest, packet: Packet },
    /// Broadcast after `delay` unless cancelled first.
    SendDelayed { delay: SimTime, packet: Packet, key: AntId },
    /// Withdraw a pending or still-queued delayed broadcast.
    CancelDelayed { key: AntId },
    Note(Note),
}

/// What a node can see and do during one protocol callback.
pub struct NodeCtx<'a> {
    pub node: NodeId,
    pub now: SimTime,
    pub sink: NodeId,
    pub neighbors: &'a [NodeId],
    pub node_count: usize,
    pub positions: &'a [Point],
    pub tx_radius: f64,
    pub energy: &'a EnergyLedger,
    /// Initial battery level C.
    pub initial_energy: f64,
    pub live_forward_ants: usize,
    pub params: &'a ProtocolParams,
    pub rng: &'a mut RandomStream,
    pub actions: &'a mut Vec<Action>,
}

impl NodeCtx<'_> {
    pub fn is_sink(&self) -> bool {
        self.node == self.sink
    }

    pub fn is_neighbor(&self, n: NodeId) -> bool {
        self.neighbors.binary_search(&n).is_ok()
    }

    /// Residual energy of any node (mains-powered nodes report their budget).
    pub fn residual(&self, n: NodeId) -> f64 {
        self.energy.residual(n)
    }

    pub fn send(&mut self, to: NodeId, packet: Packet) {
        self.actions.push(Action::Send {
            dst: Dest::Unicast(to),
            packet,
        });
    }

    pub fn broadcast(&mut self, packet: Packet) {
        self.actions.push(Action::Send {
            dst: Dest::Broadcast,
            packet,
        });
    }

    pub fn broadcast_delayed(&mut self, delay: SimTime, key: AntId, packet: Packet) {
        self.actions.push(Action::SendDelayed { delay, packet, key });
    }

    pub fn cancel_delayed(&mut self, key: AntId) {
        self.actions.push(Action::CancelDelayed { key });
    }

    pub fn note(&mut self, note: Note) {
        self.actions.push(Action::Note(note));
    }

    pub fn drop_ant(&mut self, ant: &Ant, cause: DropCause) {
        self.note(Note::AntDropped {
            id: ant.id,
            kind: ant.kind,
            cause,
        });
    }
}

/// Per-node routing behaviour. One instance lives at every node.
pub trait RoutingProtocol {
    fn name(&self) -> &'static str;

    /// Called once before the first event.
    fn on_start(&mut self, ctx: &mut NodeCtx<'_>);

    /// Periodic forward-ant launch opportunity.
    fn on_ant_tick(&mut self, ctx: &mut NodeCtx<'_>);

    /// A data event originated here or was unicast here for forwarding.
    fn on_data(&mut self, ctx: &mut NodeCtx<'_>, data: DataPacket);

    /// An ant frame addressed to this node (or broadcast) arrived from `from`.
    fn on_ant(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, ant: Ant);

    fn on_neighbors_changed(&mut self, ctx: &mut NodeCtx<'_>, added: &[NodeId], removed: &[NodeId]);

    /// Periodic housekeeping (expired cache records).
    fn on_cache_sweep(&mut self, _now: SimTime) {}

    fn table(&self) -> &RoutingTable;

    /// Whether this protocol launches periodic forward ants.
    fn launches_ants(&self) -> bool {
        true
    }
}

pub type ProtocolFactory = fn(NodeId, &[NodeId]) -> Box<dyn RoutingProtocol>;

/// Name-keyed protocol constructors. Lookup is case-insensitive.
#[derive(Clone)]
pub struct ProtocolRegistry {
    factories: BTreeMap<String, ProtocolFactory>,
}

impl Default for ProtocolRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl ProtocolRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [(&str, ProtocolFactory); 6] = [
            ("BABR", |n, nb| Box::new(Babr::new(n, nb))),
            ("SC", |n, nb| Box::new(Sc::new(n, nb))),
            ("FF", |n, nb| Box::new(Ff::new(n, nb))),
            ("FP", |n, nb| Box::new(Fp::new(n, nb))),
            ("EEABR", |n, nb| Box::new(Eeabr::new(n, nb))),
            ("IEEABR", |n, nb| Box::new(Ieeabr::new(n, nb))),
        ];
        for (name, f) in builtins {
            r.register(name, f).expect("builtin names are unique");
        }
        r
    }

    pub fn register(&mut self, name: &str, factory: ProtocolFactory) -> Result<(), ProtocolError> {
        let key = name.to_ascii_uppercase();
        if self.factories.contains_key(&key) {
            return Err(ProtocolError::Duplicate(key));
        }
        self.factories.insert(key, factory);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<ProtocolFactory, ProtocolError> {
        self.factories
            .get(&name.to_ascii_uppercase())
            .copied()
            .ok_or_else(|| ProtocolError::Unknown(name.to_string()))
    }

    /// Canonical (upper-case) name, if registered.
    pub fn canonical(&self, name: &str) -> Option<String> {
        let key = name.to_ascii_uppercase();
        self.factories.contains_key(&key).then_some(key)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

/// Names of the built-in protocols in presentation order.
pub const BUILTIN_PROTOCOLS: [&str; 6] = ["BABR", "SC", "FF", "FP", "EEABR", "IEEABR"];

/// Unicast `data` to the admissible neighbor with the highest `score`,
/// breaking ties at random. Visited nodes are never revisited.
pub(crate) fn forward_data<F>(ctx: &mut NodeCtx<'_>, mut data: DataPacket, score: F)
where
    F: Fn(NodeId) -> f64,
{
    if !data.visited.contains(&ctx.node) {
        data.visited.push(ctx.node);
    }
    if data.visited.len() > ctx.node_count {
        ctx.note(Note::DataDropped {
            data,
            cause: DropCause::TooLong,
        });
        return;
    }
    let mut best: Vec<NodeId> = Vec::new();
    let mut best_score = f64::NEG_INFINITY;
    for &n in ctx.neighbors {
        if data.visited.contains(&n) {
            continue;
        }
        let s = score(n);
        if s > best_score + 1e-12 * best_score.abs() {
            best_score = s;
            best.clear();
            best.push(n);
        } else if (s - best_score).abs() <= 1e-12 * best_score.abs() {
            best.push(n);
        }
    }
    let next = match best.len() {
        0 => None,
        1 => Some(best[0]),
        k => Some(best[ctx.rng.int_inclusive(0, k as u64 - 1) as usize]),
    };
    match next {
        Some(n) => ctx.send(n, Packet::Data(data)),
        None => ctx.note(Note::DataDropped {
            data,
            cause: DropCause::DeadEnd,
        }),
    }
}

/// Stochastic choice of an index by weight; `None` if all weights are zero.
pub(crate) fn sample_index(rng: &mut RandomStream, weights: &[f64]) -> Option<usize> {
    rng.weighted_index(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_builtins_case_insensitively() {
        let r = ProtocolRegistry::with_builtins();
        for name in BUILTIN_PROTOCOLS {
            let p = r.get(&name.to_lowercase()).unwrap()(NodeId(0), &[NodeId(1)]);
            assert_eq!(p.name(), name);
        }
        assert!(matches!(r.get("AODV"), Err(ProtocolError::Unknown(_))));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut r = ProtocolRegistry::with_builtins();
        let f: ProtocolFactory = |n, nb| Box::new(Babr::new(n, nb));
        assert!(matches!(r.register("babr", f), Err(ProtocolError::Duplicate(_))));
        r.register("custom", f).unwrap();
        assert_eq!(r.canonical("Custom").as_deref(), Some("CUSTOM"));
    }

    #[test]
    fn default_params_valid() {
        ProtocolParams::default().validate().unwrap();
        let bad = ProtocolParams {
            c1: 0.9,
            ..ProtocolParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
