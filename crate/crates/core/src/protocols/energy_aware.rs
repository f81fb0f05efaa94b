//! Machinery shared by EEABR and IEEABR: two-node ant memory, per-node ant
//! caches used both for loop detection and for the backward return path,
//! energy-weighted next-hop selection and pheromone deposits.

use super::rules::{
    eeabr_delta_tau, eeabr_select_next, eeabr_update_trail, ieeabr_admit, ieeabr_initial,
    ieeabr_link_failure, visibility,
};
use super::{DropCause, NodeCtx, Note};
use crate::geom::NodeId;
use crate::routing::{
    normalize_column, uniform_column, Admission, Ant, AntCache, AntId, AntKind, Packet, RoutingTable, TableMode,
};

/// Nodes an energy-aware ant remembers.
pub const ANT_MEMORY: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flavor {
    /// Pheromone table, uniform start, no admission control.
    Plain,
    /// Normalised table, destination-biased start, ant cap, proportional
    /// redistribution on link loss.
    Improved,
}

#[derive(Debug, Clone)]
pub(crate) struct EnergyAwareCore {
    pub node: NodeId,
    pub table: RoutingTable,
    cache: AntCache,
    seq: u64,
    flavor: Flavor,
}

impl EnergyAwareCore {
    pub fn new(node: NodeId, neighbors: &[NodeId], flavor: Flavor) -> Self {
        let mode = match flavor {
            Flavor::Plain => TableMode::Pheromone,
            Flavor::Improved => TableMode::Probability,
        };
        Self {
            node,
            table: RoutingTable::new(mode, neighbors.to_vec()),
            cache: AntCache::new(3.0),
            seq: 0,
            flavor,
        }
    }

    pub fn start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.cache = AntCache::new(ctx.params.cache_timeout);
        if !ctx.is_sink() {
            self.ensure_column(ctx.sink);
        }
    }

    fn initial_column(&self, d: NodeId) -> Vec<f64> {
        let n = self.table.neighbors().len();
        if n == 0 {
            return Vec::new();
        }
        match self.flavor {
            Flavor::Plain => uniform_column(n),
            Flavor::Improved => ieeabr_initial(n, self.table.position(d)).expect("non-empty neighbor set"),
        }
    }

    fn ensure_column(&mut self, d: NodeId) {
        if self.table.column(d).is_none() {
            let col = self.initial_column(d);
            self.table.set_column(d, col);
        }
    }

    fn visibilities(&self, ctx: &NodeCtx<'_>) -> Vec<f64> {
        self.table
            .neighbors()
            .iter()
            .map(|&n| visibility(ctx.initial_energy, ctx.residual(n), ctx.params.epsilon_fraction))
            .collect()
    }

    /// Table value of neighbor `n` towards `d` (0 if unknown); data follows it.
    pub fn trail(&self, n: NodeId, d: NodeId) -> f64 {
        self.table.get(n, d).unwrap_or(0.0)
    }

    fn select(&mut self, ctx: &mut NodeCtx<'_>, ant: &Ant) -> Option<NodeId> {
        self.ensure_column(ant.dest);
        let vis = self.visibilities(ctx);
        let tau = self.table.column(ant.dest)?;
        let excluded: Vec<bool> = self.table.neighbors().iter().map(|n| ant.in_memory(*n)).collect();
        let (alpha, beta) = (ctx.params.alpha, ctx.params.beta);
        eeabr_select_next(ctx.rng, tau, &vis, &excluded, alpha, beta).map(|i| self.table.neighbors()[i])
    }

    fn next_id(&mut self) -> AntId {
        let id = AntId {
            source: self.node,
            seq: self.seq,
        };
        self.seq += 1;
        id
    }

    pub fn launch(&mut self, ctx: &mut NodeCtx<'_>) {
        if ctx.is_sink() {
            return;
        }
        if self.flavor == Flavor::Improved
            && !ieeabr_admit(ctx.live_forward_ants, ctx.node_count, ctx.params.ant_cap_multiplier)
        {
            ctx.note(Note::AntDeferred);
            return;
        }
        let mut ant = Ant::new(self.next_id(), AntKind::Forward, ctx.sink, Some(ANT_MEMORY), ctx.now);
        self.cache.record_ant(ant.id, None, ctx.now);
        ant.sample_energy(ctx.residual(self.node));
        ctx.note(Note::AntLaunched {
            id: ant.id,
            kind: ant.kind,
        });
        self.step(ctx, ant);
    }

    /// Choose the next hop, remember this node and send.
    fn step(&mut self, ctx: &mut NodeCtx<'_>, mut ant: Ant) {
        match self.select(ctx, &ant) {
            Some(next) => {
                self.cache.set_forward(ant.id, next);
                ant.remember(self.node);
                ctx.send(next, Packet::Ant(ant));
            }
            None => ctx.drop_ant(&ant, DropCause::DeadEnd),
        }
    }

    /// A forward ant arrived from `from`.
    pub fn receive_forward(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, mut ant: Ant) {
        if self.cache.record_ant(ant.id, Some(from), ctx.now) == Admission::LoopDetected {
            ctx.drop_ant(&ant, DropCause::Loop);
            return;
        }
        if ctx.is_sink() {
            let c = ctx.initial_energy;
            let p = ctx.params;
            ant.delta_tau = eeabr_delta_tau(c, ant.e_min, ant.e_avg(), f64::from(ant.hops), p.delta_tau_max);
            ant.kind = AntKind::Backward;
            ant.back_hops = 0;
            ant.memory.clear();
            if ctx.is_neighbor(from) {
                ctx.send(from, Packet::Ant(ant));
            } else {
                ctx.drop_ant(&ant, DropCause::LinkBroken);
            }
            return;
        }
        ant.sample_energy(ctx.residual(self.node));
        if ant.hops as usize > 2 * ctx.node_count {
            ctx.drop_ant(&ant, DropCause::TooLong);
            return;
        }
        self.step(ctx, ant);
    }

    pub fn receive_backward(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, mut ant: Ant) {
        ant.back_hops += 1;
        self.deposit(ctx, from, ant.dest, ant.delta_tau, ant.back_hops);
        if ant.id.source == self.node {
            self.cache.remove(ant.id);
            ctx.note(Note::AntCompleted { id: ant.id });
            return;
        }
        let previous = self.cache.lookup(ant.id, ctx.now).and_then(|r| r.previous);
        let Some(previous) = previous else {
            ctx.drop_ant(&ant, DropCause::CacheMiss);
            return;
        };
        self.cache.remove(ant.id);
        if !ctx.is_neighbor(previous) {
            ctx.drop_ant(&ant, DropCause::LinkBroken);
            return;
        }
        ctx.send(previous, Packet::Ant(ant));
    }

    /// Reinforce the link towards `via`; every other entry of the column evaporates.
    fn deposit(&mut self, ctx: &NodeCtx<'_>, via: NodeId, d: NodeId, dtau: f64, bd: u32) {
        self.ensure_column(d);
        let Some(s) = self.table.position(via) else {
            return;
        };
        let (rho, phi) = (ctx.params.rho, ctx.params.phi);
        let flavor = self.flavor;
        if let Some(col) = self.table.column_mut(d) {
            for (i, tau) in col.iter_mut().enumerate() {
                *tau = if i == s {
                    eeabr_update_trail(*tau, dtau, f64::from(bd), rho, phi)
                } else {
                    (1.0 - rho) * *tau
                };
            }
            if flavor == Flavor::Improved {
                normalize_column(col);
            }
        }
    }

    pub fn neighbors_changed(&mut self, added: &[NodeId], removed: &[NodeId]) {
        match self.flavor {
            Flavor::Plain => {
                for &n in removed {
                    self.table.remove_neighbor(n);
                }
                for &n in added {
                    self.table.add_neighbor(n, |_, len| 1.0 / len as f64);
                }
            }
            Flavor::Improved => {
                for &n in removed {
                    let Some(m) = self.table.position(n) else {
                        continue;
                    };
                    let dests: Vec<NodeId> = self.table.destinations().collect();
                    let mut stranded = Vec::new();
                    for d in dests {
                        if let Some(col) = self.table.column_mut(d) {
                            if ieeabr_link_failure(col, m).is_err() {
                                stranded.push(d);
                            }
                        }
                    }
                    self.table.remove_neighbor(n);
                    for d in stranded {
                        let col = uniform_column(self.table.neighbors().len());
                        self.table.set_column(d, col);
                    }
                }
                for &n in added {
                    self.table.add_neighbor(n, |col, len| {
                        let v = 1.0 / len as f64;
                        col.iter_mut().for_each(|x| *x *= 1.0 - v);
                        v
                    });
                }
                // A destination that just became a neighbor gets the biased start.
                let dests: Vec<NodeId> = self.table.destinations().collect();
                for d in dests {
                    if added.contains(&d) {
                        let col = self.initial_column(d);
                        self.table.set_column(d, col);
                    }
                }
            }
        }
    }

    pub fn sweep(&mut self, now: f64) {
        self.cache.purge(now);
    }
}
