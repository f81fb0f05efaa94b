//! Machinery shared by the path-retracing protocols (BABR, SC, FF, FP):
//! probability tables, trip models, full-path ants and flood control.

use std::collections::{BTreeMap, BTreeSet};

use super::rules::{babr_reinforce, babr_reinforcement_factor, ff_should_broadcast, sc_initial};
use super::{sample_index, DropCause, NodeCtx, Note};
use crate::geom::NodeId;
use crate::routing::{
    uniform_column, Admission, Ant, AntCache, AntId, AntKind, Packet, PathHop, RoutingTable, TableMode,
    TripModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ColumnInit {
    Uniform,
    /// Distance-sensing initial distribution.
    Sensed,
}

#[derive(Debug, Clone)]
pub(crate) struct AntNetCore {
    pub node: NodeId,
    pub table: RoutingTable,
    trips: BTreeMap<NodeId, TripModel>,
    seq: u64,
    init: ColumnInit,
    seen: AntCache,
    rebroadcasting: BTreeSet<AntId>,
}

impl AntNetCore {
    pub fn new(node: NodeId, neighbors: &[NodeId], init: ColumnInit) -> Self {
        Self {
            node,
            table: RoutingTable::new(TableMode::Probability, neighbors.to_vec()),
            trips: BTreeMap::new(),
            seq: 0,
            init,
            seen: AntCache::new(3.0),
            rebroadcasting: BTreeSet::new(),
        }
    }

    pub fn start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.seen = AntCache::new(ctx.params.cache_timeout);
        if !ctx.is_sink() {
            self.ensure_column(ctx, ctx.sink);
        }
    }

    fn next_id(&mut self) -> AntId {
        let id = AntId {
            source: self.node,
            seq: self.seq,
        };
        self.seq += 1;
        id
    }

    fn initial_column(&self, ctx: &NodeCtx<'_>, d: NodeId) -> Vec<f64> {
        let neighbors = self.table.neighbors();
        if neighbors.is_empty() {
            return Vec::new();
        }
        match self.init {
            ColumnInit::Uniform => uniform_column(neighbors.len()),
            ColumnInit::Sensed => {
                let target = ctx.positions[d.index()];
                let q: Vec<f64> = neighbors
                    .iter()
                    .map(|&n| if n == d { 0.0 } else { ctx.positions[n.index()].distance(&target) / ctx.tx_radius })
                    .collect();
                let c = vec![1.0; q.len()];
                sc_initial(&q, &c, ctx.params.sc_beta).expect("non-empty neighbor set")
            }
        }
    }

    fn ensure_column(&mut self, ctx: &NodeCtx<'_>, d: NodeId) {
        if self.table.column(d).is_none() {
            let col = self.initial_column(ctx, d);
            self.table.set_column(d, col);
        }
    }

    /// Selection probability of neighbor `n` towards `d` (0 if unknown).
    pub fn probability(&self, n: NodeId, d: NodeId) -> f64 {
        self.table.get(n, d).unwrap_or(0.0)
    }

    /// New ant whose path starts here.
    pub fn new_ant(&mut self, ctx: &NodeCtx<'_>, kind: AntKind) -> Ant {
        let mut ant = Ant::new(self.next_id(), kind, ctx.sink, None, ctx.now);
        ant.path.push(PathHop {
            node: self.node,
            time: ctx.now,
        });
        ant
    }

    /// Draw the next hop from the probability column, skipping nodes on the path.
    fn pick_next(&mut self, ctx: &mut NodeCtx<'_>, ant: &Ant) -> Option<NodeId> {
        self.ensure_column(ctx, ant.dest);
        let col = self.table.column(ant.dest)?;
        let neighbors = self.table.neighbors();
        let allowed: Vec<bool> = neighbors.iter().map(|n| !ant.on_path(*n)).collect();
        let weights: Vec<f64> = col
            .iter()
            .zip(&allowed)
            .map(|(p, ok)| if *ok { *p } else { 0.0 })
            .collect();
        if let Some(i) = sample_index(ctx.rng, &weights) {
            return Some(neighbors[i]);
        }
        let free: Vec<NodeId> = neighbors
            .iter()
            .zip(&allowed)
            .filter(|(_, ok)| **ok)
            .map(|(n, _)| *n)
            .collect();
        if free.is_empty() {
            None
        } else {
            Some(free[ctx.rng.int_inclusive(0, free.len() as u64 - 1) as usize])
        }
    }

    /// Launch a forward ant that walks the table hop by hop.
    pub fn launch_unicast(&mut self, ctx: &mut NodeCtx<'_>) {
        if ctx.is_sink() {
            return;
        }
        let ant = self.new_ant(ctx, AntKind::Forward);
        ctx.note(Note::AntLaunched {
            id: ant.id,
            kind: ant.kind,
        });
        match self.pick_next(ctx, &ant) {
            Some(next) => ctx.send(next, Packet::Ant(ant)),
            None => ctx.drop_ant(&ant, DropCause::DeadEnd),
        }
    }

    /// A unicast forward ant arrived here.
    pub fn forward_unicast(&mut self, ctx: &mut NodeCtx<'_>, mut ant: Ant) {
        if ctx.is_sink() {
            self.start_backward(ctx, ant);
            return;
        }
        if ant.on_path(self.node) {
            ctx.drop_ant(&ant, DropCause::Loop);
            return;
        }
        ant.path.push(PathHop {
            node: self.node,
            time: ctx.now,
        });
        if ant.path.len() > ctx.node_count {
            ctx.drop_ant(&ant, DropCause::TooLong);
            return;
        }
        match self.pick_next(ctx, &ant) {
            Some(next) => ctx.send(next, Packet::Ant(ant)),
            None => ctx.drop_ant(&ant, DropCause::DeadEnd),
        }
    }

    /// Broadcast a new flooded ant (forward or data) immediately.
    pub fn launch_flood(&mut self, ctx: &mut NodeCtx<'_>, ant: Ant) {
        self.seen.record_ant(ant.id, None, ctx.now);
        ctx.note(Note::AntLaunched {
            id: ant.id,
            kind: ant.kind,
        });
        ctx.broadcast(Packet::Ant(ant));
    }

    /// A flooded ant was heard from `from`.
    pub fn flood_receive(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, mut ant: Ant) {
        if ctx.is_sink() {
            self.start_backward(ctx, ant);
            return;
        }
        if self.seen.record_ant(ant.id, Some(from), ctx.now) == Admission::LoopDetected {
            if self.rebroadcasting.remove(&ant.id) {
                ctx.cancel_delayed(ant.id);
                ctx.note(Note::RebroadcastSuppressed { id: ant.id });
            }
            return;
        }
        ant.path.push(PathHop {
            node: self.node,
            time: ctx.now,
        });
        if ant.path.len() > ctx.node_count {
            ctx.drop_ant(&ant, DropCause::TooLong);
            return;
        }
        self.ensure_column(ctx, ant.dest);
        let col = self.table.column(ant.dest).unwrap_or(&[]);
        let uniform = col.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-12);
        let p_n = self.probability(from, ant.dest);
        if uniform || ff_should_broadcast(p_n, col.len()) {
            let delay = ctx.rng.uniform() * ctx.params.flood_delay;
            self.rebroadcasting.insert(ant.id);
            ctx.broadcast_delayed(delay, ant.id, Packet::Ant(ant));
        } else {
            ctx.note(Note::RebroadcastSuppressed { id: ant.id });
        }
    }

    /// Turn an ant that reached the sink into a backward ant retracing its path.
    pub fn start_backward(&mut self, ctx: &mut NodeCtx<'_>, mut ant: Ant) {
        ant.path.push(PathHop {
            node: self.node,
            time: ctx.now,
        });
        ant.kind = AntKind::Backward;
        ant.data = None;
        if ant.path.len() < 2 {
            ctx.drop_ant(&ant, DropCause::DeadEnd);
            return;
        }
        ant.back_index = ant.path.len() - 2;
        let next = ant.path[ant.back_index].node;
        if !ctx.is_neighbor(next) {
            ctx.drop_ant(&ant, DropCause::LinkBroken);
            return;
        }
        ctx.send(next, Packet::Ant(ant));
    }

    /// A backward ant arrived from `from`: update the trip model, reinforce, move on.
    pub fn on_backward(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, mut ant: Ant) {
        let Some(here) = ant.path.get(ant.back_index).copied() else {
            ctx.drop_ant(&ant, DropCause::DeadEnd);
            return;
        };
        if here.node != self.node {
            ctx.drop_ant(&ant, DropCause::DeadEnd);
            return;
        }
        let arrival = ant.path.last().expect("non-empty path").time;
        let trip = arrival - here.time;
        self.reinforce(ctx, from, ant.dest, trip);
        if ant.back_index == 0 {
            ctx.note(Note::AntCompleted { id: ant.id });
            return;
        }
        ant.back_index -= 1;
        let next = ant.path[ant.back_index].node;
        if !ctx.is_neighbor(next) {
            ctx.drop_ant(&ant, DropCause::LinkBroken);
            return;
        }
        ctx.send(next, Packet::Ant(ant));
    }

    fn reinforce(&mut self, ctx: &mut NodeCtx<'_>, via: NodeId, d: NodeId, trip: f64) {
        if !(trip > 0.0) {
            return;
        }
        let p = ctx.params;
        let model = self
            .trips
            .entry(d)
            .or_insert_with(|| TripModel::new(p.eta, p.window));
        model.update(trip);
        let Some(r) = babr_reinforcement_factor(model, trip, p.c1, p.c2, p.confidence) else {
            return;
        };
        self.ensure_column(ctx, d);
        let Some(f) = self.table.position(via) else {
            return;
        };
        if let Some(col) = self.table.column_mut(d) {
            babr_reinforce(col, f, r).expect("factor clamped to [0, 1]");
        }
    }

    /// Added neighbors enter at `1/N`, rescaling the rest; a removed
    /// neighbor's share is spread evenly over the survivors.
    pub fn neighbors_changed(&mut self, added: &[NodeId], removed: &[NodeId]) {
        for &n in removed {
            let lost = self.table.remove_neighbor(n);
            for (d, share) in lost {
                if let Some(col) = self.table.column_mut(d) {
                    if !col.is_empty() {
                        let add = share / col.len() as f64;
                        col.iter_mut().for_each(|v| *v += add);
                    }
                }
            }
        }
        for &n in added {
            self.table.add_neighbor(n, |col, len| {
                let v = 1.0 / len as f64;
                col.iter_mut().for_each(|x| *x *= 1.0 - v);
                v
            });
        }
    }

    pub fn sweep(&mut self, now: f64) {
        self.seen.purge(now);
        let seen = &self.seen;
        self.rebroadcasting.retain(|id| seen.lookup(*id, now).is_some());
    }
}
