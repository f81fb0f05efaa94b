use super::antnet::{AntNetCore, ColumnInit};
use super::{forward_data, NodeCtx, RoutingProtocol};
use crate::geom::NodeId;
use crate::routing::{Ant, AntKind, DataPacket, RoutingTable};

/// Flooded forward ants: broadcast with delayed, suppressible rebroadcasts.
#[derive(Debug, Clone)]
pub struct Ff {
    core: AntNetCore,
}

impl Ff {
    pub fn new(node: NodeId, neighbors: &[NodeId]) -> Self {
        Self {
            core: AntNetCore::new(node, neighbors, ColumnInit::Uniform),
        }
    }
}

impl RoutingProtocol for Ff {
    fn name(&self) -> &'static str {
        "FF"
    }

    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.start(ctx);
    }

    fn on_ant_tick(&mut self, ctx: &mut NodeCtx<'_>) {
        if ctx.is_sink() {
            return;
        }
        let ant = self.core.new_ant(ctx, AntKind::Forward);
        self.core.launch_flood(ctx, ant);
    }

    fn on_data(&mut self, ctx: &mut NodeCtx<'_>, data: DataPacket) {
        let d = ctx.sink;
        let core = &self.core;
        forward_data(ctx, data, |n| core.probability(n, d));
    }

    fn on_ant(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, ant: Ant) {
        match ant.kind {
            AntKind::Forward => self.core.flood_receive(ctx, from, ant),
            AntKind::Backward => self.core.on_backward(ctx, from, ant),
            AntKind::Data => {}
        }
    }

    fn on_neighbors_changed(&mut self, _ctx: &mut NodeCtx<'_>, added: &[NodeId], removed: &[NodeId]) {
        self.core.neighbors_changed(added, removed);
    }

    fn on_cache_sweep(&mut self, now: f64) {
        self.core.sweep(now);
    }

    fn table(&self) -> &RoutingTable {
        &self.core.table
    }
}
