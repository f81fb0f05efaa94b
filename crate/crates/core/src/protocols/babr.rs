use super::antnet::{AntNetCore, ColumnInit};
use super::{forward_data, NodeCtx, RoutingProtocol};
use crate::geom::NodeId;
use crate::routing::{Ant, AntKind, DataPacket, RoutingTable};

/// Basic ant routing: unicast forward ants sample the probability table,
/// backward ants retrace the path and reinforce by trip time.
#[derive(Debug, Clone)]
pub struct Babr {
    core: AntNetCore,
}

impl Babr {
    pub fn new(node: NodeId, neighbors: &[NodeId]) -> Self {
        Self {
            core: AntNetCore::new(node, neighbors, ColumnInit::Uniform),
        }
    }
}

impl RoutingProtocol for Babr {
    fn name(&self) -> &'static str {
        "BABR"
    }

    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.start(ctx);
    }

    fn on_ant_tick(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.launch_unicast(ctx);
    }

    fn on_data(&mut self, ctx: &mut NodeCtx<'_>, data: DataPacket) {
        let d = ctx.sink;
        let core = &self.core;
        forward_data(ctx, data, |n| core.probability(n, d));
    }

    fn on_ant(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, ant: Ant) {
        match ant.kind {
            AntKind::Forward => self.core.forward_unicast(ctx, ant),
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
