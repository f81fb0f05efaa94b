use super::antnet::{AntNetCore, ColumnInit};
use super::{NodeCtx, RoutingProtocol};
use crate::geom::NodeId;
use crate::routing::{Ant, AntKind, DataPacket, RoutingTable};

/// Flooded piggyback: every event travels as a flooded data ant that
/// records its path; each copy reaching the sink sends a backward ant.
#[derive(Debug, Clone)]
pub struct Fp {
    core: AntNetCore,
}

impl Fp {
    pub fn new(node: NodeId, neighbors: &[NodeId]) -> Self {
        Self {
            core: AntNetCore::new(node, neighbors, ColumnInit::Uniform),
        }
    }
}

impl RoutingProtocol for Fp {
    fn name(&self) -> &'static str {
        "FP"
    }

    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.start(ctx);
    }

    fn on_ant_tick(&mut self, _ctx: &mut NodeCtx<'_>) {}

    fn on_data(&mut self, ctx: &mut NodeCtx<'_>, data: DataPacket) {
        if ctx.is_sink() {
            return;
        }
        let mut ant = self.core.new_ant(ctx, AntKind::Data);
        ant.data = Some(data);
        self.core.launch_flood(ctx, ant);
    }

    fn on_ant(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, ant: Ant) {
        match ant.kind {
            AntKind::Data => self.core.flood_receive(ctx, from, ant),
            AntKind::Backward => self.core.on_backward(ctx, from, ant),
            AntKind::Forward => {}
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

    fn launches_ants(&self) -> bool {
        false
    }
}
