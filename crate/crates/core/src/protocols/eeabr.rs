use super::energy_aware::{EnergyAwareCore, Flavor};
use super::{forward_data, NodeCtx, RoutingProtocol};
use crate::geom::NodeId;
use crate::routing::{Ant, AntKind, DataPacket, RoutingTable};

/// Energy-efficient ant routing: selection weighs pheromone by neighbor
/// residual energy, deposits depend on path energy and length.
#[derive(Debug, Clone)]
pub struct Eeabr {
    core: EnergyAwareCore,
}

impl Eeabr {
    pub fn new(node: NodeId, neighbors: &[NodeId]) -> Self {
        Self {
            core: EnergyAwareCore::new(node, neighbors, Flavor::Plain),
        }
    }
}

impl RoutingProtocol for Eeabr {
    fn name(&self) -> &'static str {
        "EEABR"
    }

    fn on_start(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.start(ctx);
    }

    fn on_ant_tick(&mut self, ctx: &mut NodeCtx<'_>) {
        self.core.launch(ctx);
    }

    fn on_data(&mut self, ctx: &mut NodeCtx<'_>, data: DataPacket) {
        let d = ctx.sink;
        let core = &self.core;
        forward_data(ctx, data, |n| core.trail(n, d));
    }

    fn on_ant(&mut self, ctx: &mut NodeCtx<'_>, from: NodeId, ant: Ant) {
        match ant.kind {
            AntKind::Forward => self.core.receive_forward(ctx, from, ant),
            AntKind::Backward => self.core.receive_backward(ctx, from, ant),
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
