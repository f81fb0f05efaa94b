use super::energy_aware::{EnergyAwareCore, Flavor};
use super::{forward_data, NodeCtx, RoutingProtocol};
use crate::geom::NodeId;
use crate::routing::{Ant, AntKind, DataPacket, RoutingTable};

/// EEABR plus destination-biased table start, a cap of `multiplier * k`
/// live forward ants and proportional redistribution when a link is lost.
#[derive(Debug, Clone)]
pub struct Ieeabr {
    core: EnergyAwareCore,
}

impl Ieeabr {
    pub fn new(node: NodeId, neighbors: &[NodeId]) -> Self {
        Self {
            core: EnergyAwareCore::new(node, neighbors, Flavor::Improved),
        }
    }
}

impl RoutingProtocol for Ieeabr {
    fn name(&self) -> &'static str {
        "IEEABR"
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
