use serde::{Deserialize, Serialize};

use crate::geom::NodeId;
use crate::kernel::SimTime;
use crate::phy::FrameKind;

/// Unique ant identity: launching node plus its sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AntId {
    pub source: NodeId,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AntKind {
    Forward,
    Backward,
    Data,
}

/// A visited node and the time the ant reached it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathHop {
    pub node: NodeId,
    pub time: SimTime,
}

/// Identity of one application event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataId {
    pub source: NodeId,
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: DataId,
    pub created: SimTime,
    /// Nodes already traversed; never revisited.
    pub visited: Vec<NodeId>,
}

/// On-air sizes. Ant memory and path entries add `entry_bytes` each.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSizes {
    pub ant_bytes: u32,
    pub data_bytes: u32,
    pub entry_bytes: u32,
}

impl Default for FrameSizes {
    fn default() -> Self {
        Self {
            ant_bytes: 20,
            data_bytes: 50,
            entry_bytes: 2,
        }
    }
}

impl FrameSizes {
    pub fn data_bits(&self) -> u32 {
        self.data_bytes * 8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ant {
    pub id: AntId,
    pub kind: AntKind,
    pub dest: NodeId,
    /// Bounded list of recently visited nodes; `None` bound keeps everything.
    pub memory: Vec<NodeId>,
    pub memory_bound: Option<usize>,
    /// Full timed path, kept only by path-retracing protocols.
    pub path: Vec<PathHop>,
    /// Nodes whose energy was sampled (N_j).
    pub hops: u32,
    pub e_min: f64,
    pub e_sum: f64,
    pub t_launch: SimTime,
    /// Pheromone to deposit on the way back.
    pub delta_tau: f64,
    /// Nodes visited by the backward ant so far (Bd).
    pub back_hops: u32,
    /// Index into `path` of the node the backward ant is heading to.
    pub back_index: usize,
    /// Piggybacked event (data ants).
    pub data: Option<DataPacket>,
}

impl Ant {
    pub fn new(id: AntId, kind: AntKind, dest: NodeId, memory_bound: Option<usize>, now: SimTime) -> Self {
        Self {
            id,
            kind,
            dest,
            memory: Vec::new(),
            memory_bound,
            path: Vec::new(),
            hops: 0,
            e_min: f64::INFINITY,
            e_sum: 0.0,
            t_launch: now,
            delta_tau: 0.0,
            back_hops: 0,
            back_index: 0,
            data: None,
        }
    }

    /// Push `node` into the bounded memory, evicting the oldest entry.
    pub fn remember(&mut self, node: NodeId) {
        self.memory.push(node);
        if let Some(bound) = self.memory_bound {
            while self.memory.len() > bound {
                self.memory.remove(0);
            }
        }
    }

    pub fn in_memory(&self, node: NodeId) -> bool {
        self.memory.contains(&node)
    }

    pub fn on_path(&self, node: NodeId) -> bool {
        self.path.iter().any(|h| h.node == node)
    }

    /// Record the residual energy of a visited node.
    pub fn sample_energy(&mut self, residual: f64) {
        self.hops += 1;
        self.e_min = self.e_min.min(residual);
        self.e_sum += residual;
    }

    pub fn e_avg(&self) -> f64 {
        if self.hops == 0 {
            0.0
        } else {
            self.e_sum / self.hops as f64
        }
    }

    pub fn frame_kind(&self) -> FrameKind {
        match self.kind {
            AntKind::Forward => FrameKind::ForwardAnt,
            AntKind::Backward => FrameKind::BackwardAnt,
            AntKind::Data => FrameKind::DataAnt,
        }
    }

    pub fn size_bits(&self, sizes: &FrameSizes) -> u32 {
        let entries = (self.memory.len() + self.path.len()) as u32;
        let mut bytes = sizes.ant_bytes + sizes.entry_bytes * entries;
        if self.data.is_some() {
            bytes += sizes.data_bytes;
        }
        bytes * 8
    }
}

/// Everything that travels in a frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Ant(Ant),
    Data(DataPacket),
}

impl Packet {
    pub fn frame_kind(&self) -> FrameKind {
        match self {
            Packet::Ant(a) => a.frame_kind(),
            Packet::Data(_) => FrameKind::Data,
        }
    }

    pub fn size_bits(&self, sizes: &FrameSizes) -> u32 {
        match self {
            Packet::Ant(a) => a.size_bits(sizes),
            Packet::Data(_) => sizes.data_bits(),
        }
    }

    pub fn ant(&self) -> Option<&Ant> {
        match self {
            Packet::Ant(a) => Some(a),
            Packet::Data(_) => None,
        }
    }

    /// Data event carried, directly or piggybacked.
    pub fn data(&self) -> Option<&DataPacket> {
        match self {
            Packet::Ant(a) => a.data.as_ref(),
            Packet::Data(d) => Some(d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ant(bound: Option<usize>) -> Ant {
        Ant::new(
            AntId {
                source: NodeId(0),
                seq: 0,
            },
            AntKind::Forward,
            NodeId(9),
            bound,
            0.0,
        )
    }

    #[test]
    fn two_node_memory_evicts_oldest() {
        let mut a = ant(Some(2));
        for i in 1..=4 {
            a.remember(NodeId(i));
        }
        assert_eq!(a.memory, vec![NodeId(3), NodeId(4)]);
    }

    #[test]
    fn energy_statistics() {
        let mut a = ant(Some(2));
        for e in [29.0, 27.0, 28.0] {
            a.sample_energy(e);
        }
        assert_eq!(a.hops, 3);
        assert_eq!(a.e_min, 27.0);
        assert!(a.e_min <= a.e_avg());
    }

    #[test]
    fn frame_sizes() {
        let s = FrameSizes::default();
        let mut a = ant(Some(2));
        assert_eq!(a.size_bits(&s), 160);
        a.remember(NodeId(1));
        a.remember(NodeId(2));
        assert_eq!(a.size_bits(&s), 192);
        assert_eq!(Packet::Data(DataPacket { id: DataId { source: NodeId(1), seq: 0 }, created: 0.0, visited: vec![] }).size_bits(&s), 400);
    }
}
