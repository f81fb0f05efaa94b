use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::geom::{NodeId, Point};
use crate::kernel::RandomStream;

/// Reference deployment: 49 nodes on a 140 m square.
pub const REFERENCE_NODES: f64 = 49.0;
pub const REFERENCE_SIDE: f64 = 140.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    Grid,
    RandomSquare,
}

impl std::str::FromStr for Layout {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(Layout::Grid),
            "random-square" | "random" => Ok(Layout::RandomSquare),
            other => Err(ScenarioError::Invalid(format!("unknown layout `{other}`"))),
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Layout::Grid => "grid",
            Layout::RandomSquare => "random-square",
        })
    }
}

/// Side of the square holding `n` nodes at the reference density.
pub fn density_side(n: usize) -> f64 {
    REFERENCE_SIDE * (n as f64 / REFERENCE_NODES).sqrt()
}

/// Node positions, sink and the radius-based neighbor relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<Point>,
    side: f64,
    sink: NodeId,
    tx_radius: f64,
    neighbors: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Build from explicit positions; neighbors are every pair within `tx_radius`.
    pub fn from_positions(positions: Vec<Point>, side: f64, sink: NodeId, tx_radius: f64) -> Result<Self, ScenarioError> {
        if positions.len() < 2 {
            return Err(ScenarioError::TooFewNodes(positions.len()));
        }
        if sink.index() >= positions.len() {
            return Err(ScenarioError::Invalid(format!("sink {sink} out of range")));
        }
        let mut t = Self {
            neighbors: vec![Vec::new(); positions.len()],
            positions,
            side,
            sink,
            tx_radius,
        };
        t.rebuild_neighbors();
        Ok(t)
    }

    /// `sqrt(n) x sqrt(n)` grid with the given spacing; the sink is the corner at the origin.
    pub fn grid(n: usize, spacing: f64, tx_radius: f64) -> Result<Self, ScenarioError> {
        let s = (n as f64).sqrt().round() as usize;
        if s * s != n {
            return Err(ScenarioError::NotSquare(n));
        }
        if !(spacing > 0.0) {
            return Err(ScenarioError::Invalid("grid spacing must be positive".into()));
        }
        let positions = (0..n)
            .map(|i| Point::new((i % s) as f64 * spacing, (i / s) as f64 * spacing))
            .collect();
        Self::from_positions(positions, (s - 1) as f64 * spacing, NodeId::new(0), tx_radius)
    }

    /// Uniform placement on a density-preserving square, redrawn until connected.
    /// `adjust` may move nodes (e.g. place a mobile sink) before the check.
    pub fn random_square<F>(
        n: usize,
        tx_radius: f64,
        max_attempts: u32,
        rng: &mut RandomStream,
        mut adjust: F,
    ) -> Result<Self, ScenarioError>
    where
        F: FnMut(&mut Topology),
    {
        if n < 2 {
            return Err(ScenarioError::TooFewNodes(n));
        }
        let side = density_side(n);
        for _ in 0..max_attempts {
            let positions: Vec<Point> = (0..n)
                .map(|_| Point::new(rng.uniform() * side, rng.uniform() * side))
                .collect();
            let sink = nearest_to(&positions, Point::new(0.0, 0.0));
            let mut t = Self::from_positions(positions, side, sink, tx_radius)?;
            adjust(&mut t);
            if t.is_connected() {
                return Ok(t);
            }
        }
        Err(ScenarioError::Disconnected { attempts: max_attempts })
    }

    fn rebuild_neighbors(&mut self) {
        let n = self.positions.len();
        for list in &mut self.neighbors {
            list.clear();
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if self.positions[i].distance(&self.positions[j]) <= self.tx_radius {
                    self.neighbors[i].push(NodeId::new(j));
                    self.neighbors[j].push(NodeId::new(i));
                }
            }
        }
        for list in &mut self.neighbors {
            list.sort();
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn set_sink(&mut self, sink: NodeId) {
        self.sink = sink;
    }

    pub fn tx_radius(&self) -> f64 {
        self.tx_radius
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, node: NodeId) -> Point {
        self.positions[node.index()]
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.neighbors[node.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len()).map(NodeId::new)
    }

    /// Move one node and update its links. Returns the neighbors gained and lost.
    pub fn move_node(&mut self, node: NodeId, to: Point) -> (Vec<NodeId>, Vec<NodeId>) {
        let i = node.index();
        self.positions[i] = to;
        let old = std::mem::take(&mut self.neighbors[i]);
        let new: Vec<NodeId> = self
            .nodes()
            .filter(|&j| j != node && self.positions[j.index()].distance(&to) <= self.tx_radius)
            .collect();
        let added: Vec<NodeId> = new.iter().copied().filter(|j| !old.contains(j)).collect();
        let removed: Vec<NodeId> = old.iter().copied().filter(|j| !new.contains(j)).collect();
        for &j in &added {
            let list = &mut self.neighbors[j.index()];
            list.push(node);
            list.sort();
        }
        for &j in &removed {
            self.neighbors[j.index()].retain(|&k| k != node);
        }
        self.neighbors[i] = new;
        (added, removed)
    }

    /// Cut every link of `node` (it died). Returns its former neighbors.
    pub fn detach(&mut self, node: NodeId) -> Vec<NodeId> {
        let old = std::mem::take(&mut self.neighbors[node.index()]);
        for &j in &old {
            self.neighbors[j.index()].retain(|&k| k != node);
        }
        old
    }

    pub fn is_connected(&self) -> bool {
        let n = self.positions.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in &self.neighbors[i] {
                if !seen[j.index()] {
                    seen[j.index()] = true;
                    count += 1;
                    stack.push(j.index());
                }
            }
        }
        count == n
    }

    /// Hop distance from every node to `target` (None if unreachable).
    pub fn hop_distances(&self, target: NodeId) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[target.index()] = Some(0);
        queue.push_back(target);
        while let Some(i) = queue.pop_front() {
            let d = dist[i.index()].expect("visited");
            for &j in self.neighbors(i) {
                if dist[j.index()].is_none() {
                    dist[j.index()] = Some(d + 1);
                    queue.push_back(j);
                }
            }
        }
        dist
    }
}

fn nearest_to(positions: &[Point], target: Point) -> NodeId {
    let (idx, _) = positions
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance(&target).total_cmp(&b.1.distance(&target)))
        .expect("non-empty");
    NodeId::new(idx)
}

/// Node nearest to a point, ties to the lower id.
pub fn nearest_node(positions: &[Point], target: Point) -> NodeId {
    nearest_to(positions, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::StreamId;

    #[test]
    fn grid_3x3_corner_has_three_neighbors() {
        let t = Topology::grid(9, 20.0, 35.0).unwrap();
        assert_eq!(t.neighbors(NodeId::new(0)).len(), 3);
        // centre sees all 8 (diagonal 28.3 m)
        assert_eq!(t.neighbors(NodeId::new(4)).len(), 8);
        assert_eq!(t.sink(), NodeId::new(0));
        assert!(t.is_connected());
    }

    #[test]
    fn grid_2x2_all_pairs() {
        let t = Topology::grid(4, 20.0, 35.0).unwrap();
        for n in t.nodes() {
            assert_eq!(t.neighbors(n).len(), 3);
        }
    }

    #[test]
    fn non_square_grid_rejected() {
        assert!(matches!(Topology::grid(10, 20.0, 35.0), Err(ScenarioError::NotSquare(10))));
    }

    #[test]
    fn density_sides() {
        assert_eq!(density_side(49), 140.0);
        assert!((density_side(100) - 200.0).abs() < 1e-12);
        assert!((density_side(9) - 60.0).abs() < 1e-12);
    }

    #[test]
    fn random_square_is_connected_and_bounded() {
        let mut rng = RandomStream::new(11, StreamId::Topology);
        let t = Topology::random_square(49, 35.0, 1000, &mut rng, |_| {}).unwrap();
        assert!(t.is_connected());
        assert!(t.positions().iter().all(|p| p.x >= 0.0 && p.x <= 140.0 && p.y >= 0.0 && p.y <= 140.0));
    }

    #[test]
    fn impossible_connectivity_errors() {
        let mut rng = RandomStream::new(1, StreamId::Topology);
        let r = Topology::random_square(49, 1.0, 5, &mut rng, |_| {});
        assert!(matches!(r, Err(ScenarioError::Disconnected { attempts: 5 })));
    }

    #[test]
    fn neighbor_map_symmetric_and_consistent() {
        let mut rng = RandomStream::new(5, StreamId::Topology);
        let t = Topology::random_square(36, 35.0, 1000, &mut rng, |_| {}).unwrap();
        for a in t.nodes() {
            for b in t.nodes() {
                if a == b {
                    continue;
                }
                let linked = t.neighbors(a).contains(&b);
                assert_eq!(linked, t.neighbors(b).contains(&a));
                assert_eq!(linked, t.position(a).distance(&t.position(b)) <= 35.0);
            }
        }
    }

    #[test]
    fn move_node_reports_link_changes() {
        let mut t = Topology::grid(9, 20.0, 35.0).unwrap();
        let (added, removed) = t.move_node(NodeId::new(0), Point::new(40.0, 40.0));
        assert!(added.contains(&NodeId::new(8)));
        assert!(removed.is_empty() || !removed.contains(&NodeId::new(4)));
        assert!(t.neighbors(NodeId::new(8)).contains(&NodeId::new(0)));
    }

    #[test]
    fn hop_distances_on_grid() {
        let t = Topology::grid(9, 20.0, 35.0).unwrap();
        let d = t.hop_distances(NodeId::new(0));
        assert_eq!(d[8], Some(2));
        assert_eq!(d[4], Some(1));
    }
}
