use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::geom::NodeId;

/// Normalisation tolerance for probability columns.
pub const COLUMN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    /// Each destination column is a probability distribution over neighbors.
    Probability,
    /// Entries are non-negative pheromone masses.
    Pheromone,
}

/// Neighbor x destination matrix. Destination columns are created on first use.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    mode: TableMode,
    neighbors: Vec<NodeId>,
    columns: BTreeMap<NodeId, Vec<f64>>,
}

impl RoutingTable {
    pub fn new(mode: TableMode, mut neighbors: Vec<NodeId>) -> Self {
        neighbors.sort();
        neighbors.dedup();
        Self {
            mode,
            neighbors,
            columns: BTreeMap::new(),
        }
    }

    pub fn mode(&self) -> TableMode {
        self.mode
    }

    pub fn neighbors(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn position(&self, n: NodeId) -> Option<usize> {
        self.neighbors.binary_search(&n).ok()
    }

    pub fn destinations(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.columns.keys().copied()
    }

    pub fn column(&self, d: NodeId) -> Option<&[f64]> {
        self.columns.get(&d).map(Vec::as_slice)
    }

    pub fn column_mut(&mut self, d: NodeId) -> Option<&mut Vec<f64>> {
        self.columns.get_mut(&d)
    }

    /// Column for `d`, creating it with `init(neighbors)` if absent.
    pub fn ensure_column<F>(&mut self, d: NodeId, init: F) -> &mut Vec<f64>
    where
        F: FnOnce(&[NodeId]) -> Vec<f64>,
    {
        let neighbors = &self.neighbors;
        self.columns.entry(d).or_insert_with(|| {
            let col = init(neighbors);
            assert_eq!(col.len(), neighbors.len(), "column length must match neighbor count");
            col
        })
    }

    /// Replace the column for `d` outright.
    pub fn set_column(&mut self, d: NodeId, col: Vec<f64>) {
        assert_eq!(col.len(), self.neighbors.len(), "column length must match neighbor count");
        self.columns.insert(d, col);
    }

    pub fn get(&self, n: NodeId, d: NodeId) -> Option<f64> {
        let i = self.position(n)?;
        self.columns.get(&d).map(|c| c[i])
    }

    pub fn set(&mut self, n: NodeId, d: NodeId, value: f64) -> bool {
        match (self.position(n), self.columns.get_mut(&d)) {
            (Some(i), Some(col)) => {
                col[i] = value;
                true
            }
            _ => false,
        }
    }

    /// True iff column `d` is a distribution within [`COLUMN_TOLERANCE`].
    pub fn normalize_check(&self, d: NodeId) -> bool {
        self.columns.get(&d).is_some_and(|c| column_is_stochastic(c))
    }

    /// Rescale column `d` to sum to one. A zero column becomes uniform.
    pub fn normalize(&mut self, d: NodeId) {
        if let Some(col) = self.columns.get_mut(&d) {
            normalize_column(col);
        }
    }

    /// Add a neighbor; `value(existing_column, new_len)` returns its entry per column
    /// and may rescale the rest.
    pub fn add_neighbor<F>(&mut self, n: NodeId, mut value: F) -> bool
    where
        F: FnMut(&mut Vec<f64>, usize) -> f64,
    {
        let at = match self.neighbors.binary_search(&n) {
            Ok(_) => return false,
            Err(at) => at,
        };
        self.neighbors.insert(at, n);
        let len = self.neighbors.len();
        for col in self.columns.values_mut() {
            let v = value(col, len);
            col.insert(at, v);
        }
        true
    }

    /// Remove a neighbor, returning `(destination, old entry)` for every column.
    pub fn remove_neighbor(&mut self, n: NodeId) -> Vec<(NodeId, f64)> {
        let Some(at) = self.position(n) else {
            return Vec::new();
        };
        self.neighbors.remove(at);
        self.columns
            .iter_mut()
            .map(|(d, col)| (*d, col.remove(at)))
            .collect()
    }

    /// Table as CSV: one row per neighbor, one column per destination.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neighbor");
        for d in self.columns.keys() {
            let _ = write!(out, ",{d}");
        }
        out.push('\n');
        for (i, n) in self.neighbors.iter().enumerate() {
            let _ = write!(out, "{n}");
            for col in self.columns.values() {
                let _ = write!(out, ",{}", col[i]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn column_is_stochastic(col: &[f64]) -> bool {
    if col.is_empty() {
        return false;
    }
    let sum: f64 = col.iter().sum();
    col.iter().all(|&v| v >= 0.0) && (sum - 1.0).abs() <= COLUMN_TOLERANCE
}

pub fn normalize_column(col: &mut [f64]) {
    if col.is_empty() {
        return;
    }
    let sum: f64 = col.iter().sum();
    if sum > 0.0 {
        for v in col.iter_mut() {
            *v /= sum;
        }
    } else {
        let u = 1.0 / col.len() as f64;
        col.iter_mut().for_each(|v| *v = u);
    }
}

pub fn uniform_column(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn fresh_uniform_column_is_normalized() {
        let mut t = RoutingTable::new(TableMode::Probability, ids(&[3, 1, 2]));
        t.ensure_column(NodeId(0), |n| uniform_column(n.len()));
        assert!(t.normalize_check(NodeId(0)));
        assert_eq!(t.neighbors(), ids(&[1, 2, 3]).as_slice());
    }

    #[test]
    fn corrupted_cell_fails_check() {
        let mut t = RoutingTable::new(TableMode::Probability, ids(&[1, 2]));
        t.ensure_column(NodeId(0), |n| uniform_column(n.len()));
        t.set(NodeId(1), NodeId(0), 0.9);
        assert!(!t.normalize_check(NodeId(0)));
        t.normalize(NodeId(0));
        assert!(t.normalize_check(NodeId(0)));
    }

    #[test]
    fn add_and_remove_neighbor() {
        let mut t = RoutingTable::new(TableMode::Pheromone, ids(&[1, 3]));
        t.ensure_column(NodeId(0), |_| vec![0.2, 0.4]);
        assert!(t.add_neighbor(NodeId(2), |_, _| 0.7));
        assert_eq!(t.column(NodeId(0)).unwrap(), &[0.2, 0.7, 0.4]);
        let removed = t.remove_neighbor(NodeId(1));
        assert_eq!(removed, vec![(NodeId(0), 0.2)]);
        assert_eq!(t.get(NodeId(3), NodeId(0)), Some(0.4));
    }

    #[test]
    fn csv_dump() {
        let mut t = RoutingTable::new(TableMode::Probability, ids(&[1, 2]));
        t.ensure_column(NodeId(0), |_| vec![0.25, 0.75]);
        assert_eq!(t.to_csv(), "neighbor,0\n1,0.25\n2,0.75\n");
    }
}
