//! Deployments, sink motion and traffic.

mod mobility;
mod topology;
mod traffic;

pub use mobility::SinkTrajectory;
pub use topology::{density_side, nearest_node, Layout, Topology, REFERENCE_NODES, REFERENCE_SIDE};
pub use traffic::TrafficModel;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Static,
    Dynamic,
}

impl ScenarioKind {
    /// Battery budget per node used when none is configured.
    pub fn default_energy(self) -> f64 {
        match self {
            ScenarioKind::Static => 30.0,
            ScenarioKind::Dynamic => 60.0,
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(ScenarioKind::Static),
            "dynamic" => Ok(ScenarioKind::Dynamic),
            other => Err(ScenarioError::Invalid(format!("unknown scenario `{other}`"))),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::Static => "static",
            ScenarioKind::Dynamic => "dynamic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("grid layout needs a perfect square node count, got {0}")]
    NotSquare(usize),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("no connected topology after {attempts} attempts")]
    Disconnected { attempts: u32 },
    #[error("{0}")]
    Invalid(String),
}
