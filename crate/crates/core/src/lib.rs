//! Discrete-event simulator for ant-colony routing in wireless sensor networks.

pub mod config;
pub mod geom;
pub mod harness;
pub mod kernel;
pub mod phy;
pub mod protocols;
pub mod routing;
pub mod scenario;
pub mod sim;

pub use config::SimConfig;
pub use geom::{NodeId, Point};
pub use sim::{run_config, RunReport, SimError, Simulation};
