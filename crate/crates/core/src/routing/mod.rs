//! Shared routing machinery: tables, ants, per-node ant caches and trip models.

mod ant;
mod cache;
mod table;
mod trip;

pub use ant::{Ant, AntId, AntKind, DataId, DataPacket, FrameSizes, Packet, PathHop};
pub use cache::{Admission, AntCache, CacheRecord};
pub use table::{column_is_stochastic, normalize_column, uniform_column, RoutingTable, TableMode, COLUMN_TOLERANCE};
pub use trip::{z_factor, TripModel};
