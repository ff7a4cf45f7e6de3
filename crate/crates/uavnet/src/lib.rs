//! Planning and routing toolkit for UAV-assisted ground networks.
//!
//! Given a ground network of users with an origin-destination traffic demand
//! matrix, the crate computes a minimal UAV deployment (demand-weighted
//! clustering, capacity-bounded merging, annealed relay insertion for
//! connectivity) and routes the demand over the combined ground/air graph by
//! solving an energy-aware multi-commodity-flow MILP with an in-repo simplex
//! and branch-and-bound. Experiment sweeps evaluate the unsupported-traffic
//! fraction and UAV power across seeds and demand sizes.
//!
//! All stages are deterministic: fixed seeds, fixed tie-breaking, and
//! canonical artifact serialization make repeated runs byte-identical.

pub mod canon;
pub mod cluster;
pub mod error;
pub mod experiments;
pub mod generate;
pub mod geom;
pub mod graph;
pub mod lpfile;
pub mod milp;
pub mod params;
pub mod placement;
pub mod plan;
pub mod relay;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use geom::Point;
pub use params::Params;
pub use plan::Placement;
pub use scenario::Scenario;
