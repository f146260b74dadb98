//! File formats, reports and subcommands for `feederflow-core`.
//!
//! A network file is JSON:
//!
//! ```json
//! {
//!   "name": "simple5km",
//!   "segments": [
//!     {"id": "A", "length_km": 5.0, "G": 3.881, "B": 6.856, "upstream": "bank", "downstream": "end"}
//!   ],
//!   "nodes": [
//!     {"id": "bank", "kind": "root"},
//!     {"id": "end", "kind": "leaf"}
//!   ],
//!   "injections": [
//!     {"segment": "A", "xi_km": 1.5, "P_pu": -0.133, "Q_pu": 0.0, "category": "load"}
//!   ]
//! }
//! ```
//!
//! Node kinds are `root`, `junction`, `svr` (with `turn_ratio`) and `leaf`.
//! Injection positions are local to their segment.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{NetworkFile, Scenario, ScenarioOptions};
pub use error::{CliError, ErrorReport};
