//! # feederflow-core
//!
//! Spatial voltage profiles of radial power-distribution feeders.
//!
//! A feeder is modelled as a 1-D continuum carrying the voltage phase `theta`,
//! amplitude `v`, the ancillary flow `s = -v^2 dtheta/dx` and the voltage
//! gradient `w = dv/dx`. With constant per-unit conductance `G` and susceptance
//! `B` per segment the profile obeys
//!
//! ```text
//! dtheta/dx = -s / v^2
//! dv/dx     = w
//! ds/dx     = (B p - G q) / (G^2 + B^2)
//! dw/dx     = s^2 / v^3 - (G p + B q) / (v (G^2 + B^2))
//! ```
//!
//! with `theta = 0, v = 1` at the substation and `s = w = 0` at every open
//! feeder end. The crate offers two routes to the solution:
//!
//! - [`nonlinear::solve_tpbv`]: damped Newton on a central (trapezoidal)
//!   finite-difference discretisation of the whole tree, including junction
//!   and step-voltage-regulator matching rows, plus the independent
//!   single-segment [`nonlinear::shooting_oracle`].
//! - [`perturbation::PerturbationSeries`]: the regular-perturbation expansion
//!   in the loading magnitude `eps`, where every order is a chain of linear
//!   quadratures, and [`perturbation::ev_impact`], which uses it to separate
//!   the voltage impact of EV charging from the baseline loads.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the CLI live in
//! the companion `feederflow` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod density;
mod error;
pub mod field;
mod linalg;
pub mod metrics;
pub mod network;
pub mod nonlinear;
pub mod perturbation;
pub mod quad;

pub use density::{Category, CoarseGrainSpec, DensityProfile, PointInjection};
pub use error::{Error, Result};
pub use field::Field;
pub use metrics::{ConvergenceRow, ProfileDiff};
pub use network::{FeederNetwork, Grid, Node, NodeKind, Segment, Topology, Violation};
pub use nonlinear::{Profile, ResidualReport, ShootingOptions, SolveOptions, SolveReport};
pub use perturbation::{ImpactResult, ImpactSpec, OrderFields, PerturbationSeries};
