use alloc::string::String;
use alloc::vec::Vec;

use crate::network::Violation;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid network ({} violation(s)): {}", .0.len(), DisplayList(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid does not match the network or the other operand")]
    GridMismatch,

    #[error("unknown segment `{0}`")]
    UnknownSegment(String),

    #[error("injection at {xi} km lies outside the open interval (0, {length}) of segment `{segment}`")]
    InjectionOutOfRange { segment: String, xi: f64, length: f64 },

    #[error("kernel width sigma = {sigma} km is under-resolved by grid spacing h = {h} km (need sigma >= 2h)")]
    UnderResolvedKernel { sigma: f64, h: f64 },

    #[error("Newton iteration did not converge after {iterations} iteration(s), residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("voltage collapse: iterate reached v <= 0 at iteration {iteration}")]
    VoltageCollapse { iteration: usize },

    #[error("no sign change of the terminal gradient found for eta in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("order {order} requires lower order {missing}")]
    MissingLowerOrder { order: usize, missing: usize },

    #[error("order {requested} of `{field}` is not available (highest is {available})")]
    UnavailableOrder { field: &'static str, requested: usize, available: usize },

    #[error("eps_ev + eps_load = {sum} does not match eps = {epsilon}")]
    ShareMismatch { sum: f64, epsilon: f64 },

    #[error("singular linear system")]
    SingularSystem,
}

struct DisplayList<'a, T>(&'a [T]);

impl<T: core::fmt::Display> core::fmt::Display for DisplayList<'_, T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}
