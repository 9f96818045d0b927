//! Independent ground truth for differential testing: exact enumeration of
//! discrete networks, exact Gaussian moment propagation and Monte Carlo
//! simulation of loop programs.

pub mod enumerate;
pub mod gaussian;
pub mod montecarlo;

pub use enumerate::{enumerate_discrete, JointTable, DEFAULT_STATE_CAP};
pub use gaussian::{gaussian_propagate, GaussianSummary};
pub use montecarlo::{mc_estimate, mc_estimate_bn, Estimate, McConfig};

use crate::symcore::SymError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("node `{0}` is continuous; enumeration needs discrete nodes")]
    NotDiscrete(String),
    #[error("the joint state space has {states} states, more than the cap of {cap}")]
    TooManyStates { states: u128, cap: u64 },
    #[error("node `{0}` is not an affine function of its parents")]
    NotAffine(String),
    #[error("node `{node}` takes value {value} outside its support")]
    OutsideSupport { node: String, value: String },
    #[error("cannot simulate: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("unknown node or variable `{0}`")]
    Unknown(String),
}
#[cfg(test)]
mod tests;
