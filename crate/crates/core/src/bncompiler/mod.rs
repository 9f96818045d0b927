//! Bayesian networks and their encoding as loop programs.

pub mod compile;
pub mod model;

pub use compile::{
    compile_bn, compile_dynbn, compile_sampling_monitor, event_expr, indicator_expr, indicator_poly,
    CompileOptions, Compiled, Monitor,
};
pub use model::{
    load_bn, BayesNet, BnError, CptRow, DynBayesNet, LinearGaussian, LocalModel, Network, Node,
};
