//! Moment-based invariants of probabilistic loops and exact analysis of
//! Bayesian networks encoded as such loops.

pub mod symcore;
pub mod recsolve;
pub mod loopmodel;
pub mod momentengine;
pub mod bncompiler;
pub mod oracle;
pub mod queries;
