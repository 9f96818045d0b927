//! Exact symbolic arithmetic: rationals, multivariate polynomials, rational
//! functions, exponential polynomials in the iteration counter, and interval
//! bounds over parameter domains.

pub mod expoly;
pub mod interval;
pub mod poly;
pub mod ratfun;
pub mod rational;
pub mod rfpoly;

pub use expoly::{ExpPoly, ExpTerm, Limit, Sequence};
pub use interval::Interval;
pub use poly::{Monomial, Polynomial, Symbol};
pub use ratfun::RationalFunction;
pub use rfpoly::{Atom, AtomMono, RfPoly};
pub use rational::{int, parse_rational, rat, render_decimal, render_exact, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymError {
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("symbol `{0}` has no value")]
    Unbound(String),
    #[error("denominator of `{0}` vanishes")]
    ZeroDenominator(String),
    #[error("exponential base is zero")]
    ZeroBase,
}

#[cfg(test)]
mod proptests;
