//! Probabilistic while-true loops with polynomial updates: syntax tree,
//! parser, printer, lowering and validation.

pub mod ast;
pub mod lower;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::{Choice, Dist, Expr, LoopProgram, ParamDecl, Update};
pub use parser::{parse_expr, parse_program, ErrorKind, ParseError};
pub use printer::{pretty_print, print_expr};
pub use validate::{validate, Violation};

#[cfg(test)]
mod proptests;
