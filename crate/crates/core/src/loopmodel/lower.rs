//! Lowering of expressions to polynomials over atoms. Program variables map
//! to caller-chosen atoms, parameters become coefficient symbols, and every
//! draw gets a fresh atom of its own.

use std::collections::HashSet;

use super::ast::{Dist, Expr};
use crate::symcore::{Atom, RationalFunction, RfPoly};

#[derive(Clone, Debug, PartialEq)]
pub enum DrawKind {
    Bernoulli(RationalFunction),
    /// Centered Gaussian with the given variance.
    Gaussian { variance: RfPoly },
    /// Uniform on `[0, 1]`.
    UnitUniform,
    Moments(Vec<RationalFunction>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Draw {
    pub atom: Atom,
    pub kind: DrawKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LowerError {
    #[error("unknown identifier `{0}`")]
    Unknown(String),
    #[error("division by `{0}`, which is not a constant expression")]
    NonConstantDivisor(String),
    #[error("division by zero")]
    ZeroDivisor,
    #[error("`{0}` must not depend on program variables or draws")]
    StateDependent(String),
}

pub struct Lowering<'a> {
    resolve: &'a dyn Fn(&str) -> Option<Atom>,
    params: HashSet<String>,
    next_atom: Atom,
    pub draws: Vec<Draw>,
}

impl<'a> Lowering<'a> {
    /// `resolve` maps program variables to atoms; fresh draw atoms are
    /// numbered from `first_draw_atom` on.
    pub fn new(
        resolve: &'a dyn Fn(&str) -> Option<Atom>,
        params: impl IntoIterator<Item = String>,
        first_draw_atom: Atom,
    ) -> Self {
        Lowering {
            resolve,
            params: params.into_iter().collect(),
            next_atom: first_draw_atom,
            draws: Vec::new(),
        }
    }

    pub fn next_atom(&self) -> Atom {
        self.next_atom
    }

    pub fn lower(&mut self, e: &Expr) -> Result<RfPoly, LowerError> {
        Ok(match e {
            Expr::Num(q) => RfPoly::constant(RationalFunction::constant(q.clone())),
            Expr::Sym(s) => match (self.resolve)(s) {
                Some(a) => RfPoly::atom(a),
                None if self.params.contains(s) => RfPoly::constant(RationalFunction::symbol(s)),
                None => return Err(LowerError::Unknown(s.clone())),
            },
            Expr::Add(a, b) => self.lower(a)?.add(&self.lower(b)?),
            Expr::Sub(a, b) => self.lower(a)?.sub(&self.lower(b)?),
            Expr::Mul(a, b) => self.lower(a)?.mul(&self.lower(b)?),
            Expr::Neg(a) => self.lower(a)?.neg(),
            Expr::Pow(a, k) => self.lower(a)?.pow(*k),
            Expr::Div(a, b) => {
                let num = self.lower(a)?;
                let den = self.constant(b)?;
                let inv = den.recip().map_err(|_| LowerError::ZeroDivisor)?;
                num.scale(&inv)
            }
            Expr::Dist(d) => self.lower_dist(d)?,
        })
    }

    /// A draw-free, state-free expression as a rational function.
    pub fn constant(&mut self, e: &Expr) -> Result<RationalFunction, LowerError> {
        let mark = self.draws.len();
        let p = self.lower(e)?;
        if self.draws.len() != mark {
            self.draws.truncate(mark);
            return Err(LowerError::StateDependent(super::print_expr(e)));
        }
        p.as_constant().ok_or_else(|| match e {
            Expr::Div(_, b) => LowerError::NonConstantDivisor(super::print_expr(b)),
            _ => LowerError::StateDependent(super::print_expr(e)),
        })
    }

    fn fresh(&mut self, kind: DrawKind) -> RfPoly {
        let atom = self.next_atom;
        self.next_atom += 1;
        self.draws.push(Draw { atom, kind });
        RfPoly::atom(atom)
    }

    fn lower_dist(&mut self, d: &Dist) -> Result<RfPoly, LowerError> {
        Ok(match d {
            Dist::Bernoulli(p) => {
                let p = self.constant(p)?;
                self.fresh(DrawKind::Bernoulli(p))
            }
            Dist::Gaussian { mean, variance } => {
                let m = self.lower(mean)?;
                let mark = self.draws.len();
                let v = self.lower(variance)?;
                if self.draws.len() != mark {
                    return Err(LowerError::StateDependent(super::print_expr(variance)));
                }
                let z = self.fresh(DrawKind::Gaussian { variance: v });
                m.add(&z)
            }
            Dist::Uniform { lo, hi } => {
                let a = self.lower(lo)?;
                let b = self.lower(hi)?;
                let u = self.fresh(DrawKind::UnitUniform);
                a.add(&b.sub(&a).mul(&u))
            }
            Dist::Moments(ms) => {
                let ms = ms.iter().map(|m| self.constant(m)).collect::<Result<Vec<_>, _>>()?;
                self.fresh(DrawKind::Moments(ms))
            }
        })
    }
}
