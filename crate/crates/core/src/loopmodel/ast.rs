use std::collections::BTreeSet;

use crate::symcore::{Rational, RationalFunction, SymError};

/// Expression over program variables, parameters, literals and random draws.
/// Identifiers are resolved against the enclosing program.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rational),
    Sym(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Dist(Box<Dist>),
}

/// A random draw. Inside an update every occurrence is a fresh draw on every
/// iteration.
#[derive(Clone, Debug, PartialEq)]
pub enum Dist {
    Bernoulli(Expr),
    Gaussian { mean: Expr, variance: Expr },
    Uniform { lo: Expr, hi: Expr },
    /// Raw moments 1, 2, ... of some distribution; moment 0 is 1.
    Moments(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Choice {
    Single(Expr),
    /// `left [prob] right`: `left` with probability `prob`, else `right`.
    Binary { left: Expr, prob: Expr, right: Expr },
    /// `choose { e1 @ p1; ...; ek @ pk }`.
    Multi(Vec<(Expr, Expr)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Update {
    pub target: String,
    pub choice: Choice,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub domain: Option<(Rational, Rational)>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct LoopProgram {
    pub params: Vec<ParamDecl>,
    /// `support x m`: x only takes values in `{0, ..., m-1}`.
    pub supports: Vec<(String, u32)>,
    pub inits: Vec<(String, Expr)>,
    /// One update per variable; variable order is update order.
    pub updates: Vec<Update>,
}

impl Expr {
    pub fn num(q: Rational) -> Expr {
        Expr::Num(q)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(n.into()))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Sym(name.to_string())
    }

    pub fn dist(d: Dist) -> Expr {
        Expr::Dist(Box::new(d))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, e: u32) -> Expr {
        Expr::Pow(Box::new(a), e)
    }

    /// Left-nested sum; `0` when empty.
    pub fn sum(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::add).unwrap_or(Expr::int(0))
    }

    /// Left-nested product; `1` when empty.
    pub fn product(items: impl IntoIterator<Item = Expr>) -> Expr {
        items.into_iter().reduce(Expr::mul).unwrap_or(Expr::int(1))
    }

    /// Identifiers occurring anywhere, including inside draws.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_symbols(out),
            Expr::Dist(d) => d.args().iter().for_each(|e| e.collect_symbols(out)),
        }
    }

    pub fn contains_dist(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Sym(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_dist() || b.contains_dist()
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.contains_dist(),
            Expr::Dist(_) => true,
        }
    }

    /// Every draw in the expression, outermost first.
    pub fn dists(&self) -> Vec<&Dist> {
        let mut out = Vec::new();
        self.collect_dists(&mut out);
        out
    }

    fn collect_dists<'a>(&'a self, out: &mut Vec<&'a Dist>) {
        match self {
            Expr::Num(_) | Expr::Sym(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_dists(out);
                b.collect_dists(out);
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.collect_dists(out),
            Expr::Dist(d) => {
                out.push(d);
                d.args().iter().for_each(|e| e.collect_dists(out));
            }
        }
    }

    /// Value as a rational function of the free symbols, for draw-free
    /// expressions such as probabilities and variances.
    pub fn to_ratfun(&self) -> Result<RationalFunction, ExprError> {
        Ok(match self {
            Expr::Num(q) => RationalFunction::constant(q.clone()),
            Expr::Sym(s) => RationalFunction::symbol(s),
            Expr::Add(a, b) => &a.to_ratfun()? + &b.to_ratfun()?,
            Expr::Sub(a, b) => &a.to_ratfun()? - &b.to_ratfun()?,
            Expr::Mul(a, b) => &a.to_ratfun()? * &b.to_ratfun()?,
            Expr::Div(a, b) => a.to_ratfun()?.checked_div(&b.to_ratfun()?)?,
            Expr::Neg(a) => -a.to_ratfun()?,
            Expr::Pow(a, e) => a.to_ratfun()?.pow(*e),
            Expr::Dist(_) => return Err(ExprError::RandomWhereConstantExpected),
        })
    }
}

impl Dist {
    pub fn args(&self) -> Vec<&Expr> {
        match self {
            Dist::Bernoulli(p) => vec![p],
            Dist::Gaussian { mean, variance } => vec![mean, variance],
            Dist::Uniform { lo, hi } => vec![lo, hi],
            Dist::Moments(ms) => ms.iter().collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dist::Bernoulli(_) => "bern",
            Dist::Gaussian { .. } => "gauss",
            Dist::Uniform { .. } => "uniform",
            Dist::Moments(_) => "moments",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("random draw where a constant expression is required")]
    RandomWhereConstantExpected,
    #[error(transparent)]
    Sym(#[from] SymError),
}

impl Choice {
    /// `(expression, probability)` pairs; the binary form yields `p` and `1 - p`.
    pub fn branches(&self) -> Vec<(Expr, Expr)> {
        match self {
            Choice::Single(e) => vec![(e.clone(), Expr::int(1))],
            Choice::Binary { left, prob, right } => vec![
                (left.clone(), prob.clone()),
                (right.clone(), Expr::sub(Expr::int(1), prob.clone())),
            ],
            Choice::Multi(bs) => bs.clone(),
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Choice::Single(e) => vec![e],
            Choice::Binary { left, right, .. } => vec![left, right],
            Choice::Multi(bs) => bs.iter().map(|(e, _)| e).collect(),
        }
    }

    pub fn probs(&self) -> Vec<&Expr> {
        match self {
            Choice::Single(_) => vec![],
            Choice::Binary { prob, .. } => vec![prob],
            Choice::Multi(bs) => bs.iter().map(|(_, p)| p).collect(),
        }
    }
}

impl LoopProgram {
    pub fn variables(&self) -> Vec<&str> {
        self.updates.iter().map(|u| u.target.as_str()).collect()
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.updates.iter().position(|u| u.target == var)
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.iter().any(|p| p.name == name)
    }

    /// The initializer, `0` when none is given.
    pub fn init_of(&self, var: &str) -> Expr {
        self.inits
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, e)| e.clone())
            .unwrap_or(Expr::int(0))
    }

    pub fn support_of(&self, var: &str) -> Option<u32> {
        self.supports.iter().find(|(v, _)| v == var).map(|(_, m)| *m)
    }
}
