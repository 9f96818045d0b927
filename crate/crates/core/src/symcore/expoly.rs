//! Exponential polynomials `sum c * r^n * n^k` in the iteration counter `n`,
//! and eventually-exponential-polynomial sequences.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::interval::{bound_ratfun, Interval};
use super::ratfun::RationalFunction;
use super::rational::Rational;
use super::SymError;

#[derive(Clone, Debug)]
pub struct ExpTerm {
    pub coeff: RationalFunction,
    pub base: RationalFunction,
    pub degree: u32,
}

/// Sum of `coeff * base^n * n^degree`. Bases are nonzero, no two terms
/// share a `(base, degree)` pair and no coefficient is zero.
#[derive(Clone, Default)]
pub struct ExpPoly {
    terms: Vec<ExpTerm>,
}

/// Outcome of `n -> infinity`.
#[derive(Clone, Debug, PartialEq)]
pub enum Limit {
    Converges(RationalFunction),
    Diverges,
    /// The limit holds under every listed assumption (each `|base| < 1`).
    ConditionalOn {
        assumptions: Vec<String>,
        limit: RationalFunction,
    },
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly::default()
    }

    pub fn constant(c: RationalFunction) -> Self {
        let mut f = ExpPoly::zero();
        f.push(c, RationalFunction::one(), 0);
        f
    }

    /// The sequence `n`.
    pub fn counter() -> Self {
        let mut f = ExpPoly::zero();
        f.push(RationalFunction::one(), RationalFunction::one(), 1);
        f
    }

    /// A single term `coeff * base^n * n^degree`.
    pub fn term(
        coeff: RationalFunction,
        base: RationalFunction,
        degree: u32,
    ) -> Result<Self, SymError> {
        if base.is_zero() {
            return Err(SymError::ZeroBase);
        }
        let mut f = ExpPoly::zero();
        f.push(coeff, base, degree);
        Ok(f)
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, merging with an existing term of equal base and degree.
    pub fn push(&mut self, coeff: RationalFunction, base: RationalFunction, degree: u32) {
        if coeff.is_zero() {
            return;
        }
        assert!(!base.is_zero(), "exponential base must be nonzero");
        if let Some(pos) = self
            .terms
            .iter()
            .position(|t| t.degree == degree && t.base == base)
        {
            let merged = &self.terms[pos].coeff + &coeff;
            if merged.is_zero() {
                self.terms.remove(pos);
            } else {
                self.terms[pos].coeff = merged;
            }
        } else {
            self.terms.push(ExpTerm {
                coeff,
                base,
                degree,
            });
        }
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.coeff.clone(), t.base.clone(), t.degree);
        }
        out
    }

    pub fn sub(&self, other: &ExpPoly) -> ExpPoly {
        self.add(&other.scale(&-RationalFunction::one()))
    }

    pub fn scale(&self, k: &RationalFunction) -> ExpPoly {
        if k.is_zero() {
            return ExpPoly::zero();
        }
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: &t.coeff * k,
                    base: t.base.clone(),
                    degree: t.degree,
                })
                .filter(|t| !t.coeff.is_zero())
                .collect(),
        }
    }

    /// `n -> f(n + 1)`.
    pub fn shift(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            let cb = &t.coeff * &t.base;
            for (j, binom) in binomial_row(t.degree).into_iter().enumerate() {
                out.push(cb.scale(&binom), t.base.clone(), j as u32);
            }
        }
        out
    }

    /// `n -> f(n - 1)`, an identity of sequences for all `n >= 1`.
    pub fn unshift(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            let inv = t.base.recip().expect("nonzero base");
            let cb = &t.coeff * &inv;
            for (j, binom) in binomial_row(t.degree).into_iter().enumerate() {
                let sign = if (t.degree as usize - j) % 2 == 1 {
                    -binom
                } else {
                    binom
                };
                out.push(cb.scale(&sign), t.base.clone(), j as u32);
            }
        }
        out
    }

    /// Symbolic value at a concrete `n`.
    pub fn eval(&self, n: u64) -> RationalFunction {
        let nn = Rational::from_integer(n.into());
        let mut acc = RationalFunction::zero();
        for t in &self.terms {
            let mut v = &t.coeff * &t.base.pow(n as u32);
            if t.degree > 0 {
                v = v.scale(&num_traits::pow(nn.clone(), t.degree as usize));
            }
            acc = &acc + &v;
        }
        acc
    }

    /// Exact value at `n` under a full parameter assignment.
    pub fn eval_at(&self, n: u64, env: &HashMap<String, Rational>) -> Result<Rational, SymError> {
        let nn = Rational::from_integer(n.into());
        let mut acc = Rational::zero();
        for t in &self.terms {
            let c = t.coeff.eval(env)?;
            let b = t.base.eval(env)?;
            acc += c * num_traits::pow(b, n as usize) * num_traits::pow(nn.clone(), t.degree as usize);
        }
        Ok(acc)
    }

    pub fn substitute(&self, env: &HashMap<String, RationalFunction>) -> Result<ExpPoly, SymError> {
        let mut out = ExpPoly::zero();
        for t in &self.terms {
            let base = t.base.substitute(env)?;
            if base.is_zero() {
                return Err(SymError::ZeroBase);
            }
            out.push(t.coeff.substitute(env)?, base, t.degree);
        }
        Ok(out)
    }

    /// All bases equal 1 and all degrees are 0.
    pub fn as_constant(&self) -> Option<RationalFunction> {
        match self.terms.as_slice() {
            [] => Some(RationalFunction::zero()),
            [t] if t.degree == 0 && t.base.is_one() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    /// Behaviour as `n -> infinity`. Symbolic bases are bounded by interval
    /// arithmetic over `domains`; undecided bases become assumptions.
    pub fn limit(&self, domains: &HashMap<String, Interval>) -> Limit {
        let mut value = RationalFunction::zero();
        let mut assumptions = Vec::new();
        for t in &self.terms {
            if t.base.is_one() {
                if t.degree == 0 {
                    value = &value + &t.coeff;
                    continue;
                }
                return Limit::Diverges;
            }
            if let Some(b) = t.base.as_constant() {
                if b.abs() < Rational::one() {
                    continue;
                }
                return Limit::Diverges;
            }
            match bound_ratfun(&t.base, domains) {
                Some(iv) if iv.inside_unit() => continue,
                Some(iv) if iv.outside_unit() => return Limit::Diverges,
                _ => assumptions.push(format!("|{}| < 1", t.base)),
            }
        }
        if assumptions.is_empty() {
            Limit::Converges(value)
        } else {
            Limit::ConditionalOn {
                assumptions,
                limit: value,
            }
        }
    }
}

impl PartialEq for ExpPoly {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl fmt::Debug for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let wrap = |s: String| {
            if s.contains([' ', '/', '-']) && !is_plain_fraction(&s) {
                format!("({s})")
            } else {
                s
            }
        };
        let mut parts: Vec<(u32, String, String)> = self
            .terms
            .iter()
            .map(|t| {
                let mut factors = Vec::new();
                if !t.base.is_one() {
                    let b = t.base.to_string();
                    let b = if b.contains([' ', '/', '-']) { format!("({b})") } else { b };
                    factors.push(format!("{b}^n"));
                }
                match t.degree {
                    0 => {}
                    1 => factors.push("n".to_string()),
                    d => factors.push(format!("n^{d}")),
                }
                let body = factors.join("*");
                let coeff = t.coeff.to_string();
                let rendered = if body.is_empty() {
                    coeff
                } else if t.coeff.is_one() {
                    body.clone()
                } else {
                    format!("{}*{body}", wrap(coeff))
                };
                (t.degree, body, rendered)
            })
            .collect();
        parts.sort_by(|a, b| (a.1.is_empty(), &a.1, a.0).cmp(&(b.1.is_empty(), &b.1, b.0)).reverse());
        let joined: Vec<String> = parts.into_iter().map(|p| p.2).collect();
        f.write_str(&joined.join(" + "))
    }
}

fn is_plain_fraction(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    body.chars().all(|c| c.is_ascii_digit() || c == '/') && !body.is_empty()
        && !s.starts_with('-')
}

/// `C(k, 0..=k)` as rationals.
pub fn binomial_row(k: u32) -> Vec<Rational> {
    let mut row = vec![Rational::one()];
    for i in 0..k {
        let prev = row[i as usize].clone();
        row.push(prev * Rational::from_integer((k - i).into()) / Rational::from_integer((i + 1).into()));
    }
    row
}

/// Sequence given by explicit values for `n < head.len()` and by an
/// exponential polynomial from then on.
#[derive(Clone, Debug)]
pub struct Sequence {
    head: Vec<RationalFunction>,
    tail: ExpPoly,
}

impl Sequence {
    pub fn new(head: Vec<RationalFunction>, tail: ExpPoly) -> Self {
        let mut s = Sequence { head, tail };
        s.canonicalize();
        s
    }

    pub fn zero() -> Self {
        Sequence::from(ExpPoly::zero())
    }

    pub fn constant(c: RationalFunction) -> Self {
        Sequence::from(ExpPoly::constant(c))
    }

    pub fn head(&self) -> &[RationalFunction] {
        &self.head
    }

    pub fn tail(&self) -> &ExpPoly {
        &self.tail
    }

    /// First index from which `tail` gives the exact value.
    pub fn valid_from(&self) -> usize {
        self.head.len()
    }

    pub fn value(&self, n: u64) -> RationalFunction {
        match self.head.get(n as usize) {
            Some(v) => v.clone(),
            None => self.tail.eval(n),
        }
    }

    pub fn value_at(&self, n: u64, env: &HashMap<String, Rational>) -> Result<Rational, SymError> {
        match self.head.get(n as usize) {
            Some(v) => v.eval(env),
            None => self.tail.eval_at(n, env),
        }
    }

    fn canonicalize(&mut self) {
        while let Some(last) = self.head.last() {
            let k = self.head.len() as u64 - 1;
            if *last == self.tail.eval(k) {
                self.head.pop();
            } else {
                break;
            }
        }
    }

    fn padded_head(&self, len: usize) -> Vec<RationalFunction> {
        (0..len).map(|n| self.value(n as u64)).collect()
    }

    pub fn add(&self, other: &Sequence) -> Sequence {
        let len = self.head.len().max(other.head.len());
        let a = self.padded_head(len);
        let b = other.padded_head(len);
        let head = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        Sequence::new(head, self.tail.add(&other.tail))
    }

    pub fn scale(&self, k: &RationalFunction) -> Sequence {
        Sequence::new(
            self.head.iter().map(|v| v * k).collect(),
            self.tail.scale(k),
        )
    }

    pub fn sub(&self, other: &Sequence) -> Sequence {
        self.add(&other.scale(&-RationalFunction::one()))
    }

    /// `n -> s(n + 1)`.
    pub fn shift(&self) -> Sequence {
        let head = self.head.iter().skip(1).cloned().collect();
        Sequence::new(head, self.tail.shift())
    }

    pub fn is_zero(&self) -> bool {
        self.head.is_empty() && self.tail.is_zero()
    }

    /// Terms whose base vanishes under `env` only contribute at `n = 0`
    /// and move into the head.
    pub fn substitute(&self, env: &HashMap<String, RationalFunction>) -> Result<Sequence, SymError> {
        let mut head = self
            .head
            .iter()
            .map(|v| v.substitute(env))
            .collect::<Result<Vec<_>, _>>()?;
        let mut tail = ExpPoly::zero();
        let mut at_zero = None;
        for t in &self.tail.terms {
            let base = t.base.substitute(env)?;
            let coeff = t.coeff.substitute(env)?;
            if base.is_zero() {
                let extra = at_zero.get_or_insert_with(RationalFunction::zero);
                if t.degree == 0 {
                    *extra = &*extra + &coeff;
                }
            } else {
                tail.push(coeff, base, t.degree);
            }
        }
        if let (Some(extra), true) = (at_zero, head.is_empty()) {
            head.push(&tail.eval(0) + &extra);
        }
        Ok(Sequence::new(head, tail))
    }

    pub fn limit(&self, domains: &HashMap<String, Interval>) -> Limit {
        self.tail.limit(domains)
    }
}

impl From<ExpPoly> for Sequence {
    fn from(tail: ExpPoly) -> Self {
        Sequence {
            head: Vec::new(),
            tail,
        }
    }
}

impl PartialEq for Sequence {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.head.is_empty() {
            return write!(f, "{}", self.tail);
        }
        for (i, v) in self.head.iter().enumerate() {
            write!(f, "n = {i}: {v}; ")?;
        }
        write!(f, "n >= {}: {}", self.head.len(), self.tail)
    }
}

/// Direct evaluation of `sum c * r^n * n^k` term by term, without the
/// symbolic machinery. Test oracle for `eval_at`.
pub fn eval_terms_direct(terms: &[(Rational, Rational, u32)], n: u64) -> Rational {
    let mut acc = Rational::zero();
    for (c, r, k) in terms {
        let mut v = c.clone();
        for _ in 0..n {
            v *= r;
        }
        for _ in 0..*k {
            v *= Rational::from_integer(n.into());
        }
        acc += v;
    }
    acc
}
