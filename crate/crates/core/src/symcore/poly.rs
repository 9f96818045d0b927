//! Sparse multivariate polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use super::rational::{render_exact, Rational};
use super::SymError;

/// A named indeterminate: a symbolic parameter or a program variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Power product of symbols, sorted by symbol with no zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(sym: Symbol) -> Self {
        Monomial(vec![(sym, 1)])
    }

    pub fn from_powers<I: IntoIterator<Item = (Symbol, u32)>>(powers: I) -> Self {
        let mut map: BTreeMap<Symbol, u32> = BTreeMap::new();
        for (s, e) in powers {
            *map.entry(s).or_default() += e;
        }
        Monomial(map.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn degree_in(&self, sym: &Symbol) -> u32 {
        self.0
            .iter()
            .find(|(s, _)| s == sym)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn powers(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (s, e) in &self.0 {
            let mut sub = 0;
            if j < other.0.len() && &other.0[j].0 == s {
                sub = other.0[j].1;
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *s {
                return None;
            }
            if sub > *e {
                return None;
            }
            if *e > sub {
                out.push((s.clone(), e - sub));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (s, e) in &self.0 {
            let f = other.degree_in(s);
            if f > 0 {
                out.push((s.clone(), (*e).min(f)));
            }
        }
        Monomial(out)
    }

    pub fn without(&self, sym: &Symbol) -> Monomial {
        Monomial(self.0.iter().filter(|(s, _)| s != sym).cloned().collect())
    }
}

impl Ord for Monomial {
    /// Graded lexicographic: total degree first, then exponents compared
    /// symbol by symbol in symbol order.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    // self has a smaller symbol the other lacks
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (k, (s, e)) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial over named symbols. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial::default()
    }

    pub fn one() -> Self {
        Polynomial::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Polynomial::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn symbol(name: &str) -> Self {
        Polynomial::monomial(Monomial::var(Symbol::new(name)), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Polynomial::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rational)>>(terms: I) -> Self {
        let mut p = Polynomial::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    /// The value when the polynomial is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        if self.is_zero() {
            Some(Rational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.terms
            .get(&Monomial::one())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Largest term under graded lexicographic order.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, sym: &Symbol) -> u32 {
        self.terms.keys().map(|m| m.degree_in(sym)).max().unwrap_or(0)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.powers().iter().map(|(s, _)| s.clone()))
            .collect()
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v.clone())).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Full evaluation; every symbol must be bound.
    pub fn eval(&self, env: &HashMap<String, Rational>) -> Result<Rational, SymError> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (s, e) in m.powers() {
                let x = env
                    .get(s.name())
                    .ok_or_else(|| SymError::Unbound(s.name().to_string()))?;
                v *= num_traits::pow(x.clone(), *e as usize);
            }
            total += v;
        }
        Ok(total)
    }

    /// Replaces the symbols bound in `env` by polynomials; other symbols stay.
    pub fn substitute(&self, env: &HashMap<Symbol, Polynomial>) -> Polynomial {
        let mut out = Polynomial::zero();
        let mut cache: HashMap<(Symbol, u32), Polynomial> = HashMap::new();
        for (m, c) in &self.terms {
            let mut rest = Vec::new();
            let mut factor = Polynomial::constant(c.clone());
            for (s, e) in m.powers() {
                match env.get(s) {
                    Some(p) => {
                        let pw = cache
                            .entry((s.clone(), *e))
                            .or_insert_with(|| p.pow(*e))
                            .clone();
                        factor = &factor * &pw;
                    }
                    None => rest.push((s.clone(), *e)),
                }
            }
            out = &out + &factor.mul_monomial(&Monomial(rest));
        }
        out
    }

    /// Coefficients of `sym^0, sym^1, ...` as polynomials in the other symbols.
    pub fn coefficients_in(&self, sym: &Symbol) -> Vec<Polynomial> {
        let mut out = vec![Polynomial::zero(); self.degree_in(sym) as usize + 1];
        for (m, c) in &self.terms {
            out[m.degree_in(sym) as usize].add_term(m.without(sym), c.clone());
        }
        out
    }

    /// Greatest common monomial factor of all terms.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |acc, m| acc.gcd(m))
    }

    pub fn div_monomial(&self, m: &Monomial) -> Option<Polynomial> {
        let mut out = Polynomial::zero();
        for (k, v) in &self.terms {
            out.terms.insert(k.div(m)?, v.clone());
        }
        Some(out)
    }

    /// Exact quotient `self / d` when `d` divides `self`, by multivariate
    /// division under graded lexicographic order.
    pub fn div_exact(&self, d: &Polynomial) -> Option<Polynomial> {
        let (dlm, dlc) = d.leading()?;
        if self.is_zero() {
            return Some(Polynomial::zero());
        }
        let (slm, _) = self.leading()?;
        slm.div(dlm)?;
        let mut rem = self.clone();
        let mut quot = Polynomial::zero();
        while let Some((lm, lc)) = rem.leading() {
            let qm = lm.div(dlm)?;
            let qc = lc / dlc;
            let step = Polynomial::monomial(qm.clone(), qc.clone());
            rem = &rem - &(&step * d);
            quot.add_term(qm, qc);
        }
        Some(quot)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Polynomial {
    /// Terms in descending order, coefficients as exact rationals. The output
    /// parses back as a loop-language expression.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if k == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if m.is_one() {
                f.write_str(&render_exact(&a))?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", render_exact(&a))?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let (big, small) = if self.terms.len() >= rhs.terms.len() {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $f(self, rhs: Polynomial) -> Polynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -(&self)
    }
}

/// Remainder of `p` modulo `var (var-1) ... (var-(m-1))`: the unique
/// polynomial of degree < m in `var` agreeing with `p` on `{0, ..., m-1}`.
pub fn reduce_finite_support(p: &Polynomial, var: &Symbol, m: u32) -> Polynomial {
    assert!(m >= 1, "support size must be positive");
    if p.degree_in(var) < m {
        return p.clone();
    }
    let table = power_reduction_table(m, p.degree_in(var));
    let mut out = Polynomial::zero();
    for (mono, c) in p.terms() {
        let e = mono.degree_in(var) as usize;
        let rest = mono.without(var);
        for (d, coef) in table[e].iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            let mut powers: Vec<(Symbol, u32)> = rest.powers().to_vec();
            if d > 0 {
                powers.push((var.clone(), d as u32));
            }
            out.add_term(Monomial::from_powers(powers), c * coef);
        }
    }
    out
}

/// `table[e][d]`: coefficient of `x^d` in `x^e mod x(x-1)...(x-(m-1))`.
pub fn power_reduction_table(m: u32, max_exp: u32) -> Vec<Vec<Rational>> {
    let m = m as usize;
    // minimal polynomial coefficients, monic of degree m
    let mut minpoly = vec![Rational::one()];
    for j in 0..m {
        // multiply by (x - j)
        let mut next = vec![Rational::zero(); minpoly.len() + 1];
        for (d, c) in minpoly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= c * Rational::from_integer((j as i64).into());
        }
        minpoly = next;
    }
    let mut table = Vec::with_capacity(max_exp as usize + 1);
    let mut cur = vec![Rational::zero(); m];
    cur[0] = Rational::one();
    if m == 1 {
        // only the point 0: x^e = 0 for e >= 1
        table.push(cur.clone());
        for _ in 0..max_exp {
            table.push(vec![Rational::zero()]);
        }
        return table;
    }
    table.push(cur.clone());
    for _ in 0..max_exp {
        // multiply by x, then fold x^m back
        let mut next = vec![Rational::zero(); m + 1];
        for (d, c) in cur.iter().enumerate() {
            next[d + 1] += c;
        }
        let top = next[m].clone();
        if !top.is_zero() {
            for d in 0..m {
                next[d] -= &top * &minpoly[d];
            }
        }
        next.truncate(m);
        cur = next;
        table.push(cur.clone());
    }
    table
}

#[cfg(test)]
mod tests {
    use super::super::rational::{int, rat};
    use super::*;

    fn x() -> Polynomial {
        Polynomial::symbol("X")
    }

    #[test]
    fn finite_support_examples() {
        let xs = Symbol::new("X");
        assert_eq!(reduce_finite_support(&x().pow(2), &xs, 2), x());
        let expect = &x().pow(2).scale(&int(3)) - &x().scale(&int(2));
        assert_eq!(reduce_finite_support(&x().pow(3), &xs, 3), expect);
        assert_eq!(reduce_finite_support(&x(), &xs, 3), x());
    }

    #[test]
    fn support_one_kills_positive_powers() {
        let xs = Symbol::new("X");
        let p = &x().pow(2) + &Polynomial::constant(int(5));
        assert_eq!(reduce_finite_support(&p, &xs, 1), Polynomial::constant(int(5)));
    }

    #[test]
    fn exact_division() {
        let y = Polynomial::symbol("Y");
        let a = &x() + &y;
        let b = &x() - &Polynomial::constant(rat(3, 10));
        let prod = &a * &b;
        assert_eq!(prod.div_exact(&b).unwrap(), a);
        assert!(prod.div_exact(&(&x() + &Polynomial::one())).is_none());
    }

    #[test]
    fn grlex_orders_by_degree_first() {
        let a = Monomial::from_powers([(Symbol::new("a"), 1)]);
        let b2 = Monomial::from_powers([(Symbol::new("b"), 2)]);
        let ab = Monomial::from_powers([(Symbol::new("a"), 1), (Symbol::new("b"), 1)]);
        assert!(a < b2);
        assert!(ab > b2);
        let b = Monomial::from_powers([(Symbol::new("b"), 1)]);
        assert!(a > b);
    }

    #[test]
    fn display_parses_as_expression_text() {
        let p = &(&x().pow(2).scale(&int(3)) - &x().scale(&rat(1, 2))) - &Polynomial::one();
        assert_eq!(p.to_string(), "3*X^2 - 1/2*X - 1");
    }
}
