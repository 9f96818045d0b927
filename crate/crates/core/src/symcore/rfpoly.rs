//! Sparse polynomials over integer-indexed atoms with rational-function
//! coefficients. Atoms stand for program variables and random draws;
//! parameters live inside the coefficients.

use std::collections::BTreeMap;
use std::fmt;

use super::poly::power_reduction_table;
use super::ratfun::RationalFunction;
use super::rational::Rational;

pub type Atom = u32;

/// Sorted `(atom, exponent)` pairs with positive exponents.
pub type AtomMono = Vec<(Atom, u32)>;

#[derive(Clone, Default, PartialEq)]
pub struct RfPoly {
    terms: BTreeMap<AtomMono, RationalFunction>,
}

pub fn mono_mul(a: &[(Atom, u32)], b: &[(Atom, u32)]) -> AtomMono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn mono_degree(m: &[(Atom, u32)]) -> u32 {
    m.iter().map(|(_, e)| e).sum()
}

pub fn mono_exponent(m: &[(Atom, u32)], atom: Atom) -> u32 {
    m.iter().find(|(a, _)| *a == atom).map_or(0, |(_, e)| *e)
}

impl RfPoly {
    pub fn zero() -> Self {
        RfPoly::default()
    }

    pub fn one() -> Self {
        RfPoly::constant(RationalFunction::one())
    }

    pub fn constant(c: RationalFunction) -> Self {
        let mut p = RfPoly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn atom(a: Atom) -> Self {
        RfPoly::monomial(vec![(a, 1)], RationalFunction::one())
    }

    pub fn monomial(m: AtomMono, c: RationalFunction) -> Self {
        let mut p = RfPoly::zero();
        p.add_term(m, c);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&AtomMono, &RationalFunction)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (AtomMono, RationalFunction)> {
        self.terms.into_iter()
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

    pub fn as_constant(&self) -> Option<RationalFunction> {
        match self.terms.len() {
            0 => Some(RationalFunction::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: AtomMono, c: RationalFunction) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, o: &RfPoly) -> RfPoly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &RfPoly) -> RfPoly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> RfPoly {
        RfPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &RationalFunction) -> RfPoly {
        if k.is_zero() {
            return RfPoly::zero();
        }
        RfPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, o: &RfPoly) -> RfPoly {
        let mut out = RfPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> RfPoly {
        let mut acc = RfPoly::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn degree_in(&self, atom: Atom) -> u32 {
        self.terms.keys().map(|m| mono_exponent(m, atom)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| mono_degree(m)).max().unwrap_or(0)
    }

    pub fn atoms(&self) -> std::collections::BTreeSet<Atom> {
        self.terms.keys().flat_map(|m| m.iter().map(|(a, _)| *a)).collect()
    }

    /// Coefficients of `atom^0, atom^1, ...`.
    pub fn coefficients_in(&self, atom: Atom) -> Vec<RfPoly> {
        let mut out = vec![RfPoly::zero(); self.degree_in(atom) as usize + 1];
        for (m, c) in &self.terms {
            let e = mono_exponent(m, atom);
            let rest: AtomMono = m.iter().filter(|(a, _)| *a != atom).cloned().collect();
            out[e as usize].add_term(rest, c.clone());
        }
        out
    }

    /// Rewrites every monomial through `f`, which returns a replacement
    /// polynomial for it; coefficients are multiplied in.
    pub fn flat_map_monomials(&self, mut f: impl FnMut(&AtomMono) -> RfPoly) -> RfPoly {
        let mut out = RfPoly::zero();
        for (m, c) in &self.terms {
            for (m2, c2) in f(m).terms {
                out.add_term(m2, &c2 * c);
            }
        }
        out
    }

    /// Reduces powers of atoms that range over `{0, ..., m-1}`.
    pub fn reduce_supports(&self, support: impl Fn(Atom) -> Option<u32>) -> RfPoly {
        let needs = self
            .terms
            .keys()
            .any(|m| m.iter().any(|(a, e)| support(*a).is_some_and(|s| *e >= s)));
        if !needs {
            return self.clone();
        }
        let mut out = RfPoly::zero();
        for (m, c) in &self.terms {
            let mut acc: Vec<(AtomMono, RationalFunction)> = vec![(Vec::new(), c.clone())];
            for &(a, e) in m {
                let replacement: Vec<(u32, Rational)> = match support(a) {
                    Some(2) => vec![(1, Rational::from_integer(1.into()))],
                    Some(s) if e >= s => {
                        let table = power_reduction_table(s, e);
                        table[e as usize]
                            .iter()
                            .enumerate()
                            .filter(|(_, q)| !num_traits::Zero::is_zero(*q))
                            .map(|(j, q)| (j as u32, q.clone()))
                            .collect()
                    }
                    _ => vec![(e, Rational::from_integer(1.into()))],
                };
                let mut next = Vec::new();
                for (mm, cc) in &acc {
                    for (j, q) in &replacement {
                        let mut m2 = mm.clone();
                        if *j > 0 {
                            m2.push((a, *j));
                        }
                        next.push((m2, cc.scale(q)));
                    }
                }
                acc = next;
            }
            for (mm, cc) in acc {
                out.add_term(mm, cc);
            }
        }
        out
    }
}

impl fmt::Debug for RfPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                let ms: Vec<String> = m.iter().map(|(a, e)| format!("a{a}^{e}")).collect();
                format!("({c})*{}", ms.join("*"))
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::super::rational::int;
    use super::*;

    fn k(n: i64) -> RationalFunction {
        RationalFunction::constant(int(n))
    }

    #[test]
    fn binomial_square() {
        let p = RfPoly::atom(0).add(&RfPoly::atom(1));
        let sq = p.pow(2);
        assert_eq!(sq.len(), 3);
        let c = sq.coefficients_in(0);
        assert_eq!(c[2], RfPoly::one());
        assert_eq!(c[1], RfPoly::atom(1).scale(&k(2)));
    }

    #[test]
    fn support_reduction_on_atoms() {
        let p = RfPoly::monomial(vec![(0, 3), (1, 2)], k(1));
        let r = p.reduce_supports(|a| if a == 0 { Some(2) } else { None });
        assert_eq!(r, RfPoly::monomial(vec![(0, 1), (1, 2)], k(1)));
    }
}
