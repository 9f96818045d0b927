//! Closed intervals with rational endpoints, for bounding symbolic
//! expressions over declared parameter domains.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};

use super::poly::Polynomial;
use super::ratfun::RationalFunction;
use super::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Every point has absolute value strictly below 1.
    pub fn inside_unit(&self) -> bool {
        self.lo > -Rational::one() && self.hi < Rational::one()
    }

    /// Every point has absolute value strictly above 1.
    pub fn outside_unit(&self) -> bool {
        self.lo > Rational::one() || self.hi < -Rational::one()
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = c.iter().min().cloned().unwrap();
        let hi = c.iter().max().cloned().unwrap();
        Interval::new(lo, hi)
    }

    pub fn scale(&self, k: &Rational) -> Interval {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    }

    pub fn pow(&self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(Rational::one());
        }
        let a = num_traits::pow(self.lo.clone(), e as usize);
        let b = num_traits::pow(self.hi.clone(), e as usize);
        if e % 2 == 1 {
            return Interval::new(a, b);
        }
        if self.contains_zero() {
            Interval::new(Rational::zero(), a.max(b))
        } else if a <= b {
            Interval::new(a, b)
        } else {
            Interval::new(b, a)
        }
    }

    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let inv = Interval::new(o.hi.recip(), o.lo.recip());
        Some(self.mul(&inv))
    }
}

/// Encloses the range of `p`; `None` when a symbol has no declared domain.
pub fn bound_poly(p: &Polynomial, domains: &HashMap<String, Interval>) -> Option<Interval> {
    let mut acc = Interval::point(Rational::zero());
    for (m, c) in p.terms() {
        let mut term = Interval::point(Rational::one());
        for (s, e) in m.powers() {
            term = term.mul(&domains.get(s.name())?.pow(*e));
        }
        acc = acc.add(&term.scale(c));
    }
    Some(acc)
}

pub fn bound_ratfun(f: &RationalFunction, domains: &HashMap<String, Interval>) -> Option<Interval> {
    let n = bound_poly(f.numer(), domains)?;
    let d = bound_poly(f.denom(), domains)?;
    n.div(&d)
}

#[cfg(test)]
mod tests {
    use super::super::rational::{int, rat};
    use super::*;

    #[test]
    fn umbrella_base_is_inside_the_unit_interval() {
        let mut dom = HashMap::new();
        dom.insert("r".to_string(), Interval::new(rat(3, 10), int(1)));
        let base = &Polynomial::symbol("r") - &Polynomial::constant(rat(3, 10));
        let b = bound_poly(&base, &dom).unwrap();
        assert_eq!(b, Interval::new(int(0), rat(7, 10)));
        assert!(b.inside_unit());
    }

    #[test]
    fn even_powers_straddling_zero() {
        let i = Interval::new(int(-2), int(1));
        assert_eq!(i.pow(2), Interval::new(int(0), int(4)));
        assert_eq!(i.pow(3), Interval::new(int(-8), int(1)));
    }

    #[test]
    fn division_needs_zero_free_denominator() {
        let i = Interval::new(int(1), int(2));
        assert!(i.div(&Interval::new(int(-1), int(1))).is_none());
        assert_eq!(
            i.div(&Interval::new(int(2), int(4))).unwrap(),
            Interval::new(rat(1, 4), int(1))
        );
    }
}
