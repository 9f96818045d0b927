//! Quotients of polynomials over symbolic parameters.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::poly::{Monomial, Polynomial, Symbol};
use super::rational::Rational;
use super::SymError;

/// `num / den` with `den != 0`.
///
/// Canonical form: a constant denominator is folded into the numerator, the
/// common monomial factor is cancelled, exact polynomial division is taken
/// when the denominator divides the numerator, and the denominator's leading
/// coefficient is 1. No multivariate gcd is computed, so two equal functions
/// may have different representations; equality cross-multiplies.
#[derive(Clone)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }

    pub fn one() -> Self {
        RationalFunction::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        RationalFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn from_i64(n: i64) -> Self {
        RationalFunction::constant(Rational::from_integer(n.into()))
    }

    pub fn symbol(name: &str) -> Self {
        RationalFunction::from_poly(Polynomial::symbol(name))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, SymError> {
        if den.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        Ok(RationalFunction { num, den }.normalized())
    }

    pub fn numer(&self) -> &Polynomial {
        &self.num
    }

    pub fn denom(&self) -> &Polynomial {
        &self.den
    }

    fn normalized(mut self) -> Self {
        if self.num.is_zero() {
            return RationalFunction::zero();
        }
        if let Some(d) = self.den.as_constant() {
            if !d.is_one() {
                let inv = d.recip();
                self.num = self.num.scale(&inv);
                self.den = Polynomial::one();
            }
            return self;
        }
        let g = self.num.monomial_content().gcd(&self.den.monomial_content());
        if !g.is_one() {
            self.num = self.num.div_monomial(&g).expect("content divides");
            self.den = self.den.div_monomial(&g).expect("content divides");
            if let Some(d) = self.den.as_constant() {
                self.num = self.num.scale(&d.recip());
                self.den = Polynomial::one();
                return self;
            }
        }
        if let Some(q) = self.num.div_exact(&self.den) {
            return RationalFunction::from_poly(q);
        }
        let lc = self.den.leading().map(|(_, c)| c.clone()).expect("nonzero");
        if !lc.is_one() {
            let inv = lc.recip();
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.as_constant().is_some_and(|d| d.is_one())
            && self.num.as_constant().is_some_and(|n| n.is_one())
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.as_constant().is_some()
    }

    /// The value when no symbol occurs.
    pub fn as_constant(&self) -> Option<Rational> {
        let n = self.num.as_constant()?;
        let d = self.den.as_constant()?;
        Some(n / d)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut s = self.num.symbols();
        s.extend(self.den.symbols());
        s
    }

    pub fn recip(&self) -> Result<Self, SymError> {
        RationalFunction::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, e: u32) -> Self {
        if let Some(c) = self.as_constant() {
            return RationalFunction::constant(num_traits::pow(c, e as usize));
        }
        RationalFunction {
            num: self.num.pow(e),
            den: self.den.pow(e),
        }
        .normalized()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return RationalFunction::zero();
        }
        RationalFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self, SymError> {
        if rhs.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return Ok(RationalFunction::constant(a / b));
        }
        RationalFunction::new(&self.num * &rhs.den, &self.den * &rhs.num)
    }

    pub fn eval(&self, env: &HashMap<String, Rational>) -> Result<Rational, SymError> {
        let d = self.den.eval(env)?;
        if d.is_zero() {
            return Err(SymError::ZeroDenominator(self.to_string()));
        }
        Ok(self.num.eval(env)? / d)
    }

    /// Substitutes bound symbols by rational functions.
    pub fn substitute(&self, env: &HashMap<String, RationalFunction>) -> Result<Self, SymError> {
        if env.is_empty() {
            return Ok(self.clone());
        }
        let n = substitute_poly(&self.num, env);
        let d = substitute_poly(&self.den, env);
        n.checked_div(&d)
            .map_err(|_| SymError::ZeroDenominator(self.to_string()))
    }
}

/// Evaluates a polynomial with some symbols replaced by rational functions.
pub fn substitute_poly(p: &Polynomial, env: &HashMap<String, RationalFunction>) -> RationalFunction {
    let mut acc = RationalFunction::zero();
    for (m, c) in p.terms() {
        let mut term = RationalFunction::constant(c.clone());
        let mut rest = Vec::new();
        for (s, e) in m.powers() {
            match env.get(s.name()) {
                Some(v) => term = &term * &v.pow(*e),
                None => rest.push((s.clone(), *e)),
            }
        }
        let mono = RationalFunction::from_poly(Polynomial::monomial(
            Monomial::from_powers(rest),
            Rational::one(),
        ));
        acc = &acc + &(&term * &mono);
    }
    acc
}

impl PartialEq for RationalFunction {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        &self.num * &other.den == &other.num * &self.den
    }
}

impl Eq for RationalFunction {}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |p: &Polynomial| {
            if p.len() > 1 {
                format!("({p})")
            } else {
                p.to_string()
            }
        };
        if self.den.as_constant().is_some() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", wrap(&self.num), wrap(&self.den))
        }
    }
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if let (Some(a), Some(b)) = (self.as_constant(), rhs.as_constant()) {
            return RationalFunction::constant(a + b);
        }
        if self.den == rhs.den {
            return RationalFunction {
                num: &self.num + &rhs.num,
                den: self.den.clone(),
            }
            .normalized();
        }
        RationalFunction {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
        .normalized()
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        if let Some(c) = rhs.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return rhs.scale(&c);
        }
        RationalFunction {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
        .normalized()
    }
}

impl Div for &RationalFunction {
    type Output = RationalFunction;
    /// Panics on a zero divisor; use `checked_div` for fallible division.
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for RationalFunction {
            type Output = RationalFunction;
            fn $f(self, rhs: RationalFunction) -> RationalFunction {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        -(&self)
    }
}

impl From<Rational> for RationalFunction {
    fn from(q: Rational) -> Self {
        RationalFunction::constant(q)
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        RationalFunction::from_poly(p)
    }
}

#[cfg(test)]
mod tests {
    use super::super::rational::{int, parse_rational, rat};
    use super::*;

    fn c(q: Rational) -> RationalFunction {
        RationalFunction::constant(q)
    }

    #[test]
    fn constant_arithmetic() {
        assert_eq!(&c(rat(1, 2)) + &c(rat(1, 3)), c(rat(5, 6)));
    }

    #[test]
    fn cancellation_by_exact_division() {
        let x = RationalFunction::symbol("x");
        let xp1 = &x + &RationalFunction::one();
        let r = &(&x / &xp1) * &xp1;
        assert!(r.is_polynomial());
        assert_eq!(r.numer(), &Polynomial::symbol("x"));
    }

    #[test]
    fn grass_sensitivity_ratio_is_scale_invariant() {
        let a = Polynomial::symbol("a");
        let b = Polynomial::symbol("b");
        let k = |s: &str| Polynomial::constant(parse_rational(s).unwrap());
        let num = &b.scale(&rat(4, 100)) + &k("0.6396");
        let den = &(&a.scale(&rat(-178, 1000)) + &b.scale(&rat(4, 100))) + &k("0.7308");
        let f = RationalFunction::new(num.clone(), den.clone()).unwrap();
        let g = RationalFunction::new(num.scale(&int(5)), den.scale(&int(5))).unwrap();
        assert_eq!(f, g);
        assert!(!f.is_polynomial());
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert!(RationalFunction::one()
            .checked_div(&RationalFunction::zero())
            .is_err());
        assert!(RationalFunction::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn common_monomial_factor_cancels() {
        let b = Polynomial::symbol("b");
        let q = Polynomial::symbol("q");
        let num = &b * &(&q + &Polynomial::one());
        let den = &b * &(&q - &Polynomial::one());
        let f = RationalFunction::new(num, den).unwrap();
        assert_eq!(f.numer().degree_in(&Symbol::new("b")), 0);
    }
}
