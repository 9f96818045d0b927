//! Closed forms for `f(n+1) = c * f(n) + g(n)` where `c` is a constant
//! (possibly symbolic) and `g` is eventually an exponential polynomial.

use crate::symcore::expoly::binomial_row;
use crate::symcore::{ExpPoly, RationalFunction, Sequence};

#[derive(Clone, Debug)]
pub struct FirstOrderRecurrence {
    pub self_coeff: RationalFunction,
    pub inhomog: Sequence,
    pub initial: RationalFunction,
}

#[derive(Clone, Debug)]
pub struct Solved {
    pub sequence: Sequence,
    /// Generic-position assumptions taken while solving, e.g. `r != c`.
    pub assumptions: Vec<String>,
}

impl FirstOrderRecurrence {
    pub fn new(self_coeff: RationalFunction, inhomog: impl Into<Sequence>, initial: RationalFunction) -> Self {
        FirstOrderRecurrence {
            self_coeff,
            inhomog: inhomog.into(),
            initial,
        }
    }

    /// Values `f(0..=n)` by direct iteration.
    pub fn unroll(&self, n: usize) -> Vec<RationalFunction> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(self.initial.clone());
        for i in 0..n {
            let next = &(&self.self_coeff * &out[i]) + &self.inhomog.value(i as u64);
            out.push(next);
        }
        out
    }
}

/// Solves the recurrence exactly.
///
/// For `n` below the inhomogeneity's head length the values are unrolled;
/// past it the solution is a particular solution plus `A * c^n`. When `c`
/// is zero there is no homogeneous part and the solution is `g(n-1)` from
/// the first tail index on.
pub fn solve_first_order(r: &FirstOrderRecurrence) -> Solved {
    let c = &r.self_coeff;
    let h = r.inhomog.valid_from();
    let mut assumptions = Vec::new();
    let particular = particular_solution(c, r.inhomog.tail(), &mut assumptions);
    let mut head = r.unroll(h);
    let tail = if c.is_zero() {
        head.push(r.inhomog.value(h as u64));
        particular
    } else {
        let gap = &head[h] - &particular.eval(h as u64);
        if h > 0 && c.as_constant().is_none() {
            assumptions.push(format!("{c} != 0"));
        }
        let amp = &gap / &c.pow(h as u32);
        let mut t = particular;
        t.push(amp, c.clone(), 0);
        t
    };
    Solved {
        sequence: Sequence::new(head, tail),
        assumptions,
    }
}

/// An exponential polynomial `P` with `P(n+1) = c P(n) + g(n)` for all `n`.
fn particular_solution(c: &RationalFunction, g: &ExpPoly, assumptions: &mut Vec<String>) -> ExpPoly {
    let mut out = ExpPoly::zero();
    for t in g.terms() {
        let r = &t.base;
        let k = t.degree as usize;
        if r == c {
            // resonance: B(n) has degree k+1 and no constant term
            let mut b = vec![RationalFunction::zero(); k + 2];
            b[k + 1] = &t.coeff / &c.scale(&num_rational::BigRational::from_integer((k as i64 + 1).into()));
            for i in (0..k).rev() {
                let mut acc = RationalFunction::zero();
                for (j, bj) in b.iter().enumerate().skip(i + 2) {
                    acc = &acc + &bj.scale(&binomial_row(j as u32)[i]);
                }
                let denom = num_rational::BigRational::from_integer((i as i64 + 1).into());
                b[i + 1] = (-acc).scale(&denom.recip());
            }
            for (j, bj) in b.into_iter().enumerate() {
                out.push(bj, r.clone(), j as u32);
            }
        } else {
            let diff = r - c;
            if diff.as_constant().is_none() {
                assumptions.push(format!("{r} != {c}"));
            }
            let inv = diff.recip().expect("nonresonant difference is nonzero");
            let mut b = vec![RationalFunction::zero(); k + 1];
            b[k] = &t.coeff * &inv;
            for i in (0..k).rev() {
                let mut acc = RationalFunction::zero();
                for (j, bj) in b.iter().enumerate().skip(i + 1) {
                    acc = &acc + &bj.scale(&binomial_row(j as u32)[i]);
                }
                b[i] = -(&(r * &acc) * &inv);
            }
            for (j, bj) in b.into_iter().enumerate() {
                out.push(bj, r.clone(), j as u32);
            }
        }
    }
    out
}

/// Checks the initial value, the recurrence on the explicit prefix, and the
/// recurrence as an identity of exponential polynomials past it.
pub fn verify_solution(r: &FirstOrderRecurrence, f: &Sequence) -> bool {
    if f.value(0) != r.initial {
        return false;
    }
    let cutoff = f.valid_from().max(r.inhomog.valid_from());
    for n in 0..cutoff as u64 {
        let rhs = &(&r.self_coeff * &f.value(n)) + &r.inhomog.value(n);
        if f.value(n + 1) != rhs {
            return false;
        }
    }
    let lhs = f.tail().shift();
    let rhs = f.tail().scale(&r.self_coeff).add(r.inhomog.tail());
    lhs == rhs
}

/// `c^n` as a sequence, with `0^n` as `1, 0, 0, ...`.
pub fn geometric(c: &RationalFunction) -> Sequence {
    if c.is_zero() {
        Sequence::new(vec![RationalFunction::one()], ExpPoly::zero())
    } else {
        Sequence::from(ExpPoly::term(RationalFunction::one(), c.clone(), 0).expect("nonzero base"))
    }
}
