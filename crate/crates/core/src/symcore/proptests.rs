use std::collections::HashMap;

use proptest::prelude::*;

use super::expoly::eval_terms_direct;
use super::poly::{reduce_finite_support, Polynomial, Symbol};
use super::*;

fn small_rat() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=9).prop_map(|(n, d)| rat(n, d))
}

fn poly_xy() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((small_rat(), 0u32..3, 0u32..3), 0..5).prop_map(|terms| {
        let mut p = Polynomial::zero();
        for (c, a, b) in terms {
            let t = &Polynomial::symbol("x").pow(a) * &Polynomial::symbol("y").pow(b);
            p = &p + &t.scale(&c);
        }
        p
    })
}

fn env(x: &Rational, y: &Rational) -> HashMap<String, Rational> {
    HashMap::from([("x".to_string(), x.clone()), ("y".to_string(), y.clone())])
}

proptest! {
    #[test]
    fn polynomial_ring_laws(a in poly_xy(), b in poly_xy(), c in poly_xy()) {
        prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in poly_xy(), b in poly_xy(), x in small_rat(), y in small_rat()) {
        let e = env(&x, &y);
        prop_assert_eq!((&a * &b).eval(&e).unwrap(), a.eval(&e).unwrap() * b.eval(&e).unwrap());
        prop_assert_eq!((&a + &b).eval(&e).unwrap(), a.eval(&e).unwrap() + b.eval(&e).unwrap());
    }

    #[test]
    fn rational_function_field_laws(a in poly_xy(), b in poly_xy(), d in poly_xy(), x in small_rat(), y in small_rat()) {
        prop_assume!(!b.is_zero() && !d.is_zero());
        let f = RationalFunction::new(a.clone(), b.clone()).unwrap();
        let g = RationalFunction::new(d.clone(), b.clone()).unwrap();
        let e = env(&x, &y);
        prop_assume!(!b.eval(&e).unwrap().is_zero() && !d.eval(&e).unwrap().is_zero());
        let sum = &f + &g;
        prop_assert_eq!(sum.eval(&e).unwrap(), f.eval(&e).unwrap() + g.eval(&e).unwrap());
        let q = &f / &g;
        let back = &q * &g;
        prop_assert_eq!(back, f);
    }

    #[test]
    fn support_reduction_preserves_values_on_support(
        coeffs in prop::collection::vec(small_rat(), 1..7),
        m in 1u32..5,
        yv in small_rat(),
    ) {
        let x = Polynomial::symbol("x");
        let y = Polynomial::symbol("y");
        let mut p = Polynomial::zero();
        for (i, c) in coeffs.iter().enumerate() {
            p = &p + &(&x.pow(i as u32) * &y).scale(c);
        }
        let r = reduce_finite_support(&p, &Symbol::new("x"), m);
        prop_assert!(r.degree_in(&Symbol::new("x")) < m);
        for v in 0..m {
            let e = env(&int(v as i64), &yv);
            prop_assert_eq!(r.eval(&e).unwrap(), p.eval(&e).unwrap());
        }
    }

    #[test]
    fn exppoly_eval_matches_direct_sum(
        terms in prop::collection::vec((small_rat(), small_rat(), 0u32..3), 0..4),
        n in 0u64..8,
    ) {
        let mut f = ExpPoly::zero();
        let mut kept = Vec::new();
        for (c, r, k) in terms {
            if r.is_zero() { continue; }
            f.push(RationalFunction::constant(c.clone()), RationalFunction::constant(r.clone()), k);
            kept.push((c, r, k));
        }
        prop_assert_eq!(f.eval_at(n, &HashMap::new()).unwrap(), eval_terms_direct(&kept, n));
        prop_assert_eq!(f.shift().eval_at(n, &HashMap::new()).unwrap(), eval_terms_direct(&kept, n + 1));
    }
}

use num_traits::Zero;
