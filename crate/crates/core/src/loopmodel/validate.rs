//! Structural well-formedness of loop programs.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};

use super::ast::{Choice, Expr, LoopProgram};
use super::lower::{DrawKind, Lowering};
use crate::symcore::{Atom, Rational, RationalFunction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// The variable whose declaration or update is at fault.
    pub variable: Option<String>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.variable {
            Some(v) => write!(f, "`{v}`: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Returns every violation found; an empty report means the program is
/// well formed.
pub fn validate(p: &LoopProgram) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut report = |v: Option<&str>, m: String| {
        out.push(Violation {
            variable: v.map(str::to_string),
            message: m,
        })
    };
    let vars = p.variables();
    let n = vars.len() as Atom;
    let params: Vec<String> = p.params.iter().map(|d| d.name.clone()).collect();

    let mut seen = HashSet::new();
    for v in &vars {
        if !seen.insert(*v) {
            report(Some(v), "updated more than once".into());
        }
        if p.is_param(v) {
            report(Some(v), "is both a parameter and a variable".into());
        }
    }
    let mut seen_params = HashSet::new();
    for d in &p.params {
        if !seen_params.insert(&d.name) {
            report(None, format!("parameter `{}` declared twice", d.name));
        }
        if let Some((lo, hi)) = &d.domain {
            if lo > hi {
                report(None, format!("parameter `{}` has an empty domain", d.name));
            }
        }
    }
    for (v, m) in &p.supports {
        if p.index_of(v).is_none() {
            report(Some(v), "support declared for a variable that is never updated".into());
        }
        if *m == 0 {
            report(Some(v), "support size must be positive".into());
        }
    }

    for (v, e) in &p.inits {
        if p.index_of(v).is_none() {
            report(Some(v), "initialized but never updated".into());
        }
        let none = |_: &str| None;
        let mut low = Lowering::new(&none, params.clone(), 0);
        if let Err(err) = low.lower(e) {
            let msg = match p.index_of(err_ident(&err)) {
                Some(_) => "initializer refers to a program variable".to_string(),
                None => format!("initializer: {err}"),
            };
            report(Some(v), msg);
            continue;
        }
        if let (Expr::Num(q), Some(m)) = (e, p.support_of(v)) {
            if !q.is_integer() || *q < Rational::zero() || *q >= Rational::from_integer(m.into()) {
                report(Some(v), format!("initial value {q} lies outside its support of size {m}"));
            }
        }
    }

    for (i, u) in p.updates.iter().enumerate() {
        let i = i as Atom;
        let target = u.target.as_str();
        let resolve = |s: &str| p.index_of(s).map(|j| j as Atom);
        let mut low = Lowering::new(&resolve, params.clone(), n);
        for e in u.choice.exprs() {
            let poly = match low.lower(e) {
                Ok(poly) => poly,
                Err(err) => {
                    report(Some(target), err.to_string());
                    continue;
                }
            };
            for a in poly.atoms() {
                if a < n && a > i {
                    report(Some(target), format!("refers to later variable `{}`", vars[a as usize]));
                }
            }
            let coeffs = poly.coefficients_in(i);
            if coeffs.len() > 2 {
                report(Some(target), "nonlinear self-dependence".into());
            }
            if let Some(self_coeff) = coeffs.get(1) {
                for a in self_coeff.atoms() {
                    if a < i && p.support_of(vars[a as usize]).is_none() {
                        report(
                            Some(target),
                            format!(
                                "self-coefficient depends on `{}`, which has no finite support",
                                vars[a as usize]
                            ),
                        );
                    }
                }
            }
        }
        for d in &low.draws {
            if let DrawKind::Gaussian { variance } = &d.kind {
                if variance.atoms().contains(&i) {
                    report(Some(target), "Gaussian variance depends on the assigned variable".into());
                }
            }
        }
        check_probabilities(&u.choice, &params, target, &mut report);
    }
    out
}

fn check_probabilities(
    choice: &Choice,
    params: &[String],
    target: &str,
    report: &mut impl FnMut(Option<&str>, String),
) {
    let none = |_: &str| None;
    let mut low = Lowering::new(&none, params.to_vec(), 0);
    let mut total = RationalFunction::zero();
    for pe in choice.probs() {
        match low.constant(pe) {
            Ok(pr) => {
                if let Some(q) = pr.as_constant() {
                    if q < Rational::zero() || q > Rational::one() {
                        report(Some(target), format!("probability {q} is outside [0, 1]"));
                    }
                }
                total = &total + &pr;
            }
            Err(_) => report(
                Some(target),
                format!("probability `{}` must depend on parameters only", super::print_expr(pe)),
            ),
        }
    }
    if let Choice::Multi(_) = choice {
        if total != RationalFunction::one() {
            report(Some(target), format!("branch probabilities sum to {total}, not 1"));
        }
    }
}

fn err_ident(e: &super::lower::LowerError) -> &str {
    match e {
        super::lower::LowerError::Unknown(s) => s,
        _ => "",
    }
}
