//! Canonical text form. The output re-parses to an equal program.

use std::fmt::Write as _;

use num_traits::Signed;

use super::ast::{Choice, Dist, Expr, LoopProgram};
use crate::symcore::render_exact;

pub fn pretty_print(p: &LoopProgram) -> String {
    let mut out = String::new();
    for d in &p.params {
        match &d.domain {
            Some((lo, hi)) => {
                let _ = writeln!(out, "param {} in ({}, {});", d.name, render_exact(lo), render_exact(hi));
            }
            None => {
                let _ = writeln!(out, "param {};", d.name);
            }
        }
    }
    for (v, m) in &p.supports {
        let _ = writeln!(out, "support {v} {m};");
    }
    for (v, e) in &p.inits {
        let _ = writeln!(out, "{v} := {};", print_expr(e));
    }
    out.push_str("while true {\n");
    for u in &p.updates {
        let _ = writeln!(out, "  {} := {};", u.target, print_choice(&u.choice));
    }
    out.push_str("}\n");
    out
}

pub fn print_choice(c: &Choice) -> String {
    match c {
        Choice::Single(e) => print_expr(e),
        Choice::Binary { left, prob, right } => {
            format!("{} [{}] {}", print_expr(left), print_expr(prob), print_expr(right))
        }
        Choice::Multi(bs) => {
            let parts: Vec<String> = bs
                .iter()
                .map(|(e, p)| format!("{} @ {}", print_expr(e), print_expr(p)))
                .collect();
            format!("choose {{ {} }}", parts.join("; "))
        }
    }
}

/// Binding strength: sums < products < unary minus < powers < atoms.
#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Sum,
    Product,
    Unary,
    Atom,
}

pub fn print_expr(e: &Expr) -> String {
    render(e, Level::Sum, true)
}

/// `leading` is true when nothing precedes `e` inside its product chain, so a
/// fraction literal needs no parentheses.
fn render(e: &Expr, ctx: Level, leading: bool) -> String {
    let (text, own) = match e {
        Expr::Num(q) => {
            let s = render_exact(q);
            let own = if q.is_negative() {
                Level::Unary
            } else if q.is_integer() {
                Level::Atom
            } else if leading {
                Level::Product
            } else {
                // a fraction after `*` or `/` would re-associate
                return format!("({s})");
            };
            (s, own)
        }
        Expr::Sym(s) => (s.clone(), Level::Atom),
        Expr::Add(a, b) => (
            format!("{} + {}", render(a, Level::Sum, true), render(b, Level::Product, true)),
            Level::Sum,
        ),
        Expr::Sub(a, b) => (
            format!("{} - {}", render(a, Level::Sum, true), render(b, Level::Product, true)),
            Level::Sum,
        ),
        Expr::Mul(a, b) => (
            format!("{}*{}", render(a, Level::Product, leading), operand(b)),
            Level::Product,
        ),
        Expr::Div(a, b) => (
            format!("{}/{}", render(a, Level::Product, leading), operand(b)),
            Level::Product,
        ),
        Expr::Neg(a) => (format!("-{}", render(a, Level::Unary, false)), Level::Unary),
        Expr::Pow(a, k) => {
            let base = match **a {
                Expr::Pow(..) => format!("({})", print_expr(a)),
                _ => render(a, Level::Atom, false),
            };
            (format!("{base}^{k}"), Level::Atom)
        }
        Expr::Dist(d) => (print_dist(d), Level::Atom),
    };
    if own < ctx || (own == Level::Unary && ctx > Level::Sum && ctx != Level::Unary) {
        format!("({text})")
    } else {
        text
    }
}

/// Right operand of `*` or `/`: anything looser than a power, or a signed
/// value, is parenthesized.
fn operand(e: &Expr) -> String {
    match e {
        Expr::Num(q) if q.is_integer() && !q.is_negative() => render_exact(q),
        Expr::Sym(_) | Expr::Pow(..) | Expr::Dist(_) => render(e, Level::Atom, false),
        _ => format!("({})", render(e, Level::Sum, true)),
    }
}

pub fn print_dist(d: &Dist) -> String {
    let args: Vec<String> = d.args().into_iter().map(print_expr).collect();
    format!("{}({})", d.name(), args.join(", "))
}
