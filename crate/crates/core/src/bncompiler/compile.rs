//! Encoding of networks as loop programs.

use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::model::{BayesNet, BnError, DynBayesNet, LinearGaussian, LocalModel, Node};
use crate::loopmodel::{validate, Choice, Dist, Expr, LoopProgram, Update};
use crate::symcore::{Polynomial, Rational, Symbol};

#[derive(Clone, Debug)]
pub struct CompileOptions {
    /// Give each case of a conditional linear Gaussian node its own variable
    /// instead of drawing inline in one update.
    pub clg_split: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { clg_split: true }
    }
}

#[derive(Clone, Debug)]
pub struct Compiled {
    pub program: LoopProgram,
    /// Names of auxiliary variables, in update order.
    pub auxiliaries: Vec<String>,
}

/// `[X = x]` over the support `{0, ..., m-1}` as a polynomial in `var`.
pub fn indicator_poly(var: &str, x: u32, m: u32) -> Result<Polynomial, BnError> {
    if x >= m {
        return Err(BnError::Node {
            node: var.to_string(),
            message: format!("value {x} lies outside the support of size {m}"),
        });
    }
    let xv = Polynomial::symbol(var);
    let mut p = Polynomial::one();
    let mut scale = Rational::one();
    for i in 0..m {
        if i == x {
            continue;
        }
        let ir = Rational::from_integer(i.into());
        p = &p * &(&xv - &Polynomial::constant(ir.clone()));
        scale *= Rational::from_integer(x.into()) - ir;
    }
    Ok(p.scale(&(Rational::one() / scale)))
}

/// The indicator as an expression in ascending powers of `var`.
pub fn indicator_expr(var: &str, x: u32, m: u32) -> Result<Expr, BnError> {
    let p = indicator_poly(var, x, m)?;
    let sym = Symbol::new(var);
    let mut terms: Vec<(u32, Rational)> = p.terms().map(|(mono, c)| (mono.degree_in(&sym), c.clone())).collect();
    terms.sort_by_key(|(d, _)| *d);
    let mut out: Option<Expr> = None;
    for (d, c) in terms {
        let base = match d {
            0 => None,
            1 => Some(Expr::sym(var)),
            _ => Some(Expr::pow(Expr::sym(var), d)),
        };
        let neg = c < Rational::zero();
        let mag = if neg { -c } else { c };
        let term = match base {
            None => Expr::Num(mag),
            Some(b) if mag.is_one() => b,
            Some(b) => Expr::mul(Expr::Num(mag), b),
        };
        out = Some(match (out, neg) {
            (None, false) => term,
            (None, true) => match term {
                Expr::Num(q) => Expr::Num(-q),
                t => Expr::Neg(Box::new(t)),
            },
            (Some(acc), false) => Expr::add(acc, term),
            (Some(acc), true) => Expr::sub(acc, term),
        });
    }
    Ok(out.unwrap_or_else(|| Expr::int(0)))
}

/// `prod [Y_i = y_i]`, or 1 for the empty conjunction.
pub fn event_expr(net: &BayesNet, event: &[(String, u32)]) -> Result<Expr, BnError> {
    let mut factors = Vec::new();
    for (name, v) in event {
        let node = net.node(name).ok_or_else(|| BnError::UnknownNode(name.clone()))?;
        let m = node.support.ok_or_else(|| BnError::Node {
            node: name.clone(),
            message: "is continuous; events need discrete nodes".into(),
        })?;
        if m > 1 {
            factors.push(indicator_expr(name, *v, m)?);
        } else if *v != 0 {
            indicator_expr(name, *v, m)?;
        }
    }
    Ok(if factors.is_empty() {
        Expr::int(1)
    } else {
        Expr::product(factors)
    })
}

struct Builder<'a> {
    net: &'a BayesNet,
    taken: BTreeSet<String>,
    program: LoopProgram,
    auxiliaries: Vec<String>,
}

impl<'a> Builder<'a> {
    fn new(net: &'a BayesNet) -> Self {
        let mut taken: BTreeSet<String> = net.nodes.iter().map(|n| n.name.clone()).collect();
        taken.extend(net.param_names());
        Builder {
            net,
            taken,
            program: LoopProgram {
                params: net.params.clone(),
                ..Default::default()
            },
            auxiliaries: Vec::new(),
        }
    }

    fn fresh(&mut self, base: String) -> String {
        let mut name = base;
        while self.taken.contains(&name) {
            name.push('_');
        }
        self.taken.insert(name.clone());
        name
    }

    fn assign(&mut self, target: &str, choice: Choice) {
        self.program.updates.push(Update {
            target: target.to_string(),
            choice,
        });
    }

    fn aux(&mut self, base: String, support: Option<u32>, choice: Choice) -> String {
        let name = self.fresh(base);
        if let Some(m) = support {
            self.program.supports.push((name.clone(), m));
        }
        self.assign(&name, choice);
        self.auxiliaries.push(name.clone());
        name
    }

    fn indicators(&self, parents: &[String], given: &[u32]) -> Result<Expr, BnError> {
        let ev: Vec<(String, u32)> = parents.iter().cloned().zip(given.iter().copied()).collect();
        event_expr(self.net, &ev)
    }

    fn node(&mut self, n: &Node, opts: &CompileOptions) -> Result<(), BnError> {
        if let Some(m) = n.support {
            self.program.supports.push((n.name.clone(), m));
        }
        match &n.model {
            LocalModel::Cpt { parents, rows } => self.cpt(n, parents, rows),
            LocalModel::LinearGaussian(g) => {
                self.assign(&n.name, Choice::Single(gauss_expr(g)));
                Ok(())
            }
            LocalModel::Clg {
                discrete_parents,
                cases,
            } => {
                let mut terms = Vec::new();
                for (l, (given, g)) in cases.iter().enumerate() {
                    let ind = self.indicators(discrete_parents, given)?;
                    let draw = if opts.clg_split {
                        let v = self.aux(format!("{}_{}", n.name, l + 1), None, Choice::Single(gauss_expr(g)));
                        Expr::sym(&v)
                    } else {
                        gauss_expr(g)
                    };
                    terms.push(times(ind, draw));
                }
                self.assign(&n.name, Choice::Single(Expr::sum(terms)));
                Ok(())
            }
            LocalModel::Deterministic(e) => {
                self.assign(&n.name, Choice::Single(e.clone()));
                Ok(())
            }
        }
    }

    fn cpt(
        &mut self,
        n: &Node,
        parents: &[String],
        rows: &[super::model::CptRow],
    ) -> Result<(), BnError> {
        let m = n.support.unwrap();
        if parents.contains(&n.name) {
            return self.self_dependent_cpt(n, parents, rows);
        }
        if parents.is_empty() {
            let row = &rows[0];
            self.assign(&n.name, value_choice(Expr::int(1), &row.probs, m));
            return Ok(());
        }
        let mut auxes = Vec::new();
        for (l, row) in rows.iter().enumerate() {
            let ind = self.indicators(parents, &row.given)?;
            let v = self.aux(format!("{}_{}", n.name, l + 1), Some(m), value_choice(ind, &row.probs, m));
            auxes.push(Expr::sym(&v));
        }
        self.assign(&n.name, Choice::Single(Expr::sum(auxes)));
        Ok(())
    }

    /// A binary node that depends on its own previous value, encoded inline
    /// as `sum [others] * bern(p) * [X_prev = x]`, which is linear in `X`.
    fn self_dependent_cpt(&mut self, n: &Node, parents: &[String], rows: &[super::model::CptRow]) -> Result<(), BnError> {
        if n.support != Some(2) {
            return Err(BnError::Node {
                node: n.name.clone(),
                message: "only two-valued nodes may depend on their own previous value".into(),
            });
        }
        let me = parents.iter().position(|p| *p == n.name).unwrap();
        let mut terms = Vec::new();
        for row in rows {
            let others: Vec<String> = parents.iter().filter(|p| **p != n.name).cloned().collect();
            let other_vals: Vec<u32> = row
                .given
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != me)
                .map(|(_, v)| *v)
                .collect();
            let mut factors = Vec::new();
            if !others.is_empty() {
                factors.push(self.indicators(&others, &other_vals)?);
            }
            let p1 = &row.probs[1];
            if *p1 == Expr::int(0) {
                continue;
            }
            if *p1 != Expr::int(1) {
                factors.push(Expr::dist(Dist::Bernoulli(p1.clone())));
            }
            factors.push(indicator_expr(&n.name, row.given[me], 2)?);
            terms.push(Expr::product(factors));
        }
        let e = if terms.is_empty() { Expr::int(0) } else { Expr::sum(terms) };
        self.assign(&n.name, Choice::Single(e));
        Ok(())
    }

    fn finish(self) -> Result<Compiled, BnError> {
        let report = validate(&self.program);
        if !report.is_empty() {
            let msg: Vec<String> = report.iter().map(|v| v.to_string()).collect();
            return Err(BnError::Encoding(msg.join("; ")));
        }
        Ok(Compiled {
            program: self.program,
            auxiliaries: self.auxiliaries,
        })
    }
}

fn times(a: Expr, b: Expr) -> Expr {
    if a == Expr::int(1) {
        b
    } else {
        Expr::mul(a, b)
    }
}

fn gauss_expr(g: &LinearGaussian) -> Expr {
    Expr::dist(Dist::Gaussian {
        mean: g.mean_expr(),
        variance: g.variance.clone(),
    })
}

/// `scale * X` where `X` takes value `v` with probability `probs[v]`.
fn value_choice(scale: Expr, probs: &[Expr], m: u32) -> Choice {
    if m == 2 {
        return Choice::Binary {
            left: scale,
            prob: probs[1].clone(),
            right: Expr::int(0),
        };
    }
    if m == 1 {
        return Choice::Single(Expr::int(0));
    }
    let mut branches = Vec::new();
    for (v, p) in probs.iter().enumerate() {
        let value = match v {
            0 => Expr::int(0),
            1 => scale.clone(),
            _ if scale == Expr::int(1) => Expr::int(v as i64),
            _ => Expr::mul(Expr::int(v as i64), scale.clone()),
        };
        branches.push((value, p.clone()));
    }
    Choice::Multi(branches)
}

/// Encodes a static network; one loop iteration draws one joint sample.
pub fn compile_bn(net: &BayesNet, opts: &CompileOptions) -> Result<Compiled, BnError> {
    let mut b = Builder::new(net);
    for n in &net.nodes {
        b.node(n, opts)?;
    }
    b.finish()
}

/// Encodes a temporal network; iteration `n` is time slice `n`.
pub fn compile_dynbn(d: &DynBayesNet, opts: &CompileOptions) -> Result<Compiled, BnError> {
    let mut b = Builder::new(&d.slice);
    for n in &d.slice.nodes {
        b.node(n, opts)?;
    }
    for (name, e) in &d.initial {
        b.program.inits.push((name.clone(), e.clone()));
    }
    b.finish()
}

/// Names of the variables appended by [`compile_sampling_monitor`].
#[derive(Clone, Debug)]
pub struct Monitor {
    pub compiled: Compiled,
    pub evidence: String,
    pub go_on: String,
    pub count: String,
}

/// Appends a rejection-sampling monitor to a static network: `count` ends up
/// counting the samples drawn until the evidence first holds, so its limit
/// expectation is `1/P(evidence)`.
pub fn compile_sampling_monitor(
    net: &BayesNet,
    evidence: &[(String, u32)],
    opts: &CompileOptions,
) -> Result<Monitor, BnError> {
    let mut b = Builder::new(net);
    for n in &net.nodes {
        b.node(n, opts)?;
    }
    let ind = event_expr(net, evidence)?;
    let ev = b.aux("evidence".into(), Some(2), Choice::Single(ind));
    let go_on = b.fresh("continue".into());
    b.program.supports.push((go_on.clone(), 2));
    b.program.inits.push((go_on.clone(), Expr::int(1)));
    b.assign(
        &go_on,
        Choice::Single(Expr::mul(Expr::sym(&go_on), Expr::sub(Expr::int(1), Expr::sym(&ev)))),
    );
    b.auxiliaries.push(go_on.clone());
    let count = b.fresh("count".into());
    b.program.inits.push((count.clone(), Expr::int(1)));
    b.assign(&count, Choice::Single(Expr::add(Expr::sym(&count), Expr::sym(&go_on))));
    b.auxiliaries.push(count.clone());
    Ok(Monitor {
        compiled: b.finish()?,
        evidence: ev,
        go_on,
        count,
    })
}
