//! Moment recurrences of loop programs and their closed forms.
//!
//! A moment `E[x1^a1 * ... * xk^ak]` after iteration `n + 1` is obtained by
//! replacing each variable, from the last updated to the first, with the
//! expectation of its update raised to the needed power. What remains is a
//! linear combination of moments after iteration `n`. Solving these
//! recurrences bottom-up yields closed forms in `n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::loopmodel::lower::{Draw, DrawKind, LowerError, Lowering};
use crate::loopmodel::{validate, LoopProgram, Violation};
use crate::recsolve::{solve_first_order, verify_solution, FirstOrderRecurrence};
use crate::symcore::rfpoly::{mono_degree, mono_mul};
use crate::symcore::{Atom, AtomMono, Rational, RationalFunction, RfPoly, Sequence};

pub const DEFAULT_DEGREE_CAP: u32 = 64;

/// A monomial over program variables, as sorted `(variable index, exponent)`
/// pairs. The empty key is the constant 1.
pub type Key = AtomMono;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("program is not well formed: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("in `{var}`: {err}")]
    Lower { var: String, err: LowerError },
    #[error("unknown program variable `{0}`")]
    UnknownVariable(String),
    #[error("moment degree exceeds the cap of {cap}: {}", .chain.join(" -> "))]
    DegreeCap { cap: u32, chain: Vec<String> },
    #[error("moments depend on each other cyclically: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("moment {k} of `{draw}` is not available")]
    MomentUnavailable { draw: String, k: u32 },
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub degree_cap: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            degree_cap: DEFAULT_DEGREE_CAP,
        }
    }
}

/// `E[lhs](n+1) = sum coeff * E[key](n) + constant`.
#[derive(Clone, Debug)]
pub struct MomentRecurrence {
    pub lhs: Key,
    pub linear: Vec<(Key, RationalFunction)>,
    pub constant: RationalFunction,
}

impl MomentRecurrence {
    pub fn self_coeff(&self) -> RationalFunction {
        self.linear
            .iter()
            .find(|(k, _)| *k == self.lhs)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(RationalFunction::zero)
    }
}

struct LoweredUpdate {
    branches: Vec<(RationalFunction, RfPoly)>,
    draws: HashMap<Atom, DrawKind>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub sequence: Sequence,
    pub initial: RationalFunction,
}

/// Analysis state for one program. Recurrences and closed forms are computed
/// on demand and memoized.
pub struct Engine {
    names: Vec<String>,
    supports: Vec<Option<u32>>,
    updates: Vec<LoweredUpdate>,
    init_polys: Vec<(RfPoly, HashMap<Atom, DrawKind>)>,
    cfg: EngineConfig,
    upd_pow: HashMap<(usize, u32), RfPoly>,
    recurrences: BTreeMap<Key, MomentRecurrence>,
    solved: BTreeMap<Key, Solution>,
    assumptions: BTreeSet<String>,
}

impl Engine {
    pub fn new(p: &LoopProgram, cfg: EngineConfig) -> Result<Engine, EngineError> {
        let report = validate(p);
        if !report.is_empty() {
            return Err(EngineError::Invalid(report));
        }
        let names: Vec<String> = p.variables().iter().map(|s| s.to_string()).collect();
        let n = names.len() as Atom;
        let params: Vec<String> = p.params.iter().map(|d| d.name.clone()).collect();
        let supports = names.iter().map(|v| p.support_of(v)).collect();
        let mut updates = Vec::new();
        for (i, u) in p.updates.iter().enumerate() {
            let resolve = |s: &str| {
                p.index_of(s).map(|j| if j == i { n + j as Atom } else { j as Atom })
            };
            let mut low = Lowering::new(&resolve, params.clone(), 2 * n);
            let wrap = |err| EngineError::Lower {
                var: u.target.clone(),
                err,
            };
            let mut branches = Vec::new();
            for (e, pr) in u.choice.branches() {
                let poly = low.lower(&e).map_err(wrap)?;
                let prob = low.constant(&pr).map_err(wrap)?;
                if !prob.is_zero() {
                    branches.push((prob, poly));
                }
            }
            updates.push(LoweredUpdate {
                branches,
                draws: draw_map(&low.draws),
            });
        }
        let mut init_polys = Vec::new();
        for v in &names {
            let none = |_: &str| None;
            let mut low = Lowering::new(&none, params.clone(), 2 * n);
            let poly = low.lower(&p.init_of(v)).map_err(|err| EngineError::Lower {
                var: v.clone(),
                err,
            })?;
            init_polys.push((poly, draw_map(&low.draws)));
        }
        Ok(Engine {
            names,
            supports,
            updates,
            init_polys,
            cfg,
            upd_pow: HashMap::new(),
            recurrences: BTreeMap::new(),
            solved: BTreeMap::new(),
            assumptions: BTreeSet::new(),
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.names
    }

    pub fn assumptions(&self) -> &BTreeSet<String> {
        &self.assumptions
    }

    pub fn solved(&self) -> &BTreeMap<Key, Solution> {
        &self.solved
    }

    pub fn recurrences(&self) -> &BTreeMap<Key, MomentRecurrence> {
        &self.recurrences
    }

    /// Builds the key for `[(name, exponent)]`, merging repeated names.
    pub fn key(&self, powers: &[(&str, u32)]) -> Result<Key, EngineError> {
        let mut m: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in powers {
            let i = self
                .names
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| EngineError::UnknownVariable(v.to_string()))?;
            if *e > 0 {
                *m.entry(i as u32).or_default() += e;
            }
        }
        Ok(m.into_iter().collect())
    }

    pub fn render_key(&self, k: &Key) -> String {
        if k.is_empty() {
            return "1".to_string();
        }
        k.iter()
            .map(|(i, e)| match e {
                1 => self.names[*i as usize].clone(),
                _ => format!("{}^{e}", self.names[*i as usize]),
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    fn atom_support(&self, a: Atom) -> Option<u32> {
        let n = self.names.len() as Atom;
        if a < 2 * n {
            self.supports[(a % n) as usize]
        } else {
            None
        }
    }

    /// Expected value of `E[x_i'^alpha]` given the pre-update state, as a
    /// polynomial in earlier updated variables and the old value of `x_i`.
    fn upd_pow(&mut self, i: usize, alpha: u32) -> Result<RfPoly, EngineError> {
        if let Some(p) = self.upd_pow.get(&(i, alpha)) {
            return Ok(p.clone());
        }
        let u = &self.updates[i];
        let mut acc = RfPoly::zero();
        for (prob, branch) in &u.branches {
            let powered = branch.pow(alpha);
            let expected = expect_draws(&powered, &u.draws)?;
            acc = acc.add(&expected.scale(prob));
        }
        let acc = acc.reduce_supports(|a| self.atom_support(a));
        self.upd_pow.insert((i, alpha), acc.clone());
        Ok(acc)
    }

    /// Reduces a key under the declared supports.
    pub fn reduce_key(&self, k: &Key) -> Vec<(Key, RationalFunction)> {
        let p = RfPoly::monomial(k.clone(), RationalFunction::one())
            .reduce_supports(|a| self.supports.get(a as usize).copied().flatten());
        p.into_terms().collect()
    }

    /// The recurrence for `E[key]`.
    pub fn extract_recurrence(&mut self, key: &Key) -> Result<MomentRecurrence, EngineError> {
        if let Some(r) = self.recurrences.get(key) {
            return Ok(r.clone());
        }
        let n = self.names.len() as Atom;
        let mut poly = RfPoly::monomial(key.clone(), RationalFunction::one());
        for i in (0..n as usize).rev() {
            let deg = poly.degree_in(i as Atom);
            if deg == 0 {
                continue;
            }
            let mut pows = Vec::with_capacity(deg as usize + 1);
            for a in 0..=deg {
                pows.push(if a == 0 { RfPoly::one() } else { self.upd_pow(i, a)? });
            }
            poly = poly.flat_map_monomials(|m| {
                let mut e = 0;
                let rest: AtomMono = m
                    .iter()
                    .filter(|(a, x)| {
                        if *a == i as Atom {
                            e = *x;
                            false
                        } else {
                            true
                        }
                    })
                    .cloned()
                    .collect();
                if e == 0 {
                    return RfPoly::monomial(rest, RationalFunction::one());
                }
                pows[e as usize].flat_map_monomials(|pm| {
                    RfPoly::monomial(mono_mul(pm, &rest), RationalFunction::one())
                })
            });
            poly = poly.reduce_supports(|a| self.atom_support(a));
        }
        let mut linear = Vec::new();
        let mut constant = RationalFunction::zero();
        for (m, c) in poly.into_terms() {
            if m.is_empty() {
                constant = c;
            } else {
                let k: Key = m.iter().map(|(a, e)| (a - n, *e)).collect();
                linear.push((k, c));
            }
        }
        let rec = MomentRecurrence {
            lhs: key.clone(),
            linear,
            constant,
        };
        self.recurrences.insert(key.clone(), rec.clone());
        Ok(rec)
    }

    /// `E[key]` before the first iteration, assuming independent initializers.
    pub fn initial_moment(&self, key: &Key) -> Result<RationalFunction, EngineError> {
        let mut acc = RationalFunction::one();
        for (i, e) in key {
            let (poly, draws) = &self.init_polys[*i as usize];
            let m = expect_draws(&poly.pow(*e), draws)?;
            let c = m.as_constant().expect("initializers mention no program variables");
            acc = &acc * &c;
        }
        Ok(acc)
    }

    /// Closes the worklist from `key` and solves every moment it reaches.
    pub fn solve(&mut self, key: &Key) -> Result<Solution, EngineError> {
        if let Some(s) = self.solved.get(key) {
            return Ok(s.clone());
        }
        // worklist closure with back-pointers for diagnostics
        let mut parent: HashMap<Key, Key> = HashMap::new();
        let mut stack = vec![key.clone()];
        let mut seen: BTreeSet<Key> = BTreeSet::from([key.clone()]);
        while let Some(k) = stack.pop() {
            if mono_degree(&k) > self.cfg.degree_cap {
                let mut chain = vec![self.render_key(&k)];
                let mut cur = &k;
                while let Some(p) = parent.get(cur) {
                    chain.push(self.render_key(p));
                    cur = p;
                }
                chain.reverse();
                return Err(EngineError::DegreeCap {
                    cap: self.cfg.degree_cap,
                    chain,
                });
            }
            if self.solved.contains_key(&k) {
                continue;
            }
            let rec = self.extract_recurrence(&k)?;
            for (dep, _) in &rec.linear {
                if seen.insert(dep.clone()) {
                    parent.insert(dep.clone(), k.clone());
                    stack.push(dep.clone());
                }
            }
        }
        // solve in dependency order
        let mut state: HashMap<Key, bool> = HashMap::new();
        let mut path = Vec::new();
        self.solve_rec(key, &mut state, &mut path)?;
        Ok(self.solved[key].clone())
    }

    fn solve_rec(
        &mut self,
        key: &Key,
        state: &mut HashMap<Key, bool>,
        path: &mut Vec<Key>,
    ) -> Result<(), EngineError> {
        if self.solved.contains_key(key) {
            return Ok(());
        }
        match state.get(key) {
            Some(false) => {
                let start = path.iter().position(|k| k == key).unwrap_or(0);
                let mut cycle: Vec<String> = path[start..].iter().map(|k| self.render_key(k)).collect();
                cycle.push(self.render_key(key));
                return Err(EngineError::Cycle(cycle));
            }
            Some(true) => return Ok(()),
            None => {}
        }
        state.insert(key.clone(), false);
        path.push(key.clone());
        let rec = self.recurrences[key].clone();
        for (dep, _) in &rec.linear {
            if dep != key {
                self.solve_rec(dep, state, path)?;
            }
        }
        path.pop();
        state.insert(key.clone(), true);

        let (frec, initial) = self.first_order(&rec)?;
        let solved = solve_first_order(&frec);
        self.assumptions.extend(solved.assumptions);
        self.solved.insert(
            key.clone(),
            Solution {
                sequence: solved.sequence,
                initial,
            },
        );
        Ok(())
    }

    /// The recurrence for `rec.lhs` with all other moments replaced by their
    /// closed forms.
    fn first_order(&self, rec: &MomentRecurrence) -> Result<(FirstOrderRecurrence, RationalFunction), EngineError> {
        let mut g = Sequence::constant(rec.constant.clone());
        for (dep, c) in &rec.linear {
            if *dep != rec.lhs {
                g = g.add(&self.solved[dep].sequence.scale(c));
            }
        }
        let initial = self.initial_moment(&rec.lhs)?;
        Ok((FirstOrderRecurrence::new(rec.self_coeff(), g, initial.clone()), initial))
    }

    /// Closed form of `E[prod name^exp](n)`, reducing by supports first.
    pub fn moment(&mut self, powers: &[(&str, u32)]) -> Result<Sequence, EngineError> {
        let key = self.key(powers)?;
        self.moment_of_key(&key)
    }

    pub fn moment_of_key(&mut self, key: &Key) -> Result<Sequence, EngineError> {
        let mut acc = Sequence::zero();
        for (k, c) in self.reduce_key(key) {
            let s = if k.is_empty() {
                Sequence::constant(RationalFunction::one())
            } else {
                self.solve(&k)?.sequence
            };
            acc = acc.add(&s.scale(&c));
        }
        Ok(acc)
    }

    /// `E[poly](n)` for a polynomial in the variables given by keys.
    pub fn moment_of_poly(&mut self, terms: &[(Key, RationalFunction)]) -> Result<Sequence, EngineError> {
        let mut acc = Sequence::zero();
        for (k, c) in terms {
            acc = acc.add(&self.moment_of_key(k)?.scale(c));
        }
        Ok(acc)
    }

    /// Re-checks every solved moment against its recurrence and initial value.
    pub fn verify_all(&self) -> Result<usize, String> {
        for (k, sol) in &self.solved {
            let rec = &self.recurrences[k];
            let (frec, _) = self.first_order(rec).map_err(|e| e.to_string())?;
            if !verify_solution(&frec, &sol.sequence) {
                return Err(format!("closed form of E[{}] fails its recurrence", self.render_key(k)));
            }
        }
        Ok(self.solved.len())
    }

    /// Expectation of a polynomial over the current variable values, as a
    /// linear combination of moments plus a constant.
    pub fn expectation_normal_form(
        &self,
        p: &LoopProgram,
        e: &crate::loopmodel::Expr,
    ) -> Result<(Vec<(Key, RationalFunction)>, RationalFunction), EngineError> {
        let n = self.names.len() as Atom;
        let params: Vec<String> = p.params.iter().map(|d| d.name.clone()).collect();
        let resolve = |s: &str| p.index_of(s).map(|j| j as Atom);
        let mut low = Lowering::new(&resolve, params, 2 * n);
        let poly = low.lower(e).map_err(|err| EngineError::Lower {
            var: "expression".into(),
            err,
        })?;
        let ex = expect_draws(&poly, &draw_map(&low.draws))?
            .reduce_supports(|a| self.supports.get(a as usize).copied().flatten());
        let mut linear = Vec::new();
        let mut constant = RationalFunction::zero();
        for (m, c) in ex.into_terms() {
            if m.is_empty() {
                constant = c;
            } else {
                linear.push((m, c));
            }
        }
        Ok((linear, constant))
    }

    pub fn render_recurrence(&self, r: &MomentRecurrence) -> String {
        let mut parts: Vec<String> = r
            .linear
            .iter()
            .map(|(k, c)| format!("{}*E[{}](n)", wrap(&c.to_string()), self.render_key(k)))
            .collect();
        if !r.constant.is_zero() || parts.is_empty() {
            parts.push(r.constant.to_string());
        }
        format!("E[{}](n+1) = {}", self.render_key(&r.lhs), parts.join(" + "))
    }
}

fn wrap(s: &str) -> String {
    if s.contains(' ') {
        format!("({s})")
    } else {
        s.to_string()
    }
}

fn draw_map(draws: &[Draw]) -> HashMap<Atom, DrawKind> {
    draws.iter().map(|d| (d.atom, d.kind.clone())).collect()
}

/// Raw moment `k >= 1` of a draw.
pub fn draw_moment(kind: &DrawKind, k: u32) -> Result<RfPoly, EngineError> {
    Ok(match kind {
        DrawKind::Bernoulli(p) => RfPoly::constant(p.clone()),
        DrawKind::Gaussian { variance } => {
            if k % 2 == 1 {
                RfPoly::zero()
            } else {
                let mut dfact = Rational::from_integer(1.into());
                let mut j = k as i64 - 1;
                while j > 1 {
                    dfact *= Rational::from_integer(j.into());
                    j -= 2;
                }
                variance.pow(k / 2).scale(&RationalFunction::constant(dfact))
            }
        }
        DrawKind::UnitUniform => RfPoly::constant(RationalFunction::constant(Rational::new(
            1.into(),
            (k as i64 + 1).into(),
        ))),
        DrawKind::Moments(ms) => match ms.get(k as usize - 1) {
            Some(m) => RfPoly::constant(m.clone()),
            None => {
                return Err(EngineError::MomentUnavailable {
                    draw: "moments(...)".into(),
                    k,
                })
            }
        },
    })
}

/// Replaces every product of draw powers by the product of their moments.
/// Draws are independent of each other and of everything else.
pub fn expect_draws(p: &RfPoly, draws: &HashMap<Atom, DrawKind>) -> Result<RfPoly, EngineError> {
    if draws.is_empty() {
        return Ok(p.clone());
    }
    let mut out = RfPoly::zero();
    let mut memo: HashMap<(Atom, u32), RfPoly> = HashMap::new();
    for (m, c) in p.terms() {
        let mut factor = RfPoly::constant(c.clone());
        let mut rest = Vec::new();
        for &(a, e) in m {
            match draws.get(&a) {
                Some(kind) => {
                    let mom = match memo.get(&(a, e)) {
                        Some(x) => x.clone(),
                        None => {
                            let x = draw_moment(kind, e)?;
                            memo.insert((a, e), x.clone());
                            x
                        }
                    };
                    factor = factor.mul(&mom);
                }
                None => rest.push((a, e)),
            }
        }
        out = out.add(&factor.mul(&RfPoly::monomial(rest, RationalFunction::one())));
    }
    Ok(out)
}

/// Solves the goals `(monomial, k)`: each goal is `E[monomial^k]`.
pub fn compute_mbis(
    p: &LoopProgram,
    goals: &[(Vec<(&str, u32)>, u32)],
    cfg: EngineConfig,
) -> Result<(Engine, Vec<Sequence>), EngineError> {
    let mut engine = Engine::new(p, cfg)?;
    let mut out = Vec::new();
    for (mono, k) in goals {
        let powered: Vec<(&str, u32)> = mono.iter().map(|(v, e)| (*v, e * k)).collect();
        out.push(engine.moment(&powered)?);
    }
    Ok((engine, out))
}
