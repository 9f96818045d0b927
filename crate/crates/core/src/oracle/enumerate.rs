use std::collections::HashMap;

use num_traits::{One, Zero};

use super::OracleError;
use crate::bncompiler::{BayesNet, LocalModel};
use crate::loopmodel::Expr;
use crate::symcore::Rational;

pub const DEFAULT_STATE_CAP: u64 = 1 << 20;

/// The full joint distribution of a discrete network.
#[derive(Clone, Debug)]
pub struct JointTable {
    pub names: Vec<String>,
    /// One row per joint assignment, in lexicographic order of values.
    pub rows: Vec<(Vec<u32>, Rational)>,
}

pub(crate) fn eval_expr(e: &Expr, env: &HashMap<String, Rational>) -> Result<Rational, OracleError> {
    Ok(e.to_ratfun()
        .map_err(|err| OracleError::Unsupported(err.to_string()))?
        .eval(env)?)
}

impl JointTable {
    fn index(&self, name: &str) -> Result<usize, OracleError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| OracleError::Unknown(name.to_string()))
    }

    pub fn total(&self) -> Rational {
        self.rows.iter().map(|(_, p)| p.clone()).sum()
    }

    /// `E[prod node^exp]`.
    pub fn expect(&self, mono: &[(&str, u32)]) -> Result<Rational, OracleError> {
        let idx: Vec<(usize, u32)> = mono
            .iter()
            .map(|(n, e)| Ok((self.index(n)?, *e)))
            .collect::<Result<_, OracleError>>()?;
        let mut acc = Rational::zero();
        for (vals, p) in &self.rows {
            if p.is_zero() {
                continue;
            }
            let mut v = p.clone();
            for (i, e) in &idx {
                v *= num_traits::pow(Rational::from_integer(vals[*i].into()), *e as usize);
            }
            acc += v;
        }
        Ok(acc)
    }

    pub fn probability(&self, event: &[(&str, u32)]) -> Result<Rational, OracleError> {
        let idx: Vec<(usize, u32)> = event
            .iter()
            .map(|(n, v)| Ok((self.index(n)?, *v)))
            .collect::<Result<_, OracleError>>()?;
        Ok(self
            .rows
            .iter()
            .filter(|(vals, _)| idx.iter().all(|(i, v)| vals[*i] == *v))
            .map(|(_, p)| p.clone())
            .sum())
    }

    /// `E[prod node^exp | event]`, or `None` when the event has probability 0.
    pub fn conditional(&self, mono: &[(&str, u32)], event: &[(&str, u32)]) -> Result<Option<Rational>, OracleError> {
        let pe = self.probability(event)?;
        if pe.is_zero() {
            return Ok(None);
        }
        let idx: Vec<(usize, u32)> = event
            .iter()
            .map(|(n, v)| Ok((self.index(n)?, *v)))
            .collect::<Result<_, OracleError>>()?;
        let restricted = JointTable {
            names: self.names.clone(),
            rows: self
                .rows
                .iter()
                .filter(|(vals, _)| idx.iter().all(|(i, v)| vals[*i] == *v))
                .cloned()
                .collect(),
        };
        Ok(Some(restricted.expect(mono)? / pe))
    }
}

/// Exact joint distribution by the chain rule over the topological order.
/// Parameters are bound by `env`.
pub fn enumerate_discrete(
    bn: &BayesNet,
    env: &HashMap<String, Rational>,
    cap: u64,
) -> Result<JointTable, OracleError> {
    let mut supports = Vec::new();
    for n in &bn.nodes {
        supports.push(n.support.ok_or_else(|| OracleError::NotDiscrete(n.name.clone()))?);
    }
    let states: u128 = supports.iter().map(|&m| m as u128).product();
    if states > cap as u128 {
        return Err(OracleError::TooManyStates { states, cap });
    }
    let index: HashMap<&str, usize> = bn.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();

    // Conditional tables indexed by parent values.
    enum Local {
        Table {
            parents: Vec<usize>,
            rows: HashMap<Vec<u32>, Vec<Rational>>,
        },
        Det(Expr),
    }
    let mut locals = Vec::new();
    for n in &bn.nodes {
        locals.push(match &n.model {
            LocalModel::Cpt { parents, rows } => {
                let mut map = HashMap::new();
                for r in rows {
                    let ps = r.probs.iter().map(|p| eval_expr(p, env)).collect::<Result<Vec<_>, _>>()?;
                    map.insert(r.given.clone(), ps);
                }
                Local::Table {
                    parents: parents.iter().map(|p| index[p.as_str()]).collect(),
                    rows: map,
                }
            }
            LocalModel::Deterministic(e) => Local::Det(e.clone()),
            _ => return Err(OracleError::NotDiscrete(n.name.clone())),
        });
    }

    let mut rows = Vec::with_capacity(states as usize);
    let mut vals = vec![0u32; bn.nodes.len()];
    // Odometer over all assignments in lexicographic order.
    'outer: loop {
        let mut p = Rational::one();
        for (i, local) in locals.iter().enumerate() {
            match local {
                Local::Table { parents, rows: table } => {
                    let key: Vec<u32> = parents.iter().map(|&j| vals[j]).collect();
                    p *= table[&key][vals[i] as usize].clone();
                }
                Local::Det(e) => {
                    let mut scope = env.clone();
                    for (j, n) in bn.nodes.iter().enumerate().take(i) {
                        scope.insert(n.name.clone(), Rational::from_integer(vals[j].into()));
                    }
                    let v = eval_expr(e, &scope)?;
                    let in_support = v.is_integer() && v >= Rational::zero() && v < Rational::from_integer(supports[i].into());
                    if !in_support {
                        return Err(OracleError::OutsideSupport {
                            node: bn.nodes[i].name.clone(),
                            value: v.to_string(),
                        });
                    }
                    if v != Rational::from_integer(vals[i].into()) {
                        p = Rational::zero();
                    }
                }
            }
            if p.is_zero() {
                break;
            }
        }
        rows.push((vals.clone(), p));
        for i in (0..vals.len()).rev() {
            vals[i] += 1;
            if vals[i] < supports[i] {
                continue 'outer;
            }
            vals[i] = 0;
        }
        break;
    }
    Ok(JointTable {
        names: bn.nodes.iter().map(|n| n.name.clone()).collect(),
        rows,
    })
}
