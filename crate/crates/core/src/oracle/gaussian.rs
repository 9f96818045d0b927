use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;

use super::enumerate::{enumerate_discrete, eval_expr};
use super::OracleError;
use crate::bncompiler::{BayesNet, LinearGaussian, LocalModel};
use crate::loopmodel::Expr;
use crate::symcore::{Rational, RationalFunction};

/// Continuous nodes given one assignment of the discrete nodes.
#[derive(Clone, Debug)]
pub struct GaussianConfig {
    pub discrete: Vec<u32>,
    pub weight: Rational,
    pub mean: Vec<Rational>,
    pub cov: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug)]
pub struct GaussianSummary {
    pub discrete: Vec<String>,
    pub continuous: Vec<String>,
    pub configs: Vec<GaussianConfig>,
}

/// `constant + sum coeff_j * noise_j` with independent centered noises.
#[derive(Clone, Debug, Default)]
struct Affine {
    constant: Rational,
    noise: BTreeMap<usize, Rational>,
}

impl Affine {
    fn constant(c: Rational) -> Self {
        Affine {
            constant: c,
            noise: BTreeMap::new(),
        }
    }

    fn add_scaled(&mut self, k: &Rational, o: &Affine) {
        self.constant += k * &o.constant;
        for (j, a) in &o.noise {
            let e = self.noise.entry(*j).or_insert_with(Rational::zero);
            *e += k * a;
        }
    }
}

impl GaussianSummary {
    pub fn mean(&self, name: &str) -> Result<Rational, OracleError> {
        self.expect(&[(name, 1)])
    }

    /// `E[prod node^exp]` over discrete and continuous nodes alike.
    pub fn expect(&self, mono: &[(&str, u32)]) -> Result<Rational, OracleError> {
        let mut disc = Vec::new();
        let mut cont = Vec::new();
        for (n, e) in mono {
            if let Some(i) = self.discrete.iter().position(|x| x == n) {
                disc.push((i, *e));
            } else if let Some(i) = self.continuous.iter().position(|x| x == n) {
                cont.extend(std::iter::repeat_n(i, *e as usize));
            } else {
                return Err(OracleError::Unknown(n.to_string()));
            }
        }
        let mut acc = Rational::zero();
        for c in &self.configs {
            let mut f = c.weight.clone();
            for (i, e) in &disc {
                f *= num_traits::pow(Rational::from_integer(c.discrete[*i].into()), *e as usize);
            }
            if f.is_zero() {
                continue;
            }
            acc += f * gaussian_moment(&cont, &c.mean, &c.cov);
        }
        Ok(acc)
    }
}

/// `E[prod X_i]` for jointly Gaussian variables, by Isserlis' recursion on
/// the first factor.
pub fn gaussian_moment(idx: &[usize], mean: &[Rational], cov: &[Vec<Rational>]) -> Rational {
    let Some((&a, rest)) = idx.split_first() else {
        return Rational::from_integer(1.into());
    };
    let mut acc = &mean[a] * gaussian_moment(rest, mean, cov);
    for j in 0..rest.len() {
        let c = &cov[a][rest[j]];
        if c.is_zero() {
            continue;
        }
        let mut without: Vec<usize> = rest.to_vec();
        without.remove(j);
        acc += c * gaussian_moment(&without, mean, cov);
    }
    acc
}

/// Exact means and covariances of the continuous nodes for every assignment
/// of the discrete nodes, with the assignment weights.
pub fn gaussian_propagate(bn: &BayesNet, env: &HashMap<String, Rational>) -> Result<GaussianSummary, OracleError> {
    let discrete_net = BayesNet {
        params: bn.params.clone(),
        nodes: bn.nodes.iter().filter(|n| n.is_discrete()).cloned().collect(),
    };
    let table = enumerate_discrete(&discrete_net, env, super::DEFAULT_STATE_CAP)?;
    let continuous: Vec<&crate::bncompiler::Node> = bn.nodes.iter().filter(|n| !n.is_discrete()).collect();
    let mut configs = Vec::new();
    for (vals, w) in &table.rows {
        if w.is_zero() {
            continue;
        }
        let mut scope: HashMap<String, Rational> = env.clone();
        for (name, v) in table.names.iter().zip(vals) {
            scope.insert(name.clone(), Rational::from_integer((*v).into()));
        }
        let mut forms: HashMap<String, Affine> = HashMap::new();
        let mut variances: Vec<Rational> = Vec::new();
        for n in &continuous {
            let form = match &n.model {
                LocalModel::LinearGaussian(g) => gauss_form(g, &scope, &forms, &mut variances, &n.name)?,
                LocalModel::Clg {
                    discrete_parents,
                    cases,
                } => {
                    let key: Vec<u32> = discrete_parents
                        .iter()
                        .map(|p| table.names.iter().position(|x| x == p).map(|i| vals[i]).unwrap())
                        .collect();
                    let (_, g) = cases.iter().find(|(given, _)| *given == key).unwrap();
                    gauss_form(g, &scope, &forms, &mut variances, &n.name)?
                }
                LocalModel::Deterministic(e) => affine_of(e, &scope, &forms, &n.name)?,
                LocalModel::Cpt { .. } => unreachable!("CPT nodes are discrete"),
            };
            forms.insert(n.name.clone(), form);
        }
        let names: Vec<&str> = continuous.iter().map(|n| n.name.as_str()).collect();
        let mean = names.iter().map(|n| forms[*n].constant.clone()).collect();
        let mut cov = vec![vec![Rational::zero(); names.len()]; names.len()];
        for (i, a) in names.iter().enumerate() {
            for (k, b) in names.iter().enumerate() {
                let mut c = Rational::zero();
                for (j, x) in &forms[*a].noise {
                    if let Some(y) = forms[*b].noise.get(j) {
                        c += x * y * &variances[*j];
                    }
                }
                cov[i][k] = c;
            }
        }
        configs.push(GaussianConfig {
            discrete: vals.clone(),
            weight: w.clone(),
            mean,
            cov,
        });
    }
    Ok(GaussianSummary {
        discrete: table.names,
        continuous: continuous.iter().map(|n| n.name.clone()).collect(),
        configs,
    })
}

fn parent_form(
    p: &str,
    scope: &HashMap<String, Rational>,
    forms: &HashMap<String, Affine>,
) -> Result<Affine, OracleError> {
    if let Some(f) = forms.get(p) {
        return Ok(f.clone());
    }
    scope
        .get(p)
        .map(|v| Affine::constant(v.clone()))
        .ok_or_else(|| OracleError::Unknown(p.to_string()))
}

fn gauss_form(
    g: &LinearGaussian,
    scope: &HashMap<String, Rational>,
    forms: &HashMap<String, Affine>,
    variances: &mut Vec<Rational>,
    node: &str,
) -> Result<Affine, OracleError> {
    let mut f = Affine::constant(eval_expr(&g.intercept, scope)?);
    for (p, c) in &g.coeffs {
        let k = eval_expr(c, scope)?;
        f.add_scaled(&k, &parent_form(p, scope, forms)?);
    }
    let v = eval_expr(&g.variance, scope)?;
    if v < Rational::zero() {
        return Err(OracleError::Unsupported(format!("negative variance for `{node}`")));
    }
    f.noise.insert(variances.len(), Rational::from_integer(1.into()));
    variances.push(v);
    Ok(f)
}

fn affine_of(
    e: &Expr,
    scope: &HashMap<String, Rational>,
    forms: &HashMap<String, Affine>,
    node: &str,
) -> Result<Affine, OracleError> {
    let rf = e
        .to_ratfun()
        .map_err(|err| OracleError::Unsupported(err.to_string()))?;
    let bound: HashMap<String, RationalFunction> = scope
        .iter()
        .filter(|(k, _)| !forms.contains_key(*k))
        .map(|(k, v)| (k.clone(), RationalFunction::constant(v.clone())))
        .collect();
    let rf = rf.substitute(&bound)?;
    let den = rf
        .denom()
        .as_constant()
        .ok_or_else(|| OracleError::NotAffine(node.to_string()))?;
    let mut f = Affine::constant(Rational::zero());
    for (mono, c) in rf.numer().terms() {
        let c = c / &den;
        match mono.powers() {
            [] => f.constant += c,
            [(s, 1)] => f.add_scaled(&c, &parent_form(s.name(), scope, forms)?),
            _ => return Err(OracleError::NotAffine(node.to_string())),
        }
    }
    Ok(f)
}
