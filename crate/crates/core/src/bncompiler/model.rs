//! Bayesian network data model and JSON ingestion. See `docs/bn-schema.md`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::Deserialize;

use crate::loopmodel::{parse_expr, Expr, ParamDecl};
use crate::symcore::{parse_rational, Rational, RationalFunction};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BnError {
    #[error("malformed network document: {0}")]
    Schema(String),
    #[error("node `{node}`: {message}")]
    Node { node: String, message: String },
    #[error("the network has a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("the encoding violates the loop restrictions: {0}")]
    Encoding(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

fn node_err(node: &str, message: impl Into<String>) -> BnError {
    BnError::Node {
        node: node.to_string(),
        message: message.into(),
    }
}

/// `X ~ N(intercept + sum coeff * parent, variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussian {
    pub intercept: Expr,
    pub coeffs: Vec<(String, Expr)>,
    pub variance: Expr,
}

impl LinearGaussian {
    pub fn mean_expr(&self) -> Expr {
        let mut terms = Vec::new();
        if self.intercept != Expr::int(0) || self.coeffs.is_empty() {
            terms.push(self.intercept.clone());
        }
        for (p, c) in &self.coeffs {
            if *c == Expr::int(0) {
                continue;
            }
            let term = if *c == Expr::int(1) {
                Expr::sym(p)
            } else {
                Expr::mul(c.clone(), Expr::sym(p))
            };
            terms.push(term);
        }
        if terms.is_empty() {
            return Expr::int(0);
        }
        Expr::sum(terms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptRow {
    /// Values of the parents, in the order of `parents`.
    pub given: Vec<u32>,
    /// Probability of each value `0..m`.
    pub probs: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalModel {
    Cpt { parents: Vec<String>, rows: Vec<CptRow> },
    LinearGaussian(LinearGaussian),
    Clg {
        discrete_parents: Vec<String>,
        cases: Vec<(Vec<u32>, LinearGaussian)>,
    },
    Deterministic(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    /// Number of values for a discrete node.
    pub support: Option<u32>,
    pub states: Vec<String>,
    pub model: LocalModel,
}

impl Node {
    pub fn is_discrete(&self) -> bool {
        self.support.is_some()
    }

    pub fn parents(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |s: &str| {
            if !out.iter().any(|x| x == s) {
                out.push(s.to_string());
            }
        };
        match &self.model {
            LocalModel::Cpt { parents, .. } => parents.iter().for_each(|p| push(p)),
            LocalModel::LinearGaussian(g) => g.coeffs.iter().for_each(|(p, _)| push(p)),
            LocalModel::Clg { discrete_parents, cases } => {
                discrete_parents.iter().for_each(|p| push(p));
                for (_, g) in cases {
                    g.coeffs.iter().for_each(|(p, _)| push(p));
                }
            }
            LocalModel::Deterministic(e) => e.symbols().iter().for_each(|p| push(p)),
        }
        out
    }
}

/// A static network with nodes kept in a topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    pub params: Vec<ParamDecl>,
    pub nodes: Vec<Node>,
}

/// A two-slice temporal network. Parents listed in `inter_edges` refer to the
/// previous time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct DynBayesNet {
    pub slice: BayesNet,
    pub inter_edges: BTreeMap<String, Vec<String>>,
    pub initial: BTreeMap<String, Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Static(BayesNet),
    Dynamic(DynBayesNet),
}

impl Network {
    pub fn net(&self) -> &BayesNet {
        match self {
            Network::Static(b) => b,
            Network::Dynamic(d) => &d.slice,
        }
    }
}

impl BayesNet {
    pub fn node(&self, name: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    /// `(parent, child)` pairs within one slice.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for n in &self.nodes {
            for p in n.parents() {
                if p != n.name && self.node(&p).is_some() {
                    out.push((p, n.name.clone()));
                }
            }
        }
        out
    }

    /// Index of a state name or a numeric value of a discrete node.
    pub fn state_index(&self, node: &str, value: &str) -> Result<u32, BnError> {
        let n = self.node(node).ok_or_else(|| BnError::UnknownNode(node.to_string()))?;
        state_of(n, value)
    }
}

fn state_of(n: &Node, value: &str) -> Result<u32, BnError> {
    let m = n
        .support
        .ok_or_else(|| node_err(&n.name, "is continuous and has no states"))?;
    if let Some(i) = n.states.iter().position(|s| s == value) {
        return Ok(i as u32);
    }
    match value.parse::<u32>() {
        Ok(v) if v < m => Ok(v),
        _ => Err(node_err(&n.name, format!("`{value}` is not one of its {m} values"))),
    }
}

// Raw document shapes.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    params: Vec<RawParam>,
    nodes: Vec<RawNode>,
    #[serde(default)]
    inter_edges: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    initial: BTreeMap<String, String>,
    #[serde(default, rename = "note")]
    _note: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    domain: Option<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    name: String,
    states: Option<Vec<String>>,
    support: Option<u32>,
    model: RawModel,
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
enum RawValue {
    Int(u32),
    Name(String),
}

impl RawValue {
    fn text(&self) -> String {
        match self {
            RawValue::Int(i) => i.to_string(),
            RawValue::Name(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    #[serde(default)]
    given: Vec<RawValue>,
    probs: Option<Vec<String>>,
    p: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGauss {
    #[serde(default)]
    given: Vec<RawValue>,
    #[serde(default = "zero_text")]
    intercept: String,
    #[serde(default)]
    coeffs: BTreeMap<String, String>,
    variance: String,
}

fn zero_text() -> String {
    "0".into()
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawModel {
    Cpt {
        #[serde(default)]
        parents: Vec<String>,
        rows: Vec<RawRow>,
    },
    Lingauss {
        #[serde(default = "zero_text")]
        intercept: String,
        #[serde(default)]
        coeffs: BTreeMap<String, String>,
        variance: String,
    },
    Clg {
        discrete_parents: Vec<String>,
        cases: Vec<RawGauss>,
    },
    Det {
        expr: String,
    },
}

/// Parses and validates a network document.
pub fn load_bn(text: &str) -> Result<Network, BnError> {
    let raw: RawDoc = serde_json::from_str(text).map_err(|e| BnError::Schema(e.to_string()))?;
    let dynamic = match raw.kind.as_str() {
        "bn" => false,
        "dynbn" => true,
        other => return Err(BnError::Schema(format!("unknown network type `{other}`"))),
    };
    if !dynamic && (!raw.inter_edges.is_empty() || !raw.initial.is_empty()) {
        return Err(BnError::Schema("`inter_edges` and `initial` need type `dynbn`".into()));
    }
    let mut params = Vec::new();
    for p in &raw.params {
        let domain = match &p.domain {
            Some((lo, hi)) => {
                let lo = parse_rational(lo).map_err(|e| BnError::Schema(format!("param `{}`: {e}", p.name)))?;
                let hi = parse_rational(hi).map_err(|e| BnError::Schema(format!("param `{}`: {e}", p.name)))?;
                if lo > hi {
                    return Err(BnError::Schema(format!("param `{}` has an empty domain", p.name)));
                }
                Some((lo, hi))
            }
            None => None,
        };
        params.push(ParamDecl {
            name: p.name.clone(),
            domain,
        });
    }

    // Supports first, so that rows can name parent states.
    let mut shells = Vec::new();
    for rn in &raw.nodes {
        let (support, states) = match (&rn.states, rn.support) {
            (Some(s), None) => {
                if s.len() < 2 {
                    return Err(node_err(&rn.name, "needs at least two states"));
                }
                (Some(s.len() as u32), s.clone())
            }
            (None, Some(m)) => {
                if m < 1 {
                    return Err(node_err(&rn.name, "support must be positive"));
                }
                (Some(m), (0..m).map(|i| i.to_string()).collect())
            }
            (None, None) => (None, Vec::new()),
            (Some(_), Some(_)) => return Err(node_err(&rn.name, "give either `states` or `support`, not both")),
        };
        shells.push(Node {
            name: rn.name.clone(),
            support,
            states,
            model: LocalModel::Deterministic(Expr::int(0)),
        });
    }
    let net_shell = BayesNet {
        params: params.clone(),
        nodes: shells.clone(),
    };
    let mut nodes = Vec::new();
    for (rn, shell) in raw.nodes.iter().zip(shells) {
        let model = convert_model(&net_shell, &shell, &rn.model)?;
        nodes.push(Node { model, ..shell });
    }
    let net = BayesNet { params, nodes };
    let mut inter_edges = BTreeMap::new();
    let mut initial = BTreeMap::new();
    if dynamic {
        for (k, v) in raw.inter_edges {
            if net.node(&k).is_none() {
                return Err(BnError::UnknownNode(k));
            }
            inter_edges.insert(k, v);
        }
        for (k, v) in raw.initial {
            if net.node(&k).is_none() {
                return Err(BnError::UnknownNode(k));
            }
            let e = parse_expr(&v).map_err(|e| node_err(&k, format!("initial value `{v}`: {e}")))?;
            initial.insert(k, e);
        }
    }
    let net = check_network(net, &inter_edges)?;
    Ok(if dynamic {
        Network::Dynamic(DynBayesNet {
            slice: net,
            inter_edges,
            initial,
        })
    } else {
        Network::Static(net)
    })
}

fn expr_field(node: &str, what: &str, text: &str) -> Result<Expr, BnError> {
    parse_expr(text).map_err(|e| node_err(node, format!("{what} `{text}`: {e}")))
}

fn convert_gauss(
    net: &BayesNet,
    node: &Node,
    intercept: &str,
    coeffs: &BTreeMap<String, String>,
    variance: &str,
) -> Result<LinearGaussian, BnError> {
    let mut cs = Vec::new();
    for (p, c) in coeffs {
        if net.node(p).is_none() {
            return Err(node_err(&node.name, format!("unknown parent `{p}`")));
        }
        cs.push((p.clone(), expr_field(&node.name, "coefficient", c)?));
    }
    Ok(LinearGaussian {
        intercept: expr_field(&node.name, "intercept", intercept)?,
        coeffs: cs,
        variance: expr_field(&node.name, "variance", variance)?,
    })
}

fn convert_model(net: &BayesNet, node: &Node, raw: &RawModel) -> Result<LocalModel, BnError> {
    let name = &node.name;
    let given_of = |parents: &[String], given: &[RawValue]| -> Result<Vec<u32>, BnError> {
        if given.len() != parents.len() {
            return Err(node_err(
                name,
                format!("row gives {} parent values for {} parents", given.len(), parents.len()),
            ));
        }
        parents
            .iter()
            .zip(given)
            .map(|(p, v)| {
                let pn = net
                    .node(p)
                    .ok_or_else(|| node_err(name, format!("unknown parent `{p}`")))?;
                state_of(pn, &v.text())
            })
            .collect()
    };
    Ok(match raw {
        RawModel::Cpt { parents, rows } => {
            let m = node
                .support
                .ok_or_else(|| node_err(name, "a CPT node needs `states` or `support`"))?;
            let mut out = Vec::new();
            for r in rows {
                let given = given_of(parents, &r.given)?;
                let probs = match (&r.probs, &r.p) {
                    (Some(ps), None) => {
                        if ps.len() != m as usize {
                            return Err(node_err(
                                name,
                                format!("row has {} probabilities for {m} values", ps.len()),
                            ));
                        }
                        ps.iter()
                            .map(|t| expr_field(name, "probability", t))
                            .collect::<Result<Vec<_>, _>>()?
                    }
                    (None, Some(p)) => {
                        if m != 2 {
                            return Err(node_err(name, "`p` is only for two-valued nodes; use `probs`"));
                        }
                        let p = expr_field(name, "probability", p)?;
                        let q = match &p {
                            Expr::Num(q) => Expr::Num(Rational::one() - q),
                            other => Expr::sub(Expr::int(1), other.clone()),
                        };
                        vec![q, p]
                    }
                    _ => return Err(node_err(name, "each row needs exactly one of `probs` or `p`")),
                };
                out.push(CptRow { given, probs });
            }
            LocalModel::Cpt {
                parents: parents.clone(),
                rows: out,
            }
        }
        RawModel::Lingauss {
            intercept,
            coeffs,
            variance,
        } => LocalModel::LinearGaussian(convert_gauss(net, node, intercept, coeffs, variance)?),
        RawModel::Clg {
            discrete_parents,
            cases,
        } => {
            let mut out = Vec::new();
            for c in cases {
                let given = given_of(discrete_parents, &c.given)?;
                out.push((given, convert_gauss(net, node, &c.intercept, &c.coeffs, &c.variance)?));
            }
            LocalModel::Clg {
                discrete_parents: discrete_parents.clone(),
                cases: out,
            }
        }
        RawModel::Det { expr } => LocalModel::Deterministic(expr_field(name, "expression", expr)?),
    })
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const RESERVED: &[&str] = &[
    "while", "true", "param", "support", "in", "choose", "bern", "gauss", "uniform", "moments", "n",
];

/// Checks all invariants and returns the network with its nodes in a
/// topological order (declaration order among unconstrained nodes).
pub fn check_network(
    net: BayesNet,
    inter_edges: &BTreeMap<String, Vec<String>>,
) -> Result<BayesNet, BnError> {
    let params: BTreeSet<String> = net.param_names().into_iter().collect();
    let mut seen = BTreeSet::new();
    for n in &net.nodes {
        if !is_identifier(&n.name) || RESERVED.contains(&n.name.as_str()) {
            return Err(node_err(&n.name, "node names must be identifiers other than keywords"));
        }
        if params.contains(&n.name) {
            return Err(node_err(&n.name, "clashes with a parameter name"));
        }
        if !seen.insert(n.name.clone()) {
            return Err(node_err(&n.name, "declared twice"));
        }
    }
    for p in &params {
        if !is_identifier(p) || RESERVED.contains(&p.as_str()) {
            return Err(BnError::Schema(format!("parameter name `{p}` is not an identifier")));
        }
    }
    let previous = |node: &str, parent: &str| {
        inter_edges
            .get(node)
            .is_some_and(|v| v.iter().any(|x| x == parent))
    };
    for (k, v) in inter_edges {
        for p in v {
            if net.node(p).is_none() {
                return Err(BnError::UnknownNode(p.clone()));
            }
            if p != k {
                return Err(node_err(
                    k,
                    format!("may depend on the previous slice of itself only, not of `{p}`"),
                ));
            }
        }
    }
    for n in &net.nodes {
        check_node(&net, n, &params, &previous)?;
    }
    // Topological order ignoring previous-slice edges.
    let idx: HashMap<&str, usize> = net.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect();
    let deps: Vec<Vec<usize>> = net
        .nodes
        .iter()
        .map(|n| {
            n.parents()
                .iter()
                .filter(|p| !previous(&n.name, p))
                .filter_map(|p| idx.get(p.as_str()).copied())
                .collect()
        })
        .collect();
    let order = topo_order(&deps).map_err(|cyc| BnError::Cycle(cyc.iter().map(|&i| net.nodes[i].name.clone()).collect()))?;
    let nodes = order.into_iter().map(|i| net.nodes[i].clone()).collect();
    Ok(BayesNet {
        params: net.params,
        nodes,
    })
}

/// Kahn's algorithm preferring the lowest index; on failure returns one cycle.
fn topo_order(deps: &[Vec<usize>]) -> Result<Vec<usize>, Vec<usize>> {
    let n = deps.len();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&i| !done[i] && deps[i].iter().all(|&d| done[d]));
        match next {
            Some(i) => {
                done[i] = true;
                order.push(i);
            }
            None => {
                // Walk unfinished dependencies until a node repeats.
                let mut path = vec![(0..n).find(|&i| !done[i]).unwrap()];
                loop {
                    let cur = *path.last().unwrap();
                    let d = *deps[cur].iter().find(|&&d| !done[d]).unwrap();
                    if let Some(pos) = path.iter().position(|&x| x == d) {
                        let mut cyc: Vec<usize> = path[pos..].to_vec();
                        cyc.reverse();
                        cyc.push(cyc[0]);
                        return Err(cyc);
                    }
                    path.push(d);
                }
            }
        }
    }
    Ok(order)
}

fn check_symbols(
    node: &str,
    e: &Expr,
    allowed: &dyn Fn(&str) -> bool,
    what: &str,
) -> Result<(), BnError> {
    for s in e.symbols() {
        if !allowed(&s) {
            return Err(node_err(node, format!("{what} refers to `{s}`, which is not allowed there")));
        }
    }
    Ok(())
}

fn check_node(
    net: &BayesNet,
    n: &Node,
    params: &BTreeSet<String>,
    previous: &dyn Fn(&str, &str) -> bool,
) -> Result<(), BnError> {
    let is_param = |s: &str| params.contains(s);
    for p in n.parents() {
        let pn = net
            .node(&p)
            .ok_or_else(|| node_err(&n.name, format!("unknown parent `{p}`")))?;
        if p == n.name && !previous(&n.name, &p) {
            return Err(node_err(&n.name, "is its own parent without a previous-slice edge"));
        }
        if n.is_discrete() && !pn.is_discrete() {
            return Err(node_err(
                &n.name,
                format!("is discrete but has the continuous parent `{p}`"),
            ));
        }
    }
    match &n.model {
        LocalModel::Cpt { parents, rows } => {
            let supports: Vec<u32> = parents
                .iter()
                .map(|p| net.node(p).and_then(|x| x.support).unwrap())
                .collect();
            let total: u64 = supports.iter().map(|&m| m as u64).product();
            let mut covered = BTreeSet::new();
            for r in rows {
                if !covered.insert(r.given.clone()) {
                    return Err(node_err(&n.name, format!("CPT row {:?} appears twice", r.given)));
                }
                let mut sum = RationalFunction::zero();
                for pe in &r.probs {
                    check_symbols(&n.name, pe, &is_param, "a probability")?;
                    let v = pe
                        .to_ratfun()
                        .map_err(|e| node_err(&n.name, format!("probability: {e}")))?;
                    if let Some(q) = v.as_constant() {
                        if q < Rational::zero() || q > Rational::one() {
                            return Err(node_err(&n.name, format!("probability {q} is outside [0, 1]")));
                        }
                    }
                    sum = &sum + &v;
                }
                if sum != RationalFunction::one() {
                    return Err(node_err(
                        &n.name,
                        format!("CPT row {:?} sums to {sum}, not 1", r.given),
                    ));
                }
            }
            if covered.len() as u64 != total {
                return Err(node_err(
                    &n.name,
                    format!("CPT has {} rows but its parents have {total} joint values", covered.len()),
                ));
            }
        }
        LocalModel::LinearGaussian(g) => check_gauss(&n.name, g, params)?,
        LocalModel::Clg {
            discrete_parents,
            cases,
        } => {
            let mut total: u64 = 1;
            for p in discrete_parents {
                let pn = net.node(p).unwrap();
                match pn.support {
                    Some(m) => total *= m as u64,
                    None => {
                        return Err(node_err(&n.name, format!("`{p}` is listed as discrete but is continuous")))
                    }
                }
            }
            let mut covered = BTreeSet::new();
            for (given, g) in cases {
                if !covered.insert(given.clone()) {
                    return Err(node_err(&n.name, format!("case {given:?} appears twice")));
                }
                check_gauss(&n.name, g, params)?;
            }
            if covered.len() as u64 != total {
                return Err(node_err(
                    &n.name,
                    format!("{} cases given for {total} discrete parent values", covered.len()),
                ));
            }
        }
        LocalModel::Deterministic(e) => {
            let ok = |s: &str| params.contains(s) || net.node(s).is_some();
            check_symbols(&n.name, e, &ok, "the expression")?;
            if e.contains_dist() {
                return Err(node_err(&n.name, "a deterministic node cannot draw random values"));
            }
        }
    }
    if n.is_discrete() && matches!(n.model, LocalModel::LinearGaussian(_) | LocalModel::Clg { .. }) {
        return Err(node_err(&n.name, "a Gaussian node cannot have discrete states"));
    }
    Ok(())
}

fn check_gauss(node: &str, g: &LinearGaussian, params: &BTreeSet<String>) -> Result<(), BnError> {
    let is_param = |s: &str| params.contains(s);
    check_symbols(node, &g.intercept, &is_param, "the intercept")?;
    check_symbols(node, &g.variance, &is_param, "the variance")?;
    for (_, c) in &g.coeffs {
        check_symbols(node, c, &is_param, "a coefficient")?;
    }
    Ok(())
}
