//! Random networks and small helpers shared by the integration suites.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use serde_json::{json, Map, Value};

use psolve::bncompiler::{load_bn, BayesNet, Network};
use psolve::loopmodel::{lower::Lowering, parse_expr};
use psolve::symcore::{Rational, RationalFunction};

/// Rational in lowest terms as text.
fn q(n: i64, d: i64) -> String {
    Rational::new(n.into(), d.into()).to_string()
}

fn prob(rng: &mut dyn RngCore) -> String {
    match rng.random_range(0..10) {
        0 => "0".into(),
        1 => "1".into(),
        _ => q(rng.random_range(1..20), 20),
    }
}

fn pick_parents(rng: &mut dyn RngCore, pool: &[String], max: usize) -> Vec<String> {
    let k = rng.random_range(0..=max.min(pool.len()));
    let mut chosen: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
    chosen.sort();
    chosen
}

fn combos(k: usize) -> Vec<Vec<u32>> {
    (0..1u32 << k)
        .map(|bits| (0..k).map(|i| (bits >> (k - 1 - i)) & 1).collect())
        .collect()
}

fn cpt_rows(rng: &mut dyn RngCore, k: usize, params: &[&str]) -> Vec<Value> {
    combos(k)
        .into_iter()
        .map(|given| {
            let p = if !params.is_empty() && rng.random_range(0..4) == 0 {
                params.choose(rng).unwrap().to_string()
            } else {
                prob(rng)
            };
            json!({"given": given, "p": p})
        })
        .collect()
}

/// Binary network with `nodes` nodes and at most `max_parents` parents per
/// node. Rows may use the given parameters (declared over [0, 1]).
pub fn discrete_bn(rng: &mut dyn RngCore, nodes: usize, max_parents: usize, params: &[&str]) -> Value {
    let mut out = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for i in 0..nodes {
        let name = format!("X{i}");
        let parents = pick_parents(rng, &names, max_parents);
        let rows = cpt_rows(rng, parents.len(), params);
        out.push(json!({"name": name, "support": 2,
            "model": {"kind": "cpt", "parents": parents, "rows": rows}}));
        names.push(name);
    }
    let decls: Vec<Value> = params.iter().map(|p| json!({"name": p, "domain": ["0", "1"]})).collect();
    json!({"type": "bn", "params": decls, "nodes": out})
}

fn small(rng: &mut dyn RngCore) -> String {
    q(rng.random_range(-20..=20), rng.random_range(1..=5))
}

fn variance(rng: &mut dyn RngCore) -> String {
    q(rng.random_range(1..=40), rng.random_range(1..=8))
}

fn gaussian_case(rng: &mut dyn RngCore, continuous: &[String]) -> Map<String, Value> {
    let mut coeffs = Map::new();
    for p in pick_parents(rng, continuous, 2) {
        coeffs.insert(p, json!(small(rng)));
    }
    let mut m = Map::new();
    m.insert("intercept".into(), json!(small(rng)));
    m.insert("coeffs".into(), Value::Object(coeffs));
    m.insert("variance".into(), json!(variance(rng)));
    m
}

/// Linear Gaussian network; with `discrete` set, binary roots come first and
/// continuous nodes switch on them. A deterministic average may close it.
pub fn gaussian_bn(rng: &mut dyn RngCore, discrete: bool) -> Value {
    let mut out = Vec::new();
    let mut binary: Vec<String> = Vec::new();
    let mut continuous: Vec<String> = Vec::new();
    if discrete {
        for i in 0..rng.random_range(1..=2) {
            let name = format!("D{i}");
            let parents = pick_parents(rng, &binary, 1);
            let rows = cpt_rows(rng, parents.len(), &[]);
            out.push(json!({"name": name, "support": 2,
                "model": {"kind": "cpt", "parents": parents, "rows": rows}}));
            binary.push(name);
        }
    }
    for i in 0..rng.random_range(2..=5) {
        let name = format!("G{i}");
        let switches = if discrete { pick_parents(rng, &binary, 2) } else { vec![] };
        let model = if switches.is_empty() {
            let mut m = gaussian_case(rng, &continuous);
            m.insert("kind".into(), json!("lingauss"));
            Value::Object(m)
        } else {
            let cases: Vec<Value> = combos(switches.len())
                .into_iter()
                .map(|given| {
                    let mut m = gaussian_case(rng, &continuous);
                    m.insert("given".into(), json!(given));
                    Value::Object(m)
                })
                .collect();
            json!({"kind": "clg", "discrete_parents": switches, "cases": cases})
        };
        out.push(json!({"name": name, "model": model}));
        continuous.push(name);
    }
    if rng.random_range(0..3) == 0 {
        let expr = format!("({})/{}", continuous.join(" + "), continuous.len());
        out.push(json!({"name": "Avg", "model": {"kind": "det", "expr": expr}}));
    }
    json!({"type": "bn", "nodes": out})
}

pub fn load(doc: &Value) -> Network {
    load_bn(&doc.to_string()).unwrap_or_else(|e| panic!("{e}\n{doc}"))
}

pub fn static_net(doc: &Value) -> BayesNet {
    match load(doc) {
        Network::Static(b) => b,
        Network::Dynamic(_) => panic!("expected a static network"),
    }
}

/// Rational function over the given parameters, written in the loop language.
pub fn rf(text: &str, params: &[&str]) -> RationalFunction {
    let e = parse_expr(text).unwrap();
    let none = |_: &str| None;
    Lowering::new(&none, params.iter().map(|s| s.to_string()), 0)
        .constant(&e)
        .unwrap()
}

pub fn constants(env: &HashMap<String, Rational>) -> HashMap<String, RationalFunction> {
    env.iter()
        .map(|(k, v)| (k.clone(), RationalFunction::constant(v.clone())))
        .collect()
}

/// Node names paired with every first moment and every degree-two monomial.
pub fn moments_up_to_two(names: &[String]) -> Vec<Vec<(String, u32)>> {
    let mut out: Vec<Vec<(String, u32)>> = names.iter().map(|n| vec![(n.clone(), 1)]).collect();
    for (i, x) in names.iter().enumerate() {
        out.push(vec![(x.clone(), 2)]);
        for y in &names[i + 1..] {
            out.push(vec![(x.clone(), 1), (y.clone(), 1)]);
        }
    }
    out
}

pub fn borrowed(m: &[(String, u32)]) -> Vec<(&str, u32)> {
    m.iter().map(|(n, e)| (n.as_str(), *e)).collect()
}

pub fn random_point(rng: &mut dyn RngCore, params: &[&str]) -> HashMap<String, Rational> {
    params
        .iter()
        .map(|p| (p.to_string(), Rational::new(rng.random_range(0..=100).into(), 100.into())))
        .collect()
}

/// Replaces parameter declarations with their values, turning a symbolic
/// network document into a numeric one.
pub fn bind_document(doc: &Value, env: &HashMap<String, Rational>) -> Value {
    fn walk(v: &Value, env: &HashMap<String, Rational>) -> Value {
        match v {
            Value::String(s) => match env.get(s) {
                Some(q) => json!(q.to_string()),
                None => v.clone(),
            },
            Value::Array(a) => Value::Array(a.iter().map(|x| walk(x, env)).collect()),
            Value::Object(m) => Value::Object(m.iter().map(|(k, x)| (k.clone(), walk(x, env))).collect()),
            other => other.clone(),
        }
    }
    let mut out = walk(doc, env);
    out.as_object_mut().unwrap().remove("params");
    out
}

/// Hidden binary state `S` with a self transition and an observation `O`
/// over `obs_states` values; `S` starts from a random distribution.
pub fn hidden_markov(rng: &mut dyn RngCore, obs_states: u32) -> Value {
    let stay: Vec<Value> = (0..2u32).rev().map(|g| json!({"given": [g], "p": prob(rng)})).collect();
    let sensor: Vec<Value> = (0..2u32)
        .rev()
        .map(|g| {
            let weights: Vec<i64> = (0..obs_states).map(|_| rng.random_range(0..5)).collect();
            let total: i64 = weights.iter().sum();
            let probs: Vec<String> = if total == 0 {
                (0..obs_states).map(|i| if i == 0 { "1".into() } else { "0".into() }).collect()
            } else {
                weights.iter().map(|w| q(*w, total)).collect()
            };
            json!({"given": [g], "probs": probs})
        })
        .collect();
    let start = q(rng.random_range(0..=8), 8);
    json!({
        "type": "dynbn",
        "nodes": [
            {"name": "S", "support": 2, "model": {"kind": "cpt", "parents": ["S"], "rows": stay}},
            {"name": "O", "support": obs_states, "model": {"kind": "cpt", "parents": ["S"], "rows": sensor}}
        ],
        "inter_edges": {"S": ["S"]},
        "initial": {"S": format!("bern({start})")}
    })
}
