use std::collections::HashMap;

use super::*;
use crate::bncompiler::{load_bn, Network};
use crate::loopmodel::parse_program;
use crate::symcore::{int, rat, Rational};

fn static_net(text: &str) -> crate::bncompiler::BayesNet {
    match load_bn(text).unwrap() {
        Network::Static(b) => b,
        _ => unreachable!(),
    }
}

fn no_params() -> HashMap<String, Rational> {
    HashMap::new()
}

#[test]
fn single_bernoulli_table() {
    let bn = static_net(
        r#"{"type": "bn", "nodes": [{"name": "X", "support": 2, "model": {"kind": "cpt", "rows": [{"p": "4/5"}]}}]}"#,
    );
    let t = enumerate_discrete(&bn, &no_params(), DEFAULT_STATE_CAP).unwrap();
    assert_eq!(t.rows, vec![(vec![0], rat(1, 5)), (vec![1], rat(4, 5))]);
}

#[test]
fn alarm_table() {
    let bn = static_net(include_str!("../../../../data/alarm.json"));
    let t = enumerate_discrete(&bn, &no_params(), DEFAULT_STATE_CAP).unwrap();
    assert_eq!(t.rows.len(), 32);
    assert_eq!(t.total(), int(1));
    let p = t.conditional(&[("B", 1)], &[("A", 1)]).unwrap().unwrap();
    assert_eq!(crate::symcore::render_decimal(&p, 6), "0.373551");
}

#[test]
fn asia_joint_event() {
    let bn = static_net(include_str!("../../../../data/asia.json"));
    let t = enumerate_discrete(&bn, &no_params(), DEFAULT_STATE_CAP).unwrap();
    assert_eq!(t.probability(&[("Asia", 1), ("Lung", 1)]).unwrap(), rat(11, 20000));
}

#[test]
fn state_cap() {
    let bn = static_net(include_str!("../../../../data/asia.json"));
    assert!(matches!(
        enumerate_discrete(&bn, &no_params(), 100),
        Err(OracleError::TooManyStates { states: 256, cap: 100 })
    ));
}

#[test]
fn marks_propagation() {
    let bn = static_net(include_str!("../../../../data/marks.json"));
    let g = gaussian_propagate(&bn, &no_params()).unwrap();
    // -11.19 + 0.76*50.6 + 0.31*(-3.57 + 0.99*50.6)
    assert_eq!(g.mean("Stat").unwrap(), rat(4168844, 100000));
    let var = rat(1588, 10) + rat(113827561, 100000000) * rat(1128, 10) + rat(961, 10000) * rat(11025, 100);
    let second = g.expect(&[("Stat", 2)]).unwrap();
    assert_eq!(second, rat(4168844, 100000) * rat(4168844, 100000) + var);
    assert!((crate::symcore::rational::to_f64(&second) - 2035.718).abs() < 0.01);
}

#[test]
fn chain_variance_adds() {
    let bn = static_net(
        r#"{"type": "bn", "nodes": [
        {"name": "X", "model": {"kind": "lingauss", "intercept": "1", "variance": "3"}},
        {"name": "Y", "model": {"kind": "lingauss", "coeffs": {"X": "1"}, "variance": "5"}}]}"#,
    );
    let g = gaussian_propagate(&bn, &no_params()).unwrap();
    assert_eq!(g.expect(&[("Y", 2)]).unwrap() - int(1), int(8));
    assert_eq!(g.expect(&[("X", 1), ("Y", 1)]).unwrap(), int(4));
    // fourth central moment of N(1, 8): 3*64 + 6*8 + 1
    assert_eq!(g.expect(&[("Y", 4)]).unwrap(), int(241));
}

#[test]
fn bernoulli_monte_carlo() {
    let p = parse_program("while true { x := bern(1/2) }").unwrap();
    let cfg = McConfig {
        samples: 1_000_000,
        seed: 7,
        ..Default::default()
    };
    let est = mc_estimate(&p, &no_params(), &[vec![("x", 1)]], &cfg).unwrap()[0];
    assert!((est.mean - 0.5).abs() < 4.0 * est.se, "{est:?}");
}

#[test]
fn monte_carlo_is_independent_of_workers() {
    let p = parse_program("while true { x := gauss(1, 2); y := x + uniform(0, 1) [1/3] x }").unwrap();
    let cfg = McConfig {
        samples: 50_000,
        seed: 3,
        chunk: 1000,
        iterations: 2,
    };
    let targets = [vec![("y", 2)], vec![("x", 1), ("y", 1)]];
    let a = mc_estimate(&p, &no_params(), &targets, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| mc_estimate(&p, &no_params(), &targets, &cfg).unwrap());
    assert_eq!(a, b);
}
