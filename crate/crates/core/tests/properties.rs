//! Randomized invariants across compiler, engine, queries and oracles.

mod common;

use std::collections::HashMap;

use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psolve::bncompiler::{compile_bn, CompileOptions, Network};
use psolve::loopmodel::{lower::Lowering, parse_program, pretty_print, validate, Choice};
use psolve::momentengine::{Engine, EngineConfig};
use psolve::oracle::{enumerate_discrete, DEFAULT_STATE_CAP};
use psolve::queries::{
    distribution_from_moments, forward_filter, Analysis, Horizon, QueryError, QueryOptions, Target, Value,
};
use psolve::symcore::{Limit, Rational, RationalFunction};

use common::*;

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_network(seed: u64) -> serde_json::Value {
    let mut rng = rng_from(seed);
    match rng.random_range(0..4) {
        0 => gaussian_bn(&mut rng, false),
        1 => gaussian_bn(&mut rng, true),
        _ => {
            let nodes = rng.random_range(1..=12);
            discrete_bn(&mut rng, nodes, 3, &["t"])
        }
    }
}

fn analysis_of(doc: &serde_json::Value) -> Analysis {
    Analysis::new(&load(doc), QueryOptions::default()).unwrap()
}

fn k(q: Rational) -> RationalFunction {
    RationalFunction::constant(q)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn compiled_programs_are_well_formed(seed in any::<u64>()) {
        let doc = random_network(seed);
        let bn = static_net(&doc);
        for clg_split in [true, false] {
            let p = compile_bn(&bn, &CompileOptions { clg_split }).unwrap().program;
            prop_assert!(validate(&p).is_empty(), "{:?}", validate(&p));
            let text = pretty_print(&p);
            prop_assert_eq!(parse_program(&text).unwrap(), p.clone(), "{}", text);
            let none = |_: &str| None;
            for u in &p.updates {
                let mut low = Lowering::new(&none, p.params.iter().map(|d| d.name.clone()), 0);
                let probs: Vec<RationalFunction> = u.choice.probs().into_iter().map(|e| low.constant(e).unwrap()).collect();
                for q in probs.iter().filter_map(|r| r.as_constant()) {
                    prop_assert!(q >= Rational::zero() && q <= Rational::one());
                }
                if let Choice::Multi(_) = u.choice {
                    let total = probs.iter().fold(RationalFunction::zero(), |a, b| &a + b);
                    prop_assert!(total.is_one());
                }
            }
        }
    }

    #[test]
    fn joint_table_is_a_distribution(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let nodes = rng.random_range(1..=12);
        let bn = static_net(&discrete_bn(&mut rng, nodes, 3, &[]));
        let t = enumerate_discrete(&bn, &HashMap::new(), DEFAULT_STATE_CAP).unwrap();
        prop_assert_eq!(t.total(), Rational::one());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn static_moments_are_constant_after_one_step(seed in any::<u64>()) {
        let doc = random_network(seed);
        let bn = static_net(&doc);
        let mut a = analysis_of(&doc);
        for node in &bn.nodes {
            let s = a.moment_sequence(&[(node.name.clone(), 1)]).unwrap();
            prop_assert!(s.valid_from() <= 1, "{}: {}", node.name, s);
            prop_assert!(s.tail().as_constant().is_some(), "{}: {}", node.name, s);
        }
    }

    #[test]
    fn cpt_rows_are_mutually_exclusive(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let nodes = rng.random_range(2..=8);
        let bn = static_net(&discrete_bn(&mut rng, nodes, 3, &[]));
        let c = compile_bn(&bn, &CompileOptions::default()).unwrap();
        let mut e = Engine::new(&c.program, EngineConfig::default()).unwrap();
        let mut by_node: HashMap<String, Vec<String>> = HashMap::new();
        for aux in &c.auxiliaries {
            let (node, _) = aux.rsplit_once('_').unwrap();
            by_node.entry(node.to_string()).or_default().push(aux.clone());
        }
        for rows in by_node.values() {
            for (i, x) in rows.iter().enumerate() {
                for y in &rows[i + 1..] {
                    let s = e.moment(&[(x.as_str(), 1), (y.as_str(), 1)]).unwrap();
                    prop_assert!(s.value(1).is_zero(), "E[{}*{}] = {}", x, y, s);
                }
            }
        }
    }

    #[test]
    fn binary_moments_coincide(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let nodes = rng.random_range(1..=6);
        let doc = discrete_bn(&mut rng, nodes, 2, &["t"]);
        let bn = static_net(&doc);
        let mut a = analysis_of(&doc);
        for node in &bn.nodes {
            let first = a.moment_sequence(&[(node.name.clone(), 1)]).unwrap();
            for power in 2..=4 {
                prop_assert_eq!(&a.moment_sequence(&[(node.name.clone(), power)]).unwrap(), &first);
            }
        }
    }

    #[test]
    fn conditionals_match_enumeration(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let nodes = rng.random_range(2..=10);
        let doc = discrete_bn(&mut rng, nodes, 3, &[]);
        let bn = static_net(&doc);
        let table = enumerate_discrete(&bn, &HashMap::new(), DEFAULT_STATE_CAP).unwrap();
        let mut a = analysis_of(&doc);
        let name = |i: usize| bn.nodes[i].name.clone();
        let target = vec![(name(rng.random_range(0..nodes)), rng.random_range(1..=2))];
        let evidence: Vec<(String, u32)> = {
            let mut picks: Vec<usize> = (0..nodes).collect();
            picks.retain(|_| rng.random_bool(0.3));
            picks.truncate(2);
            if picks.is_empty() { picks.push(nodes - 1); }
            picks.into_iter().map(|i| (name(i), rng.random_range(0..2))).collect()
        };
        let want = table.conditional(&borrowed(&target), &borrowed(&evidence)).unwrap();
        let got = a.conditional(&Target::Moment(target.clone()), &evidence, None);
        match (got, want) {
            (Ok(r), Some(w)) => prop_assert_eq!(r.scalar().unwrap(), &k(w)),
            (Err(QueryError::ZeroEvidence(_)), None) => {}
            (g, w) => prop_assert!(false, "engine {:?}, oracle {:?}", g, w),
        }
    }

    #[test]
    fn monitor_route_matches_the_reciprocal(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let nodes = rng.random_range(1..=6);
        let doc = discrete_bn(&mut rng, nodes, 2, &[]);
        let bn = static_net(&doc);
        let mut a = analysis_of(&doc);
        let mut evidence = Vec::new();
        for n in &bn.nodes {
            if rng.random_bool(0.5) {
                evidence.push((n.name.clone(), rng.random_range(0..2)));
            }
        }
        prop_assume!(!evidence.is_empty());
        match a.expected_samples(&evidence, None, true) {
            Ok(rep) => prop_assert_eq!(rep.routes_agree(), Some(true)),
            Err(QueryError::ZeroEvidence(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn moments_determine_the_distribution(weights in prop::collection::vec(0u32..10, 1..=5)) {
        prop_assume!(weights.iter().any(|w| *w > 0));
        let total: u32 = weights.iter().sum();
        let probs: Vec<Rational> = weights.iter().map(|w| Rational::new((*w).into(), total.into())).collect();
        let m = probs.len() as u32;
        let moments: Vec<RationalFunction> = (1..m)
            .map(|j| {
                let s: Rational = probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p * Rational::from_integer(i.pow(j).into()))
                    .sum();
                k(s)
            })
            .collect();
        let back = distribution_from_moments(&moments, m).unwrap();
        prop_assert_eq!(back, probs.into_iter().map(k).collect::<Vec<_>>());
    }

    #[test]
    fn filtering_yields_probability_vectors(seed in any::<u64>(), obs_states in 2u32..=3) {
        let mut rng = rng_from(seed);
        let doc = hidden_markov(&mut rng, obs_states);
        let Network::Dynamic(d) = load(&doc) else { unreachable!() };
        let mut a = analysis_of(&doc);
        let Value::Vector(prior) = a.distribution("S", Some(0)).unwrap().value else { unreachable!() };
        let len = rng.random_range(1..=6);
        let obs: Vec<Option<u32>> = (0..len)
            .map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..obs_states)))
            .collect();
        match forward_filter(&d, "S", "O", &prior, &obs) {
            Ok(posts) => {
                for p in &posts {
                    let q: Vec<Rational> = p.iter().map(|v| v.as_constant().unwrap()).collect();
                    prop_assert!(q.iter().all(|x| *x >= Rational::zero() && *x <= Rational::one()));
                    prop_assert_eq!(q.iter().sum::<Rational>(), Rational::one());
                }
            }
            Err(QueryError::ZeroEvidence(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
        let blind = forward_filter(&d, "S", "O", &prior, &vec![None; len]).unwrap();
        let rain = a.predict(&[("S".into(), 1)], 1, &Horizon::At(len as u64)).unwrap();
        prop_assert_eq!(&blind[len - 1][1], rain.scalar().unwrap());
    }

    #[test]
    fn self_transition_limit(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let stay = Rational::new(rng.random_range(0..20).into(), 20.into());
        let leave = Rational::new(rng.random_range(1..20).into(), 20.into());
        let src = format!("x := 1; while true {{ x := bern({stay})*x + bern({leave})*(1 - x) }}");
        let p = parse_program(&src).unwrap();
        let mut e = Engine::new(&p, EngineConfig::default()).unwrap();
        let s = e.moment(&[("x", 1)]).unwrap();
        let want = &leave / (Rational::one() - &stay + &leave);
        prop_assert_eq!(s.limit(&HashMap::new()), Limit::Converges(k(want)));
    }
}
