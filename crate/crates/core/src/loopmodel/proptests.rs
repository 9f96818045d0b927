use proptest::prelude::*;

use super::*;
use crate::symcore::rat;

fn leaf(syms: &'static [&'static str]) -> BoxedStrategy<Expr> {
    prop_oneof![
        (0i64..20).prop_map(Expr::int),
        (-9i64..9, 1i64..7).prop_map(|(n, d)| Expr::Num(rat(n, d))),
        prop::sample::select(syms).prop_map(Expr::sym),
    ]
    .boxed()
}

fn not_num(e: &Expr) -> bool {
    !matches!(e, Expr::Num(_))
}

fn expr(syms: &'static [&'static str]) -> BoxedStrategy<Expr> {
    leaf(syms)
        .prop_recursive(4, 24, 3, move |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner.clone())
                    .prop_filter("literal quotients fold", |(a, b)| not_num(a) || not_num(b))
                    .prop_map(|(a, b)| Expr::div(a, b)),
                inner.clone().prop_filter("negated literals fold", not_num).prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::pow(a, k)),
                inner.clone().prop_map(|p| Expr::dist(Dist::Bernoulli(p))),
                (inner.clone(), inner.clone()).prop_map(|(m, v)| Expr::dist(Dist::Gaussian { mean: m, variance: v })),
                (inner.clone(), inner).prop_map(|(lo, hi)| Expr::dist(Dist::Uniform { lo, hi })),
            ]
        })
        .boxed()
}

fn choice(syms: &'static [&'static str]) -> BoxedStrategy<Choice> {
    let prob = || {
        prop_oneof![
            Just(Expr::sym("p")),
            (0i64..=4).prop_map(|n| Expr::Num(rat(n, 4))),
        ]
    };
    prop_oneof![
        expr(syms).prop_map(Choice::Single),
        (expr(syms), prob(), expr(syms)).prop_map(|(left, prob, right)| Choice::Binary { left, prob, right }),
        prop::collection::vec((expr(syms), prob()), 1..4).prop_map(Choice::Multi),
    ]
    .boxed()
}

fn program() -> impl Strategy<Value = LoopProgram> {
    (
        expr(&["p"]),
        choice(&["p", "x"]),
        choice(&["p", "x", "y"]),
        prop::option::of((-3i64..3, 1i64..4)),
        any::<bool>(),
    )
        .prop_map(|(init, ux, uy, dom, support)| LoopProgram {
            params: vec![ParamDecl {
                name: "p".into(),
                domain: dom.map(|(lo, w)| (rat(lo, 1), rat(lo + w, 1))),
            }],
            supports: if support { vec![("y".into(), 2)] } else { vec![] },
            inits: vec![("x".into(), init)],
            updates: vec![
                Update {
                    target: "x".into(),
                    choice: ux,
                },
                Update {
                    target: "y".into(),
                    choice: uy,
                },
            ],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn print_parse_round_trip(p in program()) {
        let text = pretty_print(&p);
        let once = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&once, &p, "{}", text);
        let again = parse_program(&pretty_print(&once)).unwrap();
        prop_assert_eq!(again, once);
    }
}
