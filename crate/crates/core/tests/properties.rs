use proptest::prelude::*;
use serde_json::json;

use parsynth::corpus;
use parsynth::expr::{name, BinOp};
use parsynth::frontend::{parse, to_equations, LoopNest};
use parsynth::interp::{bindings_from_json, CompiledNest};
use parsynth::symbolic::{classify, equivalent, normalize, NormConfig, Sym};
use parsynth::value::{Int, Value};

fn leaf() -> impl Strategy<Value = Sym> {
    prop_oneof![
        Just(Sym::State(name("s"), None)),
        Just(Sym::State(name("t"), None)),
        Just(Sym::Input(1, name("a"), None)),
        Just(Sym::Input(2, name("a"), None)),
        (-2i64..3).prop_map(Sym::int),
    ]
}

fn expr() -> impl Strategy<Value = Sym> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        (prop::sample::select(vec![BinOp::Add, BinOp::Max, BinOp::Min]), prop::collection::vec(inner, 2..4))
            .prop_map(|(op, xs)| Sym::nary(op, xs))
    })
}

fn norm_cfg() -> NormConfig {
    NormConfig { attempts: 4000, ..NormConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn int_arithmetic_is_exact(a: i64, b: i64) {
        let (x, y) = (Int::Small(a), Int::Small(b));
        prop_assert_eq!(x.add(&y).to_big(), (a as i128 + b as i128).into());
        prop_assert_eq!(x.sub(&y).to_big(), (a as i128 - b as i128).into());
        prop_assert_eq!(x.mul(&y).to_big(), (a as i128 * b as i128).into());
        prop_assert_eq!(x.add(&y).sub(&y), x);
    }

    #[test]
    fn infinities_are_identities(a: i64) {
        let v = Value::int(a);
        prop_assert_eq!(v.max(&Value::MinusInf).unwrap(), v.clone());
        prop_assert_eq!(v.min(&Value::PlusInf).unwrap(), v.clone());
        prop_assert_eq!(v.add(&Value::MinusInf).unwrap(), Value::MinusInf);
    }

    #[test]
    fn ac_variants_are_identical(xs in prop::collection::vec(leaf(), 2..5)) {
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert_eq!(Sym::nary(BinOp::Max, xs.clone()), Sym::nary(BinOp::Max, rev));
        let (head, tail) = xs.split_at(1);
        let nested = Sym::nary(BinOp::Add, vec![head[0].clone(), Sym::nary(BinOp::Add, tail.to_vec())]);
        prop_assert_eq!(nested, Sym::nary(BinOp::Add, xs));
    }

    #[test]
    fn normalization_preserves_meaning_and_never_worsens(e in expr()) {
        let cfg = norm_cfg();
        if let Ok(n) = normalize(&e, &cfg) {
            prop_assert!(equivalent(&e, &n.expr, &cfg), "{} -> {}", e, n.expr);
            prop_assert!(!n.report.cost.worse_than(&classify(&e).cost), "{} -> {}", e, n.expr);
            for s in &n.trace {
                prop_assert!(equivalent(&e, &s.expr, &cfg), "step {}", s);
            }
        }
    }

    #[test]
    fn chunked_runs_resume_where_they_stopped(
        rows in prop::collection::vec(prop::collection::vec(-9i64..9, 3), 0..8),
        at in 0usize..8,
        which in prop::sample::select(vec!["sum", "mtls", "bp", "sorted", "max_left_strip"]),
    ) {
        let nest = LoopNest::from_source(corpus::entry(which).unwrap().source).unwrap();
        let c = CompiledNest::new(&nest);
        let rows: Vec<Vec<i64>> = if which == "bp" {
            rows.iter().map(|r| r.iter().map(|v| v.rem_euclid(3) - 1).collect()).collect()
        } else {
            rows
        };
        let x = bindings_from_json(&json!({ "n": rows.len(), "m": 3, "A": rows })).unwrap();
        let at = at.min(rows.len());
        let init = c.init_state(&x).unwrap();
        let mid = c.run(&x, &init, 0, at).unwrap();
        prop_assert_eq!(c.run(&x, &mid, at, rows.len()).unwrap(), c.run_all(&x).unwrap());
    }
}

#[test]
fn conversion_is_deterministic() {
    for e in corpus::CORPUS {
        let a = to_equations(&parse(e.source).unwrap()).unwrap();
        let b = to_equations(&parse(e.source).unwrap()).unwrap();
        assert_eq!(a, b, "{}", e.name);
        let nest = LoopNest::from_source(e.source).unwrap();
        assert_eq!(LoopNest::from_source(&nest.source()).unwrap(), nest, "{}", e.name);
    }
}
