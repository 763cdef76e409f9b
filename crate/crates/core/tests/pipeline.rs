use std::collections::BTreeMap;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use parsynth::corpus;
use parsynth::frontend::LoopNest;
use parsynth::interp::{bindings_from_json, slice_rows, Bindings, CompiledNest, Sampler, SamplerConfig};
use parsynth::lifting::{check_projection, LiftKind};
use parsynth::pipeline::{
    emit_plan, load_plan, map_order_independent, parallelize, work_fraction, Outcome, PipelineConfig, PlanError,
    PlanKind, Runtime, SimTree,
};
use parsynth::synthesis::JoinDef;

fn outcome(name: &'static str) -> &'static Outcome {
    static CACHE: OnceLock<std::sync::Mutex<BTreeMap<&'static str, &'static Outcome>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(o) = cache.lock().unwrap().get(name) {
        return o;
    }
    let e = corpus::entry(name).unwrap();
    let nest = LoopNest::from_source(e.source).unwrap();
    let o: &'static Outcome = Box::leak(Box::new(parallelize(name, &nest, &PipelineConfig::default()).unwrap()));
    cache.lock().unwrap().insert(name, o);
    o
}

fn nest(name: &str) -> LoopNest {
    LoopNest::from_source(corpus::entry(name).unwrap().source).unwrap()
}

fn runtime(name: &'static str) -> Runtime {
    Runtime::new(&outcome(name).plan).unwrap()
}

fn matrix(rows: &[Vec<i64>], width: usize) -> Bindings {
    bindings_from_json(&json!({ "n": rows.len(), "m": width, "A": rows })).unwrap()
}

fn grid() -> impl Strategy<Value = (Vec<Vec<i64>>, usize)> {
    (0usize..4).prop_flat_map(|w| (prop::collection::vec(prop::collection::vec(-20i64..20, w), 0..10), Just(w)))
}

fn tree_for(n: usize, seed: u64, empties: bool) -> SimTree {
    SimTree::random(n, &mut ChaCha8Rng::seed_from_u64(seed), empties)
}

#[test]
fn plans_round_trip() {
    for name in ["sum", "mtls", "bp", "lcs"] {
        let p = &outcome(name).plan;
        let text = emit_plan(p);
        let back = load_plan(&text).unwrap();
        assert_eq!(emit_plan(&back), text, "{name}");
        assert_eq!(back.kind, p.kind);
    }
}

#[test]
fn foreign_versions_and_garbage_are_rejected() {
    let mut p = outcome("sum").plan.clone();
    p.version = 99;
    assert!(matches!(load_plan(&emit_plan(&p)), Err(PlanError::Version(99))));
    assert!(matches!(load_plan("{\"kind\": 3}"), Err(PlanError::Document(_))));
}

#[test]
fn failed_plans_do_not_run() {
    let p = &outcome("lcs").plan;
    assert_eq!(p.kind, PlanKind::Failed);
    assert!(matches!(Runtime::new(p), Err(PlanError::NotRunnable(PlanKind::Failed))));
}

#[test]
fn depth_accounting() {
    for name in ["sum", "mtls", "bp", "lcs", "max_top_subarray"] {
        let p = &outcome(name).plan;
        let k = p.k.unwrap();
        assert!(k <= p.n, "{name}");
        if p.kind == PlanKind::FullDc {
            assert!(p.parallel_join.is_some(), "{name}");
        } else if k == p.n {
            assert_eq!(p.kind, PlanKind::Failed, "{name}");
        }
        if p.kind == PlanKind::MapOnly {
            assert!(k < p.n, "{name}");
        }
    }
    assert_eq!(outcome("max_top_subarray").plan.k, Some(2));
}

#[test]
fn joins_fit_the_loop_budget() {
    for name in ["sum", "mtls", "bp", "mbbs"] {
        let p = &outcome(name).plan;
        if let Some(j) = &p.memoryless_join {
            assert!(JoinDef::from_doc(j).unwrap().body.depth() < p.n, "{name}");
        }
        if let Some(j) = &p.parallel_join {
            let k = p.k.unwrap();
            assert!(JoinDef::from_doc(j).unwrap().body.depth() < k, "{name}");
        }
        let lifted = LoopNest::from_source(&p.program).unwrap();
        for a in &p.aux {
            let ty = lifted.state_type(&a.name).unwrap();
            assert!(ty.rank() < p.n, "{name}: {} is {ty}", a.name);
        }
    }
}

#[test]
fn map_calls_commute() {
    for name in ["bp", "mtls", "sum"] {
        let rt = runtime(name);
        let n = nest(name);
        let s = Sampler::new(&n.shape, &n.inputs, SamplerConfig { budget: 50, ..Default::default() });
        for (k, x) in s.stream().enumerate().step_by(5) {
            assert!(map_order_independent(&rt, &x, k as u64).unwrap(), "{name}: {x:?}");
        }
    }
}

#[test]
fn map_only_estimates_inner_work() {
    let p = &outcome("bp").plan;
    let f = work_fraction(&LoopNest::from_source(&p.program).unwrap(), 8);
    assert!(f > 0.5 && f < 1.0, "{f}");
    assert!(outcome("bp").report_text().contains("work fraction"));
}

#[test]
fn simulation_rejects_trees_that_miss_rows() {
    let rt = runtime("sum");
    let x = matrix(&[vec![1], vec![2], vec![3]], 1);
    assert!(matches!(rt.simulate(&x, &SimTree::balanced(2)), Err(PlanError::Tree(_, 3))));
}

#[test]
fn lifted_loops_project_to_the_original() {
    for name in ["mtls", "bp", "mbbs"] {
        let n = nest(name);
        let s = Sampler::new(&n.shape, &n.inputs, SamplerConfig { seed: 77, budget: 300, ..Default::default() });
        let inputs: Vec<_> = s.stream().collect();
        let lifts = &outcome(name).lifts;
        assert!(!lifts.is_empty(), "{name}");
        for l in lifts.iter().filter(|l| l.kind == LiftKind::Nontrivial) {
            check_projection(&n, &l.lifted, &inputs).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_cover_their_rows(n in 0usize..40, seed: u64, empties: bool) {
        let t = tree_for(n, seed, empties);
        prop_assert!(t.covers(n));
        prop_assert!(SimTree::left_spine(n).covers(n) && SimTree::right_spine(n).covers(n) && SimTree::balanced(n).covers(n));
    }

    #[test]
    fn sum_simulation_is_sequential((rows, w) in grid(), seed: u64, empties: bool) {
        let rt = runtime("sum");
        let x = matrix(&rows, w);
        let t = tree_for(rows.len(), seed, empties);
        prop_assert_eq!(rt.simulate(&x, &t).unwrap(), rt.sequential(&x).unwrap());
    }

    #[test]
    fn mtls_is_a_homomorphism((rows, w) in grid(), at in 0usize..10) {
        let rt = runtime("mtls");
        let x = matrix(&rows, w);
        let n = rows.len();
        let at = at.min(n);
        let shape = &rt.nest.shape;
        let a = rt.h(&slice_rows(shape, &x, 0, at)).unwrap();
        let b = rt.h(&slice_rows(shape, &x, at, n)).unwrap();
        prop_assert_eq!(rt.join(&x, &a, &b).unwrap(), rt.h(&x).unwrap());
    }

    #[test]
    fn bp_map_only_matches_the_loop((rows, w) in grid(), seed: u64) {
        let rt = runtime("bp");
        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|v| v.rem_euclid(3) - 1).collect()).collect();
        let x = matrix(&rows, w);
        let t = tree_for(rows.len(), seed, true);
        let oracle = CompiledNest::new(&nest("bp"));
        let want = oracle.run_all(&x).unwrap().project(rt.original());
        prop_assert_eq!(rt.simulate(&x, &t).unwrap(), want);
    }

    #[test]
    fn identity_is_a_unit((rows, w) in grid()) {
        let rt = runtime("mtls");
        let x = matrix(&rows, w);
        let e = rt.identity(&x).unwrap();
        let h = rt.h(&x).unwrap();
        prop_assert_eq!(&rt.join(&x, &e, &h).unwrap(), &h);
        prop_assert_eq!(&rt.join(&x, &h, &e).unwrap(), &h);
    }
}
