use std::path::PathBuf;

use parsynth::expr::name;
use parsynth::frontend::{parse, to_equations, Equation, LoopNest};
use parsynth::interp::{eval_nest, eval_program, Bindings, Sampler, SamplerConfig};
use parsynth::value::Value;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn sources() -> Vec<(String, String)> {
    let mut v: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "dsl"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn every_fixture_converts() {
    for (n, src) in sources() {
        LoopNest::from_source(&src).unwrap_or_else(|e| panic!("{n}: {e}"));
    }
}

#[test]
fn equations_agree_with_statements() {
    let cfg = SamplerConfig { budget: 200, ..Default::default() };
    for (n, src) in sources() {
        let p = parse(&src).unwrap();
        let nest = LoopNest::from_program(&p).unwrap();
        let s = Sampler::new(&nest.shape, &nest.inputs, cfg.clone());
        for b in s.stream() {
            assert_eq!(eval_program(&p, &b), eval_nest(&nest, &b), "{n} on {b:?}");
        }
    }
}

#[test]
fn loop_modified_sets_are_assigned_sets() {
    fn check(sys: &parsynth::frontend::EquationSystem) {
        for eq in &sys.eqs {
            if let Equation::Loop { modified, body, .. } = eq {
                assert_eq!(modified.iter().cloned().collect::<std::collections::BTreeSet<_>>(), body.assigned());
                check(body);
            }
        }
    }
    for (_, src) in sources() {
        check(&to_equations(&parse(&src).unwrap()).unwrap());
    }
}

fn grid(rows: &[&[Value]]) -> Bindings {
    let mut b = Bindings::new();
    b.insert(name("n"), Value::int(rows.len() as i64));
    b.insert(name("m"), Value::int(rows.first().map_or(0, |r| r.len()) as i64));
    b.insert(name("A"), Value::seq(rows.iter().map(|r| Value::seq(r.to_vec())).collect()));
    b
}

#[test]
fn bp_counts_self_contained_lines() {
    let src = std::fs::read_to_string(corpus_dir().join("bp.dsl")).unwrap();
    let p = parse(&src).unwrap();
    // "()", "(" and ")" padded to width 2
    let v = |x: i64| Value::int(x);
    let b = grid(&[&[v(1), v(-1)], &[v(1), v(0)], &[v(-1), v(0)]]);
    assert_eq!(eval_program(&p, &b).unwrap().get("cnt"), Some(&Value::int(1)));
}

#[test]
fn mbbs_on_unit_boxes() {
    let src = std::fs::read_to_string(corpus_dir().join("mbbs.dsl")).unwrap();
    let p = parse(&src).unwrap();
    let run = |hs: &[i64]| {
        let mut b = Bindings::new();
        b.insert(name("n"), Value::int(hs.len() as i64));
        b.insert(name("m"), Value::int(1));
        b.insert(name("l"), Value::int(1));
        b.insert(
            name("A"),
            Value::seq(hs.iter().map(|&h| Value::seq(vec![Value::seq(vec![Value::int(h)])])).collect()),
        );
        eval_program(&p, &b).unwrap().get("mbbs").cloned().unwrap()
    };
    assert_eq!(run(&[5, -3, 3]), Value::int(5));
    assert_eq!(run(&[5, 0, 3]), Value::int(8));
}
