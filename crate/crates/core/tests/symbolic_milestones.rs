use parsynth::expr::{name, BinOp};
use parsynth::frontend::Type;
use parsynth::symbolic::{classify, normalize, symbolic_state, unfold_join, NormConfig, NormalKind, Sym};
use parsynth::synthesis::{JoinDef, Param};

fn mtls_step() -> JoinDef {
    let seq = Type::Seq(Box::new(Type::Int));
    let p = vec![Param::new(&name("rec"), &seq), Param::new(&name("mtl_rec"), &Type::Int)];
    JoinDef::parse(
        p.clone(),
        vec![p[0].clone()],
        p,
        vec![],
        "rec := rec_l; mtl_rec := mtl_rec_l;
         for j in 0..len(rec_l) { rec[j] := rec[j] + rec_r[j]; mtl_rec := max(mtl_rec, rec[j]); }",
    )
    .unwrap()
}

fn unfold_mtl(k: usize, m: usize) -> Sym {
    let def = mtls_step();
    let start = symbolic_state(&[(name("rec"), Type::Seq(Box::new(Type::Int))), (name("mtl_rec"), Type::Int)], m);
    let states = unfold_join(&def, start, k, m).unwrap();
    states[k]["mtl_rec"].scalar().unwrap().clone()
}

#[test]
fn mtls_unfolding_costs() {
    for m in 1..=3 {
        let e = unfold_mtl(2, m);
        let r = classify(&e);
        assert_eq!(r.kind, NormalKind::Recursive(BinOp::Max), "{e}");
        assert_eq!((r.cost.size, r.cost.c), (0, 2 * m + 1), "{e}");
        let n = normalize(&e, &NormConfig::default()).unwrap();
        for s in &n.trace {
            println!("{s}");
        }
        println!("{}", n.expr);
        assert_eq!(n.report.kind, NormalKind::Recursive(BinOp::Max));
        assert_eq!((n.report.cost.size, n.report.cost.c), (0, m + 1));
    }
}
