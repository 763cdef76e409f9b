//! End-to-end acceptance checks over the bundled corpus. Each criterion prints
//! one PASS/FAIL line; the run exits nonzero if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parsynth::corpus::CORPUS;
use parsynth::expr::{name, BinOp, Name};
use parsynth::frontend::{LoopNest, Type};
use parsynth::interp::{slice_rows, Bindings, CompiledNest, Sampler, SamplerConfig};
use parsynth::lifting::{check_aux_values, check_projection, Level, LiftKind};
use parsynth::pipeline::{
    associativity, emit_plan, end_to_end, identity_law, memoryless_join, parallelize, Outcome, PipelineConfig,
    PlanKind, Runtime,
};
use parsynth::symbolic::{
    check_rule, classify, normalize, symbolic_state, unfold_join, NormConfig, NormalKind, Sym, RULES,
};
use parsynth::synthesis::{JoinDef, Param, Problem, SynthConfig};

/// Wall-clock ceiling per benchmark.
const BUDGET: Duration = Duration::from_secs(300);
const RANDOM_SPLITS: usize = 1000;
const MAX_SPLIT_LEN: usize = 64;
const TREES_PER_INPUT: usize = 500;

struct Run {
    nest: LoopNest,
    outcome: Outcome,
    elapsed: Duration,
}

fn runs() -> &'static BTreeMap<&'static str, Run> {
    static RUNS: OnceLock<BTreeMap<&'static str, Run>> = OnceLock::new();
    RUNS.get_or_init(|| {
        CORPUS
            .iter()
            .map(|e| {
                let nest = LoopNest::from_source(e.source).unwrap();
                let t = Instant::now();
                let outcome = parallelize(e.name, &nest, &PipelineConfig::default()).unwrap();
                (e.name, Run { nest, outcome, elapsed: t.elapsed() })
            })
            .collect()
    })
}

fn sampler(nest: &LoopNest) -> Sampler {
    Sampler::new(&nest.shape, &nest.inputs, SamplerConfig::default())
}

fn runtimes() -> impl Iterator<Item = (&'static str, &'static Run, Runtime)> {
    runs().iter().filter(|(_, r)| r.outcome.plan.kind != PlanKind::Failed).map(|(n, r)| {
        let rt = Runtime::new(&r.outcome.plan).unwrap();
        (*n, r, rt)
    })
}

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn aux_counts() -> Verdict {
    let want = [
        ("sum", PlanKind::FullDc, 0),
        ("min_max", PlanKind::FullDc, 0),
        ("max_bottom_strip", PlanKind::FullDc, 1),
        ("mbbs", PlanKind::FullDc, 1),
        ("mtls", PlanKind::FullDc, 1),
        ("bp", PlanKind::MapOnly, 1),
        ("max_left_strip", PlanKind::FullDc, 0),
    ];
    let mut bad = Vec::new();
    for (n, kind, aux) in want {
        let r = &runs()[n];
        let p = &r.outcome.plan;
        if p.kind != kind || p.aux_count() != aux || r.elapsed > BUDGET {
            bad.push(format!("{n}: {} with {} aux in {:?}", p.kind, p.aux_count(), r.elapsed));
        }
    }
    for e in CORPUS {
        let p = &runs()[e.name].outcome.plan;
        if !e.matches(p.kind, p.aux_count()) {
            bad.push(format!("{}: {} with {} aux, expected {:?}/{:?}", e.name, p.kind, p.aux_count(), e.kinds, e.aux));
        }
    }
    let slowest = runs().values().map(|r| r.elapsed).max().unwrap();
    if bad.is_empty() {
        Ok(format!("7/7 exact, all {} corpus entries as expected, slowest {slowest:.1?}", CORPUS.len()))
    } else {
        Err(bad.join("; "))
    }
}

fn negatives() -> Verdict {
    let bp = &runs()["bp"].outcome.plan;
    let par = bp.stage("parallel").ok_or("bp: no parallel stage")?;
    if !par.outcome.starts_with("unsat") {
        return Err(format!("bp parallel stage: {}", par.outcome));
    }
    if bp.kind != PlanKind::MapOnly {
        return Err(format!("bp is {}", bp.kind));
    }
    for n in ["lcs", "max_top_subarray"] {
        let p = &runs()[n].outcome.plan;
        if p.kind == PlanKind::FullDc {
            return Err(format!("{n} accepted as FullDC"));
        }
    }
    Ok(format!(
        "bp parallel {} -> MapOnly; lcs {}; max_top_subarray {}",
        par.outcome,
        runs()["lcs"].outcome.plan.kind,
        runs()["max_top_subarray"].outcome.plan.kind
    ))
}

fn seq_int() -> Type {
    Type::Seq(Box::new(Type::Int))
}

fn params(vars: &[(&str, Type)]) -> Vec<Param> {
    vars.iter().map(|(n, t)| Param::new(&name(n), t)).collect()
}

fn golden_joins() -> Verdict {
    let nest = &runs()["mtls"].nest;
    let inputs: Vec<Bindings> = sampler(nest).stream().collect();

    // memoryless join, compared on the variables that survive summarization
    let (sol, problem) = memoryless_join(nest, &inputs, &[], &SynthConfig::default()).map_err(|e| e.to_string())?;
    let star_vars = params(&[("rec", seq_int()), ("row_sum", Type::Int), ("mtl_rec", Type::Int)]);
    let reference = JoinDef::parse(
        star_vars.clone(),
        star_vars.clone(),
        star_vars,
        vec![],
        "mtl_rec := mtl_rec_l; rec := rec_l; row_sum := 0;
         for j in 0..len(rec_l) { row_sum := row_sum + rec_r[j]; rec[j] := rec[j] + rec_r[j]; mtl_rec := max(mtl_rec, rec[j]); }",
    )
    .map_err(|e| e.to_string())?;
    let synthesized_rights = problem.rights.compute(&sol.empty).map_err(|e| e.to_string())?;
    let reference_rights = problem.rights.compute(&vec![]).map_err(|e| e.to_string())?;
    if synthesized_rights != reference_rights {
        return Err("the synthesized empty state differs from {[0], 0, 0}".into());
    }
    let compared = [name("rec"), name("mtl_rec")];
    let none = Bindings::new();
    for (k, (l, r)) in problem.left.iter().zip(&reference_rights).enumerate() {
        let got = sol.join.eval(l, r, &none).map_err(|e| e.to_string())?.project(&compared);
        let want = reference.eval(l, r, &none).map_err(|e| e.to_string())?.project(&compared);
        if got != want {
            return Err(format!("memoryless join differs on instance {k}: {got} vs {want}"));
        }
    }
    let star_checked = problem.len();

    // parallel join of the lifted summarized loop
    let plan = &runs()["mtls"].outcome.plan;
    let rt = Runtime::new(plan).map_err(|e| e.to_string())?;
    let vars = params(&[("rec", seq_int()), ("mtl_rec", Type::Int), ("max_rec", seq_int())]);
    let reference = JoinDef::parse(
        vars.clone(),
        vars.clone(),
        vars,
        vec![],
        "rec := rec_l; max_rec := max_rec_l; mtl_rec := mtl_rec_l;
         for j in 0..len(rec_l) {
           mtl_rec := max(mtl_rec, rec_l[j] + max_rec_r[j]);
           max_rec[j] := max(max_rec_l[j], rec_l[j] + max_rec_r[j]);
           rec[j] := rec_l[j] + rec_r[j];
         }",
    )
    .map_err(|e| e.to_string())?;
    let kept: Vec<Name> = rt.kept().to_vec();
    if kept != [name("rec"), name("mtl_rec"), name("max_rec")] {
        return Err(format!("summarized state is {kept:?}"));
    }
    let par = Problem::parallel(&rt.nest, &kept, &inputs).map_err(|e| e.to_string())?;
    let rights = par.rights.compute(&vec![]).map_err(|e| e.to_string())?;
    for (k, ((l, r), whole)) in par.left.iter().zip(&rights).zip(&par.expected).enumerate() {
        let got = rt.join(&none, l, r).map_err(|e| e.to_string())?;
        let want = reference.eval(l, r, &none).map_err(|e| e.to_string())?;
        if got != want || want != *whole {
            return Err(format!("parallel join differs on instance {k}: {got} vs {want} (whole {whole})"));
        }
    }
    Ok(format!("memoryless join equal on {star_checked} instances, parallel join equal on {} instances", par.len()))
}

fn homomorphism() -> Verdict {
    let mut checked = 0;
    let mut plans = 0;
    for (n, run, rt) in runtimes() {
        if rt.kind != PlanKind::FullDc {
            continue;
        }
        plans += 1;
        let s = sampler(&run.nest);
        let shape = &rt.nest.shape;
        let split = |x: &Bindings, at: usize| -> Result<bool, String> {
            let rows = rt.rows(x).map_err(|e| e.to_string())?;
            let whole = rt.h(x).map_err(|e| e.to_string())?;
            let a = rt.h(&slice_rows(shape, x, 0, at)).map_err(|e| e.to_string())?;
            let b = rt.h(&slice_rows(shape, x, at, rows)).map_err(|e| e.to_string())?;
            Ok(rt.join(x, &a, &b).map_err(|e| e.to_string())? == whole)
        };
        for x in s.exhaustive() {
            let rows = rt.rows(&x).map_err(|e| e.to_string())?;
            for at in 0..=rows {
                if !split(&x, at)? {
                    return Err(format!("{n}: split {at} of {x:?}"));
                }
                checked += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let per_len = RANDOM_SPLITS.div_ceil(MAX_SPLIT_LEN + 1);
        for len in 0..=MAX_SPLIT_LEN {
            for x in s.random_with_rows(per_len, len) {
                let at = rng.gen_range(0..=len);
                if !split(&x, at)? {
                    return Err(format!("{n}: random split {at} of {len} rows"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{plans} FullDC plans, {checked} splits, 0 failures"))
}

fn simulation() -> Verdict {
    let mut checked = 0;
    let mut plans = 0;
    for (n, run, rt) in runtimes() {
        plans += 1;
        let s = sampler(&run.nest);
        let mut inputs: Vec<Bindings> = s.exhaustive().into_iter().step_by(7).take(12).collect();
        inputs.extend(s.fork(11).random(12));
        inputs.extend(s.random_with_rows(2, 16));
        let oracle = CompiledNest::new(&run.nest);
        let r =
            end_to_end(&rt, &inputs, TREES_PER_INPUT, 9, &|x| oracle.run_all(x)).map_err(|e| format!("{n}: {e}"))?;
        if !r.ok() {
            return Err(format!("{n}: {}", r.failures[0]));
        }
        checked += r.checked;
    }
    Ok(format!("{plans} plans, {TREES_PER_INPUT} trees per input, {checked} simulations, 0 failures"))
}

fn projection() -> Verdict {
    let mut lifts = 0;
    let mut aux_checks = 0;
    for (n, run) in runs() {
        let inputs: Vec<Bindings> = sampler(&run.nest).stream().collect();
        let empty: HashMap<Name, _> = run.outcome.plan.map_empty().unwrap_or_default().into_iter().collect();
        for res in &run.outcome.lifts {
            if res.kind != LiftKind::Nontrivial {
                continue;
            }
            lifts += 1;
            check_projection(&run.nest, &res.lifted, &inputs).map_err(|e| format!("{n}: {e}"))?;
            let inner = res.aux.iter().all(|a| a.level == Level::Inner);
            let mut g = if inner { run.nest.clone() } else { res.lifted.clone() };
            if !inner {
                for d in &mut g.state {
                    if let Some(e) = empty.get(&d.name) {
                        d.init = Some(e.clone());
                    }
                }
            }
            let c = check_aux_values(res, &g, &inputs).map_err(|e| format!("{n}: {e}"))?;
            if c == 0 {
                return Err(format!("{n}: no accumulator value was compared"));
            }
            aux_checks += c;
        }
    }
    if lifts == 0 {
        return Err("no lift was produced".into());
    }
    Ok(format!("{lifts} lifts projected on the full budget, {aux_checks} accumulator values equal u_k"))
}

fn mtls_step() -> JoinDef {
    let p = params(&[("rec", seq_int()), ("mtl_rec", Type::Int)]);
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

fn milestones() -> Verdict {
    let rec = |j| Sym::State(name("rec"), Some(j));
    let a = |t, j| Sym::Input(t, name("rec"), Some(j));
    for m in 1..=3 {
        let start = symbolic_state(&[(name("rec"), seq_int()), (name("mtl_rec"), Type::Int)], m);
        let states = unfold_join(&mtls_step(), start, 2, m).map_err(|e| e.to_string())?;
        let e = states[2]["mtl_rec"].scalar().ok_or("mtl_rec is not a scalar")?.clone();
        let before = classify(&e);
        if before.kind != NormalKind::Recursive(BinOp::Max) || (before.cost.size, before.cost.c) != (0, 2 * m + 1) {
            return Err(format!("m = {m}: unfolding classifies as {:?} at {}", before.kind, before.cost));
        }
        let n = normalize(&e, &NormConfig::default()).map_err(|e| e.to_string())?;
        if n.report.kind != NormalKind::Recursive(BinOp::Max) || (n.report.cost.size, n.report.cost.c) != (0, m + 1) {
            return Err(format!("m = {m}: normalized to {:?} at {}", n.report.kind, n.report.cost));
        }
        for j in 0..m {
            let want = Sym::nary(
                BinOp::Add,
                vec![rec(j), Sym::nary(BinOp::Max, vec![a(1, j), Sym::nary(BinOp::Add, vec![a(1, j), a(2, j)])])],
            );
            if !n.report.leaves.iter().any(|l| l.expr == want) {
                return Err(format!("m = {m}: no leaf {want} in {}", n.expr));
            }
        }
    }
    Ok("m = 1..3: (0, 2m+1) before, (0, m+1) after, leaves rec[j] + max(a1[j], a1[j] + a2[j])".into())
}

fn soundness() -> Verdict {
    let mut assignments = 0;
    for r in RULES {
        assignments += check_rule(r)?;
    }
    let mut law_checks = 0;
    for (n, run, rt) in runtimes() {
        if rt.kind != PlanKind::FullDc {
            continue;
        }
        let inputs: Vec<Bindings> = sampler(&run.nest).stream().collect();
        let a = associativity(&rt, &inputs, 4, 5).map_err(|e| format!("{n}: {e}"))?;
        let i = identity_law(&rt, &inputs).map_err(|e| format!("{n}: {e}"))?;
        if let Some(f) = a.failures.first().or(i.failures.first()) {
            return Err(format!("{n}: {f}"));
        }
        law_checks += a.checked + i.checked;
    }
    Ok(format!(
        "{} rules on {assignments} assignments; associativity and identity on {law_checks} triples",
        RULES.len()
    ))
}

fn determinism() -> Verdict {
    let mut differ = Vec::new();
    for e in CORPUS {
        let nest = LoopNest::from_source(e.source).unwrap();
        let again = parallelize(e.name, &nest, &PipelineConfig::default()).map_err(|e| e.to_string())?;
        if emit_plan(&again.plan) != emit_plan(&runs()[e.name].outcome.plan) {
            differ.push(e.name);
        }
    }
    if differ.is_empty() {
        Ok(format!("{} plans byte-identical across two runs", CORPUS.len()))
    } else {
        Err(format!("plans differ: {}", differ.join(", ")))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("auxiliary counts", aux_counts),
        ("negative outcomes", negatives),
        ("golden mtls joins", golden_joins),
        ("homomorphism law", homomorphism),
        ("end-to-end simulation", simulation),
        ("lifting projection", projection),
        ("normalization milestones", milestones),
        ("rule soundness and join laws", soundness),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (k, (what, check)) in criteria.iter().enumerate() {
        let verdict = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(m) => println!("PASS {} {what}: {m}", k + 1),
            Err(m) => {
                println!("FAIL {} {what}: {m}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: 9/9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: criteria failed: {failed:?}");
        ExitCode::FAILURE
    }
}
