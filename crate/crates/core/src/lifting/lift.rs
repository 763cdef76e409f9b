//! Homomorphism and memoryless lifts, their trivial fallback, and the checks
//! that a lift changed nothing observable.

use std::collections::{BTreeMap, HashMap};

use super::discover::{discover_recursion, extract_required_info, Atom, Discovery, Family, Template};
use super::insert::insert_aux;
use super::{AuxDef, AuxShape, AuxSource, Evidence, Level, LiftError, LiftKind, LiftResult, NormTrace, Scheme};
use crate::expr::{name, Name};
use crate::frontend::{Equation, LoopNest, Type};
use crate::interp::{eval_expr, Bindings, CompiledNest};
use crate::symbolic::{normalize, symbolic_state, unfold_join, unfold_loop, NormConfig, Sym, SymVal};
use crate::synthesis::JoinDef;
use crate::value::Value;

#[derive(Clone, Debug)]
pub struct LiftConfig {
    /// Cells per sequence during unfolding.
    pub m: usize,
    /// Deepest unfolding; recursions are confirmed at every smaller depth.
    pub k: usize,
    pub norm: NormConfig,
}

impl Default for LiftConfig {
    fn default() -> Self {
        LiftConfig { m: 2, k: 3, norm: NormConfig::default() }
    }
}

/// Start state from the declared initializers, every integer input set to `m`.
fn concrete_start(nest: &LoopNest, vars: &[(Name, Type)], m: usize) -> Result<BTreeMap<Name, SymVal>, LiftError> {
    let env: HashMap<Name, Value> =
        nest.inputs.iter().filter(|d| d.ty == Type::Int).map(|d| (d.name.clone(), Value::int(m as i64))).collect();
    vars.iter()
        .map(|(x, _)| {
            let e = nest.init_of(x).ok_or_else(|| LiftError::Insert(format!("`{x}` has no initializer")))?;
            Ok((x.clone(), SymVal::from_value(&eval_expr(e, &env)?)))
        })
        .collect()
}

fn cells(v: &SymVal) -> Vec<(Option<usize>, Sym)> {
    v.cells().into_iter().map(|(c, s)| (c, s.clone())).collect()
}

struct Run {
    explain: Vec<String>,
    traces: Vec<NormTrace>,
}

impl Run {
    /// Normalize the unfoldings of `var` after 1..=k elements and collect the
    /// input-only parts of each.
    fn families(
        &mut self,
        var: &Name,
        states: &[BTreeMap<Name, SymVal>],
        k: usize,
        cfg: &NormConfig,
    ) -> Result<Vec<Vec<Family>>, LiftError> {
        let mut out = Vec::new();
        for kk in 1..=k {
            let v = states[kk]
                .get(var)
                .ok_or_else(|| LiftError::NotNormal { var: var.to_string(), reason: "unbound".into() })?;
            let mut fams = Vec::new();
            for (cell, e) in cells(v) {
                let label = match cell {
                    Some(c) => format!("{var}[{c}] after {kk}"),
                    None => format!("{var} after {kk}"),
                };
                let n = normalize(&e, cfg)
                    .map_err(|err| LiftError::NotNormal { var: var.to_string(), reason: err.to_string() })?;
                self.traces.push(NormTrace {
                    label,
                    steps: n.trace.clone(),
                    result: n.expr.to_string(),
                    cost: n.report.cost.to_string(),
                });
                let parts = extract_required_info(&n.report).map_err(|_| LiftError::NotNormal {
                    var: var.to_string(),
                    reason: format!("cost {}", n.report.cost),
                })?;
                for f in parts {
                    if !fams.contains(&f) {
                        fams.push(f);
                    }
                }
            }
            let shown: Vec<String> = fams.iter().map(|f| f.expr.to_string()).collect();
            self.explain.push(format!("u_{kk}({var}) = {{{}}}", shown.join(", ")));
            out.push(fams);
        }
        Ok(out)
    }
}

/// An accumulator to insert: its target, its recursion and the parts per cell.
type Pending = (Name, Template, Vec<(Option<usize>, Vec<Sym>)>);

/// Accumulators for every part that needs one, grouped by the template up to
/// the cell, with the evidence of each cell.
fn collect(run: &mut Run, target: &Name, found: Vec<(Family, Discovery)>, acc: &mut Vec<Pending>) {
    for (f, d) in found {
        match d {
            Discovery::Covered(x) => run.explain.push(format!("  {} is computed by `{x}`", f.expr)),
            Discovery::Aux(t, us) => {
                run.explain.push(format!(
                    "  {} = {}(previous, {}){}",
                    f.expr,
                    t.op.symbol(),
                    match &t.atom {
                        Atom::State(x) => format!("state `{x}`"),
                        Atom::Field(x) => format!("row field `{x}`"),
                    },
                    t.cell.map(|c| format!(" at cell {c}")).unwrap_or_default()
                ));
                let same =
                    |(_, o, _): &&mut Pending| o.op == t.op && o.atom == t.atom && o.cell.is_some() == t.cell.is_some();
                match acc.iter_mut().find(|e| same(e)) {
                    Some(e) => e.2.push((t.cell, us)),
                    None => acc.push((target.clone(), t.clone(), vec![(t.cell, us)])),
                }
            }
        }
    }
}

fn finish(
    nest: &LoopNest,
    mut run: Run,
    acc: Vec<Pending>,
    level: Level,
    mut inner: Option<usize>,
) -> Result<LiftResult, LiftError> {
    if acc.is_empty() {
        return Err(LiftError::NothingToAdd);
    }
    let mut lifted = nest.clone();
    let mut aux = Vec::new();
    let mut evidence = Vec::new();
    for (target, t, per_cell) in acc {
        let (next, def) = insert_aux(&lifted, &t, level, &target, inner)?;
        lifted = next;
        if level == Level::Inner {
            inner = inner.map(|p| p + 1);
        }
        run.explain.push(format!(
            "aux {}: {} {}, init {}, update `{}`",
            def.name,
            def.ty,
            scheme_name(def.scheme),
            def.init,
            def.update
        ));
        for (cell, us) in per_cell {
            for (i, u) in us.into_iter().enumerate() {
                evidence.push(Evidence { aux: def.name.clone(), k: i + 1, cell, u });
            }
        }
        aux.push(def);
    }
    Ok(LiftResult { aux, lifted, kind: LiftKind::Nontrivial, evidence, explain: run.explain, traces: run.traces })
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Fold => "fold",
        Scheme::Zip => "zip",
        Scheme::Prefix => "prefix",
    }
}

/// Lift the summarized loop whose step is `step` (left: the kept state, right:
/// the full row result). `fields` are the row-local variables a fold may read;
/// `targets` the variables whose join could not be found.
pub fn homomorphism_lift(
    nest: &LoopNest,
    step: &JoinDef,
    fields: &[Name],
    targets: &[Name],
    cfg: &LiftConfig,
) -> Result<LiftResult, LiftError> {
    let kept: Vec<(Name, Type)> = step.out.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
    let vars: Vec<Name> = kept.iter().map(|(n, _)| n.clone()).collect();
    let sym = unfold_join(step, symbolic_state(&kept, cfg.m), cfg.k, cfg.m)?;
    let conc = unfold_join(step, concrete_start(nest, &kept, cfg.m)?, cfg.k, cfg.m)?;
    let mut run = Run { explain: vec![], traces: vec![] };
    let mut acc = Vec::new();
    for v in targets {
        let fams = run.families(v, &sym, cfg.k, &cfg.norm)?;
        let found = discover_recursion(&fams, &conc, &vars, fields, &cfg.norm)?;
        collect(&mut run, v, found, &mut acc);
    }
    finish(nest, run, acc, Level::Outer, None)
}

/// Lift the inner loop assigning `targets` so that every row can start from a
/// fixed state: the parts each row contributes become accumulators reset
/// before the inner loop.
pub fn memoryless_lift(nest: &LoopNest, targets: &[Name], cfg: &LiftConfig) -> Result<LiftResult, LiftError> {
    let eqs = &nest.body.eqs;
    let first = targets.first().map(|t| t.to_string()).unwrap_or_default();
    let pos = eqs
        .iter()
        .position(|e| matches!(e, Equation::Loop { body, .. } if targets.iter().any(|t| body.assigned().contains(t))))
        .ok_or_else(|| LiftError::NoInnerLoop(first.clone()))?;
    let Equation::Loop { index, body, .. } = &eqs[pos] else { unreachable!() };
    let all: Vec<(Name, Type)> = nest.state.iter().map(|d| (d.name.clone(), d.ty.clone())).collect();
    let resets: BTreeMap<Name, Value> = eqs[..pos]
        .iter()
        .filter_map(|e| match e {
            Equation::Simple { lhs, rhs } if lhs.indices.is_empty() => Some((lhs.name.clone(), rhs.const_value()?)),
            _ => None,
        })
        .collect();
    let modified = body.assigned();
    let inputs: BTreeMap<Name, Type> = nest.inputs.iter().map(|d| (d.name.clone(), d.ty.clone())).collect();
    let outer = nest.index.clone();
    let reader = move |t: usize, n: &Name, idx: &[Sym]| -> Option<SymVal> {
        if *n == outer || (idx.is_empty() && inputs.contains_key(n)) {
            return Some(SymVal::Scalar(Sym::Param(n.clone())));
        }
        inputs.get(n)?;
        if idx.iter().any(|s| matches!(s, Sym::Int(_))) {
            Some(SymVal::Scalar(Sym::Input(t, n.clone(), None)))
        } else {
            let shown: Vec<String> = idx.iter().map(|s| s.to_string()).collect();
            Some(SymVal::Scalar(Sym::Param(name(&format!("{n}[{}]", shown.join("]["))))))
        }
    };
    let sym = unfold_loop(body, index, symbolic_state(&all, cfg.m), cfg.k, &reader)?;
    let mut start = symbolic_state(&all, cfg.m);
    let inits = concrete_start(nest, &all, cfg.m)?;
    for x in &modified {
        let v = match resets.get(x) {
            Some(c) => SymVal::from_value(c),
            None => inits[x].clone(),
        };
        start.insert(x.clone(), v);
    }
    let conc = unfold_loop(body, index, start, cfg.k, &reader)?;
    let mut atoms: Vec<Name> =
        all.iter().map(|(n, _)| n.clone()).filter(|n| modified.contains(n) && resets.contains_key(n)).collect();
    atoms.extend(all.iter().map(|(n, _)| n.clone()).filter(|n| modified.contains(n) && !resets.contains_key(n)));
    let mut run = Run { explain: vec![], traces: vec![] };
    let mut acc = Vec::new();
    for v in targets {
        let fams = run.families(v, &sym, cfg.k, &cfg.norm)?;
        let found = discover_recursion(&fams, &conc, &atoms, &[], &cfg.norm)?;
        collect(&mut run, v, found, &mut acc);
    }
    finish(nest, run, acc, Level::Inner, Some(pos))
}

/// The lift that always applies: remember the whole consumed prefix. It makes
/// any loop memoryless but summarizing it reduces nothing.
pub fn trivial_memoryless_lift(nest: &LoopNest, targets: &[Name]) -> LiftResult {
    let t: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
    let aux = AuxDef {
        name: "prefix".into(),
        ty: "rows".into(),
        shape: AuxShape::Input,
        init: "[]".into(),
        scheme: Scheme::Prefix,
        op: "concat".into(),
        source: AuxSource::Rows,
        level: Level::Outer,
        target: t.join(", "),
        update: "prefix := prefix • row;".into(),
    };
    LiftResult {
        aux: vec![aux],
        lifted: nest.clone(),
        kind: LiftKind::TrivialMemoryless,
        evidence: vec![],
        explain: vec![format!("trivial lift for {{{}}}: keep the consumed prefix", t.join(", "))],
        traces: vec![],
    }
}

/// Number of samples on which the original variables of the lifted loop match
/// the original loop.
pub fn check_projection(original: &LoopNest, lifted: &LoopNest, inputs: &[Bindings]) -> Result<usize, LiftError> {
    let a = CompiledNest::new(original);
    let b = CompiledNest::new(lifted);
    let names = original.state_names();
    for (k, x) in inputs.iter().enumerate() {
        let want = a.run_all(x)?;
        let got = b.run_all(x)?.project(&names);
        if want != got {
            return Err(LiftError::Projection(k));
        }
    }
    Ok(inputs.len())
}

fn cell_value(v: &Value, cell: Option<usize>) -> Option<Value> {
    match cell {
        None => Some(v.clone()),
        Some(c) => v.as_seq().ok()?.get(c).cloned(),
    }
}

/// Compare accumulator values with the recorded parts `u_k` evaluated on
/// concrete rows. Outer parts read fields of each row's result from `empty`
/// (the nest started from its empty state); inner parts read the inputs of
/// the row directly. Returns the number of comparisons made.
pub fn check_aux_values(res: &LiftResult, empty: &LoopNest, inputs: &[Bindings]) -> Result<usize, String> {
    let lifted = CompiledNest::new(&res.lifted);
    let g = CompiledNest::new(empty);
    let levels: HashMap<&str, Level> = res.aux.iter().map(|a| (a.name.as_str(), a.level)).collect();
    let shape = &res.lifted.shape;
    let mut checked = 0;
    for x in inputs {
        let rows = lifted.rows(x).map_err(|e| e.to_string())?;
        let init = lifted.init_state(x).map_err(|e| e.to_string())?;
        let mut prefix = vec![init];
        for r in 0..rows {
            let next = lifted.run(x, &prefix[r], r, r + 1).map_err(|e| e.to_string())?;
            prefix.push(next);
        }
        for ev in &res.evidence {
            match levels.get(ev.aux.as_str()) {
                Some(Level::Outer) => {
                    if rows < ev.k {
                        continue;
                    }
                    let g0 = g.init_state(x).map_err(|e| e.to_string())?;
                    let fields: Vec<_> = (0..ev.k)
                        .map(|r| g.run(x, &g0, r, r + 1))
                        .collect::<Result<_, _>>()
                        .map_err(|e| e.to_string())?;
                    let look = |s: &Sym| match s {
                        Sym::Input(t, f, c) => cell_value(fields.get(t - 1)?.get(f)?, *c),
                        _ => None,
                    };
                    let Ok(want) = ev.u.eval(&look) else { continue };
                    let Some(got) = prefix[ev.k].get(&ev.aux).and_then(|v| cell_value(v, ev.cell)) else { continue };
                    if got != want {
                        return Err(format!("{} after {} rows is {got}, expected {want} = {}", ev.aux, ev.k, ev.u));
                    }
                    checked += 1;
                }
                Some(Level::Inner) => {
                    let width = shape.dims.get(1).and_then(|d| x.get(d)).and_then(|v| v.as_int().ok()?.to_i64());
                    if width != Some(ev.k as i64) {
                        continue;
                    }
                    for r in 0..rows {
                        let look = |s: &Sym| match s {
                            Sym::Input(t, f, None) => {
                                let seq = shape.seqs.iter().find(|q| q.name == *f)?;
                                let mut v = x.get(f)?.clone();
                                for d in &seq.depths {
                                    let i = if *d == 0 { r } else { t - 1 };
                                    v = v.as_seq().ok()?.get(i)?.clone();
                                }
                                Some(v)
                            }
                            Sym::Param(p) if *p == res.lifted.index => Some(Value::int(r as i64)),
                            Sym::Param(p) => x.get(p).cloned(),
                            _ => None,
                        };
                        let Ok(want) = ev.u.eval(&look) else { continue };
                        let Some(got) = prefix[r + 1].get(&ev.aux).cloned() else { continue };
                        if got != want {
                            return Err(format!("{} after row {r} is {got}, expected {want} = {}", ev.aux, ev.u));
                        }
                        checked += 1;
                    }
                }
                None => {}
            }
        }
    }
    Ok(checked)
}
