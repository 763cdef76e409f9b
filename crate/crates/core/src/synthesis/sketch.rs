//! Join sketches: the body of the operator being synthesized with its leaves
//! replaced by typed holes.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::join::{base_name, JoinDef, Param, Side};
use crate::expr::{name, BinOp, Expr, Name, UnOp};
use crate::frontend::{Equation, EquationSystem, LValue, LoopNest, Type};
use crate::value::Value;

/// Which variables a hole may read. Each kind includes the previous one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum HoleKind {
    /// Right-hand state and constants.
    R,
    /// Plus left-hand state.
    LR,
    /// Plus locals assigned earlier in the join.
    Rec,
}

/// What a hole replaced in the source body; decides which leaves are tried first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Var(Name),
    Right(Name),
    Const(Value),
    Input,
    /// Initial value of the target; carries the constant of an absorbed reset.
    Init(Option<Value>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hole {
    pub id: usize,
    pub kind: HoleKind,
    pub ty: Type,
    /// Variable assigned by the equation holding the hole.
    pub target: Name,
    pub origin: Origin,
    /// Index of the enclosing loop, if any.
    pub loop_index: Option<Name>,
    /// Locals definitely assigned where the hole sits.
    pub locals: Vec<Name>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SketchKind {
    Memoryless,
    Parallel,
}

#[derive(Clone, Debug)]
pub struct Sketch {
    pub kind: SketchKind,
    pub def: JoinDef,
    pub holes: Vec<Hole>,
    pub reps: usize,
    pub ops: BTreeSet<BinOp>,
    pub unops: BTreeSet<UnOp>,
    pub ite: bool,
    pub consts: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("assignment `{0}` uses a subscript other than the loop index")]
    Subscript(String),
    #[error("sequence state without an inner loop")]
    SeqWithoutLoop,
}

impl Sketch {
    pub fn holes_of(&self, vars: &BTreeSet<Name>) -> Vec<usize> {
        self.holes.iter().filter(|h| vars.contains(&h.target)).map(|h| h.id).collect()
    }

    pub fn has_loop(&self) -> bool {
        self.holes.iter().any(|h| h.loop_index.is_some())
    }
}

impl fmt::Display for Sketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.def.body)
    }
}

enum Class {
    State(Name),
    Right(Name),
    Input,
}

struct Builder<'a> {
    holes: Vec<Hole>,
    type_of: &'a dyn Fn(&str) -> Option<Type>,
    classify: &'a dyn Fn(&str) -> Class,
}

fn value_type(v: &Value) -> Type {
    if matches!(v, Value::Bool(_)) {
        Type::Bool
    } else {
        Type::Int
    }
}

fn strip(e: &Expr) -> (&Expr, usize) {
    let mut base = e;
    let mut n = 0;
    while let Expr::Index(b, _) = base {
        base = b;
        n += 1;
    }
    (base, n)
}

fn peel(mut t: Type, n: usize) -> Type {
    for _ in 0..n {
        t = t.elem().cloned().unwrap_or(Type::Int);
    }
    t
}

impl Builder<'_> {
    fn hole(&mut self, kind: HoleKind, ty: Type, target: &Name, origin: Origin, at: &Ctx) -> Expr {
        let id = self.holes.len();
        self.holes.push(Hole {
            id,
            kind,
            ty,
            target: target.clone(),
            origin,
            loop_index: at.loop_index.clone(),
            locals: at.locals.clone(),
        });
        Expr::Hole(id)
    }

    fn holeify(&mut self, e: &Expr, target: &Name, at: &Ctx) -> Expr {
        if let Some(v) = e.const_value() {
            return self.hole(HoleKind::R, value_type(&v), target, Origin::Const(v), at);
        }
        let (base, depth) = strip(e);
        if let Expr::Var(n) = base {
            let ty = peel((self.type_of)(n).unwrap_or(Type::Int), depth);
            return match (self.classify)(n) {
                Class::State(x) => self.hole(at.state_kind, ty, target, Origin::Var(x), at),
                Class::Right(x) => self.hole(HoleKind::R, ty, target, Origin::Right(x), at),
                Class::Input => self.hole(HoleKind::R, ty, target, Origin::Input, at),
            };
        }
        if let Expr::Len(_) = e {
            return self.hole(HoleKind::R, Type::Int, target, Origin::Input, at);
        }
        e.map_children(&mut |c| self.holeify(c, target, at))
    }
}

#[derive(Clone)]
struct Ctx {
    state_kind: HoleKind,
    loop_index: Option<Name>,
    locals: Vec<Name>,
}

fn collect_ops(
    sys: &EquationSystem,
    ops: &mut BTreeSet<BinOp>,
    unops: &mut BTreeSet<UnOp>,
    ite: &mut bool,
    consts: &mut Vec<Value>,
) {
    sys.map_exprs(&mut |e| {
        *ite |= e.any(&|x| matches!(x, Expr::Ite(..)));
        collect_expr(e, ops, unops, consts);
        e.clone()
    });
}

fn collect_expr(e: &Expr, ops: &mut BTreeSet<BinOp>, unops: &mut BTreeSet<UnOp>, consts: &mut Vec<Value>) {
    match e {
        Expr::Binary(op, ..) => {
            ops.insert(*op);
        }
        Expr::Unary(op, _) => {
            unops.insert(*op);
        }
        _ => {}
    }
    if let Some(v) = e.const_value() {
        if !consts.contains(&v) {
            consts.push(v);
        }
    }
    for c in e.children() {
        collect_expr(c, ops, unops, consts);
    }
}

fn base_consts() -> Vec<Value> {
    vec![Value::int(0), Value::int(1), Value::int(-1), Value::Bool(true), Value::Bool(false)]
}

fn merge_consts(mut base: Vec<Value>, extra: Vec<Value>) -> Vec<Value> {
    for v in extra {
        if !base.contains(&v) {
            base.push(v);
        }
    }
    base
}

/// Straight-line equations of a (possibly nested) loop body, loop headers removed.
fn flatten(sys: &EquationSystem, out: &mut Vec<(LValue, Expr)>, first_index: &mut Option<Name>) {
    for eq in &sys.eqs {
        match eq {
            Equation::Simple { lhs, rhs } => out.push((lhs.clone(), rhs.clone())),
            Equation::Loop { index, body, .. } => {
                if first_index.is_none() {
                    *first_index = Some(index.clone());
                }
                let mut ignore = Some(index.clone());
                flatten(body, out, &mut ignore);
            }
        }
    }
}

fn check_lhs(lhs: &LValue, wrap: Option<&Name>) -> Result<(), SketchError> {
    let ok = match (lhs.indices.as_slice(), wrap) {
        ([], _) => true,
        ([Expr::Var(j)], Some(w)) => j == w,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(SketchError::Subscript(lhs.to_string()))
    }
}

/// Sketch for the memoryless join of a loop nest: `d ⊛ g(δ)` with `d` the
/// full left state and `g(δ)` the state after one row from the chosen empty
/// state. Equations before the inner loop are absorbed into init holes.
pub fn memoryless(nest: &LoopNest, reps: usize) -> Result<Sketch, SketchError> {
    let params: Vec<Param> = nest.state.iter().map(|d| Param::new(&d.name, &d.ty)).collect();
    let eqs = &nest.body.eqs;
    let first = eqs.iter().position(|e| matches!(e, Equation::Loop { .. }));
    let last = eqs.iter().rposition(|e| matches!(e, Equation::Loop { .. }));
    let mut wrap_index = None;
    let mut mid = Vec::new();
    let mut post = Vec::new();
    match (first, last) {
        (Some(a), Some(b)) => {
            flatten(&EquationSystem { eqs: eqs[a..=b].to_vec() }, &mut mid, &mut wrap_index);
            flatten(&EquationSystem { eqs: eqs[b + 1..].to_vec() }, &mut post, &mut None);
        }
        _ => flatten(&nest.body, &mut mid, &mut None),
    }
    let seq_state: Vec<&Param> = params.iter().filter(|p| p.ty.is_seq()).collect();
    if !seq_state.is_empty() && wrap_index.is_none() {
        return Err(SketchError::SeqWithoutLoop);
    }
    let wrap = if seq_state.is_empty() { None } else { wrap_index.clone() };
    for (lhs, _) in mid.iter().chain(&post) {
        check_lhs(lhs, wrap.as_ref())?;
    }
    let state: BTreeSet<Name> = params.iter().map(|p| p.name.clone()).collect();
    let inputs: Vec<(Name, Type)> = nest.inputs.iter().map(|d| (d.name.clone(), d.ty.clone())).collect();
    let type_of = |n: &str| -> Option<Type> {
        nest.state_type(n)
            .cloned()
            .or_else(|| inputs.iter().find(|(x, _)| &**x == n).map(|(_, t)| t.clone()))
            .or(Some(Type::Int))
    };
    let st = state.clone();
    let classify = move |n: &str| if st.contains(n) { Class::State(name(n)) } else { Class::Input };
    let mut b = Builder { holes: vec![], type_of: &type_of, classify: &classify };

    let mut body = Vec::new();
    let mut assigned: Vec<Name> = Vec::new();
    let written: BTreeSet<Name> = mid.iter().chain(&post).map(|(l, _)| l.name.clone()).collect();
    let init_ctx = Ctx { state_kind: HoleKind::LR, loop_index: None, locals: vec![] };
    let reset = |v: &Name| {
        eqs[..first.unwrap_or(0)].iter().find_map(|e| match e {
            Equation::Simple { lhs, rhs } if lhs.name == *v && lhs.indices.is_empty() => rhs.const_value(),
            _ => None,
        })
    };
    for p in &params {
        if wrap.is_some() || !written.contains(&p.name) {
            let h = b.hole(HoleKind::LR, p.ty.clone(), &p.name, Origin::Init(reset(&p.name)), &init_ctx);
            body.push(Equation::Simple { lhs: LValue::scalar(p.name.clone()), rhs: h });
            assigned.push(p.name.clone());
        }
    }
    let emit = |b: &mut Builder, eqs: &[(LValue, Expr)], loop_index: Option<&Name>, assigned: &mut Vec<Name>| {
        let mut out = Vec::new();
        for (lhs, rhs) in eqs {
            let at = Ctx { state_kind: HoleKind::Rec, loop_index: loop_index.cloned(), locals: assigned.clone() };
            let rhs = b.holeify(rhs, &lhs.name, &at);
            if lhs.indices.is_empty() && !assigned.contains(&lhs.name) {
                assigned.push(lhs.name.clone());
            }
            out.push(Equation::Simple { lhs: lhs.clone(), rhs });
        }
        out
    };
    for _ in 0..reps.max(1) {
        match &wrap {
            Some(j) => {
                let mut inner = emit(&mut b, &mid, Some(j), &mut assigned);
                inner.extend(emit(&mut b, &post, Some(j), &mut assigned));
                let q = &seq_state[0].name;
                let inner = EquationSystem { eqs: inner };
                body.push(Equation::Loop {
                    modified: inner.assigned().into_iter().collect(),
                    index: j.clone(),
                    lo: Expr::int(0),
                    hi: Expr::Len(Box::new(Expr::Var(super::join::left_name(q)))),
                    body: inner,
                });
                body.extend(emit(&mut b, &post, None, &mut assigned));
            }
            None => {
                body.extend(emit(&mut b, &mid, None, &mut assigned));
                body.extend(emit(&mut b, &post, None, &mut assigned));
            }
        }
    }
    let (mut ops, mut unops, mut ite, mut consts) = (BTreeSet::new(), BTreeSet::new(), false, Vec::new());
    collect_ops(&nest.body, &mut ops, &mut unops, &mut ite, &mut consts);
    for d in &nest.state {
        if let Some(e) = &d.init {
            collect_expr(e, &mut BTreeSet::new(), &mut BTreeSet::new(), &mut consts);
        }
    }
    Ok(Sketch {
        kind: SketchKind::Memoryless,
        def: JoinDef {
            left: params.clone(),
            right: params.clone(),
            out: params,
            inputs: vec![],
            body: EquationSystem { eqs: body },
        },
        holes: b.holes,
        reps: reps.max(1),
        ops,
        unops,
        ite,
        consts: merge_consts(base_consts(), consts),
    })
}

fn is_identity(eq: &Equation) -> bool {
    match eq {
        Equation::Simple { lhs, rhs: Expr::Var(r) } if lhs.indices.is_empty() => {
            base_name(r) == Some((&*lhs.name, Side::Left))
        }
        _ => false,
    }
}

/// First top-level position at which `v` is assigned, and whether it is inside a loop.
fn first_assignment(sys: &EquationSystem, v: &str) -> Option<bool> {
    for eq in &sys.eqs {
        match eq {
            Equation::Simple { lhs, .. } if &*lhs.name == v => return Some(false),
            Equation::Simple { .. } => {}
            Equation::Loop { body, .. } => {
                if body.assigned().iter().any(|n| &**n == v) {
                    return Some(true);
                }
            }
        }
    }
    None
}

/// Sketch for the parallel join of a summarized step `h(x • δ) = h(x) ⊛ δ`.
/// Row fields become right-only holes whose leaves are the right state.
pub fn parallel(step: &JoinDef, reps: usize, extra_consts: &[Value]) -> Result<Sketch, SketchError> {
    let params = step.out.clone();
    let state: BTreeSet<Name> = params.iter().map(|p| p.name.clone()).collect();
    let eqs: Vec<Equation> = step.body.eqs.iter().filter(|e| !is_identity(e)).cloned().collect();
    let trimmed = EquationSystem { eqs };
    let type_of = |n: &str| step.type_of(n).or(Some(Type::Int));
    let st = state.clone();
    let lefts: BTreeSet<Name> = step.left.iter().map(|p| p.name.clone()).collect();
    let rights: BTreeSet<Name> = step.right.iter().map(|p| p.name.clone()).collect();
    let classify = move |n: &str| {
        if st.contains(n) {
            return Class::State(name(n));
        }
        match base_name(n) {
            Some((b, Side::Left)) if lefts.contains(b) => Class::State(name(b)),
            Some((b, Side::Right)) if rights.contains(b) => Class::Right(name(b)),
            _ => Class::Input,
        }
    };
    let mut b = Builder { holes: vec![], type_of: &type_of, classify: &classify };
    let mut body = Vec::new();
    let mut assigned: Vec<Name> = Vec::new();
    let init_ctx = Ctx { state_kind: HoleKind::LR, loop_index: None, locals: vec![] };
    for p in &params {
        if first_assignment(&trimmed, &p.name) != Some(false) {
            let h = b.hole(HoleKind::LR, p.ty.clone(), &p.name, Origin::Init(None), &init_ctx);
            body.push(Equation::Simple { lhs: LValue::scalar(p.name.clone()), rhs: h });
            assigned.push(p.name.clone());
        }
    }
    fn walk(
        b: &mut Builder,
        sys: &EquationSystem,
        loop_index: Option<&Name>,
        seen_loop: &mut bool,
        assigned: &mut Vec<Name>,
    ) -> Vec<Equation> {
        let mut out = Vec::new();
        for eq in &sys.eqs {
            match eq {
                Equation::Simple { lhs, rhs } => {
                    let kind = if *seen_loop || loop_index.is_some() { HoleKind::Rec } else { HoleKind::LR };
                    let locals = if kind == HoleKind::Rec { assigned.clone() } else { vec![] };
                    let at = Ctx { state_kind: kind, loop_index: loop_index.cloned(), locals };
                    let rhs = b.holeify(rhs, &lhs.name, &at);
                    if lhs.indices.is_empty() && !assigned.contains(&lhs.name) {
                        assigned.push(lhs.name.clone());
                    }
                    out.push(Equation::Simple { lhs: lhs.clone(), rhs });
                }
                Equation::Loop { index, lo, hi, body, .. } => {
                    *seen_loop = true;
                    let inner = EquationSystem { eqs: walk(b, body, Some(index), seen_loop, assigned) };
                    out.push(Equation::Loop {
                        modified: inner.assigned().into_iter().collect(),
                        index: index.clone(),
                        lo: lo.clone(),
                        hi: hi.clone(),
                        body: inner,
                    });
                }
            }
        }
        out
    }
    let mut seen_loop = false;
    for _ in 0..reps.max(1) {
        body.extend(walk(&mut b, &trimmed, None, &mut seen_loop, &mut assigned));
    }
    let (mut ops, mut unops, mut ite, mut consts) = (BTreeSet::new(), BTreeSet::new(), false, Vec::new());
    collect_ops(&step.body, &mut ops, &mut unops, &mut ite, &mut consts);
    consts.extend(extra_consts.iter().cloned());
    Ok(Sketch {
        kind: SketchKind::Parallel,
        def: JoinDef {
            left: params.clone(),
            right: params.clone(),
            out: params,
            inputs: vec![],
            body: EquationSystem { eqs: body },
        },
        holes: b.holes,
        reps: reps.max(1),
        ops,
        unops,
        ite,
        consts: merge_consts(base_consts(), consts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MTLS: &str = include_str!("../../corpus/mtls.dsl");

    #[test]
    fn memoryless_sketch_wraps_sequence_state() {
        let nest = LoopNest::from_source(MTLS).unwrap();
        let sk = memoryless(&nest, 1).unwrap();
        let text = sk.to_string();
        assert!(text.contains("for j in 0..len(rec_l)"), "{text}");
        // three init holes, then row_sum, rec[j], mtl_rec
        assert_eq!(sk.holes.iter().filter(|h| matches!(h.origin, Origin::Init(_))).count(), 3);
        assert!(text.contains("rec[j] := ??"), "{text}");
        let rec_hole = sk.holes.iter().find(|h| &*h.target == "rec" && !matches!(h.origin, Origin::Init(_))).unwrap();
        assert_eq!(rec_hole.kind, HoleKind::Rec);
        assert!(rec_hole.locals.iter().any(|n| &**n == "row_sum"));
    }

    #[test]
    fn flat_sketch_without_sequences() {
        let nest = LoopNest::from_source(include_str!("../../corpus/bp.dsl")).unwrap();
        let sk = memoryless(&nest, 1).unwrap();
        assert!(!sk.to_string().contains("for "));
        assert!(sk.holes.iter().all(|h| !matches!(h.origin, Origin::Init(_))));
        assert!(sk.ite);
    }
}
