//! Constant and recursive normal forms and the spine cost.

use std::fmt;

use serde::Serialize;

use super::sym::{Purity, Sym};
use crate::expr::{name, BinOp};

/// `(size of subexpressions not in normal form, number of constant-normal-form leaves)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cost {
    pub size: usize,
    pub c: usize,
}

impl Cost {
    fn add(self, o: Cost) -> Cost {
        Cost { size: self.size + o.size, c: self.c + o.c }
    }

    /// Strictly worse: a larger non-normal size, or the same positive size
    /// with fewer normal leaves.
    pub fn worse_than(&self, o: &Cost) -> bool {
        self.size > o.size || (self.size == o.size && self.size > 0 && self.c < o.c)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.size, self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NormalKind {
    Constant,
    Recursive(BinOp),
    None,
}

/// One constant-normal-form leaf `exp_s ⊛ exp_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub expr: Sym,
    pub state: Option<Sym>,
    pub inputs: Vec<Sym>,
    /// The leaf with its state part written `S` and input parts `I1, I2, ..`.
    pub skeleton: Sym,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormReport {
    pub kind: NormalKind,
    pub spine_length: usize,
    pub leaves: Vec<Leaf>,
    pub cost: Cost,
}

#[derive(Default)]
struct Parts {
    state: Vec<Sym>,
    inputs: Vec<Sym>,
}

fn decompose(e: &Sym, parts: &mut Parts) -> Sym {
    match e.purity() {
        Purity::Const => e.clone(),
        Purity::State => {
            parts.state.push(e.clone());
            Sym::Param(name("S"))
        }
        Purity::Input => {
            parts.inputs.push(e.clone());
            Sym::Param(name(&format!("I{}", parts.inputs.len())))
        }
        Purity::Mixed => match e {
            Sym::Nary(op, xs) => {
                let mut st = Vec::new();
                let mut inp = Vec::new();
                let mut rest = Vec::new();
                for x in xs {
                    match x.purity() {
                        Purity::State => st.push(x.clone()),
                        Purity::Input => inp.push(x.clone()),
                        _ => rest.push(x),
                    }
                }
                let mut sk = Vec::new();
                if !st.is_empty() {
                    sk.push(decompose(&Sym::nary(*op, st), parts));
                }
                if !inp.is_empty() {
                    sk.push(decompose(&Sym::nary(*op, inp), parts));
                }
                for x in rest {
                    sk.push(decompose(x, parts));
                }
                Sym::Nary(*op, sk)
            }
            _ => {
                let cs = e.children().into_iter().map(|c| decompose(c, parts)).collect();
                e.with_children(cs)
            }
        },
    }
}

/// The leaf decomposition when `e` is in constant normal form: at most one
/// state-only part, combined with input-only parts by a variable-free skeleton.
pub fn constant_leaf(e: &Sym) -> Option<Leaf> {
    let mut parts = Parts::default();
    let skeleton = decompose(e, &mut parts);
    if parts.state.len() > 1 {
        return None;
    }
    Some(Leaf { expr: e.clone(), state: parts.state.pop(), inputs: parts.inputs, skeleton })
}

pub fn is_constant_normal(e: &Sym) -> bool {
    constant_leaf(e).is_some()
}

/// Cost of `e` relative to spine operator `op`.
pub fn spine_cost(e: &Sym, op: BinOp) -> Cost {
    match e {
        Sym::Nary(o, xs) if *o == op => xs.iter().fold(Cost::default(), |c, x| c.add(spine_cost(x, op))),
        e if is_constant_normal(e) => Cost { size: 0, c: 1 },
        e => Cost { size: e.size(), c: 0 },
    }
}

fn spine_leaves(e: &Sym, op: BinOp, out: &mut Vec<Leaf>) {
    match e {
        Sym::Nary(o, xs) if *o == op => {
            for x in xs {
                spine_leaves(x, op, out);
            }
        }
        e => out.extend(constant_leaf(e)),
    }
}

const SPINE_ORDER: [BinOp; 6] = [BinOp::Max, BinOp::Min, BinOp::Add, BinOp::Mul, BinOp::And, BinOp::Or];

/// Spine-operator candidates: the associative operators on the path from the
/// root to the deepest state symbol, shallowest first.
pub fn spine_candidates(e: &Sym) -> Vec<BinOp> {
    fn deepest(e: &Sym, depth: usize, path: &mut Vec<BinOp>, best: &mut (usize, Vec<BinOp>)) {
        if matches!(e, Sym::State(..)) && (best.1.is_empty() || depth > best.0) {
            *best = (depth, path.clone());
        }
        let op = match e {
            Sym::Nary(op, _) => Some(*op),
            _ => None,
        };
        if let Some(op) = op {
            path.push(op);
        }
        for c in e.children() {
            deepest(c, depth + 1, path, best);
        }
        if op.is_some() {
            path.pop();
        }
    }
    let mut best = (0, Vec::new());
    deepest(e, 0, &mut Vec::new(), &mut best);
    let mut out: Vec<BinOp> = Vec::new();
    for op in best.1 {
        if !out.contains(&op) {
            out.push(op);
        }
    }
    if out.is_empty() {
        out.extend(SPINE_ORDER.iter().copied().filter(|op| matches!(e, Sym::Nary(o, _) if o == op)));
    }
    out
}

pub fn classify_under(e: &Sym, op: BinOp) -> NormalFormReport {
    let cost = spine_cost(e, op);
    if cost.size > 0 {
        return NormalFormReport { kind: NormalKind::None, spine_length: 0, leaves: vec![], cost };
    }
    let mut leaves = Vec::new();
    spine_leaves(e, op, &mut leaves);
    NormalFormReport { kind: NormalKind::Recursive(op), spine_length: cost.c.saturating_sub(1), leaves, cost }
}

pub fn classify(e: &Sym) -> NormalFormReport {
    if let Some(l) = constant_leaf(e) {
        return NormalFormReport {
            kind: NormalKind::Constant,
            spine_length: 0,
            leaves: vec![l],
            cost: Cost { size: 0, c: 1 },
        };
    }
    let cands = spine_candidates(e);
    for &op in &cands {
        let r = classify_under(e, op);
        if r.kind != NormalKind::None {
            return r;
        }
    }
    let cost = cands.first().map(|op| spine_cost(e, *op)).unwrap_or(Cost { size: e.size(), c: 0 });
    NormalFormReport { kind: NormalKind::None, spine_length: 0, leaves: vec![], cost }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(n: &str) -> Sym {
        Sym::State(name(n), None)
    }
    fn inp(k: usize, n: &str) -> Sym {
        Sym::Input(k, name(n), None)
    }

    #[test]
    fn single_state_variable_is_constant() {
        let r = classify(&st("s"));
        assert_eq!(r.kind, NormalKind::Constant);
        assert_eq!(r.cost, Cost { size: 0, c: 1 });
    }

    #[test]
    fn sum_is_constant_with_one_input_part() {
        let e = Sym::nary(BinOp::Add, vec![st("s"), inp(1, "s"), inp(2, "s")]);
        let r = classify(&e);
        assert_eq!(r.kind, NormalKind::Constant);
        assert_eq!(r.leaves[0].inputs, vec![Sym::nary(BinOp::Add, vec![inp(1, "s"), inp(2, "s")])]);
    }

    #[test]
    fn two_state_parts_need_a_spine() {
        let e = Sym::nary(BinOp::Max, vec![st("m"), Sym::nary(BinOp::Add, vec![st("r"), inp(1, "r")])]);
        assert!(!is_constant_normal(&e));
        let r = classify(&e);
        assert_eq!(r.kind, NormalKind::Recursive(BinOp::Max));
        assert_eq!(r.cost, Cost { size: 0, c: 2 });
    }
}
