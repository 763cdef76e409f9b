//! The summarized loop: the memoryless join restricted to the variables that
//! carry information from one row to the next.

use std::collections::BTreeSet;

use crate::expr::Name;
use crate::frontend::LoopNest;
use crate::interp::{Bindings, EvalError, State};
use crate::synthesis::{base_name, right_name, CompiledJoin, JoinDef, Problem, Side, Solution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Summary {
    /// Variables of the summarized state, in declaration order.
    pub kept: Vec<Name>,
    /// Variables recomputed by every row; their final value is the last row's.
    pub dropped: Vec<Name>,
    /// `h(x • δ) = step(h(x), g(δ))`: left is the kept state, right the row.
    pub step: JoinDef,
    /// Loop depth of the summarized function.
    pub depth: usize,
}

fn build(join: &JoinDef, kept: &[Name], dropped: &BTreeSet<Name>) -> JoinDef {
    let keep: BTreeSet<Name> = kept.iter().cloned().collect();
    let mut step = join.restrict(&keep);
    step.left.retain(|p| keep.contains(&p.name));
    step.body = step.body.map_exprs(&mut |e| e.rename(&|n| dropped.contains(n).then(|| right_name(n).to_string())));
    step
}

fn left_reads(step: &JoinDef, dropped: &BTreeSet<Name>) -> BTreeSet<Name> {
    step.body
        .reads()
        .iter()
        .filter_map(|n| match base_name(n) {
            Some((b, Side::Left)) => dropped.get(b).cloned(),
            _ => None,
        })
        .collect()
}

fn valid(step: &JoinDef, left: &[State], right: &[State], expected: &[State], kept: &[Name]) -> bool {
    let cj = CompiledJoin::new(step);
    let none = Bindings::new();
    left.iter()
        .zip(right)
        .zip(expected)
        .all(|((l, r), e)| cj.eval(&l.project(kept), r, &none, &[]).is_ok_and(|s| s == e.project(kept)))
}

/// Drop every variable whose joined value is the right operand's on all
/// instances, as long as the restricted join still reproduces the rest.
pub fn summarize(nest: &LoopNest, sol: &Solution, problem: &Problem) -> Result<Summary, EvalError> {
    let names = nest.state_names();
    let rights = problem.rights.compute(&sol.empty)?;
    let cj = CompiledJoin::new(&sol.join);
    let none = Bindings::new();
    let outs: Vec<State> =
        problem.left.iter().zip(&rights).map(|(l, r)| cj.eval(l, r, &none, &[])).collect::<Result<_, _>>()?;
    let mut dropped: BTreeSet<Name> =
        names.iter().filter(|x| outs.iter().zip(&rights).all(|(o, r)| o.get(x) == r.get(x))).cloned().collect();
    loop {
        let kept: Vec<Name> = names.iter().filter(|x| !dropped.contains(*x)).cloned().collect();
        let step = build(&sol.join, &kept, &dropped);
        let lefts = left_reads(&step, &dropped);
        if !lefts.is_empty() {
            dropped.retain(|x| !lefts.contains(x));
            continue;
        }
        if valid(&step, &problem.left, &rights, &problem.expected, &kept) {
            let depth = 1 + step.body.depth();
            let dropped = names.iter().filter(|x| dropped.contains(*x)).cloned().collect();
            return Ok(Summary { kept, dropped, step, depth });
        }
        let reads = step.body.reads();
        let read: Vec<Name> = dropped.iter().filter(|x| reads.contains(&right_name(x))).cloned().collect();
        if read.is_empty() || read.len() == dropped.len() {
            dropped.clear();
        } else {
            dropped.retain(|x| !read.contains(x));
        }
    }
}
