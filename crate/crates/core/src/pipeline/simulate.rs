//! Divide-and-conquer execution of a plan over a tree of contiguous chunks.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ParallelPlan, PlanError, PlanKind};
use crate::expr::{Expr, Name};
use crate::frontend::LoopNest;
use crate::interp::{eval_expr, Bindings, CompiledNest, EvalError, State};
use crate::synthesis::{CompiledJoin, JoinDef};

/// A binary division of rows `0..n` into contiguous chunks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimTree {
    Leaf { lo: usize, hi: usize },
    Node(Box<SimTree>, Box<SimTree>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    LeftSpine,
    RightSpine,
    Balanced,
    Singleton,
    WithEmpty,
    Random,
}

impl fmt::Display for SimTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimTree::Leaf { lo, hi } => write!(f, "[{lo},{hi})"),
            SimTree::Node(a, b) => write!(f, "({a} {b})"),
        }
    }
}

fn node(a: SimTree, b: SimTree) -> SimTree {
    SimTree::Node(Box::new(a), Box::new(b))
}

/// Tree over consecutive chunks with the given bounds, split at `pick`.
fn over(bounds: &[(usize, usize)], pick: &mut dyn FnMut(usize) -> usize) -> SimTree {
    if bounds.len() == 1 {
        let (lo, hi) = bounds[0];
        return SimTree::Leaf { lo, hi };
    }
    let k = pick(bounds.len()).clamp(1, bounds.len() - 1);
    node(over(&bounds[..k], pick), over(&bounds[k..], pick))
}

fn unit_bounds(n: usize) -> Vec<(usize, usize)> {
    if n == 0 {
        vec![(0, 0)]
    } else {
        (0..n).map(|i| (i, i + 1)).collect()
    }
}

impl SimTree {
    pub fn leaves(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<(usize, usize)>) {
        match self {
            SimTree::Leaf { lo, hi } => out.push((*lo, *hi)),
            SimTree::Node(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    /// Whether the leaves, in order, cover exactly `0..n`.
    pub fn covers(&self, n: usize) -> bool {
        let mut at = 0;
        for (lo, hi) in self.leaves() {
            if lo != at || hi < lo {
                return false;
            }
            at = hi;
        }
        at == n
    }

    pub fn singleton(n: usize) -> SimTree {
        SimTree::Leaf { lo: 0, hi: n }
    }

    pub fn left_spine(n: usize) -> SimTree {
        over(&unit_bounds(n), &mut |len| len - 1)
    }

    pub fn right_spine(n: usize) -> SimTree {
        over(&unit_bounds(n), &mut |_| 1)
    }

    pub fn balanced(n: usize) -> SimTree {
        over(&unit_bounds(n), &mut |len| len / 2)
    }

    /// Random chunk sizes (empty chunks included) under a random tree.
    pub fn random(n: usize, rng: &mut impl Rng, empties: bool) -> SimTree {
        let mut bounds = Vec::new();
        let mut at = 0;
        while at < n {
            let len = rng.gen_range(1..=(n - at).min(1 + n / 3));
            bounds.push((at, at + len));
            at += len;
        }
        if bounds.is_empty() {
            bounds.push((0, 0));
        }
        if empties {
            for _ in 0..rng.gen_range(1..=2) {
                let k = rng.gen_range(0..=bounds.len());
                let p = if k == bounds.len() { n } else { bounds[k].0 };
                bounds.insert(k, (p, p));
            }
        }
        over(&bounds, &mut |len| rng.gen_range(1..len))
    }

    pub fn of_shape(shape: TreeShape, n: usize, rng: &mut impl Rng) -> SimTree {
        match shape {
            TreeShape::LeftSpine => SimTree::left_spine(n),
            TreeShape::RightSpine => SimTree::right_spine(n),
            TreeShape::Balanced => SimTree::balanced(n),
            TreeShape::Singleton => SimTree::singleton(n),
            TreeShape::WithEmpty => SimTree::random(n, rng, true),
            TreeShape::Random => SimTree::random(n, rng, false),
        }
    }
}

/// The fixed shapes first, then seeded random trees up to `count`.
pub fn trees(n: usize, count: usize, seed: u64) -> Vec<SimTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 20));
    let fixed = [TreeShape::LeftSpine, TreeShape::RightSpine, TreeShape::Balanced, TreeShape::Singleton];
    let mut out: Vec<SimTree> = fixed.iter().map(|s| SimTree::of_shape(*s, n, &mut rng)).collect();
    let mut k = 0;
    while out.len() < count {
        let shape = if k % 2 == 0 { TreeShape::WithEmpty } else { TreeShape::Random };
        out.push(SimTree::of_shape(shape, n, &mut rng));
        k += 1;
    }
    out.truncate(count.max(1));
    out
}

fn with_inits(nest: &LoopNest, empty: &[(Name, Expr)]) -> LoopNest {
    let mut n = nest.clone();
    for (v, e) in empty {
        if let Some(d) = n.state.iter_mut().find(|d| d.name == *v) {
            d.init = Some(e.clone());
        }
    }
    n
}

/// A plan compiled for execution.
#[derive(Clone, Debug)]
pub struct Runtime {
    pub kind: PlanKind,
    pub nest: LoopNest,
    original: Vec<Name>,
    full: CompiledNest,
    map: CompiledNest,
    star: CompiledJoin,
    step: Option<CompiledJoin>,
    join: Option<CompiledJoin>,
    kept: Vec<Name>,
    dropped: Vec<Name>,
    identity: Vec<(Name, Expr)>,
}

fn path_err(path: &str, e: EvalError) -> PlanError {
    PlanError::Simulate { path: if path.is_empty() { "root".into() } else { path.into() }, reason: e.to_string() }
}

impl Runtime {
    pub fn new(plan: &ParallelPlan) -> Result<Runtime, PlanError> {
        let nest = LoopNest::from_source(&plan.program).map_err(|e| PlanError::Document(e.to_string()))?;
        let empty = plan.map_empty()?;
        let load = |d: &Option<crate::synthesis::JoinDoc>| -> Result<Option<JoinDef>, PlanError> {
            d.as_ref().map(|d| JoinDef::from_doc(d).map_err(|e| PlanError::Document(e.to_string()))).transpose()
        };
        let star = load(&plan.memoryless_join)?.ok_or(PlanError::NotRunnable(plan.kind))?;
        let step = match &plan.summarized {
            Some(s) => load(&Some(s.step.clone()))?,
            None => None,
        };
        let join = load(&plan.parallel_join)?;
        if plan.kind == PlanKind::Failed || (plan.kind == PlanKind::FullDc && (join.is_none() || step.is_none())) {
            return Err(PlanError::NotRunnable(plan.kind));
        }
        let names = |v: &[String]| v.iter().map(|s| crate::expr::name(s)).collect::<Vec<Name>>();
        let (kept, dropped) = match &plan.summarized {
            Some(s) => (names(&s.kept), names(&s.dropped)),
            None => (nest.state_names(), vec![]),
        };
        let identity = kept
            .iter()
            .map(|k| {
                nest.init_of(k)
                    .cloned()
                    .map(|e| (k.clone(), e))
                    .ok_or_else(|| PlanError::Document(format!("no init for `{k}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Runtime {
            kind: plan.kind,
            original: names(&plan.original_state),
            full: CompiledNest::new(&nest),
            map: CompiledNest::new(&with_inits(&nest, &empty)),
            star: CompiledJoin::new(&star),
            step: step.as_ref().map(CompiledJoin::new),
            join: join.as_ref().map(CompiledJoin::new),
            kept,
            dropped,
            identity,
            nest,
        })
    }

    pub fn rows(&self, x: &Bindings) -> Result<usize, EvalError> {
        self.full.rows(x)
    }

    /// Sequential evaluation of the loop, projected onto the original state.
    pub fn sequential(&self, x: &Bindings) -> Result<State, EvalError> {
        Ok(self.full.run_all(x)?.project(&self.original))
    }

    /// `h([])`: the summarized state of no rows.
    pub fn identity(&self, x: &Bindings) -> Result<State, EvalError> {
        let env: HashMap<Name, crate::value::Value> = x.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut s = State::default();
        for (k, e) in &self.identity {
            s.insert(k.clone(), eval_expr(e, &env)?);
        }
        Ok(s)
    }

    /// `g(row)`: one row from the empty state.
    pub fn map_row(&self, x: &Bindings, r: usize) -> Result<State, EvalError> {
        let init = self.map.init_state(x)?;
        self.map.run(x, &init, r, r + 1)
    }

    /// Summarized state of rows `lo..hi`, folded from the identity.
    pub fn chunk(&self, x: &Bindings, lo: usize, hi: usize) -> Result<State, EvalError> {
        let step = self.step.as_ref().expect("summarized plan");
        let mut s = self.identity(x)?;
        for r in lo..hi {
            s = step.eval(&s, &self.map_row(x, r)?, x, &[])?;
        }
        Ok(s)
    }

    /// `a ⊙ b`.
    pub fn join(&self, x: &Bindings, a: &State, b: &State) -> Result<State, EvalError> {
        self.join.as_ref().expect("parallel join").eval(a, b, x, &[])
    }

    /// Summarized state of the whole input, computed by the original loop.
    pub fn h(&self, x: &Bindings) -> Result<State, EvalError> {
        Ok(self.full.run_all(x)?.project(&self.kept))
    }

    /// Fold of the memoryless join over mapped rows, from the initial state.
    pub fn fold_rows(&self, x: &Bindings, rows: &[State]) -> Result<State, EvalError> {
        let mut s = self.full.init_state(x)?;
        for g in rows {
            s = self.star.eval(&s, g, x, &[])?;
        }
        Ok(s.project(&self.original))
    }

    pub fn original(&self) -> &[Name] {
        &self.original
    }

    pub fn kept(&self) -> &[Name] {
        &self.kept
    }

    fn tree(&self, x: &Bindings, t: &SimTree, path: &str) -> Result<State, PlanError> {
        match t {
            SimTree::Leaf { lo, hi } => self.chunk(x, *lo, *hi).map_err(|e| path_err(path, e)),
            SimTree::Node(a, b) => {
                let (l, r) =
                    rayon::join(|| self.tree(x, a, &format!("{path}L")), || self.tree(x, b, &format!("{path}R")));
                self.join(x, &l?, &r?).map_err(|e| path_err(path, e))
            }
        }
    }

    /// Run the plan over `t`, projected onto the original state. Map-only
    /// plans compute the rows of every chunk independently and fold them in
    /// order.
    pub fn simulate(&self, x: &Bindings, t: &SimTree) -> Result<State, PlanError> {
        let n = self.rows(x).map_err(|e| path_err("", e))?;
        if !t.covers(n) {
            return Err(PlanError::Tree(t.to_string(), n));
        }
        match self.kind {
            PlanKind::FullDc => {
                let mut s = self.tree(x, t, "")?;
                let last = if n == 0 { self.full.init_state(x) } else { self.map_row(x, n - 1) };
                let last = last.map_err(|e| path_err("", e))?;
                for d in &self.dropped {
                    if let Some(v) = last.get(d) {
                        s.insert(d.clone(), v.clone());
                    }
                }
                Ok(s.project(&self.original))
            }
            PlanKind::MapOnly => {
                let leaves = t.leaves();
                let rows: Vec<Vec<State>> = leaves
                    .par_iter()
                    .rev()
                    .map(|&(lo, hi)| (lo..hi).map(|r| self.map_row(x, r)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| path_err("", e))?;
                let rows: Vec<State> = rows.into_iter().rev().flatten().collect();
                self.fold_rows(x, &rows).map_err(|e| path_err("", e))
            }
            PlanKind::Failed => Err(PlanError::NotRunnable(self.kind)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_shapes_cover_the_rows() {
        for n in 0..6 {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for s in [
                TreeShape::LeftSpine,
                TreeShape::RightSpine,
                TreeShape::Balanced,
                TreeShape::Singleton,
                TreeShape::WithEmpty,
                TreeShape::Random,
            ] {
                let t = SimTree::of_shape(s, n, &mut rng);
                assert!(t.covers(n), "{s:?} {n}: {t}");
            }
        }
    }

    #[test]
    fn left_spine_nests_to_the_left() {
        assert_eq!(SimTree::left_spine(3).to_string(), "(([0,1) [1,2)) [2,3))");
        assert_eq!(SimTree::right_spine(3).to_string(), "([0,1) ([1,2) [2,3)))");
    }
}
