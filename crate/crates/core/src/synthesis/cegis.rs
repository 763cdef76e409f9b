//! Counterexample-guided search for hole completions, one dependency layer
//! of state variables at a time.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grammar::{leaves, rank_compositions, size_compositions, Cand, Pool, Stage, LEVEL_CAP, MAX_HOLE_SIZE};
use super::join::{CompiledJoin, JoinDef};
use super::sketch::{Sketch, SketchError};
use crate::expr::{Expr, Name};
use crate::frontend::{LoopNest, Type};
use crate::interp::compiled::{CExpr, Frame};
use crate::interp::{Bindings, CompiledNest, EvalError, State};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthConfig {
    pub kappa_max: usize,
    pub reps_max: usize,
    /// Candidates tried per layer before giving up.
    pub budget: usize,
    pub batch: usize,
    pub timeout: Option<Duration>,
    /// Smallest instances used as the initial counterexample set.
    pub seed_cex: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { kappa_max: 2, reps_max: 2, budget: 200_000, batch: 256, timeout: None, seed_cex: 4 }
    }
}

/// Overrides of state initializers used to compute the right operand.
pub type EmptyChoice = Vec<(Name, Expr)>;

/// Right operands of the instances, either fixed or recomputed per empty state.
#[derive(Clone, Debug)]
pub enum Rights {
    Fixed(Vec<State>),
    Rows { nest: LoopNest, inputs: Vec<Bindings>, rows: Vec<(usize, usize)> },
}

impl Rights {
    pub fn compute(&self, empty: &EmptyChoice) -> Result<Vec<State>, EvalError> {
        match self {
            Rights::Fixed(v) => Ok(v.clone()),
            Rights::Rows { nest, inputs, rows } => {
                let mut n = nest.clone();
                for (v, e) in empty {
                    if let Some(d) = n.state.iter_mut().find(|d| d.name == *v) {
                        d.init = Some(e.clone());
                    }
                }
                let c = CompiledNest::new(&n);
                let mut inits: HashMap<usize, State> = HashMap::new();
                rows.iter()
                    .map(|&(b, k)| {
                        if let std::collections::hash_map::Entry::Vacant(e) = inits.entry(b) {
                            e.insert(c.init_state(&inputs[b])?);
                        }
                        c.run(&inputs[b], &inits[&b], k, k + 1)
                    })
                    .collect()
            }
        }
    }
}

/// Input/output examples for a join: `join(left[k], right[k]) == expected[k]`
/// on the compared variables.
#[derive(Clone, Debug)]
pub struct Problem {
    pub left: Vec<State>,
    pub expected: Vec<State>,
    pub rights: Rights,
}

impl Problem {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Instances `(d, δ)` for the memoryless join: every reachable prefix state
    /// of every input, paired with the next row.
    pub fn memoryless(nest: &LoopNest, inputs: &[Bindings]) -> Result<Problem, EvalError> {
        let c = CompiledNest::new(nest);
        let mut seen = std::collections::HashSet::new();
        let (mut left, mut expected, mut rows, mut keep_inputs) = (vec![], vec![], vec![], vec![]);
        for b in inputs {
            let init = c.init_state(b)?;
            let n = c.rows(b)?;
            let mut s = init.clone();
            let mut used = false;
            for k in 0..n {
                let next = c.run(b, &s, k, k + 1)?;
                let g0 = c.run(b, &init, k, k + 1)?;
                if seen.insert((s.clone(), g0, next.clone())) {
                    left.push(s.clone());
                    expected.push(next.clone());
                    rows.push((keep_inputs.len(), k));
                    used = true;
                }
                s = next;
            }
            if used {
                keep_inputs.push(b.clone());
            }
        }
        Ok(Problem { left, expected, rights: Rights::Rows { nest: nest.clone(), inputs: keep_inputs, rows } })
    }

    /// Instances `(h(x), h(y), h(x • y))` for every split of every input, with
    /// `h` the nest projected onto `vars`.
    pub fn parallel(nest: &LoopNest, vars: &[Name], inputs: &[Bindings]) -> Result<Problem, EvalError> {
        let c = CompiledNest::new(nest);
        let mut seen = std::collections::HashSet::new();
        let (mut left, mut right, mut expected) = (vec![], vec![], vec![]);
        for b in inputs {
            let init = c.init_state(b)?;
            let n = c.rows(b)?;
            let mut prefix = vec![init.clone()];
            for k in 0..n {
                let next = c.run(b, &prefix[k], k, k + 1)?;
                prefix.push(next);
            }
            let whole = prefix[n].project(vars);
            for s in 0..=n {
                let l = prefix[s].project(vars);
                let r = c.run(b, &init, s, n)?.project(vars);
                if seen.insert((l.clone(), r.clone(), whole.clone())) {
                    left.push(l);
                    right.push(r);
                    expected.push(whole.clone());
                }
            }
        }
        Ok(Problem { left, expected, rights: Rights::Fixed(right) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub reps: usize,
    pub kappa: usize,
    pub all_ops: bool,
    pub shifts: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerReport {
    pub vars: Vec<String>,
    pub holes: usize,
    pub candidates: usize,
    pub counterexamples: usize,
    pub stage: Option<StageReport>,
    pub empty: Vec<(String, String)>,
    pub solution: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub instances: usize,
    pub layers: Vec<LayerReport>,
    pub candidates: usize,
    pub kappa_max: usize,
    pub reps_max: usize,
    pub budget: usize,
    /// Wall time; informational only.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Report {
    pub fn text(&self) -> String {
        let mut s = format!(
            "{} instances, {} candidates (kappa <= {}, reps <= {}, budget {}/layer)\n",
            self.instances, self.candidates, self.kappa_max, self.reps_max, self.budget
        );
        for l in &self.layers {
            s.push_str(&format!(
                "  layer {{{}}}: {} holes, {} candidates, {} counterexamples, {}\n",
                l.vars.join(", "),
                l.holes,
                l.candidates,
                l.counterexamples,
                match &l.stage {
                    Some(st) => format!(
                        "solved at reps={} kappa={}{}{}",
                        st.reps,
                        st.kappa,
                        if st.all_ops { " all-ops" } else { "" },
                        if st.shifts { " shifted" } else { "" }
                    ),
                    None => "unsolved".into(),
                }
            ));
            for (k, e) in l.solution.iter().enumerate() {
                s.push_str(&format!("    ??{k} = {e}\n"));
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub join: JoinDef,
    pub holes: Vec<Expr>,
    pub empty: EmptyChoice,
    pub report: Report,
}

#[derive(Debug, Clone, Error)]
pub enum SynthError {
    #[error("no join found for {{{}}}{}", layer.join(", "), if *bounded { " within the search bounds" } else { "" })]
    Unsat { layer: Vec<String>, bounded: bool, report: Report },
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("synthesized join failed final verification on instance {0}")]
    Verify(usize),
}

/// Strongly connected components of `deps` (v -> vars v reads), dependencies
/// first; ties follow `order`.
pub fn layers(order: &[Name], deps: &BTreeMap<Name, BTreeSet<Name>>) -> Vec<Vec<Name>> {
    let idx: HashMap<&Name, usize> = order.iter().enumerate().map(|(k, n)| (n, k)).collect();
    let n = order.len();
    let adj: Vec<Vec<usize>> = order
        .iter()
        .map(|v| deps.get(v).map(|d| d.iter().filter_map(|x| idx.get(x).copied()).collect()).unwrap_or_default())
        .collect();
    // reachability closure is small; compute SCCs by mutual reachability
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !reach[s][w] {
                    reach[s][w] = true;
                    stack.push(w);
                }
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        if comp[v] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&w| w == v || (reach[v][w] && reach[w][v])).collect();
        for &m in &members {
            comp[m] = comps.len();
        }
        comps.push(members);
    }
    let mut done = vec![false; comps.len()];
    let mut out = Vec::new();
    while out.len() < comps.len() {
        let next = (0..comps.len())
            .find(|&c| !done[c] && comps[c].iter().all(|&v| adj[v].iter().all(|&w| comp[w] == c || done[comp[w]])))
            .expect("component graph is acyclic");
        done[next] = true;
        out.push(comps[next].iter().map(|&v| order[v].clone()).collect());
    }
    out
}

struct Entry {
    expr: Expr,
    code: CExpr,
    height: u8,
    new_op: bool,
    shifted: bool,
}

struct Offer {
    choice: usize,
    picks: Vec<(usize, usize)>,
}

struct LayerSearch<'a> {
    cj: CompiledJoin,
    problem: &'a Problem,
    expected: Vec<Vec<Value>>,
    choices: Vec<(EmptyChoice, usize)>,
    frames: Vec<OnceLock<Result<Vec<Frame>, EvalError>>>,
    fixed: Vec<CExpr>,
    layer_holes: Vec<usize>,
    cex: Vec<usize>,
    tried: usize,
    budget: usize,
    deadline: Option<Instant>,
    truncated: bool,
}

impl LayerSearch<'_> {
    /// Frames for an empty-state choice; `None` when that choice cannot be
    /// evaluated on some instance (it is then never a solution).
    fn frames(&self, choice: usize) -> Option<&Vec<Frame>> {
        self.frames[choice]
            .get_or_init(|| {
                let rights = self.problem.rights.compute(&self.choices[choice].0)?;
                let none = Bindings::new();
                self.problem.left.iter().zip(&rights).map(|(l, r)| self.cj.frame(l, r, &none)).collect()
            })
            .as_ref()
            .ok()
    }

    fn table<'t>(&'t self, lists: &'t [Vec<Vec<Entry>>], o: &Offer) -> Vec<&'t CExpr> {
        let mut t: Vec<&CExpr> = self.fixed.iter().collect();
        for (k, &(s, r)) in o.picks.iter().enumerate() {
            t[self.layer_holes[k]] = &lists[k][s][r].code;
        }
        t
    }

    fn passes(&self, frames: &[Frame], table: &[&CExpr], k: usize) -> bool {
        self.cj.check(&frames[k], table, &self.expected[k])
    }

    /// Check a batch; returns the first candidate that survives full verification.
    fn process(&mut self, lists: &[Vec<Vec<Entry>>], batch: &mut Vec<Offer>) -> Result<Option<Offer>, EvalError> {
        for c in 0..self.choices.len() {
            if batch.iter().any(|o| o.choice == c) {
                self.frames(c);
            }
        }
        self.tried += batch.len();
        let this = &*self;
        let ok: Vec<bool> = batch
            .par_iter()
            .map(|o| {
                let Some(frames) = this.frames(o.choice) else { return false };
                let t = this.table(lists, o);
                this.cex.iter().all(|&k| this.passes(frames, &t, k))
            })
            .collect();
        let mut found = None;
        for (k, o) in batch.iter().enumerate() {
            if !ok[k] {
                continue;
            }
            let Some(frames) = self.frames(o.choice) else { continue };
            let t = self.table(lists, o);
            // counterexamples added during this batch
            if !self.cex.iter().all(|&i| self.passes(frames, &t, i)) {
                continue;
            }
            let n = frames.len();
            let miss = (0..n).into_par_iter().find_first(|&i| !self.passes(frames, &t, i));
            match miss {
                None => {
                    found = Some(k);
                    break;
                }
                Some(i) => {
                    let pos = self.cex.binary_search(&i).unwrap_or_else(|p| p);
                    self.cex.insert(pos, i);
                }
            }
        }
        let res = found.map(|k| batch.swap_remove(k));
        batch.clear();
        Ok(res)
    }

    fn out_of_time(&self) -> bool {
        self.tried >= self.budget || self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

fn stages(cfg: &SynthConfig, has_loop: bool) -> Vec<Stage> {
    let mut out = Vec::new();
    for shifts in [false, true] {
        if shifts && !has_loop {
            continue;
        }
        for all_ops in [false, true] {
            for kappa in 0..=cfg.kappa_max {
                if all_ops && kappa == 0 {
                    continue;
                }
                out.push(Stage { kappa, all_ops, shifts });
            }
        }
    }
    out
}

struct Found {
    choice: usize,
    exprs: Vec<Expr>,
    stage: Stage,
}

fn search_layer(
    sk: &Sketch,
    search: &mut LayerSearch,
    scope: &BTreeSet<Name>,
    cfg: &SynthConfig,
) -> Result<Option<Found>, EvalError> {
    let holes: Vec<usize> = search.layer_holes.clone();
    let h = holes.len();
    if h == 0 {
        return Ok(Some(Found { choice: 0, exprs: vec![], stage: Stage { kappa: 0, all_ops: false, shifts: false } }));
    }
    for stage in stages(cfg, sk.has_loop()) {
        // pools per distinct leaf set
        let mut pools: Vec<Pool> = Vec::new();
        let mut pool_of: Vec<usize> = Vec::new();
        let mut keys: Vec<(Vec<(Expr, bool)>, Vec<(Expr, bool)>)> = Vec::new();
        for &hid in &holes {
            let hole = &sk.holes[hid];
            let key = if hole.ty.is_seq() {
                (leaves(hole, sk, scope, &hole.ty, false), vec![])
            } else {
                (leaves(hole, sk, scope, &Type::Int, stage.shifts), leaves(hole, sk, scope, &Type::Bool, stage.shifts))
            };
            let p = match keys.iter().position(|k| *k == key) {
                Some(p) => p,
                None => {
                    keys.push(key.clone());
                    pools.push(Pool::new(key.0, key.1, sk, &stage));
                    pools.len() - 1
                }
            };
            pool_of.push(p);
        }
        let mut lists: Vec<Vec<Vec<Entry>>> = (0..h).map(|_| vec![vec![]]).collect();
        let extend = |lists: &mut Vec<Vec<Vec<Entry>>>, pools: &mut Vec<Pool>, upto: usize, search: &LayerSearch| {
            for (k, &hid) in holes.iter().enumerate() {
                let hole = &sk.holes[hid];
                let pool = &mut pools[pool_of[k]];
                let limit = if hole.ty.is_seq() { 1 } else { upto.min(MAX_HOLE_SIZE) };
                pool.ensure(limit);
                while lists[k].len() <= limit {
                    let s = lists[k].len();
                    let want = if hole.ty.is_seq() { Type::Int } else { hole.ty.clone() };
                    let level: &[Cand] = pool.level(&want, s);
                    let row = level
                        .iter()
                        .filter(|c| c.height as usize <= stage.kappa)
                        .filter_map(|c| {
                            search.cj.compile(&c.expr).map(|code| Entry {
                                expr: c.expr.clone(),
                                code,
                                height: c.height,
                                new_op: c.new_op,
                                shifted: c.shifted,
                            })
                        })
                        .collect();
                    lists[k].push(row);
                }
            }
        };
        let mut truncated = false;
        let max_total = h * MAX_HOLE_SIZE;
        let mut batch: Vec<Offer> = Vec::new();
        for total in h..=max_total {
            extend(&mut lists, &mut pools, total + 1 - h, search);
            if pools.iter().any(|p| p.int.iter().chain(&p.boolean).any(|l| l.len() >= LEVEL_CAP)) {
                truncated = true;
            }
            let lens: Vec<Vec<usize>> = lists.iter().map(|l| l.iter().map(|x| x.len()).collect()).collect();
            let mut comps: Vec<Vec<usize>> = Vec::new();
            size_compositions(&lens, total, &mut |c| {
                if !(stage.kappa > 0 && c.iter().all(|&s| s == 1)) {
                    comps.push(c.to_vec());
                }
                comps.len() < 20_000
            });
            if comps.is_empty() {
                continue;
            }
            let caps: Vec<Vec<usize>> =
                comps.iter().map(|c| c.iter().enumerate().map(|(k, &s)| lens[k][s]).collect()).collect();
            let max_r = caps.iter().map(|c| c.iter().map(|x| x - 1).sum::<usize>()).max().unwrap_or(0) + 1;
            for r in 0..=max_r {
                for (ci, comp) in comps.iter().enumerate() {
                    for choice in 0..search.choices.len() {
                        let cost = search.choices[choice].1;
                        if cost > r {
                            continue;
                        }
                        let mut stop: Option<Result<Option<Offer>, EvalError>> = None;
                        rank_compositions(&caps[ci], r - cost, &mut |ranks| {
                            let picks: Vec<(usize, usize)> = comp.iter().copied().zip(ranks.iter().copied()).collect();
                            let es: Vec<&Entry> =
                                picks.iter().enumerate().map(|(k, &(s, i))| &lists[k][s][i]).collect();
                            if stage.kappa > 0 && es.iter().map(|e| e.height as usize).max() != Some(stage.kappa) {
                                return true;
                            }
                            if stage.all_ops && !es.iter().any(|e| e.new_op) {
                                return true;
                            }
                            if stage.shifts && !es.iter().any(|e| e.shifted) {
                                return true;
                            }
                            batch.push(Offer { choice, picks });
                            if batch.len() >= cfg.batch {
                                let res = search.process(&lists, &mut batch);
                                match res {
                                    Ok(None) if !search.out_of_time() => return true,
                                    other => {
                                        stop = Some(other);
                                        return false;
                                    }
                                }
                            }
                            true
                        });
                        if let Some(res) = stop {
                            return match res? {
                                Some(o) => Ok(Some(found(o, &lists, stage))),
                                None => {
                                    search.truncated = true;
                                    Ok(None)
                                }
                            };
                        }
                    }
                }
            }
            if !batch.is_empty() {
                if let Some(o) = search.process(&lists, &mut batch)? {
                    return Ok(Some(found(o, &lists, stage)));
                }
                if search.out_of_time() {
                    search.truncated = true;
                    return Ok(None);
                }
            }
        }
        search.truncated |= truncated;
    }
    Ok(None)
}

fn found(o: Offer, lists: &[Vec<Vec<Entry>>], stage: Stage) -> Found {
    Found {
        choice: o.choice,
        exprs: o.picks.iter().enumerate().map(|(k, &(s, r))| lists[k][s][r].expr.clone()).collect(),
        stage,
    }
}

/// Fill the sketch layer by layer. `variants` lists the alternative empty
/// state initializers per variable (only meaningful for row-based problems).
pub fn synthesize(
    make: &dyn Fn(usize) -> Result<Sketch, SketchError>,
    problem: &Problem,
    layer_vars: &[Vec<Name>],
    variants: &BTreeMap<Name, Vec<Expr>>,
    cfg: &SynthConfig,
) -> Result<Solution, SynthError> {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    let mut last = None;
    for reps in 1..=cfg.reps_max.max(1) {
        let sk = make(reps)?;
        match solve(&sk, reps, problem, layer_vars, variants, cfg, deadline) {
            Ok(mut s) => {
                s.report.elapsed = start.elapsed();
                return Ok(s);
            }
            Err(SynthError::Unsat { layer, bounded, mut report }) => {
                report.elapsed = start.elapsed();
                let timed_out = deadline.is_some_and(|d| Instant::now() >= d);
                last = Some(SynthError::Unsat { layer, bounded, report });
                if timed_out {
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn solve(
    sk: &Sketch,
    reps: usize,
    problem: &Problem,
    layer_vars: &[Vec<Name>],
    variants: &BTreeMap<Name, Vec<Expr>>,
    cfg: &SynthConfig,
    deadline: Option<Instant>,
) -> Result<Solution, SynthError> {
    let mut report = Report {
        instances: problem.len(),
        kappa_max: cfg.kappa_max,
        reps_max: cfg.reps_max,
        budget: cfg.budget,
        ..Default::default()
    };
    let dummy = CExpr::Const(Value::Bool(false));
    let mut fixed: Vec<Option<Expr>> = vec![None; sk.holes.len()];
    let mut empty: EmptyChoice = Vec::new();
    let mut scope: BTreeSet<Name> = BTreeSet::new();
    let rows = matches!(problem.rights, Rights::Rows { .. });
    for layer in layer_vars {
        scope.extend(layer.iter().cloned());
        let lset: BTreeSet<Name> = layer.iter().cloned().collect();
        let layer_holes = sk.holes_of(&lset);
        let cj = CompiledJoin::new(&sk.def.restrict(&scope));
        let expected: Vec<Vec<Value>> = problem
            .expected
            .iter()
            .map(|s| cj.out.iter().map(|(n, _)| s.get(n).cloned().unwrap_or(Value::Bool(false))).collect())
            .collect();
        let mut choices = vec![(empty.clone(), 0)];
        if rows {
            for v in layer {
                for e in variants.get(v).into_iter().flatten() {
                    let mut c = empty.clone();
                    c.retain(|(n, _)| n != v);
                    c.push((v.clone(), e.clone()));
                    choices.push((c, 1));
                }
            }
        }
        let fixed_code: Vec<CExpr> =
            fixed.iter().map(|f| f.as_ref().and_then(|e| cj.compile(e)).unwrap_or_else(|| dummy.clone())).collect();
        let n = problem.len();
        let mut search = LayerSearch {
            frames: (0..choices.len()).map(|_| OnceLock::new()).collect(),
            cj,
            problem,
            expected,
            choices,
            fixed: fixed_code,
            layer_holes: layer_holes.clone(),
            cex: (0..cfg.seed_cex.min(n)).collect(),
            tried: 0,
            budget: cfg.budget,
            deadline,
            truncated: false,
        };
        let res = search_layer(sk, &mut search, &scope, cfg)?;
        report.candidates += search.tried;
        let mut lr = LayerReport {
            vars: layer.iter().map(|v| v.to_string()).collect(),
            holes: layer_holes.len(),
            candidates: search.tried,
            counterexamples: search.cex.len(),
            stage: None,
            empty: vec![],
            solution: vec![],
        };
        match res {
            Some(f) => {
                for (k, &hid) in layer_holes.iter().enumerate() {
                    fixed[hid] = Some(f.exprs[k].clone());
                }
                empty = search.choices[f.choice].0.clone();
                lr.stage =
                    Some(StageReport { reps, kappa: f.stage.kappa, all_ops: f.stage.all_ops, shifts: f.stage.shifts });
                lr.empty = empty.iter().map(|(n, e)| (n.to_string(), e.to_string())).collect();
                lr.solution = f.exprs.iter().map(|e| e.to_string()).collect();
                report.layers.push(lr);
            }
            None => {
                report.layers.push(lr);
                return Err(SynthError::Unsat {
                    layer: layer.iter().map(|v| v.to_string()).collect(),
                    bounded: search.truncated,
                    report,
                });
            }
        }
    }
    // every hole belongs to some layer variable
    let holes: Vec<Expr> = fixed.into_iter().map(|f| f.unwrap_or(Expr::Bool(false))).collect();
    let join = sk.def.fill(&holes);
    let cj = CompiledJoin::new(&join);
    let rights = problem.rights.compute(&empty)?;
    let none = Bindings::new();
    let miss = (0..problem.len()).into_par_iter().find_first(|&k| {
        let Ok(f) = cj.frame(&problem.left[k], &rights[k], &none) else { return true };
        let exp: Vec<Value> =
            cj.out.iter().map(|(n, _)| problem.expected[k].get(n).cloned().unwrap_or(Value::Bool(false))).collect();
        !cj.check(&f, &[], &exp)
    });
    if let Some(k) = miss {
        return Err(SynthError::Verify(k));
    }
    Ok(Solution { join, holes, empty, report })
}

/// Cost-one alternatives for the empty state of `v`: the usual identities of
/// its type, as scalars or as fills of the declared length.
pub fn empty_variants(nest: &LoopNest, v: &Name) -> Vec<Expr> {
    let Some(d) = nest.state.iter().find(|d| d.name == *v) else { return vec![] };
    let init = d.init.clone().unwrap_or(Expr::int(0));
    let ints = [Expr::int(0), Expr::int(1), Expr::NegInf, Expr::PosInf];
    let cands: Vec<Expr> = match &d.ty {
        Type::Bool => vec![Expr::Bool(true), Expr::Bool(false)],
        Type::Int => ints.to_vec(),
        Type::Seq(e) if **e == Type::Int => match &init {
            Expr::Fill(_, n) => ints.iter().map(|x| Expr::Fill(Box::new(x.clone()), n.clone())).collect(),
            _ => vec![],
        },
        Type::Seq(_) => match &init {
            Expr::Fill(_, n) => [true, false].iter().map(|b| Expr::Fill(Box::new(Expr::Bool(*b)), n.clone())).collect(),
            _ => vec![],
        },
    };
    cands.into_iter().filter(|c| *c != init).collect()
}
