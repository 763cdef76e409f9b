//! Two-phase cost-guided normalization.
//!
//! Phase one pushes state symbols up (fewer occurrences, then smaller total
//! depth) and is done if that reaches a constant normal form. Phase two guesses a spine
//! operator and rewrites towards a recursive normal form under that operator.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::{
    classify, classify_under, is_constant_normal, spine_candidates, spine_cost, Cost, NormalFormReport,
};
use super::rules::{tiny_assignments, Rule, RULES};
use super::sym::Sym;
use super::SymError;
use crate::expr::BinOp;
use crate::value::Value;

#[derive(Clone, Debug)]
pub struct NormConfig {
    /// Rewrite candidates generated per phase before giving up.
    pub attempts: usize,
    /// Leaf count up to which equivalence checks are exhaustive.
    pub exhaustive_leaves: usize,
    pub random_checks: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        NormConfig { attempts: 200_000, exhaustive_leaves: 5, random_checks: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub phase: u8,
    pub rule: &'static str,
    pub before: String,
    pub after: String,
    pub expr: Sym,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phase{} {:<16} {} -> {}  {}", self.phase, self.rule, self.before, self.after, self.expr)
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub expr: Sym,
    pub report: NormalFormReport,
    pub trace: Vec<Step>,
}

/// Occurrences of state symbols and the sum of their depths.
pub fn phase1_cost(e: &Sym) -> (usize, usize) {
    let mut n = 0;
    let mut d = 0;
    e.walk_leaves(0, &mut |l, depth| {
        if matches!(l, Sym::State(..)) {
            n += 1;
            d += depth;
        }
    });
    (n, d)
}

/// Bounded semantic equality: exhaustive over `{-2..2}` for few leaves,
/// seeded random assignments otherwise.
pub fn equivalent(a: &Sym, b: &Sym, cfg: &NormConfig) -> bool {
    let mut leaves = a.leaf_types();
    for (k, v) in b.leaf_types() {
        *leaves.entry(k).or_insert(v) |= v;
    }
    let same = |env: &BTreeMap<Sym, Value>| {
        let look = |s: &Sym| env.get(s).cloned();
        a.eval(&look).ok() == b.eval(&look).ok()
    };
    if leaves.len() <= cfg.exhaustive_leaves {
        return tiny_assignments(&leaves).iter().all(same);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..cfg.random_checks).all(|_| {
        let env: BTreeMap<Sym, Value> = leaves
            .iter()
            .map(|(l, is_bool)| {
                let v = if *is_bool { Value::Bool(rng.gen()) } else { Value::int(rng.gen_range(-4..=4)) };
                (l.clone(), v)
            })
            .collect();
        same(&env)
    })
}

struct Search<'a> {
    cfg: &'a NormConfig,
    seen: HashSet<Sym>,
    attempts: usize,
    trace: Vec<Step>,
}

impl Search<'_> {
    fn candidates(&mut self, e: &Sym) -> Result<Vec<(&'static Rule, Sym)>, SymError> {
        let mut out = Vec::new();
        for r in RULES {
            for x in r.everywhere(e) {
                self.attempts += 1;
                if self.attempts > self.cfg.attempts {
                    return Err(SymError::Budget { best: e.clone() });
                }
                if !self.seen.contains(&x) {
                    out.push((r, x));
                }
            }
        }
        Ok(out)
    }

    /// Accept the first candidate minimizing `key` among those `better` than
    /// the current expression, checking semantics before committing.
    fn step<K: Ord + Copy>(
        &mut self,
        phase: u8,
        cur: &Sym,
        key: impl Fn(&Sym) -> K,
        better: impl Fn(K, K) -> bool,
        show: impl Fn(K) -> String,
    ) -> Result<Option<Sym>, SymError> {
        let k0 = key(cur);
        let mut cands: Vec<(K, usize, &'static Rule, Sym)> = self
            .candidates(cur)?
            .into_iter()
            .enumerate()
            .map(|(i, (r, x))| (key(&x), i, r, x))
            .filter(|(k, ..)| better(*k, k0))
            .collect();
        cands.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        for (k, _, r, x) in cands {
            if !equivalent(cur, &x, self.cfg) {
                continue;
            }
            self.seen.insert(x.clone());
            self.trace.push(Step { phase, rule: r.name, before: show(k0), after: show(k), expr: x.clone() });
            return Ok(Some(x));
        }
        Ok(None)
    }
}

pub fn normalize(e: &Sym, cfg: &NormConfig) -> Result<Normalized, SymError> {
    let mut s = Search { cfg, seen: HashSet::from([e.clone()]), attempts: 0, trace: Vec::new() };
    let show1 = |(n, d): (usize, usize)| format!("({n}, {d})");
    let mut cur = e.clone();
    while let Some(x) = s.step(1, &cur, phase1_cost, |a, b| a < b, show1)? {
        cur = x;
    }
    if is_constant_normal(&cur) {
        let report = classify(&cur);
        return Ok(Normalized { expr: cur, report, trace: s.trace });
    }
    let base = cur;
    let base_trace = s.trace.clone();
    for op in spine_candidates(&base) {
        s.attempts = 0;
        s.trace = base_trace.clone();
        if let Some(x) = phase2(&mut s, &base, op)? {
            let report = classify_under(&x, op);
            return Ok(Normalized { expr: x, report, trace: s.trace });
        }
    }
    Err(SymError::NoNormalForm { best: base })
}

fn phase2(s: &mut Search, base: &Sym, op: BinOp) -> Result<Option<Sym>, SymError> {
    // smaller size first; at equal positive size, more normal leaves
    let key = |x: &Sym| {
        let c = spine_cost(x, op);
        (c.size, usize::MAX - c.c)
    };
    let better = |k: (usize, usize), k0: (usize, usize)| k.0 < k0.0 || (k.0 == k0.0 && k0.0 > 0 && k.1 < k0.1);
    let show = |k: (usize, usize)| Cost { size: k.0, c: usize::MAX - k.1 }.to_string();
    let mut cur = base.clone();
    loop {
        if spine_cost(&cur, op).size == 0 {
            return Ok(Some(cur));
        }
        match s.step(2, &cur, key, better, show)? {
            Some(x) => cur = x,
            None => return Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;
    use crate::symbolic::NormalKind;

    fn st(n: &str) -> Sym {
        Sym::State(name(n), None)
    }
    fn inp(k: usize) -> Sym {
        Sym::Input(k, name("x"), None)
    }

    #[test]
    fn factorization_example() {
        let r = st("r");
        let e = Sym::nary(
            BinOp::Max,
            vec![
                Sym::nary(BinOp::Add, vec![r.clone(), inp(1)]),
                Sym::nary(BinOp::Add, vec![r.clone(), inp(1), inp(2)]),
            ],
        );
        let n = normalize(&e, &NormConfig::default()).unwrap();
        let want = Sym::nary(
            BinOp::Add,
            vec![r, Sym::nary(BinOp::Max, vec![inp(1), Sym::nary(BinOp::Add, vec![inp(1), inp(2)])])],
        );
        assert_eq!(n.expr, want);
        assert_eq!(n.report.kind, NormalKind::Constant);
        assert_eq!(n.trace[0].rule, "factor");
    }

    #[test]
    fn sum_is_already_constant() {
        let e = Sym::nary(BinOp::Add, vec![st("s"), inp(1), inp(2)]);
        let n = normalize(&e, &NormConfig::default()).unwrap();
        assert!(n.trace.is_empty());
        assert_eq!(n.report.kind, NormalKind::Constant);
    }

    #[test]
    fn bottom_strip_distributes() {
        // max(max(s + x1, x1) + x2, x2)
        let s1 = Sym::nary(BinOp::Max, vec![Sym::nary(BinOp::Add, vec![st("s"), inp(1)]), inp(1)]);
        let e = Sym::nary(BinOp::Max, vec![Sym::nary(BinOp::Add, vec![s1, inp(2)]), inp(2)]);
        let n = normalize(&e, &NormConfig::default()).unwrap();
        assert_eq!(n.report.kind, NormalKind::Constant);
        assert_eq!(phase1_cost(&n.expr), (1, 2));
        assert!(equivalent(&n.expr, &e, &NormConfig::default()));
    }
}
