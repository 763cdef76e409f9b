//! Algebraic rewrite rules over canonical expressions.
//!
//! The associative, commutative, identity and constant-folding laws are built
//! into the canonical constructors; they are listed here so that their
//! soundness is checked like the others, but never fire during search.

use std::collections::BTreeMap;

use super::sym::Sym;
use crate::expr::{name, BinOp, UnOp};
use crate::value::Value;

pub struct Rule {
    pub name: &'static str,
    apply: fn(&Sym) -> Vec<Sym>,
    /// Left-hand sides exercising the rule, built from pattern symbols.
    witnesses: fn() -> Vec<Sym>,
}

impl Rule {
    /// Rewrites of `e` at its root.
    pub fn at_root(&self, e: &Sym) -> Vec<Sym> {
        (self.apply)(e).into_iter().filter(|r| r != e).collect()
    }

    /// Rewrites of `e` at any position.
    pub fn everywhere(&self, e: &Sym) -> Vec<Sym> {
        let mut out = self.at_root(e);
        let cs = e.children();
        for (i, c) in cs.iter().enumerate() {
            for r in self.everywhere(c) {
                let mut next: Vec<Sym> = cs.iter().map(|x| (*x).clone()).collect();
                next[i] = r;
                out.push(e.with_children(next));
            }
        }
        out
    }

    pub fn witnesses(&self) -> Vec<Sym> {
        (self.witnesses)()
    }
}

fn rebuild(e: &Sym) -> Sym {
    let cs: Vec<Sym> = e.children().into_iter().map(rebuild).collect();
    if cs.is_empty() {
        e.clone()
    } else {
        e.with_children(cs)
    }
}

fn canon(e: &Sym) -> Vec<Sym> {
    vec![rebuild(e)]
}

fn summands(x: &Sym) -> Vec<Sym> {
    match x {
        Sym::Nary(BinOp::Add, ys) => ys.clone(),
        x => vec![x.clone()],
    }
}

fn factors(x: &Sym) -> Vec<Sym> {
    match x {
        Sym::Nary(BinOp::Mul, ys) => ys.clone(),
        x => vec![x.clone()],
    }
}

/// Group the operands of an `outer` node by their state-dependent `inner`
/// operands and pull each shared group out:
/// `max(a + b, a + c)` -> `a + max(b, c)` for `outer = max`, `inner = +`.
fn factor_by(e: &Sym, outer: &[BinOp], inner: BinOp, split: fn(&Sym) -> Vec<Sym>) -> Vec<Sym> {
    let Sym::Nary(op, xs) = e else { return vec![] };
    if !outer.contains(op) {
        return vec![];
    }
    let mut groups: BTreeMap<Vec<Sym>, Vec<usize>> = BTreeMap::new();
    for (i, x) in xs.iter().enumerate() {
        let key: Vec<Sym> = split(x).into_iter().filter(Sym::has_state).collect();
        if !key.is_empty() {
            groups.entry(key).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    for (key, idx) in groups {
        if idx.len() < 2 {
            continue;
        }
        let rests: Vec<Sym> = idx
            .iter()
            .map(|&i| {
                let rest: Vec<Sym> = split(&xs[i]).into_iter().filter(|y| !y.has_state()).collect();
                Sym::nary(inner, rest)
            })
            .collect();
        let mut pulled = key.clone();
        pulled.push(Sym::nary(*op, rests));
        let mut next: Vec<Sym> =
            xs.iter().enumerate().filter(|(i, _)| !idx.contains(i)).map(|(_, x)| x.clone()).collect();
        next.push(Sym::nary(inner, pulled));
        out.push(Sym::nary(*op, next));
    }
    out
}

fn factor(e: &Sym) -> Vec<Sym> {
    factor_by(e, &[BinOp::Max, BinOp::Min], BinOp::Add, summands)
}

fn factor_mul(e: &Sym) -> Vec<Sym> {
    factor_by(e, &[BinOp::Add], BinOp::Mul, factors)
}

/// `a + max(b, c)` -> `max(a + b, a + c)`.
fn distribute(e: &Sym) -> Vec<Sym> {
    let Sym::Nary(BinOp::Add, xs) = e else { return vec![] };
    let mut out = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        if let Sym::Nary(op @ (BinOp::Max | BinOp::Min), ys) = x {
            let others: Vec<Sym> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| y.clone()).collect();
            let spread = ys
                .iter()
                .map(|y| {
                    let mut s = others.clone();
                    s.push(y.clone());
                    Sym::nary(BinOp::Add, s)
                })
                .collect();
            out.push(Sym::nary(*op, spread));
        }
    }
    out
}

/// `a * (b + c)` -> `a * b + a * c`.
fn distribute_mul(e: &Sym) -> Vec<Sym> {
    let Sym::Nary(BinOp::Mul, xs) = e else { return vec![] };
    let mut out = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        if let Sym::Nary(BinOp::Add, ys) = x {
            let others: Vec<Sym> = xs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, y)| y.clone()).collect();
            let spread = ys
                .iter()
                .map(|y| {
                    let mut s = others.clone();
                    s.push(y.clone());
                    Sym::nary(BinOp::Mul, s)
                })
                .collect();
            out.push(Sym::nary(BinOp::Add, spread));
        }
    }
    out
}

/// `-max(a, b)` -> `min(-a, -b)`.
fn neg_minmax(e: &Sym) -> Vec<Sym> {
    match e {
        Sym::Un(UnOp::Neg, x) => match &**x {
            Sym::Nary(op @ (BinOp::Max | BinOp::Min), ys) => {
                let dual = if *op == BinOp::Max { BinOp::Min } else { BinOp::Max };
                vec![Sym::nary(dual, ys.iter().map(|y| Sym::un(UnOp::Neg, y.clone())).collect())]
            }
            _ => vec![],
        },
        _ => vec![],
    }
}

fn dual(op: BinOp) -> BinOp {
    match op {
        BinOp::Max => BinOp::Min,
        BinOp::Min => BinOp::Max,
        BinOp::And => BinOp::Or,
        BinOp::Or => BinOp::And,
        o => o,
    }
}

/// `max(a, b) <= c` -> `a <= c && b <= c`, and the three other placements.
fn cmp_split(e: &Sym) -> Vec<Sym> {
    let Sym::Bin(cmp @ (BinOp::Lt | BinOp::Le), l, r) = e else { return vec![] };
    let mut out = Vec::new();
    if let Sym::Nary(op @ (BinOp::Max | BinOp::Min), xs) = &**l {
        let join = if *op == BinOp::Max { BinOp::And } else { BinOp::Or };
        out.push(Sym::nary(join, xs.iter().map(|x| Sym::bin(*cmp, x.clone(), (**r).clone())).collect()));
    }
    if let Sym::Nary(op @ (BinOp::Max | BinOp::Min), xs) = &**r {
        let join = if *op == BinOp::Min { BinOp::And } else { BinOp::Or };
        out.push(Sym::nary(join, xs.iter().map(|x| Sym::bin(*cmp, (**l).clone(), x.clone())).collect()));
    }
    out
}

/// The inverse of [`cmp_split`] on whole groups of a conjunction or
/// disjunction: `a <= b && a <= c` -> `a <= min(b, c)`. With `then_factor`
/// the new `min`/`max` node is factored right away.
fn merge_groups(e: &Sym, then_factor: bool) -> Vec<Sym> {
    let Sym::Nary(join @ (BinOp::And | BinOp::Or), xs) = e else { return vec![] };
    let mut by_left: BTreeMap<(BinOp, Sym), Vec<usize>> = BTreeMap::new();
    let mut by_right: BTreeMap<(BinOp, Sym), Vec<usize>> = BTreeMap::new();
    for (i, x) in xs.iter().enumerate() {
        if let Sym::Bin(cmp @ (BinOp::Lt | BinOp::Le), l, r) = x {
            by_left.entry((*cmp, (**l).clone())).or_default().push(i);
            by_right.entry((*cmp, (**r).clone())).or_default().push(i);
        }
    }
    let mut out = Vec::new();
    let mut emit = |idx: &[usize], merged: Sym, rebuild_cmp: &dyn Fn(Sym) -> Sym| {
        let mut variants = vec![merged.clone()];
        if then_factor {
            variants = factor(&merged);
        }
        for v in variants {
            let mut next: Vec<Sym> =
                xs.iter().enumerate().filter(|(i, _)| !idx.contains(i)).map(|(_, x)| x.clone()).collect();
            next.push(rebuild_cmp(v));
            out.push(Sym::nary(*join, next));
        }
    };
    let other = |x: &Sym, left: bool| match x {
        Sym::Bin(_, l, r) => {
            if left {
                (**r).clone()
            } else {
                (**l).clone()
            }
        }
        _ => unreachable!(),
    };
    for ((cmp, l), idx) in &by_left {
        if idx.len() >= 2 {
            let op = if *join == BinOp::And { BinOp::Min } else { BinOp::Max };
            let merged = Sym::nary(op, idx.iter().map(|&i| other(&xs[i], true)).collect());
            emit(idx, merged, &|v| Sym::bin(*cmp, l.clone(), v));
        }
    }
    for ((cmp, r), idx) in &by_right {
        if idx.len() >= 2 {
            let op = dual(if *join == BinOp::And { BinOp::Min } else { BinOp::Max });
            let merged = Sym::nary(op, idx.iter().map(|&i| other(&xs[i], false)).collect());
            emit(idx, merged, &|v| Sym::bin(*cmp, v, r.clone()));
        }
    }
    out
}

fn cmp_merge(e: &Sym) -> Vec<Sym> {
    merge_groups(e, false)
}

fn cmp_merge_factor(e: &Sym) -> Vec<Sym> {
    merge_groups(e, true)
}

/// `op(e, c ? x : y)` -> `c ? op(e, x) : op(e, y)`.
fn ite_lift(e: &Sym) -> Vec<Sym> {
    if matches!(e, Sym::Ite(..)) {
        return vec![];
    }
    let cs = e.children();
    let mut out = Vec::new();
    for (i, c) in cs.iter().enumerate() {
        if let Sym::Ite(cond, t, f) = c {
            let with = |b: &Sym| {
                let mut next: Vec<Sym> = cs.iter().map(|x| (*x).clone()).collect();
                next[i] = b.clone();
                e.with_children(next)
            };
            out.push(Sym::ite((**cond).clone(), with(t), with(f)));
        }
    }
    out
}

/// `c ? op(e, x) : op(e, y)` -> `op(e, c ? x : y)`.
fn ite_merge(e: &Sym) -> Vec<Sym> {
    let Sym::Ite(c, t, f) = e else { return vec![] };
    match (&**t, &**f) {
        (Sym::Nary(o1, xs), Sym::Nary(o2, ys)) if o1 == o2 => {
            let common: Vec<Sym> = xs.iter().filter(|x| ys.contains(x)).cloned().collect();
            if common.is_empty() {
                return vec![];
            }
            let rest = |zs: &[Sym]| Sym::nary(*o1, zs.iter().filter(|z| !common.contains(z)).cloned().collect());
            let mut next = common.clone();
            next.push(Sym::ite((**c).clone(), rest(xs), rest(ys)));
            vec![Sym::nary(*o1, next)]
        }
        (Sym::Bin(o1, a1, b1), Sym::Bin(o2, a2, b2)) if o1 == o2 => {
            let mut out = Vec::new();
            if a1 == a2 {
                out.push(Sym::bin(*o1, (**a1).clone(), Sym::ite((**c).clone(), (**b1).clone(), (**b2).clone())));
            }
            if b1 == b2 {
                out.push(Sym::bin(*o1, Sym::ite((**c).clone(), (**a1).clone(), (**a2).clone()), (**b1).clone()));
            }
            out
        }
        _ => vec![],
    }
}

// pattern symbols: `a` state-like, `b`, `c`, `d` input-like, `p`, `q` booleans
fn a() -> Sym {
    Sym::State(name("a"), None)
}
fn b() -> Sym {
    Sym::Input(1, name("b"), None)
}
fn c() -> Sym {
    Sym::Input(1, name("c"), None)
}
fn d() -> Sym {
    Sym::Input(2, name("d"), None)
}
fn p() -> Sym {
    Sym::Input(1, name("p"), None)
}
fn raw(op: BinOp, x: Sym, y: Sym) -> Sym {
    Sym::Bin(op, Box::new(x), Box::new(y))
}
fn add(xs: Vec<Sym>) -> Sym {
    Sym::nary(BinOp::Add, xs)
}
fn mx(xs: Vec<Sym>) -> Sym {
    Sym::nary(BinOp::Max, xs)
}
fn mn(xs: Vec<Sym>) -> Sym {
    Sym::nary(BinOp::Min, xs)
}
fn le(x: Sym, y: Sym) -> Sym {
    Sym::bin(BinOp::Le, x, y)
}
fn lt(x: Sym, y: Sym) -> Sym {
    Sym::bin(BinOp::Lt, x, y)
}

pub static RULES: &[Rule] = &[
    Rule {
        name: "assoc",
        apply: canon,
        witnesses: || {
            [BinOp::Add, BinOp::Mul, BinOp::Min, BinOp::Max]
                .into_iter()
                .map(|op| raw(op, raw(op, a(), b()), c()))
                .chain([raw(BinOp::And, raw(BinOp::And, a(), p()), Sym::Input(1, name("q"), None))])
                .collect()
        },
    },
    Rule {
        name: "comm",
        apply: canon,
        witnesses: || {
            let mut v: Vec<Sym> =
                [BinOp::Add, BinOp::Mul, BinOp::Min, BinOp::Max].into_iter().map(|op| raw(op, b(), a())).collect();
            v.push(raw(BinOp::Or, p(), a()));
            v.push(raw(BinOp::Eq, b(), a()));
            v
        },
    },
    Rule {
        name: "identity",
        apply: canon,
        witnesses: || {
            vec![
                raw(BinOp::Add, a(), Sym::int(0)),
                raw(BinOp::Mul, a(), Sym::int(1)),
                raw(BinOp::Max, a(), Sym::NegInf),
                raw(BinOp::Min, a(), Sym::PosInf),
                raw(BinOp::And, p(), Sym::Bool(true)),
                raw(BinOp::Or, p(), Sym::Bool(false)),
                Sym::Ite(Box::new(p()), Box::new(a()), Box::new(a())),
            ]
        },
    },
    Rule {
        name: "annihilator",
        apply: canon,
        witnesses: || {
            vec![
                raw(BinOp::Max, a(), Sym::PosInf),
                raw(BinOp::Min, a(), Sym::NegInf),
                raw(BinOp::And, p(), Sym::Bool(false)),
                raw(BinOp::Or, p(), Sym::Bool(true)),
            ]
        },
    },
    Rule {
        name: "idempotence",
        apply: canon,
        witnesses: || vec![raw(BinOp::Max, a(), a()), raw(BinOp::Min, b(), b()), raw(BinOp::And, p(), p())],
    },
    Rule {
        name: "negation",
        apply: canon,
        witnesses: || {
            vec![
                raw(BinOp::Sub, a(), b()),
                Sym::Un(UnOp::Neg, Box::new(Sym::Un(UnOp::Neg, Box::new(a())))),
                Sym::Un(UnOp::Neg, Box::new(raw(BinOp::Add, a(), b()))),
                Sym::Un(UnOp::Not, Box::new(raw(BinOp::Lt, a(), b()))),
                Sym::Un(UnOp::Not, Box::new(raw(BinOp::Le, a(), b()))),
                raw(BinOp::Gt, a(), b()),
                raw(BinOp::Ge, a(), b()),
            ]
        },
    },
    Rule {
        name: "factor",
        apply: factor,
        witnesses: || {
            vec![
                mx(vec![add(vec![a(), b()]), add(vec![a(), c()])]),
                mn(vec![add(vec![a(), b()]), add(vec![a(), c()])]),
                mx(vec![a(), add(vec![a(), b()]), d()]),
            ]
        },
    },
    Rule {
        name: "factor-mul",
        apply: factor_mul,
        witnesses: || vec![add(vec![Sym::nary(BinOp::Mul, vec![a(), b()]), Sym::nary(BinOp::Mul, vec![a(), c()])])],
    },
    Rule {
        name: "distribute",
        apply: distribute,
        witnesses: || vec![add(vec![a(), mx(vec![b(), c()])]), add(vec![a(), d(), mn(vec![b(), c()])])],
    },
    Rule {
        name: "distribute-mul",
        apply: distribute_mul,
        witnesses: || vec![Sym::nary(BinOp::Mul, vec![a(), add(vec![b(), c()])])],
    },
    Rule {
        name: "neg-minmax",
        apply: neg_minmax,
        witnesses: || vec![Sym::un(UnOp::Neg, mx(vec![a(), b()])), Sym::un(UnOp::Neg, mn(vec![a(), b()]))],
    },
    Rule {
        name: "cmp-split",
        apply: cmp_split,
        witnesses: || {
            vec![
                le(mx(vec![a(), b()]), c()),
                lt(mn(vec![a(), b()]), c()),
                le(c(), mx(vec![a(), b()])),
                lt(c(), mn(vec![a(), b()])),
            ]
        },
    },
    Rule {
        name: "cmp-merge",
        apply: cmp_merge,
        witnesses: || {
            let and = |x, y| Sym::nary(BinOp::And, vec![x, y]);
            let or = |x, y| Sym::nary(BinOp::Or, vec![x, y]);
            vec![
                and(le(a(), b()), le(a(), c())),
                and(lt(b(), a()), lt(c(), a())),
                or(le(a(), b()), le(a(), c())),
                or(lt(b(), a()), lt(c(), a())),
            ]
        },
    },
    Rule {
        name: "cmp-merge-factor",
        apply: cmp_merge_factor,
        witnesses: || {
            let z = Sym::int(0);
            vec![
                Sym::nary(
                    BinOp::And,
                    vec![le(z.clone(), add(vec![a(), b()])), le(z.clone(), add(vec![a(), b(), c()]))],
                ),
                Sym::nary(BinOp::Or, vec![le(add(vec![a(), b()]), z.clone()), le(add(vec![a(), c()]), z)]),
            ]
        },
    },
    Rule {
        name: "ite-lift",
        apply: ite_lift,
        witnesses: || vec![add(vec![a(), Sym::ite(p(), b(), c())]), le(Sym::ite(p(), b(), c()), a())],
    },
    Rule {
        name: "ite-merge",
        apply: ite_merge,
        witnesses: || {
            vec![Sym::ite(p(), add(vec![a(), b()]), add(vec![a(), c()])), Sym::ite(p(), le(a(), b()), le(a(), c()))]
        },
    },
];

pub fn rule(name: &str) -> Option<&'static Rule> {
    RULES.iter().find(|r| r.name == name)
}

/// Every assignment of the leaves of `e` over `{-2..2}` and the booleans.
pub fn tiny_assignments(leaves: &BTreeMap<Sym, bool>) -> Vec<BTreeMap<Sym, Value>> {
    let mut out = vec![BTreeMap::new()];
    for (l, is_bool) in leaves {
        let dom: Vec<Value> =
            if *is_bool { vec![Value::Bool(false), Value::Bool(true)] } else { (-2..=2).map(Value::int).collect() };
        out = out
            .into_iter()
            .flat_map(|m| {
                dom.iter().map(move |v| {
                    let mut m = m.clone();
                    m.insert(l.clone(), v.clone());
                    m
                })
            })
            .collect();
    }
    out
}

/// Check the rule on its witnesses over every tiny assignment. Returns the
/// number of assignments checked.
pub fn check_rule(rule: &Rule) -> Result<usize, String> {
    let mut checked = 0;
    for lhs in rule.witnesses() {
        let rhss = rule.at_root(&lhs);
        if rhss.is_empty() {
            return Err(format!("{}: does not apply to its witness {lhs}", rule.name));
        }
        for rhs in rhss {
            let mut leaves = lhs.leaf_types();
            for (k, v) in rhs.leaf_types() {
                *leaves.entry(k).or_insert(v) |= v;
            }
            for env in tiny_assignments(&leaves) {
                let look = |s: &Sym| env.get(s).cloned();
                let l = lhs.eval(&look).ok();
                let r = rhs.eval(&look).ok();
                if l != r {
                    return Err(format!("{}: {lhs} -> {rhs} differs on {env:?}", rule.name));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_rule_is_sound_on_tiny_domains() {
        for r in RULES {
            let n = check_rule(r).unwrap();
            assert!(n > 0, "{}", r.name);
        }
    }

    #[test]
    fn factorization_pulls_out_the_shared_state_summand() {
        let e = mx(vec![add(vec![a(), b()]), add(vec![a(), b(), d()])]);
        let got = rule("factor").unwrap().at_root(&e);
        assert_eq!(got, vec![add(vec![a(), mx(vec![b(), add(vec![b(), d()])])])]);
    }
}
