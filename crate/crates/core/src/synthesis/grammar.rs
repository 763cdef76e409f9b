//! Hole completions: leaf sets ordered by affinity with what the hole
//! replaced, expression pools by size, and enumeration of hole tuples.

use std::collections::BTreeSet;

use super::join::{left_name, right_name};
use super::sketch::{Hole, HoleKind, Origin, Sketch};
use crate::expr::{BinOp, Expr, Name, UnOp};
use crate::frontend::Type;
use crate::value::Value;

/// Largest expression tried in a single hole.
pub const MAX_HOLE_SIZE: usize = 7;
/// Entries kept per pool level.
pub const LEVEL_CAP: usize = 40_000;

/// Search stage: what the grammar may produce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub kappa: usize,
    /// Use every operator except division, not just the program's.
    pub all_ops: bool,
    /// Allow `x[j - 1]` and `x[j + 1]` leaves.
    pub shifts: bool,
}

#[derive(Clone, Debug)]
pub struct Cand {
    pub expr: Expr,
    pub height: u8,
    /// Uses an operator outside the program's own set.
    pub new_op: bool,
    /// Uses a shifted subscript.
    pub shifted: bool,
    pub is_const: bool,
}

fn ty_of_value(v: &Value) -> Type {
    if matches!(v, Value::Bool(_)) {
        Type::Bool
    } else {
        Type::Int
    }
}

fn j_plus(j: &Name, c: i64) -> Expr {
    match c {
        0 => Expr::Var(j.clone()),
        c if c > 0 => Expr::bin(BinOp::Add, Expr::Var(j.clone()), Expr::int(c)),
        c => Expr::bin(BinOp::Sub, Expr::Var(j.clone()), Expr::int(-c)),
    }
}

/// Leaves of one version (`local`, `_l` or `_r`) of a state variable.
fn forms(base: Expr, vty: &Type, want: &Type, hole: &Hole, shifts: bool) -> Vec<(Expr, bool)> {
    if vty == want {
        return vec![(base, false)];
    }
    match (vty.elem(), &hole.loop_index) {
        (Some(e), Some(j)) if e == want => {
            let mut out = vec![(Expr::index(base.clone(), j_plus(j, 0)), false)];
            if shifts {
                out.push((Expr::index(base.clone(), j_plus(j, -1)), true));
                out.push((Expr::index(base, j_plus(j, 1)), true));
            }
            out
        }
        _ => vec![],
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Version {
    Local,
    Left,
    Right,
}

/// Typed leaves for a hole, most plausible first. `scope` restricts the
/// state variables that may be read; the flag marks shifted subscripts.
pub fn leaves(hole: &Hole, sk: &Sketch, scope: &BTreeSet<Name>, want: &Type, shifts: bool) -> Vec<(Expr, bool)> {
    let vars: Vec<(Name, Type)> =
        sk.def.out.iter().filter(|p| scope.contains(&p.name)).map(|p| (p.name.clone(), p.ty.clone())).collect();
    let allowed = |v: Version, name: &Name| match v {
        Version::Right => true,
        Version::Left => hole.kind >= HoleKind::LR,
        Version::Local => hole.kind == HoleKind::Rec && hole.locals.contains(name),
    };
    let mut out: Vec<(Expr, bool)> = Vec::new();
    let push_var = |out: &mut Vec<(Expr, bool)>, name: &Name, versions: &[Version]| {
        let Some((_, vty)) = vars.iter().find(|(n, _)| n == name) else { return };
        for &v in versions {
            if !allowed(v, name) {
                continue;
            }
            let base = match v {
                Version::Local => Expr::Var(name.clone()),
                Version::Left => Expr::Var(left_name(name)),
                Version::Right => Expr::Var(right_name(name)),
            };
            for f in forms(base, vty, want, hole, shifts) {
                if !out.contains(&f) {
                    out.push(f);
                }
            }
        }
    };
    let consts: Vec<Expr> = sk.consts.iter().filter(|c| ty_of_value(c) == *want).filter_map(Expr::from_value).collect();
    let push_consts = |out: &mut Vec<(Expr, bool)>, first: Option<&Value>| {
        if want.is_seq() {
            return;
        }
        if let Some(e) = first.and_then(Expr::from_value) {
            if consts.contains(&e) && !out.iter().any(|(x, _)| *x == e) {
                out.push((e, false));
            }
        }
        for c in &consts {
            if !out.iter().any(|(x, _)| x == c) {
                out.push((c.clone(), false));
            }
        }
    };
    use Version::*;
    let all = [Local, Left, Right];
    let t = &hole.target;
    match &hole.origin {
        Origin::Var(x) => {
            push_var(&mut out, x, &all);
            push_var(&mut out, t, &all);
            for (n, _) in &vars {
                push_var(&mut out, n, &all);
            }
            push_consts(&mut out, None);
        }
        Origin::Right(x) => {
            push_var(&mut out, x, &[Right]);
            push_var(&mut out, t, &[Right]);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Right]);
            }
            push_consts(&mut out, None);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Local, Left]);
            }
        }
        Origin::Const(c) => {
            push_consts(&mut out, Some(c));
            push_var(&mut out, t, &[Right, Left, Local]);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Right, Left, Local]);
            }
        }
        Origin::Input => {
            push_var(&mut out, t, &[Right]);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Right]);
            }
            push_consts(&mut out, None);
            push_var(&mut out, t, &[Local, Left]);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Local, Left]);
            }
        }
        Origin::Init(reset) => {
            if let Some(e) = reset.as_ref().and_then(Expr::from_value) {
                if consts.contains(&e) {
                    out.push((e, false));
                }
            }
            push_var(&mut out, t, &[Left, Right]);
            push_consts(&mut out, None);
            for (n, _) in &vars {
                push_var(&mut out, n, &[Left, Right]);
            }
        }
    }
    out
}

/// Operators available in a stage, normalized so that `>`/`>=` are produced
/// as swapped `<`/`<=`.
pub fn stage_ops(sk: &Sketch, all: bool) -> (Vec<BinOp>, Vec<UnOp>, bool) {
    let norm = |op: BinOp| match op {
        BinOp::Gt => BinOp::Lt,
        BinOp::Ge => BinOp::Le,
        op => op,
    };
    let mut ops: Vec<BinOp> = Vec::new();
    let src: Vec<BinOp> = if all {
        BinOp::ALL.iter().copied().filter(|o| *o != BinOp::Div).collect()
    } else {
        sk.ops.iter().copied().collect()
    };
    for op in src {
        let op = norm(op);
        if !ops.contains(&op) {
            ops.push(op);
        }
    }
    let unops = if all { vec![UnOp::Neg, UnOp::Not] } else { sk.unops.iter().copied().collect() };
    (ops, unops, sk.ite || all)
}

fn commutative(op: BinOp) -> bool {
    op.is_ac() || matches!(op, BinOp::Eq | BinOp::Ne)
}

/// Bottom-up pools of int and bool expressions by size.
#[derive(Clone, Debug)]
pub struct Pool {
    pub int: Vec<Vec<Cand>>,
    pub boolean: Vec<Vec<Cand>>,
    ops: Vec<BinOp>,
    base_ops: Vec<BinOp>,
    unops: Vec<UnOp>,
    base_unops: Vec<UnOp>,
    ite: bool,
    base_ite: bool,
    kappa: usize,
}

impl Pool {
    pub fn new(int_leaves: Vec<(Expr, bool)>, bool_leaves: Vec<(Expr, bool)>, sk: &Sketch, stage: &Stage) -> Pool {
        let (ops, unops, ite) = stage_ops(sk, stage.all_ops);
        let (base_ops, base_unops, base_ite) = stage_ops(sk, false);
        let leaf =
            |(e, shifted): (Expr, bool)| Cand { is_const: e.is_const(), expr: e, height: 0, new_op: false, shifted };

        Pool {
            int: vec![vec![], int_leaves.into_iter().map(leaf).collect()],
            boolean: vec![vec![], bool_leaves.into_iter().map(leaf).collect()],
            ops,
            base_ops,
            unops,
            base_unops,
            ite,
            base_ite,
            kappa: stage.kappa,
        }
    }

    /// Build levels up to size `upto` (capped at the largest hole size).
    pub fn ensure(&mut self, upto: usize) {
        while self.int.len() <= upto.min(MAX_HOLE_SIZE) {
            let s = self.int.len();
            self.grow(s);
        }
    }

    pub fn built(&self) -> usize {
        self.int.len() - 1
    }

    pub fn level(&self, ty: &Type, s: usize) -> &[Cand] {
        let v = if *ty == Type::Bool { &self.boolean } else { &self.int };
        v.get(s).map(|x| x.as_slice()).unwrap_or(&[])
    }

    fn grow(&mut self, s: usize) {
        let mut ints = Vec::new();
        let mut bools = Vec::new();
        let k = self.kappa as u8;
        let full = |v: &Vec<Cand>| v.len() >= LEVEL_CAP;
        // unary
        for &op in &self.unops {
            let (src, dst) = match op {
                UnOp::Neg => (&self.int[s - 1], &mut ints),
                UnOp::Not => (&self.boolean[s - 1], &mut bools),
            };
            for c in src {
                if c.is_const || c.height + 1 > k || matches!(c.expr, Expr::Unary(o, _) if o == op) {
                    continue;
                }
                if full(dst) {
                    break;
                }
                dst.push(Cand {
                    expr: Expr::un(op, c.expr.clone()),
                    height: c.height + 1,
                    new_op: c.new_op || !self.base_unops.contains(&op),
                    shifted: c.shifted,
                    is_const: false,
                });
            }
        }
        // binary
        for &op in &self.ops {
            let arg_pools: Vec<(&Vec<Vec<Cand>>, bool)> = if op.is_logic() {
                vec![(&self.boolean, true)]
            } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                vec![(&self.int, false), (&self.boolean, true)]
            } else {
                vec![(&self.int, false)]
            };
            let to_bool = !op.is_arith();
            let dst = if to_bool { &mut bools } else { &mut ints };
            let comm = commutative(op);
            for (pool, _) in arg_pools {
                for s1 in 1..s - 1 {
                    let s2 = s - 1 - s1;
                    if comm && s1 > s2 {
                        continue;
                    }
                    for (ia, a) in pool[s1].iter().enumerate() {
                        if a.height + 1 > k {
                            continue;
                        }
                        for (ib, b) in pool[s2].iter().enumerate() {
                            if b.height + 1 > k || (a.is_const && b.is_const) {
                                continue;
                            }
                            if s1 == s2 && (if comm { ib <= ia } else { ib == ia }) {
                                continue;
                            }
                            if full(dst) {
                                break;
                            }
                            dst.push(Cand {
                                expr: Expr::bin(op, a.expr.clone(), b.expr.clone()),
                                height: a.height.max(b.height) + 1,
                                new_op: a.new_op || b.new_op || !self.base_ops.contains(&op),
                                shifted: a.shifted || b.shifted,
                                is_const: false,
                            });
                        }
                    }
                }
            }
        }
        // conditional
        if self.ite && s >= 4 {
            for (target, dst) in [(&self.int, &mut ints), (&self.boolean, &mut bools)] {
                for sc in 1..s - 2 {
                    for st in 1..s - 1 - sc {
                        let se = s - 1 - sc - st;
                        for c in &self.boolean[sc] {
                            if c.is_const || c.height + 1 > k {
                                continue;
                            }
                            for t in &target[st] {
                                if t.height + 1 > k {
                                    continue;
                                }
                                for e in &target[se] {
                                    if e.height + 1 > k || (st == se && t.expr == e.expr) {
                                        continue;
                                    }
                                    if full(dst) {
                                        break;
                                    }
                                    dst.push(Cand {
                                        expr: Expr::ite(c.expr.clone(), t.expr.clone(), e.expr.clone()),
                                        height: c.height.max(t.height).max(e.height) + 1,
                                        new_op: c.new_op || t.new_op || e.new_op || !self.base_ite,
                                        shifted: c.shifted || t.shifted || e.shifted,
                                        is_const: false,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        self.int.push(ints);
        self.boolean.push(bools);
    }
}

/// Calls `f` with every assignment of sizes to holes summing to `total`,
/// skipping sizes with empty lists. Returns false if `f` asked to stop.
pub fn size_compositions(lens: &[Vec<usize>], total: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    fn go(
        lens: &[Vec<usize>],
        k: usize,
        left: usize,
        acc: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if k == lens.len() {
            return left != 0 || f(acc);
        }
        let rest = lens.len() - k - 1;
        for s in 1..lens[k].len() {
            if s + rest > left {
                break;
            }
            if lens[k][s] == 0 {
                continue;
            }
            acc.push(s);
            let go_on = go(lens, k + 1, left - s, acc, f);
            acc.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    go(lens, 0, total, &mut Vec::new(), f)
}

/// Calls `f` with every rank tuple (`r[h] < caps[h]`) summing to `total`.
pub fn rank_compositions(caps: &[usize], total: usize, f: &mut dyn FnMut(&[usize]) -> bool) -> bool {
    let mut room = vec![0usize; caps.len() + 1];
    for k in (0..caps.len()).rev() {
        room[k] = room[k + 1] + caps[k].saturating_sub(1);
    }
    fn go(
        caps: &[usize],
        room: &[usize],
        k: usize,
        left: usize,
        acc: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if k == caps.len() {
            return left != 0 || f(acc);
        }
        let lo = left.saturating_sub(room[k + 1]);
        let hi = left.min(caps[k].saturating_sub(1));
        for r in lo..=hi {
            acc.push(r);
            let go_on = go(caps, room, k + 1, left - r, acc, f);
            acc.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
    if total > room[0] {
        return true;
    }
    go(caps, &room, 0, total, &mut Vec::new(), f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_compositions_cover_the_product() {
        let caps = [3, 1, 4];
        let mut seen = Vec::new();
        for r in 0..10 {
            rank_compositions(&caps, r, &mut |t| {
                seen.push(t.to_vec());
                true
            });
        }
        assert_eq!(seen.len(), 12);
        // nondecreasing rank sum
        let sums: Vec<usize> = seen.iter().map(|t| t.iter().sum()).collect();
        assert!(sums.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn size_compositions_respect_empty_levels() {
        let lens = vec![vec![0, 2, 0, 5], vec![0, 1, 1]];
        let mut seen = Vec::new();
        for t in 2..=6 {
            size_compositions(&lens, t, &mut |s| {
                seen.push(s.to_vec());
                true
            });
        }
        assert_eq!(seen, vec![vec![1, 1], vec![1, 2], vec![3, 1], vec![3, 2]]);
    }
}
