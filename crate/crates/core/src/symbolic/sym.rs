//! Canonical symbolic expressions over a symbolic start state and symbolic
//! input rows.
//!
//! Associative-commutative operators are kept flattened and sorted, so two
//! expressions equal up to AC rearrangement are structurally equal.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{BinOp, Expr, Name, UnOp};
use crate::interp::{apply_binop, apply_unop, EvalError};
use crate::value::{Int, Value};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Int(Int),
    Bool(bool),
    PosInf,
    NegInf,
    /// Start-state variable `s`, or one of its cells.
    State(Name, Option<usize>),
    /// Field of the k-th consumed element `a_k` (1-based), or one of its cells.
    Input(usize, Name, Option<usize>),
    /// Value fixed for the whole unfolding (a broadcast input).
    Param(Name),
    Un(UnOp, Box<Sym>),
    /// Non-associative operator; `>`/`>=` never appear, they are swapped.
    Bin(BinOp, Box<Sym>, Box<Sym>),
    /// Flattened associative-commutative operator with sorted operands.
    Nary(BinOp, Vec<Sym>),
    Ite(Box<Sym>, Box<Sym>, Box<Sym>),
}

/// What kind of symbols an expression mentions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purity {
    Const,
    State,
    Input,
    Mixed,
}

impl Purity {
    fn join(self, o: Purity) -> Purity {
        match (self, o) {
            (Purity::Const, x) | (x, Purity::Const) => x,
            (a, b) if a == b => a,
            _ => Purity::Mixed,
        }
    }
}

fn identity(op: BinOp) -> Option<Sym> {
    Some(match op {
        BinOp::Add => Sym::int(0),
        BinOp::Mul => Sym::int(1),
        BinOp::Max => Sym::NegInf,
        BinOp::Min => Sym::PosInf,
        BinOp::And => Sym::Bool(true),
        BinOp::Or => Sym::Bool(false),
        _ => return None,
    })
}

fn absorbing(op: BinOp) -> Option<Sym> {
    Some(match op {
        BinOp::Max => Sym::PosInf,
        BinOp::Min => Sym::NegInf,
        BinOp::And => Sym::Bool(false),
        BinOp::Or => Sym::Bool(true),
        _ => return None,
    })
}

fn idempotent(op: BinOp) -> bool {
    matches!(op, BinOp::Max | BinOp::Min | BinOp::And | BinOp::Or)
}

impl Sym {
    pub fn int(v: i64) -> Sym {
        Sym::Int(Int::Small(v))
    }

    pub fn from_value(v: &Value) -> Option<Sym> {
        Some(match v {
            Value::Int(i) => Sym::Int(i.clone()),
            Value::Bool(b) => Sym::Bool(*b),
            Value::PlusInf => Sym::PosInf,
            Value::MinusInf => Sym::NegInf,
            Value::Seq(_) => return None,
        })
    }

    pub fn as_value(&self) -> Option<Value> {
        Some(match self {
            Sym::Int(i) => Value::Int(i.clone()),
            Sym::Bool(b) => Value::Bool(*b),
            Sym::PosInf => Value::PlusInf,
            Sym::NegInf => Value::MinusInf,
            _ => return None,
        })
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Sym::Int(_) | Sym::Bool(_) | Sym::PosInf | Sym::NegInf)
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Sym::State(..) | Sym::Input(..) | Sym::Param(_))
    }

    pub fn as_usize(&self) -> Option<usize> {
        match self {
            Sym::Int(i) => i.to_i64().and_then(|v| usize::try_from(v).ok()),
            _ => None,
        }
    }

    pub fn un(op: UnOp, a: Sym) -> Sym {
        if let Some(v) = a.as_value() {
            if let Some(s) = apply_unop(op, &v).ok().as_ref().and_then(Sym::from_value) {
                return s;
            }
        }
        match (op, a) {
            (UnOp::Neg, Sym::Un(UnOp::Neg, x)) | (UnOp::Not, Sym::Un(UnOp::Not, x)) => *x,
            (UnOp::Neg, Sym::Nary(BinOp::Add, xs)) => {
                Sym::nary(BinOp::Add, xs.into_iter().map(|x| Sym::un(UnOp::Neg, x)).collect())
            }
            (UnOp::Not, Sym::Bin(BinOp::Lt, x, y)) => Sym::Bin(BinOp::Le, y, x),
            (UnOp::Not, Sym::Bin(BinOp::Le, x, y)) => Sym::Bin(BinOp::Lt, y, x),
            (UnOp::Not, Sym::Bin(BinOp::Eq, x, y)) => Sym::Bin(BinOp::Ne, x, y),
            (UnOp::Not, Sym::Bin(BinOp::Ne, x, y)) => Sym::Bin(BinOp::Eq, x, y),
            (op, a) => Sym::Un(op, Box::new(a)),
        }
    }

    pub fn bin(op: BinOp, a: Sym, b: Sym) -> Sym {
        match op {
            BinOp::Gt => return Sym::bin(BinOp::Lt, b, a),
            BinOp::Ge => return Sym::bin(BinOp::Le, b, a),
            BinOp::Sub => return Sym::nary(BinOp::Add, vec![a, Sym::un(UnOp::Neg, b)]),
            op if op.is_ac() => return Sym::nary(op, vec![a, b]),
            _ => {}
        }
        if let (Some(x), Some(y)) = (a.as_value(), b.as_value()) {
            if let Some(s) = apply_binop(op, &x, &y).ok().as_ref().and_then(Sym::from_value) {
                return s;
            }
        }
        let (a, b) = if matches!(op, BinOp::Eq | BinOp::Ne) && b < a { (b, a) } else { (a, b) };
        Sym::Bin(op, Box::new(a), Box::new(b))
    }

    /// Canonical AC node: flattened, constants folded, identities dropped,
    /// duplicates removed for idempotent operators, operands sorted.
    pub fn nary(op: BinOp, xs: Vec<Sym>) -> Sym {
        debug_assert!(op.is_ac());
        let mut flat = Vec::with_capacity(xs.len());
        for x in xs {
            match x {
                Sym::Nary(o, ys) if o == op => flat.extend(ys),
                x => flat.push(x),
            }
        }
        let (consts, mut rest): (Vec<Sym>, Vec<Sym>) = flat.into_iter().partition(Sym::is_const);
        let mut acc: Vec<Value> = Vec::new();
        for c in consts {
            let v = c.as_value().expect("constant");
            match acc.last().map(|a| apply_binop(op, a, &v)) {
                Some(Ok(r)) => *acc.last_mut().unwrap() = r,
                _ => acc.push(v),
            }
        }
        let ident = identity(op);
        let absorb = absorbing(op);
        for v in acc {
            let s = Sym::from_value(&v).expect("scalar constant");
            if Some(&s) == absorb.as_ref() {
                return s;
            }
            if Some(&s) != ident.as_ref() {
                rest.push(s);
            }
        }
        rest.sort();
        if idempotent(op) {
            rest.dedup();
        }
        match rest.len() {
            0 => ident.expect("AC operator has an identity"),
            1 => rest.pop().unwrap(),
            _ => Sym::Nary(op, rest),
        }
    }

    pub fn ite(c: Sym, t: Sym, e: Sym) -> Sym {
        match c {
            Sym::Bool(true) => t,
            Sym::Bool(false) => e,
            _ if t == e => t,
            Sym::Un(UnOp::Not, c) => Sym::Ite(c, Box::new(e), Box::new(t)),
            c => Sym::Ite(Box::new(c), Box::new(t), Box::new(e)),
        }
    }

    pub fn children(&self) -> Vec<&Sym> {
        match self {
            Sym::Un(_, a) => vec![a],
            Sym::Bin(_, a, b) => vec![a, b],
            Sym::Nary(_, xs) => xs.iter().collect(),
            Sym::Ite(c, t, e) => vec![c, t, e],
            _ => vec![],
        }
    }

    /// Rebuild this node with new children, through the canonical constructors.
    pub fn with_children(&self, mut cs: Vec<Sym>) -> Sym {
        match self {
            Sym::Un(op, _) => Sym::un(*op, cs.pop().unwrap()),
            Sym::Bin(op, _, _) => {
                let b = cs.pop().unwrap();
                Sym::bin(*op, cs.pop().unwrap(), b)
            }
            Sym::Nary(op, _) => Sym::nary(*op, cs),
            Sym::Ite(..) => {
                let e = cs.pop().unwrap();
                let t = cs.pop().unwrap();
                Sym::ite(cs.pop().unwrap(), t, e)
            }
            leaf => leaf.clone(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn purity(&self) -> Purity {
        match self {
            Sym::State(..) => Purity::State,
            Sym::Input(..) | Sym::Param(_) => Purity::Input,
            s if s.is_const() => Purity::Const,
            s => s.children().iter().fold(Purity::Const, |p, c| p.join(c.purity())),
        }
    }

    pub fn has_state(&self) -> bool {
        matches!(self.purity(), Purity::State | Purity::Mixed)
    }

    /// Visit every leaf symbol with its depth (the root has depth 0).
    pub fn walk_leaves(&self, depth: usize, f: &mut impl FnMut(&Sym, usize)) {
        if self.is_leaf() {
            f(self, depth);
        }
        for c in self.children() {
            c.walk_leaves(depth + 1, f);
        }
    }

    /// Replace leaves, rebuilding canonically.
    pub fn map_leaves(&self, f: &impl Fn(&Sym) -> Option<Sym>) -> Sym {
        if self.is_leaf() {
            return f(self).unwrap_or_else(|| self.clone());
        }
        let cs = self.children();
        if cs.is_empty() {
            return self.clone();
        }
        self.with_children(cs.into_iter().map(|c| c.map_leaves(f)).collect())
    }

    /// Highest input row index mentioned.
    pub fn max_row(&self) -> usize {
        let mut m = 0;
        self.walk_leaves(0, &mut |l, _| {
            if let Sym::Input(k, ..) = l {
                m = m.max(*k);
            }
        });
        m
    }

    /// All leaf symbols, each with whether it is used as a boolean.
    pub fn leaf_types(&self) -> BTreeMap<Sym, bool> {
        let mut out = BTreeMap::new();
        self.infer(Some(false), &mut out);
        out
    }

    fn infer(&self, want_bool: Option<bool>, out: &mut BTreeMap<Sym, bool>) {
        match self {
            l if l.is_leaf() => {
                let e = out.entry(l.clone()).or_insert(false);
                if want_bool == Some(true) {
                    *e = true;
                }
            }
            Sym::Un(UnOp::Not, a) => a.infer(Some(true), out),
            Sym::Un(UnOp::Neg, a) => a.infer(Some(false), out),
            Sym::Nary(op, xs) => {
                for x in xs {
                    x.infer(Some(op.is_logic()), out);
                }
            }
            Sym::Bin(op, a, b) => {
                let w = if op.is_logic() {
                    Some(true)
                } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                    (a.is_boolish() || b.is_boolish()).then_some(true).or(Some(false))
                } else {
                    Some(false)
                };
                a.infer(w, out);
                b.infer(w, out);
            }
            Sym::Ite(c, t, e) => {
                c.infer(Some(true), out);
                t.infer(want_bool, out);
                e.infer(want_bool, out);
            }
            _ => {}
        }
    }

    /// Whether this node certainly produces a boolean.
    pub fn is_boolish(&self) -> bool {
        match self {
            Sym::Bool(_) => true,
            Sym::Un(UnOp::Not, _) => true,
            Sym::Nary(op, _) => op.is_logic(),
            Sym::Bin(op, _, _) => op.is_cmp(),
            Sym::Ite(_, t, e) => t.is_boolish() || e.is_boolish(),
            _ => false,
        }
    }

    pub fn eval(&self, env: &dyn Fn(&Sym) -> Option<Value>) -> Result<Value, EvalError> {
        match self {
            l if l.is_leaf() => env(l).ok_or_else(|| EvalError::Unbound(l.to_string())),
            Sym::Un(op, a) => apply_unop(*op, &a.eval(env)?),
            Sym::Bin(op, a, b) => apply_binop(*op, &a.eval(env)?, &b.eval(env)?),
            Sym::Nary(op, xs) => {
                let mut acc = xs[0].eval(env)?;
                for x in &xs[1..] {
                    acc = apply_binop(*op, &acc, &x.eval(env)?)?;
                }
                Ok(acc)
            }
            Sym::Ite(c, t, e) => {
                if c.eval(env)?.as_bool()? {
                    t.eval(env)
                } else {
                    e.eval(env)
                }
            }
            c => Ok(c.as_value().expect("constant")),
        }
    }

    /// Convert to a plain expression, naming leaves through `leaf`.
    pub fn to_expr(&self, leaf: &impl Fn(&Sym) -> Option<Expr>) -> Option<Expr> {
        Some(match self {
            l if l.is_leaf() => leaf(l)?,
            Sym::Un(op, a) => Expr::un(*op, a.to_expr(leaf)?),
            Sym::Bin(op, a, b) => Expr::bin(*op, a.to_expr(leaf)?, b.to_expr(leaf)?),
            Sym::Nary(op, xs) => {
                let mut it = xs.iter();
                let mut acc = it.next()?.to_expr(leaf)?;
                for x in it {
                    acc = match (op, x) {
                        (BinOp::Add, Sym::Un(UnOp::Neg, y)) => Expr::bin(BinOp::Sub, acc, y.to_expr(leaf)?),
                        _ => Expr::bin(*op, acc, x.to_expr(leaf)?),
                    };
                }
                acc
            }
            Sym::Ite(c, t, e) => Expr::ite(c.to_expr(leaf)?, t.to_expr(leaf)?, e.to_expr(leaf)?),
            c => Expr::from_value(&c.as_value()?)?,
        })
    }
}

fn infix(op: BinOp) -> bool {
    !matches!(op, BinOp::Min | BinOp::Max)
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |f: &mut fmt::Formatter<'_>, i: &Option<usize>| match i {
            Some(i) => write!(f, "[{i}]"),
            None => Ok(()),
        };
        match self {
            Sym::Int(i) => write!(f, "{i}"),
            Sym::Bool(b) => write!(f, "{b}"),
            Sym::PosInf => write!(f, "inf"),
            Sym::NegInf => write!(f, "-inf"),
            Sym::State(n, i) => {
                write!(f, "{n}")?;
                cell(f, i)
            }
            Sym::Input(k, n, i) => {
                write!(f, "a{k}.{n}")?;
                cell(f, i)
            }
            Sym::Param(n) => write!(f, "{n}"),
            Sym::Un(UnOp::Neg, a) => write!(f, "-{}", Paren(a)),
            Sym::Un(UnOp::Not, a) => write!(f, "!{}", Paren(a)),
            Sym::Bin(op, a, b) => write!(f, "{} {} {}", Paren(a), op.symbol(), Paren(b)),
            Sym::Nary(op, xs) if infix(*op) => {
                for (i, x) in xs.iter().enumerate() {
                    match (i, op, x) {
                        (0, ..) => write!(f, "{}", Paren(x))?,
                        (_, BinOp::Add, Sym::Un(UnOp::Neg, y)) => write!(f, " - {}", Paren(y))?,
                        _ => write!(f, " {} {}", op.symbol(), Paren(x))?,
                    }
                }
                Ok(())
            }
            Sym::Nary(op, xs) => {
                write!(f, "{}(", op.symbol())?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Sym::Ite(c, t, e) => write!(f, "({c} ? {t} : {e})"),
        }
    }
}

struct Paren<'a>(&'a Sym);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Sym::Bin(..) | Sym::Nary(BinOp::Add | BinOp::Mul | BinOp::And | BinOp::Or, _) => write!(f, "({})", self.0),
            s => write!(f, "{s}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Sym {
        Sym::State(crate::expr::name(n), None)
    }

    #[test]
    fn canonical_forms_identify_ac_variants() {
        let a = Sym::bin(BinOp::Add, s("x"), Sym::bin(BinOp::Add, s("y"), Sym::int(0)));
        let b = Sym::bin(BinOp::Add, s("y"), s("x"));
        assert_eq!(a, b);
        let m = Sym::bin(BinOp::Max, Sym::bin(BinOp::Max, s("x"), Sym::NegInf), s("x"));
        assert_eq!(m, s("x"));
        assert_eq!(Sym::bin(BinOp::Ge, s("x"), s("y")), Sym::bin(BinOp::Le, s("y"), s("x")));
        assert_eq!(Sym::bin(BinOp::Sub, Sym::int(3), Sym::int(5)), Sym::int(-2));
    }

    #[test]
    fn display_is_readable() {
        let e = Sym::bin(
            BinOp::Max,
            s("m"),
            Sym::bin(BinOp::Add, Sym::Input(1, crate::expr::name("rec"), Some(0)), s("r")),
        );
        assert_eq!(e.to_string(), "max(m, r + a1.rec[0])");
    }
}
