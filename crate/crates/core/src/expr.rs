//! Expression trees shared by programs, equation systems, symbolic
//! unfoldings and join sketches.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::value::{Int, Value};

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
    And,
    Or,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    pub const ALL: [BinOp; 14] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Min,
        BinOp::Max,
        BinOp::And,
        BinOp::Or,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Eq,
        BinOp::Ne,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Min => "min",
            BinOp::Max => "max",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
        }
    }

    /// Numeric operands, numeric result.
    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Min | BinOp::Max)
    }

    pub fn is_logic(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Numeric operands, boolean result.
    pub fn is_cmp(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    /// Associative and commutative.
    pub fn is_ac(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Mul | BinOp::Min | BinOp::Max | BinOp::And | BinOp::Or)
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
            BinOp::Min | BinOp::Max => 9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(Int),
    Bool(bool),
    PosInf,
    NegInf,
    Var(Name),
    Index(Box<Expr>, Box<Expr>),
    Len(Box<Expr>),
    /// `[value; length]`
    Fill(Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ite(Box<Expr>, Box<Expr>, Box<Expr>),
    /// Sketch hole, completed during synthesis.
    Hole(usize),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Int(Int::Small(v))
    }

    pub fn var(s: &str) -> Expr {
        Expr::Var(name(s))
    }

    pub fn index(base: Expr, idx: Expr) -> Expr {
        Expr::Index(Box::new(base), Box::new(idx))
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn un(op: UnOp, a: Expr) -> Expr {
        Expr::Unary(op, Box::new(a))
    }

    pub fn ite(c: Expr, t: Expr, e: Expr) -> Expr {
        Expr::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn from_value(v: &Value) -> Option<Expr> {
        Some(match v {
            Value::Int(i) => Expr::Int(i.clone()),
            Value::Bool(b) => Expr::Bool(*b),
            Value::PlusInf => Expr::PosInf,
            Value::MinusInf => Expr::NegInf,
            Value::Seq(_) => return None,
        })
    }

    pub fn const_value(&self) -> Option<Value> {
        Some(match self {
            Expr::Int(i) => Value::Int(i.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::PosInf => Value::PlusInf,
            Expr::NegInf => Value::MinusInf,
            _ => return None,
        })
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Expr::Int(_) | Expr::Bool(_) | Expr::PosInf | Expr::NegInf)
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Index(a, b) | Expr::Fill(a, b) | Expr::Binary(_, a, b) => vec![a, b],
            Expr::Len(a) | Expr::Unary(_, a) => vec![a],
            Expr::Ite(c, t, e) => vec![c, t, e],
            _ => vec![],
        }
    }

    /// Rebuild with every child transformed by `f`.
    pub fn map_children(&self, f: &mut impl FnMut(&Expr) -> Expr) -> Expr {
        match self {
            Expr::Index(a, b) => Expr::Index(Box::new(f(a)), Box::new(f(b))),
            Expr::Fill(a, b) => Expr::Fill(Box::new(f(a)), Box::new(f(b))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(f(a)), Box::new(f(b))),
            Expr::Len(a) => Expr::Len(Box::new(f(a))),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(f(a))),
            Expr::Ite(c, t, e) => Expr::Ite(Box::new(f(c)), Box::new(f(t)), Box::new(f(e))),
            leaf => leaf.clone(),
        }
    }

    /// Bottom-up rewrite.
    pub fn transform(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let inner = self.map_children(&mut |c| c.transform(f));
        f(inner)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn any(&self, p: &impl Fn(&Expr) -> bool) -> bool {
        p(self) || self.children().iter().any(|c| c.any(p))
    }

    /// Names of all variables read (including subscripted bases).
    pub fn vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        if let Expr::Var(n) = self {
            out.insert(n.clone());
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.any(&|e| matches!(e, Expr::Var(n) if &**n == v))
    }

    pub fn has_hole(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Hole(_)))
    }

    /// Replace variables by name.
    pub fn subst_vars(&self, f: &impl Fn(&str) -> Option<Expr>) -> Expr {
        self.transform(&mut |e| match &e {
            Expr::Var(n) => f(n).unwrap_or(e),
            _ => e,
        })
    }

    pub fn rename(&self, f: &impl Fn(&str) -> Option<String>) -> Expr {
        self.subst_vars(&|n| f(n).map(|s| Expr::Var(name(&s))))
    }

    pub fn fill_holes(&self, fill: &[Expr]) -> Expr {
        self.transform(&mut |e| match e {
            Expr::Hole(h) => fill[h].clone(),
            e => e,
        })
    }
}

fn write_prec(e: &Expr, ctx: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Int(i) => {
            if i.is_negative() && ctx > 7 {
                write!(f, "({i})")
            } else {
                write!(f, "{i}")
            }
        }
        Expr::Bool(b) => write!(f, "{b}"),
        Expr::PosInf => write!(f, "inf"),
        Expr::NegInf => {
            if ctx > 7 {
                write!(f, "(-inf)")
            } else {
                write!(f, "-inf")
            }
        }
        Expr::Var(n) => write!(f, "{n}"),
        Expr::Hole(h) => write!(f, "??{h}"),
        Expr::Index(a, i) => {
            write_prec(a, 10, f)?;
            write!(f, "[")?;
            write_prec(i, 0, f)?;
            write!(f, "]")
        }
        Expr::Len(a) => {
            write!(f, "len(")?;
            write_prec(a, 0, f)?;
            write!(f, ")")
        }
        Expr::Fill(v, n) => {
            write!(f, "[")?;
            write_prec(v, 0, f)?;
            write!(f, "; ")?;
            write_prec(n, 0, f)?;
            write!(f, "]")
        }
        Expr::Unary(op, a) => {
            if ctx > 7 {
                write!(f, "(")?;
            }
            write!(f, "{}", if *op == UnOp::Neg { "-" } else { "!" })?;
            write_prec(a, 8, f)?;
            if ctx > 7 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Binary(op @ (BinOp::Min | BinOp::Max), a, b) => {
            write!(f, "{}(", op.symbol())?;
            write_prec(a, 0, f)?;
            write!(f, ", ")?;
            write_prec(b, 0, f)?;
            write!(f, ")")
        }
        Expr::Binary(op, a, b) => {
            let p = op.prec();
            if ctx > p {
                write!(f, "(")?;
            }
            // comparisons are non-associative; left operands bind at p, right at p + 1
            let lp = if op.is_cmp() { p + 1 } else { p };
            write_prec(a, lp, f)?;
            write!(f, " {} ", op.symbol())?;
            write_prec(b, p + 1, f)?;
            if ctx > p {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Ite(c, t, el) => {
            if ctx > 1 {
                write!(f, "(")?;
            }
            write_prec(c, 2, f)?;
            write!(f, " ? ")?;
            write_prec(t, 2, f)?;
            write!(f, " : ")?;
            write_prec(el, 1, f)?;
            if ctx > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}
