use std::fmt;

use crate::expr::{Expr, Name};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Seq(Box<Type>),
}

impl Type {
    pub fn is_seq(&self) -> bool {
        matches!(self, Type::Seq(_))
    }

    /// Number of nested `seq` constructors.
    pub fn rank(&self) -> usize {
        match self {
            Type::Seq(t) => 1 + t.rank(),
            _ => 0,
        }
    }

    /// Scalar type at the bottom of the nesting.
    pub fn scalar(&self) -> &Type {
        match self {
            Type::Seq(t) => t.scalar(),
            t => t,
        }
    }

    pub fn elem(&self) -> Option<&Type> {
        match self {
            Type::Seq(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => write!(f, "int"),
            Type::Bool => write!(f, "bool"),
            Type::Seq(t) => write!(f, "seq<{t}>"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Input,
    State,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: Name,
    pub ty: Type,
    pub role: Role,
    /// Initial value, present for state variables.
    pub init: Option<Expr>,
}

/// Possibly subscripted assignment target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LValue {
    pub name: Name,
    pub indices: Vec<Expr>,
}

impl LValue {
    pub fn scalar(name: Name) -> LValue {
        LValue { name, indices: vec![] }
    }

    pub fn as_expr(&self) -> Expr {
        self.indices.iter().fold(Expr::Var(self.name.clone()), |acc, i| Expr::index(acc, i.clone()))
    }
}

impl fmt::Display for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for i in &self.indices {
            write!(f, "[{i}]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign { target: LValue, rhs: Expr, pos: Pos },
    If { cond: Expr, then_branch: Vec<Stmt>, else_branch: Vec<Stmt>, pos: Pos },
    For { index: Name, lo: Expr, hi: Expr, body: Vec<Stmt>, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn decl(&self, n: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| &*d.name == n)
    }

    pub fn state_vars(&self) -> Vec<&Decl> {
        self.decls.iter().filter(|d| d.role == Role::State).collect()
    }

    pub fn input_vars(&self) -> Vec<&Decl> {
        self.decls.iter().filter(|d| d.role == Role::Input).collect()
    }

    pub fn is_state(&self, n: &str) -> bool {
        self.decl(n).is_some_and(|d| d.role == Role::State)
    }

    pub fn is_input(&self, n: &str) -> bool {
        self.decl(n).is_some_and(|d| d.role == Role::Input)
    }

    /// Maximum loop nesting depth of the body.
    pub fn depth(&self) -> usize {
        fn d(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match s {
                    Stmt::Assign { .. } => 0,
                    Stmt::If { then_branch, else_branch, .. } => d(then_branch).max(d(else_branch)),
                    Stmt::For { body, .. } => 1 + d(body),
                })
                .max()
                .unwrap_or(0)
        }
        d(&self.body)
    }
}
