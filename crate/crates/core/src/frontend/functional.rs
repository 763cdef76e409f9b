//! Functional view of a loop nest: the outer step over rows, the family of
//! inner loops it contains, and the initial state.

use std::fmt;

use thiserror::Error;

use super::ast::{Decl, Program, Role, Stmt, Type};
use super::equations::{to_equations, ConvertError, Equation, EquationSystem};
use super::parser::{parse, ParseError};
use super::shape::{analyze, ShapeError, ShapeSpec};
use crate::expr::{Expr, Name};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuncForm {
    pub dimension: usize,
    /// The state tuple D, in declaration order.
    pub state: Vec<(Name, Type)>,
    pub index: Name,
    pub bound: Expr,
    /// The body operator applied once per element of this level.
    pub step: EquationSystem,
    /// The inner loop family, when the step contains a loop.
    pub inner: Option<Box<FuncForm>>,
    /// Initial values; empty for inner levels, which start from the enclosing state.
    pub init: Vec<(Name, Expr)>,
}

/// Build the functional form of the (single) outer loop of a system.
pub fn to_functional(sys: &EquationSystem, decls: &[Decl]) -> FuncForm {
    let init = decls
        .iter()
        .filter(|d| d.role == Role::State)
        .map(|d| (d.name.clone(), d.init.clone().expect("state has an initializer")))
        .collect();
    let (index, hi, body) = match sys.eqs.as_slice() {
        [Equation::Loop { index, hi, body, .. }] => (index, hi, body),
        _ => {
            let state = state_types(decls, decls.iter().filter(|d| d.role == Role::State).map(|d| &d.name));
            return FuncForm {
                dimension: 0,
                state,
                index: crate::expr::name("_"),
                bound: Expr::int(0),
                step: sys.clone(),
                inner: None,
                init,
            };
        }
    };
    let state = state_types(decls, decls.iter().filter(|d| d.role == Role::State).map(|d| &d.name));
    let mut ff = level(index, hi, body, state, decls);
    ff.init = init;
    ff
}

fn state_types<'a>(decls: &[Decl], names: impl Iterator<Item = &'a Name>) -> Vec<(Name, Type)> {
    names.filter_map(|n| decls.iter().find(|d| d.name == *n).map(|d| (d.name.clone(), d.ty.clone()))).collect()
}

fn level(index: &Name, hi: &Expr, body: &EquationSystem, state: Vec<(Name, Type)>, decls: &[Decl]) -> FuncForm {
    let inner = body.eqs.iter().find_map(|e| match e {
        Equation::Loop { index, hi, body, modified, .. } => {
            let st = state_types(decls, modified.iter());
            Some(Box::new(level(index, hi, body, st, decls)))
        }
        _ => None,
    });
    FuncForm {
        dimension: 1 + inner.as_ref().map_or(0, |i| i.dimension),
        state,
        index: index.clone(),
        bound: hi.clone(),
        step: body.clone(),
        inner,
        init: vec![],
    }
}

/// A program reduced to what the pipeline manipulates: declarations, the outer
/// loop header and its body as equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopNest {
    pub inputs: Vec<Decl>,
    pub state: Vec<Decl>,
    pub index: Name,
    pub bound: Name,
    pub body: EquationSystem,
    pub shape: ShapeSpec,
}

impl LoopNest {
    pub fn from_program(p: &Program) -> Result<LoopNest, FrontendError> {
        let shape = analyze(p)?;
        let sys = to_equations(p)?;
        let [Equation::Loop { index, hi, body, .. }] = sys.eqs.as_slice() else {
            return Err(ShapeError::NotSingleLoop.into());
        };
        let Expr::Var(bound) = hi else { return Err(ShapeError::BadBound(index.to_string()).into()) };
        Ok(LoopNest {
            inputs: p.decls.iter().filter(|d| d.role == Role::Input).cloned().collect(),
            state: p.decls.iter().filter(|d| d.role == Role::State).cloned().collect(),
            index: index.clone(),
            bound: bound.clone(),
            body: body.clone(),
            shape,
        })
    }

    pub fn from_source(src: &str) -> Result<LoopNest, FrontendError> {
        LoopNest::from_program(&parse(src)?)
    }

    /// Loop depth n of the nest.
    pub fn depth(&self) -> usize {
        1 + self.body.depth()
    }

    pub fn state_names(&self) -> Vec<Name> {
        self.state.iter().map(|d| d.name.clone()).collect()
    }

    pub fn state_type(&self, n: &str) -> Option<&Type> {
        self.state.iter().find(|d| &*d.name == n).map(|d| &d.ty)
    }

    pub fn init_of(&self, n: &str) -> Option<&Expr> {
        self.state.iter().find(|d| &*d.name == n).and_then(|d| d.init.as_ref())
    }

    pub fn decls(&self) -> Vec<Decl> {
        self.inputs.iter().chain(self.state.iter()).cloned().collect()
    }

    pub fn funcform(&self) -> FuncForm {
        let sys = EquationSystem {
            eqs: vec![Equation::Loop {
                modified: self.body.assigned().into_iter().collect(),
                index: self.index.clone(),
                lo: Expr::int(0),
                hi: Expr::Var(self.bound.clone()),
                body: self.body.clone(),
            }],
        };
        to_functional(&sys, &self.decls())
    }

    /// DSL source text that parses back to an equal nest.
    pub fn source(&self) -> String {
        self.to_string()
    }

    /// The statement form of the body, as the parser would produce it.
    pub fn body_stmts(&self) -> Vec<Stmt> {
        system_to_stmts(&self.body)
    }
}

fn system_to_stmts(sys: &EquationSystem) -> Vec<Stmt> {
    sys.eqs
        .iter()
        .map(|e| match e {
            Equation::Simple { lhs, rhs } => {
                Stmt::Assign { target: lhs.clone(), rhs: rhs.clone(), pos: Default::default() }
            }
            Equation::Loop { index, lo, hi, body, .. } => Stmt::For {
                index: index.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
                body: system_to_stmts(body),
                pos: Default::default(),
            },
        })
        .collect()
}

impl fmt::Display for LoopNest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.inputs {
            writeln!(f, "input {}: {};", d.name, d.ty)?;
        }
        for d in &self.state {
            writeln!(f, "state {}: {} = {};", d.name, d.ty, d.init.as_ref().expect("state init"))?;
        }
        writeln!(f, "for {} in 0..{} {{", self.index, self.bound)?;
        for line in self.body.to_string().lines() {
            writeln!(f, "  {line}")?;
        }
        writeln!(f, "}}")
    }
}
