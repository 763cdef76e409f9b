//! Shape analysis: which inputs are split across chunks, which are broadcast,
//! and which integer inputs bound each loop level.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{Program, Role, Stmt, Type};
use crate::expr::{Expr, Name};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("program body must be a single `for` loop")]
    NotSingleLoop,
    #[error("loop over `{0}` must start at 0")]
    NonZeroStart(String),
    #[error("loop over `{0}` must be bounded by an integer input")]
    BadBound(String),
    #[error("loops at depth {depth} use different bounds `{a}` and `{b}`")]
    InconsistentBound { depth: usize, a: String, b: String },
    #[error("input `{0}` must be subscripted by plain loop indices")]
    BadSubscript(String),
    #[error("input `{0}` is indexed inconsistently")]
    MixedIndexing(String),
    #[error("outer index `{0}` may only subscript inputs")]
    OuterIndexMisuse(String),
    #[error("input `{0}` is never read")]
    UnusedInput(String),
    #[error("input `{name}` has rank {rank} but is used with {used} subscripts")]
    RankMismatch { name: String, rank: usize, used: usize },
}

/// A sequence input and the loop depths of its dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqInput {
    pub name: Name,
    pub elem: Type,
    pub depths: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeSpec {
    pub outer_index: Name,
    /// Bound variable of each loop depth, outermost first.
    pub dims: Vec<Name>,
    pub seqs: Vec<SeqInput>,
    /// Scalar inputs that are not loop bounds.
    pub scalars: Vec<(Name, Type)>,
}

impl ShapeSpec {
    pub fn depth(&self) -> usize {
        self.dims.len()
    }

    /// Inputs cut along the outer dimension when the input is split.
    pub fn is_split(&self, n: &str) -> bool {
        self.seqs.iter().any(|s| &*s.name == n && s.depths.first() == Some(&0))
    }

    pub fn split_inputs(&self) -> Vec<&SeqInput> {
        self.seqs.iter().filter(|s| s.depths.first() == Some(&0)).collect()
    }

    pub fn dim_of(&self, n: &str) -> Option<usize> {
        self.dims.iter().position(|d| &**d == n)
    }
}

pub fn analyze(p: &Program) -> Result<ShapeSpec, ShapeError> {
    let [Stmt::For { index, .. }] = p.body.as_slice() else {
        return Err(ShapeError::NotSingleLoop);
    };
    let mut dims: Vec<Option<Name>> = Vec::new();
    let mut uses: BTreeMap<Name, Vec<usize>> = BTreeMap::new();
    let mut scope: Vec<Name> = Vec::new();
    walk(p, &p.body, &mut scope, &mut dims, &mut uses)?;
    let dims: Vec<Name> = dims.into_iter().map(|d| d.expect("every depth has a loop")).collect();
    let mut seqs = Vec::new();
    let mut scalars = Vec::new();
    for d in p.decls.iter().filter(|d| d.role == Role::Input) {
        if d.ty.is_seq() {
            let Some(depths) = uses.get(&d.name) else {
                return Err(ShapeError::UnusedInput(d.name.to_string()));
            };
            if depths.len() != d.ty.rank() {
                return Err(ShapeError::RankMismatch {
                    name: d.name.to_string(),
                    rank: d.ty.rank(),
                    used: depths.len(),
                });
            }
            if depths.iter().skip(1).any(|&x| x == 0) {
                return Err(ShapeError::MixedIndexing(d.name.to_string()));
            }
            seqs.push(SeqInput { name: d.name.clone(), elem: d.ty.scalar().clone(), depths: depths.clone() });
        } else if !dims.contains(&d.name) {
            scalars.push((d.name.clone(), d.ty.clone()));
        }
    }
    Ok(ShapeSpec { outer_index: index.clone(), dims, seqs, scalars })
}

fn walk(
    p: &Program,
    stmts: &[Stmt],
    scope: &mut Vec<Name>,
    dims: &mut Vec<Option<Name>>,
    uses: &mut BTreeMap<Name, Vec<usize>>,
) -> Result<(), ShapeError> {
    for s in stmts {
        match s {
            Stmt::Assign { target, rhs, .. } => {
                for i in &target.indices {
                    check_expr(p, i, scope, uses)?;
                }
                check_expr(p, rhs, scope, uses)?;
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                check_expr(p, cond, scope, uses)?;
                walk(p, then_branch, scope, dims, uses)?;
                walk(p, else_branch, scope, dims, uses)?;
            }
            Stmt::For { index, lo, hi, body, .. } => {
                if *lo != Expr::int(0) {
                    return Err(ShapeError::NonZeroStart(index.to_string()));
                }
                let bound = match hi {
                    Expr::Var(b) if p.is_input(b) && p.decl(b).unwrap().ty == Type::Int => b.clone(),
                    _ => return Err(ShapeError::BadBound(index.to_string())),
                };
                let depth = scope.len();
                if dims.len() <= depth {
                    dims.resize(depth + 1, None);
                }
                match &dims[depth] {
                    Some(b) if *b != bound => {
                        return Err(ShapeError::InconsistentBound { depth, a: b.to_string(), b: bound.to_string() })
                    }
                    _ => dims[depth] = Some(bound),
                }
                scope.push(index.clone());
                walk(p, body, scope, dims, uses)?;
                scope.pop();
            }
        }
    }
    Ok(())
}

fn check_expr(p: &Program, e: &Expr, scope: &[Name], uses: &mut BTreeMap<Name, Vec<usize>>) -> Result<(), ShapeError> {
    // collect subscript chains rooted at inputs
    let mut chain = Vec::new();
    let mut base = e;
    while let Expr::Index(b, i) = base {
        chain.push(&**i);
        base = b;
    }
    if let Expr::Var(n) = base {
        if !chain.is_empty() && p.is_input(n) {
            chain.reverse();
            let mut depths = Vec::new();
            for i in &chain {
                match i {
                    Expr::Var(ix) => match scope.iter().position(|s| s == ix) {
                        Some(d) => depths.push(d),
                        None => return Err(ShapeError::BadSubscript(n.to_string())),
                    },
                    _ => return Err(ShapeError::BadSubscript(n.to_string())),
                }
            }
            match uses.get(n) {
                Some(prev) if *prev != depths => return Err(ShapeError::MixedIndexing(n.to_string())),
                _ => {
                    uses.insert(n.clone(), depths);
                }
            }
            return Ok(());
        }
        if chain.is_empty() {
            if scope.first() == Some(n) {
                return Err(ShapeError::OuterIndexMisuse(n.to_string()));
            }
            if p.is_input(n) && p.decl(n).unwrap().ty.is_seq() {
                return Err(ShapeError::BadSubscript(n.to_string()));
            }
            return Ok(());
        }
    }
    for c in if chain.is_empty() { e.children() } else { chain.iter().copied().chain([base]).collect() } {
        check_expr(p, c, scope, uses)?;
    }
    Ok(())
}
