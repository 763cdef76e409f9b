//! Conversion of loop bodies into ordered systems of recurrence equations.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::ast::{LValue, Pos, Program, Stmt};
use crate::expr::{BinOp, Expr, Name};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Equation {
    Simple { lhs: LValue, rhs: Expr },
    Loop { modified: Vec<Name>, index: Name, lo: Expr, hi: Expr, body: EquationSystem },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EquationSystem {
    pub eqs: Vec<Equation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("{pos}: `{name}` is assigned twice in one block")]
    DoubleAssignment { pos: Pos, name: String },
    #[error("{pos}: loops inside conditionals are not supported")]
    LoopInConditional { pos: Pos },
    #[error("{pos}: conditional assignments cannot be ordered without temporaries")]
    ConditionalCycle { pos: Pos },
}

impl EquationSystem {
    /// Variables assigned anywhere in the system, nested loops included.
    pub fn assigned(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for eq in &self.eqs {
            match eq {
                Equation::Simple { lhs, .. } => {
                    out.insert(lhs.name.clone());
                }
                Equation::Loop { body, .. } => out.extend(body.assigned()),
            }
        }
        out
    }

    /// Variables read anywhere in the system.
    pub fn reads(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for eq in &self.eqs {
            match eq {
                Equation::Simple { lhs, rhs } => {
                    out.extend(rhs.vars());
                    for i in &lhs.indices {
                        out.extend(i.vars());
                    }
                }
                Equation::Loop { lo, hi, body, .. } => {
                    out.extend(lo.vars());
                    out.extend(hi.vars());
                    out.extend(body.reads());
                }
            }
        }
        out
    }

    /// Variables read by the equations that assign `v` (all occurrences).
    pub fn reads_of(&self, v: &str) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for eq in &self.eqs {
            match eq {
                Equation::Simple { lhs, rhs } if &*lhs.name == v => {
                    out.extend(rhs.vars());
                    for i in &lhs.indices {
                        out.extend(i.vars());
                    }
                }
                Equation::Simple { .. } => {}
                Equation::Loop { body, hi, .. } => {
                    let inner = body.reads_of(v);
                    if !inner.is_empty() {
                        out.extend(hi.vars());
                    }
                    out.extend(inner);
                }
            }
        }
        out
    }

    pub fn loops(&self) -> impl Iterator<Item = (&Name, &Expr, &Expr, &EquationSystem)> {
        self.eqs.iter().filter_map(|e| match e {
            Equation::Loop { index, lo, hi, body, .. } => Some((index, lo, hi, body)),
            _ => None,
        })
    }

    pub fn depth(&self) -> usize {
        self.loops().map(|(_, _, _, b)| 1 + b.depth()).max().unwrap_or(0)
    }

    /// Rewrite every expression (right-hand sides, subscripts and bounds).
    pub fn map_exprs(&self, f: &mut impl FnMut(&Expr) -> Expr) -> EquationSystem {
        EquationSystem {
            eqs: self
                .eqs
                .iter()
                .map(|eq| match eq {
                    Equation::Simple { lhs, rhs } => Equation::Simple {
                        lhs: LValue { name: lhs.name.clone(), indices: lhs.indices.iter().map(&mut *f).collect() },
                        rhs: f(rhs),
                    },
                    Equation::Loop { modified, index, lo, hi, body } => Equation::Loop {
                        modified: modified.clone(),
                        index: index.clone(),
                        lo: f(lo),
                        hi: f(hi),
                        body: body.map_exprs(f),
                    },
                })
                .collect(),
        }
    }

    /// Rename assignment targets as well as reads.
    pub fn rename_all(&self, f: &impl Fn(&str) -> Option<String>) -> EquationSystem {
        let renamed = self.map_exprs(&mut |e| e.rename(f));
        EquationSystem {
            eqs: renamed
                .eqs
                .into_iter()
                .map(|eq| match eq {
                    Equation::Simple { lhs, rhs } => Equation::Simple {
                        lhs: LValue {
                            name: f(&lhs.name).map(|s| crate::expr::name(&s)).unwrap_or(lhs.name),
                            indices: lhs.indices,
                        },
                        rhs,
                    },
                    Equation::Loop { modified, index, lo, hi, body } => Equation::Loop {
                        modified: modified
                            .into_iter()
                            .map(|m| f(&m).map(|s| crate::expr::name(&s)).unwrap_or(m))
                            .collect(),
                        index,
                        lo,
                        hi,
                        body: body.rename_all(f),
                    },
                })
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.eqs
            .iter()
            .map(|eq| match eq {
                Equation::Simple { rhs, .. } => rhs.size(),
                Equation::Loop { body, .. } => 1 + body.size(),
            })
            .sum()
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, ind: usize) -> fmt::Result {
        let pad = "  ".repeat(ind);
        for eq in &self.eqs {
            match eq {
                Equation::Simple { lhs, rhs } => writeln!(f, "{pad}{lhs} := {rhs};")?,
                Equation::Loop { index, lo, hi, body, .. } => {
                    writeln!(f, "{pad}for {index} in {lo}..{hi} {{")?;
                    body.write_indented(f, ind + 1)?;
                    writeln!(f, "{pad}}}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for EquationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// Detect `x < y ? x : y` style conditionals and turn them into `min`/`max`.
pub fn desugar_minmax(e: &Expr) -> Expr {
    e.transform(&mut |e| {
        if let Expr::Ite(c, t, el) = &e {
            if let Expr::Binary(op, a, b) = &**c {
                let same = |x: &Expr, y: &Expr| x == y;
                let pick = match op {
                    BinOp::Lt | BinOp::Le => Some((BinOp::Min, BinOp::Max)),
                    BinOp::Gt | BinOp::Ge => Some((BinOp::Max, BinOp::Min)),
                    _ => None,
                };
                if let Some((direct, swapped)) = pick {
                    if same(a, t) && same(b, el) {
                        return Expr::bin(direct, (**a).clone(), (**b).clone());
                    }
                    if same(b, t) && same(a, el) {
                        return Expr::bin(swapped, (**a).clone(), (**b).clone());
                    }
                }
            }
        }
        e
    })
}

/// Convert the statement body of a program into an equation system.
pub fn to_equations(p: &Program) -> Result<EquationSystem, ConvertError> {
    block(&p.body)
}

fn block(stmts: &[Stmt]) -> Result<EquationSystem, ConvertError> {
    let mut eqs = Vec::new();
    let mut seen: BTreeSet<LValue> = BTreeSet::new();
    let mut note = |lhs: &LValue, pos: Pos| -> Result<(), ConvertError> {
        if !seen.insert(lhs.clone()) {
            return Err(ConvertError::DoubleAssignment { pos, name: lhs.name.to_string() });
        }
        Ok(())
    };
    for s in stmts {
        match s {
            Stmt::Assign { target, rhs, pos } => {
                note(target, *pos)?;
                eqs.push(Equation::Simple { lhs: target.clone(), rhs: desugar_minmax(rhs) });
            }
            Stmt::If { pos, .. } => {
                for (lhs, rhs) in merge_if(s)? {
                    note(&lhs, *pos)?;
                    eqs.push(Equation::Simple { lhs, rhs: desugar_minmax(&rhs) });
                }
            }
            Stmt::For { index, lo, hi, body, .. } => {
                let body = block(body)?;
                let modified = body.assigned().into_iter().collect();
                eqs.push(Equation::Loop { modified, index: index.clone(), lo: lo.clone(), hi: hi.clone(), body });
            }
        }
    }
    Ok(EquationSystem { eqs })
}

/// Straight-line assignments of a branch, in terms of the values at branch entry.
fn branch(stmts: &[Stmt]) -> Result<Vec<(LValue, Expr)>, ConvertError> {
    let mut out: Vec<(LValue, Expr)> = Vec::new();
    for s in stmts {
        let assigns = match s {
            Stmt::Assign { target, rhs, .. } => vec![(target.clone(), rhs.clone())],
            Stmt::If { .. } => merge_if(s)?,
            Stmt::For { pos, .. } => return Err(ConvertError::LoopInConditional { pos: *pos }),
        };
        for (lhs, rhs) in assigns {
            // reads of earlier branch assignments see their new value
            let rhs = substitute_assigned(&rhs, &out);
            if out.iter().any(|(l, _)| *l == lhs) {
                return Err(ConvertError::DoubleAssignment { pos: stmt_pos(s), name: lhs.name.to_string() });
            }
            out.push((lhs, rhs));
        }
    }
    Ok(out)
}

fn substitute_assigned(e: &Expr, done: &[(LValue, Expr)]) -> Expr {
    e.transform(&mut |x| {
        for (l, r) in done {
            if l.as_expr() == x {
                return r.clone();
            }
        }
        x
    })
}

fn stmt_pos(s: &Stmt) -> Pos {
    match s {
        Stmt::Assign { pos, .. } | Stmt::If { pos, .. } | Stmt::For { pos, .. } => *pos,
    }
}

/// Merge both branches into one ternary per assigned target, ordered so that no
/// equation reads a target already overwritten by the merge.
fn merge_if(s: &Stmt) -> Result<Vec<(LValue, Expr)>, ConvertError> {
    let Stmt::If { cond, then_branch, else_branch, pos } = s else { unreachable!() };
    let t = branch(then_branch)?;
    let e = branch(else_branch)?;
    let mut targets: Vec<LValue> = Vec::new();
    for (l, _) in t.iter().chain(e.iter()) {
        if !targets.contains(l) {
            targets.push(l.clone());
        }
    }
    let merged: Vec<(LValue, Expr)> = targets
        .iter()
        .map(|l| {
            let get = |side: &[(LValue, Expr)]| {
                side.iter().find(|(x, _)| x == l).map(|(_, r)| r.clone()).unwrap_or(l.as_expr())
            };
            (l.clone(), Expr::ite(cond.clone(), get(&t), get(&e)))
        })
        .collect();
    // equation k must precede every equation that writes a variable k reads
    let n = merged.len();
    let reads: Vec<BTreeSet<Name>> = merged.iter().map(|(_, r)| r.vars()).collect();
    let mut done = vec![false; n];
    let mut order = Vec::new();
    while order.len() < n {
        let next = (0..n).find(|&k| {
            !done[k]
                && (0..n).all(|w| {
                    w == k || done[w] || !reads[w].contains(&merged[k].0.name) || merged[w].0.name == merged[k].0.name
                })
        });
        match next {
            Some(k) => {
                done[k] = true;
                order.push(k);
            }
            None => return Err(ConvertError::ConditionalCycle { pos: *pos }),
        }
    }
    Ok(order.into_iter().map(|k| merged[k].clone()).collect())
}
