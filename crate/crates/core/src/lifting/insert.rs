//! Adding an accumulator to a loop nest.

use super::discover::{Atom, Template};
use super::{AuxDef, AuxShape, AuxSource, Level, LiftError, Scheme};
use crate::expr::{name, BinOp, Expr, Name};
use crate::frontend::{Decl, Equation, EquationSystem, LValue, LoopNest, Role, Type};

pub fn identity_of(op: BinOp) -> Option<Expr> {
    Some(match op {
        BinOp::Add => Expr::int(0),
        BinOp::Mul => Expr::int(1),
        BinOp::Max => Expr::NegInf,
        BinOp::Min => Expr::PosInf,
        BinOp::And => Expr::Bool(true),
        BinOp::Or => Expr::Bool(false),
        _ => return None,
    })
}

fn prefix(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "sum",
        BinOp::Mul => "prod",
        BinOp::Max => "max",
        BinOp::Min => "min",
        BinOp::And => "all",
        BinOp::Or => "any",
        _ => "aux",
    }
}

/// `max_rec` for a max over `rec`; suffixed until it is free.
pub fn aux_name(op: BinOp, source: &str, taken: &[Name]) -> Name {
    let base = format!("{}_{source}", prefix(op));
    let mut n = base.clone();
    let mut k = 1;
    while taken.iter().any(|t| **t == *n) {
        k += 1;
        n = format!("{base}{k}");
    }
    name(&n)
}

fn writes_cell(sys: &EquationSystem, x: &str, index: &Name) -> bool {
    sys.eqs.iter().any(|eq| match eq {
        Equation::Simple { lhs, .. } => &*lhs.name == x && lhs.indices == [Expr::Var(index.clone())],
        Equation::Loop { body, .. } => writes_cell(body, x, index),
    })
}

fn with_body(eq: &Equation, f: impl FnOnce(&mut Vec<Equation>)) -> Equation {
    let Equation::Loop { index, lo, hi, body, .. } = eq else { unreachable!("loop equation") };
    let mut eqs = body.eqs.clone();
    f(&mut eqs);
    let body = EquationSystem { eqs };
    Equation::Loop {
        modified: body.assigned().into_iter().collect(),
        index: index.clone(),
        lo: lo.clone(),
        hi: hi.clone(),
        body,
    }
}

/// Add the accumulator described by `t` to `nest`. Outer accumulators are
/// updated once per row (cell accumulators inside the loop writing the cell),
/// inner ones are reset before the inner loop at `inner` and updated at the
/// end of each of its iterations.
pub fn insert_aux(
    nest: &LoopNest,
    t: &Template,
    level: Level,
    target: &Name,
    inner: Option<usize>,
) -> Result<(LoopNest, AuxDef), LiftError> {
    let (src, source) = match &t.atom {
        Atom::State(x) => (x.clone(), AuxSource::State(x.to_string())),
        Atom::Field(f) => (f.clone(), AuxSource::Field(f.to_string())),
    };
    let taken: Vec<Name> = nest.decls().iter().map(|d| d.name.clone()).collect();
    let aux = aux_name(t.op, &src, &taken);
    let ident =
        identity_of(t.op).ok_or_else(|| LiftError::Insert(format!("operator {} has no identity", t.op.symbol())))?;
    let scalar_ty = if t.op.is_logic() { Type::Bool } else { Type::Int };
    let mut out = nest.clone();
    let mut eqs = nest.body.eqs.clone();
    let (ty, init, shape, update) = match (t.cell, level) {
        (None, Level::Outer) => {
            let upd = Equation::Simple {
                lhs: LValue::scalar(aux.clone()),
                rhs: Expr::bin(t.op, Expr::Var(aux.clone()), Expr::Var(src.clone())),
            };
            eqs.push(upd.clone());
            (scalar_ty, ident, AuxShape::Scalar, upd)
        }
        (Some(_), Level::Outer) => {
            let Some(Expr::Fill(_, len)) = nest.init_of(&src) else {
                return Err(LiftError::Insert(format!("`{src}` has no fill initializer")));
            };
            let pos = eqs
                .iter()
                .position(|e| matches!(e, Equation::Loop { index, body, .. } if writes_cell(body, &src, index)))
                .ok_or_else(|| LiftError::Insert(format!("no loop writes `{src}` cell by cell")))?;
            let Equation::Loop { index, .. } = &eqs[pos] else { unreachable!() };
            let j = Expr::Var(index.clone());
            let upd = Equation::Simple {
                lhs: LValue { name: aux.clone(), indices: vec![j.clone()] },
                rhs: Expr::bin(
                    t.op,
                    Expr::index(Expr::Var(aux.clone()), j.clone()),
                    Expr::index(Expr::Var(src.clone()), j),
                ),
            };
            let u = upd.clone();
            eqs[pos] = with_body(&eqs[pos], |b| b.push(u));
            let init = Expr::Fill(Box::new(ident), len.clone());
            (Type::Seq(Box::new(scalar_ty)), init, AuxShape::Cells(src.to_string()), upd)
        }
        (None, Level::Inner) => {
            let pos = inner.ok_or_else(|| LiftError::NoInnerLoop(target.to_string()))?;
            if !matches!(eqs.get(pos), Some(Equation::Loop { .. })) {
                return Err(LiftError::NoInnerLoop(target.to_string()));
            }
            let upd = Equation::Simple {
                lhs: LValue::scalar(aux.clone()),
                rhs: Expr::bin(t.op, Expr::Var(aux.clone()), Expr::Var(src.clone())),
            };
            let u = upd.clone();
            eqs[pos] = with_body(&eqs[pos], |b| b.push(u));
            eqs.insert(pos, Equation::Simple { lhs: LValue::scalar(aux.clone()), rhs: ident.clone() });
            (scalar_ty, ident, AuxShape::Scalar, upd)
        }
        (Some(_), Level::Inner) => return Err(LiftError::Insert("cell accumulators of an inner loop".into())),
    };
    out.body = EquationSystem { eqs };
    out.state.push(Decl { name: aux.clone(), ty: ty.clone(), role: Role::State, init: Some(init.clone()) });
    let def = AuxDef {
        name: aux.to_string(),
        ty: ty.to_string(),
        shape,
        init: init.to_string(),
        scheme: if t.cell.is_some() { Scheme::Zip } else { Scheme::Fold },
        op: t.op.symbol().to_string(),
        source,
        level,
        target: target.to_string(),
        update: EquationSystem { eqs: vec![update] }.to_string().trim().to_string(),
    };
    Ok((out, def))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_accumulator_goes_into_the_writing_loop() {
        let nest = LoopNest::from_source(include_str!("../../corpus/mtls.dsl")).unwrap();
        let t = Template { op: BinOp::Max, atom: Atom::State(name("rec")), cell: Some(0) };
        let (lifted, def) = insert_aux(&nest, &t, Level::Outer, &name("mtl_rec"), None).unwrap();
        assert_eq!(def.name, "max_rec");
        assert_eq!(def.update, "max_rec[j] := max(max_rec[j], rec[j]);");
        assert_eq!(def.init, "[-inf; m]");
        let back = LoopNest::from_source(&lifted.source()).unwrap();
        assert_eq!(back, lifted);
    }

    #[test]
    fn names_avoid_collisions() {
        assert_eq!(&*aux_name(BinOp::Add, "s", &[name("sum_s")]), "sum_s2");
    }
}
