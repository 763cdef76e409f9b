//! Join operators: small programs over a left state, a right state and
//! optional broadcast inputs, producing a new state.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{name, Expr, Name};
use crate::frontend::{parse_block, parse_type, Equation, EquationSystem, LValue, ParseError, Stmt, Type};
use crate::interp::compiled::{compile_expr_fixed, compile_system, exec, CExpr, CStmt, Frame, Slots};
use crate::interp::{Bindings, EvalError, State};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: Name,
    pub ty: Type,
}

impl Param {
    pub fn new(n: &Name, ty: &Type) -> Param {
        Param { name: n.clone(), ty: ty.clone() }
    }
}

pub fn left_name(n: &str) -> Name {
    name(&format!("{n}_l"))
}

pub fn right_name(n: &str) -> Name {
    name(&format!("{n}_r"))
}

/// `x_l` -> `x`, `x_r` -> `x`.
pub fn base_name(n: &str) -> Option<(&str, Side)> {
    if let Some(b) = n.strip_suffix("_l") {
        Some((b, Side::Left))
    } else {
        n.strip_suffix("_r").map(|b| (b, Side::Right))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A join: `out := body(left_l, right_r, inputs)`. Unassigned outputs are an
/// evaluation error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JoinDef {
    pub left: Vec<Param>,
    pub right: Vec<Param>,
    pub out: Vec<Param>,
    /// Broadcast inputs the body may read by their own name.
    pub inputs: Vec<Param>,
    pub body: EquationSystem,
}

impl JoinDef {
    pub fn out_names(&self) -> Vec<Name> {
        self.out.iter().map(|p| p.name.clone()).collect()
    }

    pub fn type_of(&self, v: &str) -> Option<Type> {
        if let Some(p) = self.out.iter().chain(&self.inputs).find(|p| &*p.name == v) {
            return Some(p.ty.clone());
        }
        match base_name(v)? {
            (b, Side::Left) => self.left.iter().find(|p| &*p.name == b).map(|p| p.ty.clone()),
            (b, Side::Right) => self.right.iter().find(|p| &*p.name == b).map(|p| p.ty.clone()),
        }
    }

    /// Keep only the equations that assign a variable in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Name>) -> JoinDef {
        JoinDef {
            out: self.out.iter().filter(|p| keep.contains(&p.name)).cloned().collect(),
            body: restrict_system(&self.body, keep),
            ..self.clone()
        }
    }

    pub fn fill(&self, holes: &[Expr]) -> JoinDef {
        JoinDef { body: self.body.map_exprs(&mut |e| e.fill_holes(holes)), ..self.clone() }
    }

    pub fn has_holes(&self) -> bool {
        let mut found = false;
        self.body.map_exprs(&mut |e| {
            found |= e.has_hole();
            e.clone()
        });
        found
    }

    pub fn eval(&self, l: &State, r: &State, inputs: &Bindings) -> Result<State, EvalError> {
        CompiledJoin::new(self).eval(l, r, inputs, &[])
    }

    /// Parse a body written in the loop language.
    pub fn parse(
        left: Vec<Param>,
        right: Vec<Param>,
        out: Vec<Param>,
        inputs: Vec<Param>,
        src: &str,
    ) -> Result<JoinDef, ParseError> {
        let mut vars: HashSet<String> = HashSet::new();
        vars.extend(left.iter().map(|p| left_name(&p.name).to_string()));
        vars.extend(right.iter().map(|p| right_name(&p.name).to_string()));
        vars.extend(out.iter().chain(&inputs).map(|p| p.name.to_string()));
        let stmts = parse_block(src, &vars)?;
        let body = stmts_to_system(&stmts);
        Ok(JoinDef { left, right, out, inputs, body })
    }

    pub fn source(&self) -> String {
        self.body.to_string()
    }
}

fn stmts_to_system(stmts: &[Stmt]) -> EquationSystem {
    EquationSystem {
        eqs: stmts
            .iter()
            .flat_map(|s| match s {
                Stmt::Assign { target, rhs, .. } => vec![Equation::Simple { lhs: target.clone(), rhs: rhs.clone() }],
                Stmt::For { index, lo, hi, body, .. } => {
                    let body = stmts_to_system(body);
                    vec![Equation::Loop {
                        modified: body.assigned().into_iter().collect(),
                        index: index.clone(),
                        lo: lo.clone(),
                        hi: hi.clone(),
                        body,
                    }]
                }
                Stmt::If { cond, then_branch, else_branch, .. } => {
                    // join bodies are straight-line per target; ternary merge
                    let t = stmts_to_system(then_branch);
                    let e = stmts_to_system(else_branch);
                    let mut targets: Vec<LValue> = Vec::new();
                    for eq in t.eqs.iter().chain(&e.eqs) {
                        if let Equation::Simple { lhs, .. } = eq {
                            if !targets.contains(lhs) {
                                targets.push(lhs.clone());
                            }
                        }
                    }
                    let pick = |sys: &EquationSystem, l: &LValue| {
                        sys.eqs
                            .iter()
                            .find_map(|eq| match eq {
                                Equation::Simple { lhs, rhs } if lhs == l => Some(rhs.clone()),
                                _ => None,
                            })
                            .unwrap_or_else(|| l.as_expr())
                    };
                    targets
                        .iter()
                        .map(|l| Equation::Simple {
                            lhs: l.clone(),
                            rhs: Expr::ite(cond.clone(), pick(&t, l), pick(&e, l)),
                        })
                        .collect()
                }
            })
            .collect(),
    }
}

fn restrict_system(sys: &EquationSystem, keep: &BTreeSet<Name>) -> EquationSystem {
    EquationSystem {
        eqs: sys
            .eqs
            .iter()
            .filter_map(|eq| match eq {
                Equation::Simple { lhs, .. } => keep.contains(&lhs.name).then(|| eq.clone()),
                Equation::Loop { index, lo, hi, body, .. } => {
                    let body = restrict_system(body, keep);
                    (!body.eqs.is_empty()).then(|| Equation::Loop {
                        modified: body.assigned().into_iter().collect(),
                        index: index.clone(),
                        lo: lo.clone(),
                        hi: hi.clone(),
                        body,
                    })
                }
            })
            .collect(),
    }
}

impl fmt::Display for JoinDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)
    }
}

/// Serializable form: parameter lists plus the body source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinDoc {
    pub left: Vec<(String, String)>,
    pub right: Vec<(String, String)>,
    pub out: Vec<(String, String)>,
    pub inputs: Vec<(String, String)>,
    pub body: String,
}

impl JoinDef {
    pub fn to_doc(&self) -> JoinDoc {
        let ps = |v: &[Param]| v.iter().map(|p| (p.name.to_string(), p.ty.to_string())).collect();
        JoinDoc {
            left: ps(&self.left),
            right: ps(&self.right),
            out: ps(&self.out),
            inputs: ps(&self.inputs),
            body: self.source(),
        }
    }

    pub fn from_doc(d: &JoinDoc) -> Result<JoinDef, ParseError> {
        let ps = |v: &[(String, String)]| -> Result<Vec<Param>, ParseError> {
            v.iter().map(|(n, t)| Ok(Param { name: name(n), ty: parse_type(t)? })).collect()
        };
        JoinDef::parse(ps(&d.left)?, ps(&d.right)?, ps(&d.out)?, ps(&d.inputs)?, &d.body)
    }
}

/// A join compiled to slots. Hole references are resolved through the table
/// passed to each evaluation.
#[derive(Clone, Debug)]
pub struct CompiledJoin {
    pub slots: Slots,
    body: Vec<CStmt>,
    left: Vec<(Name, usize)>,
    right: Vec<(Name, usize)>,
    inputs: Vec<(Name, usize)>,
    pub out: Vec<(Name, usize)>,
}

impl CompiledJoin {
    pub fn new(j: &JoinDef) -> CompiledJoin {
        let mut slots = Slots::new();
        let left = j.left.iter().map(|p| (p.name.clone(), slots.slot(&left_name(&p.name)))).collect();
        let right = j.right.iter().map(|p| (p.name.clone(), slots.slot(&right_name(&p.name)))).collect();
        let inputs = j.inputs.iter().map(|p| (p.name.clone(), slots.slot(&p.name))).collect();
        let out = j.out.iter().map(|p| (p.name.clone(), slots.slot(&p.name))).collect();
        let body = compile_system(&j.body, &mut slots);
        CompiledJoin { slots, body, left, right, inputs, out }
    }

    pub fn compile(&self, e: &Expr) -> Option<CExpr> {
        compile_expr_fixed(e, &self.slots)
    }

    /// A frame with parameters bound and locals empty.
    pub fn frame(&self, l: &State, r: &State, inputs: &Bindings) -> Result<Frame, EvalError> {
        let mut f = Frame::new(self.slots.len());
        for (n, s) in &self.left {
            f.set(*s, l.get(n).ok_or_else(|| EvalError::Unbound(format!("{n}_l")))?.clone());
        }
        for (n, s) in &self.right {
            f.set(*s, r.get(n).ok_or_else(|| EvalError::Unbound(format!("{n}_r")))?.clone());
        }
        for (n, s) in &self.inputs {
            f.set(*s, inputs.get(n).ok_or_else(|| EvalError::MissingInput(n.to_string()))?.clone());
        }
        Ok(f)
    }

    /// Run the body on a copy of `frame`.
    pub fn run(&self, frame: &Frame, holes: &[&CExpr]) -> Result<Frame, EvalError> {
        let mut f = frame.clone();
        exec(&self.body, &mut f, holes)?;
        Ok(f)
    }

    /// Whether the outputs after running match `expected` (aligned with `out`).
    pub fn check(&self, frame: &Frame, holes: &[&CExpr], expected: &[Value]) -> bool {
        match self.run(frame, holes) {
            Ok(f) => self.out.iter().zip(expected).all(|((_, s), v)| f.vals[*s].as_ref() == Some(v)),
            Err(_) => false,
        }
    }

    pub fn eval(&self, l: &State, r: &State, inputs: &Bindings, holes: &[&CExpr]) -> Result<State, EvalError> {
        let f = self.run(&self.frame(l, r, inputs)?, holes)?;
        let mut out = State::default();
        for (n, s) in &self.out {
            let v = f.vals[*s].clone().ok_or_else(|| EvalError::Unbound(n.to_string()))?;
            out.insert(n.clone(), v);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[(&str, Type)]) -> Vec<Param> {
        v.iter().map(|(n, t)| Param { name: name(n), ty: t.clone() }).collect()
    }

    #[test]
    fn parse_and_eval_sequence_join() {
        let st = ps(&[("rec", Type::Seq(Box::new(Type::Int))), ("m", Type::Int)]);
        let j = JoinDef::parse(
            st.clone(),
            st.clone(),
            st,
            vec![],
            "rec := rec_l; m := m_l; for j in 0..len(rec_l) { rec[j] := rec[j] + rec_r[j]; m := max(m, rec[j]); }",
        )
        .unwrap();
        let mut l = State::default();
        l.insert(name("rec"), Value::seq(vec![Value::int(1), Value::int(2)]));
        l.insert(name("m"), Value::int(0));
        let mut r = State::default();
        r.insert(name("rec"), Value::seq(vec![Value::int(3), Value::int(-5)]));
        r.insert(name("m"), Value::int(9));
        let out = j.eval(&l, &r, &Bindings::new()).unwrap();
        assert_eq!(out.get("rec"), Some(&Value::seq(vec![Value::int(4), Value::int(-3)])));
        assert_eq!(out.get("m"), Some(&Value::int(4)));
        let back = JoinDef::from_doc(&j.to_doc()).unwrap();
        assert_eq!(back, j);
    }

    #[test]
    fn unassigned_output_is_an_error() {
        let st = ps(&[("a", Type::Int), ("b", Type::Int)]);
        let j = JoinDef::parse(st.clone(), st.clone(), st, vec![], "a := a_l + a_r;").unwrap();
        let s = State([(name("a"), Value::int(1)), (name("b"), Value::int(2))].into_iter().collect());
        assert!(j.eval(&s, &s, &Bindings::new()).is_err());
    }
}
