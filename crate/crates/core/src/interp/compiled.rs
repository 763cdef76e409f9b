//! Slot-indexed evaluation for the hot paths (sampling, candidate checking).
//! Semantics match the tree-walking evaluator exactly.

use std::collections::HashMap;

use super::{apply_binop, apply_unop, store, to_len, Bindings, EvalError, State};
use crate::expr::{BinOp, Expr, Name, UnOp};
use crate::frontend::{Equation, EquationSystem, LoopNest};
use crate::value::{Value, ValueError};

#[derive(Clone, Debug, Default)]
pub struct Slots {
    names: Vec<Name>,
    map: HashMap<Name, usize>,
}

impl Slots {
    pub fn new() -> Slots {
        Slots::default()
    }

    pub fn slot(&mut self, n: &Name) -> usize {
        if let Some(&s) = self.map.get(n) {
            return s;
        }
        self.names.push(n.clone());
        self.map.insert(n.clone(), self.names.len() - 1);
        self.names.len() - 1
    }

    pub fn get(&self, n: &str) -> Option<usize> {
        self.map.get(n).copied()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: usize) -> &Name {
        &self.names[s]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CExpr {
    Const(Value),
    Slot(usize),
    Index(Box<CExpr>, Box<CExpr>),
    Len(Box<CExpr>),
    Fill(Box<CExpr>, Box<CExpr>),
    Un(UnOp, Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
    Ite(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Hole(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CStmt {
    Assign { slot: usize, idx: Vec<CExpr>, rhs: CExpr },
    Loop { slot: usize, lo: CExpr, hi: CExpr, body: Vec<CStmt> },
}

pub fn compile_expr(e: &Expr, slots: &mut Slots) -> CExpr {
    let b = |e: &Expr, s: &mut Slots| Box::new(compile_expr(e, s));
    match e {
        Expr::Var(n) => CExpr::Slot(slots.slot(n)),
        Expr::Index(a, i) => CExpr::Index(b(a, slots), b(i, slots)),
        Expr::Len(a) => CExpr::Len(b(a, slots)),
        Expr::Fill(v, n) => CExpr::Fill(b(v, slots), b(n, slots)),
        Expr::Unary(op, a) => CExpr::Un(*op, b(a, slots)),
        Expr::Binary(op, x, y) => CExpr::Bin(*op, b(x, slots), b(y, slots)),
        Expr::Ite(c, t, f) => CExpr::Ite(b(c, slots), b(t, slots), b(f, slots)),
        Expr::Hole(h) => CExpr::Hole(*h),
        c => CExpr::Const(c.const_value().expect("constant")),
    }
}

/// Compile against a fixed slot table; `None` when a variable has no slot.
pub fn compile_expr_fixed(e: &Expr, slots: &Slots) -> Option<CExpr> {
    let b = |e: &Expr| compile_expr_fixed(e, slots).map(Box::new);
    Some(match e {
        Expr::Var(n) => CExpr::Slot(slots.get(n)?),
        Expr::Index(a, i) => CExpr::Index(b(a)?, b(i)?),
        Expr::Len(a) => CExpr::Len(b(a)?),
        Expr::Fill(v, n) => CExpr::Fill(b(v)?, b(n)?),
        Expr::Unary(op, a) => CExpr::Un(*op, b(a)?),
        Expr::Binary(op, x, y) => CExpr::Bin(*op, b(x)?, b(y)?),
        Expr::Ite(c, t, f) => CExpr::Ite(b(c)?, b(t)?, b(f)?),
        Expr::Hole(h) => CExpr::Hole(*h),
        c => CExpr::Const(c.const_value()?),
    })
}

pub fn compile_system(sys: &EquationSystem, slots: &mut Slots) -> Vec<CStmt> {
    sys.eqs
        .iter()
        .map(|eq| match eq {
            Equation::Simple { lhs, rhs } => CStmt::Assign {
                slot: slots.slot(&lhs.name),
                idx: lhs.indices.iter().map(|i| compile_expr(i, slots)).collect(),
                rhs: compile_expr(rhs, slots),
            },
            Equation::Loop { index, lo, hi, body, .. } => CStmt::Loop {
                slot: slots.slot(index),
                lo: compile_expr(lo, slots),
                hi: compile_expr(hi, slots),
                body: compile_system(body, slots),
            },
        })
        .collect()
}

/// Register file for one evaluation.
#[derive(Clone, Debug)]
pub struct Frame {
    pub vals: Vec<Option<Value>>,
}

impl Frame {
    pub fn new(n: usize) -> Frame {
        Frame { vals: vec![None; n] }
    }

    pub fn set(&mut self, s: usize, v: Value) {
        self.vals[s] = Some(v);
    }

    pub fn get(&self, s: usize) -> Result<&Value, EvalError> {
        self.vals[s].as_ref().ok_or_else(|| EvalError::Unbound(format!("#{s}")))
    }
}

pub fn eval(e: &CExpr, f: &Frame, holes: &[&CExpr]) -> Result<Value, EvalError> {
    Ok(match e {
        CExpr::Const(v) => v.clone(),
        CExpr::Slot(s) => f.get(*s)?.clone(),
        CExpr::Index(b, i) => {
            let i = eval(i, f, holes)?;
            if let CExpr::Slot(s) = &**b {
                return Ok(f.get(*s)?.index(&i)?.clone());
            }
            eval(b, f, holes)?.index(&i)?.clone()
        }
        CExpr::Len(s) => Value::int(eval(s, f, holes)?.as_seq()?.len() as i64),
        CExpr::Fill(v, n) => {
            let v = eval(v, f, holes)?;
            Value::fill(v, to_len(&eval(n, f, holes)?)?)
        }
        CExpr::Un(op, a) => apply_unop(*op, &eval(a, f, holes)?)?,
        CExpr::Bin(BinOp::And, a, b) => Value::Bool(eval(a, f, holes)?.as_bool()? && eval(b, f, holes)?.as_bool()?),
        CExpr::Bin(BinOp::Or, a, b) => Value::Bool(eval(a, f, holes)?.as_bool()? || eval(b, f, holes)?.as_bool()?),
        CExpr::Bin(op, a, b) => apply_binop(*op, &eval(a, f, holes)?, &eval(b, f, holes)?)?,
        CExpr::Ite(c, t, e) => {
            if eval(c, f, holes)?.as_bool()? {
                eval(t, f, holes)?
            } else {
                eval(e, f, holes)?
            }
        }
        CExpr::Hole(h) => match holes.get(*h) {
            Some(c) => eval(c, f, holes)?,
            None => return Err(EvalError::OpenHole(*h)),
        },
    })
}

fn as_index(v: &Value) -> Result<usize, EvalError> {
    let i = v.as_int()?;
    match i.to_i64() {
        Some(k) if k >= 0 => Ok(k as usize),
        _ => Err(ValueError::OutOfBounds { index: i.to_string(), len: 0 }.into()),
    }
}

pub fn exec(body: &[CStmt], f: &mut Frame, holes: &[&CExpr]) -> Result<(), EvalError> {
    for s in body {
        match s {
            CStmt::Assign { slot, idx, rhs } => {
                let v = eval(rhs, f, holes)?;
                if idx.is_empty() {
                    f.vals[*slot] = Some(v);
                } else {
                    let ix = idx.iter().map(|i| as_index(&eval(i, f, holes)?)).collect::<Result<Vec<_>, _>>()?;
                    let target = f.vals[*slot].as_mut().ok_or_else(|| EvalError::Unbound(format!("#{slot}")))?;
                    store(target, &ix, v)?;
                }
            }
            CStmt::Loop { slot, lo, hi, body } => {
                let lo = as_index(&eval(lo, f, holes)?)?;
                let hi = as_index(&eval(hi, f, holes)?)?;
                for k in lo..hi {
                    f.vals[*slot] = Some(Value::int(k as i64));
                    exec(body, f, holes)?;
                }
                f.vals[*slot] = None;
            }
        }
    }
    Ok(())
}

/// A loop nest compiled for repeated row-range runs.
#[derive(Clone, Debug)]
pub struct CompiledNest {
    pub slots: Slots,
    body: Vec<CStmt>,
    init: Vec<(usize, CExpr)>,
    state: Vec<(Name, usize)>,
    inputs: Vec<(Name, usize)>,
    index: usize,
    bound: usize,
}

impl CompiledNest {
    pub fn new(nest: &LoopNest) -> CompiledNest {
        let mut slots = Slots::new();
        let inputs = nest.inputs.iter().map(|d| (d.name.clone(), slots.slot(&d.name))).collect();
        let state: Vec<(Name, usize)> = nest.state.iter().map(|d| (d.name.clone(), slots.slot(&d.name))).collect();
        let index = slots.slot(&nest.index);
        let bound = slots.slot(&nest.bound);
        let init = nest
            .state
            .iter()
            .zip(&state)
            .map(|(d, (_, s))| (*s, compile_expr(d.init.as_ref().expect("state init"), &mut slots)))
            .collect();
        let body = compile_system(&nest.body, &mut slots);
        CompiledNest { slots, body, init, state, inputs, index, bound }
    }

    fn frame(&self, inputs: &Bindings) -> Result<Frame, EvalError> {
        let mut f = Frame::new(self.slots.len());
        for (n, s) in &self.inputs {
            let v = inputs.get(n).ok_or_else(|| EvalError::MissingInput(n.to_string()))?;
            f.set(*s, v.clone());
        }
        Ok(f)
    }

    pub fn rows(&self, inputs: &Bindings) -> Result<usize, EvalError> {
        let f = self.frame(inputs)?;
        as_index(f.get(self.bound)?)
    }

    pub fn init_state(&self, inputs: &Bindings) -> Result<State, EvalError> {
        let mut f = self.frame(inputs)?;
        for (s, e) in &self.init {
            let v = eval(e, &f, &[])?;
            f.set(*s, v);
        }
        Ok(self.read_state(&f))
    }

    fn read_state(&self, f: &Frame) -> State {
        State(self.state.iter().map(|(n, s)| (n.clone(), f.vals[*s].clone().expect("state bound"))).collect())
    }

    /// Run rows `lo..hi` of `inputs` starting from `from`.
    pub fn run(&self, inputs: &Bindings, from: &State, lo: usize, hi: usize) -> Result<State, EvalError> {
        let mut f = self.frame(inputs)?;
        for (n, s) in &self.state {
            let v = from.get(n).ok_or_else(|| EvalError::Unbound(n.to_string()))?;
            f.set(*s, v.clone());
        }
        for k in lo..hi {
            f.set(self.index, Value::int(k as i64));
            exec(&self.body, &mut f, &[])?;
        }
        Ok(self.read_state(&f))
    }

    pub fn run_all(&self, inputs: &Bindings) -> Result<State, EvalError> {
        let s = self.init_state(inputs)?;
        let n = self.rows(inputs)?;
        self.run(inputs, &s, 0, n)
    }
}
