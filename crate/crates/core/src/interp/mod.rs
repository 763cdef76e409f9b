//! Reference interpreter: the oracle behind every bounded check.

pub mod compiled;
pub mod sample;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde_json::Value as Json;
use thiserror::Error;

use crate::expr::{name, BinOp, Expr, Name, UnOp};
use crate::frontend::{Equation, EquationSystem, FuncForm, LoopNest, Program, Role, ShapeSpec, Stmt};
use crate::value::{Value, ValueError};

pub use compiled::CompiledNest;
pub use sample::{Sampler, SamplerConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("variable `{0}` is unbound")]
    Unbound(String),
    #[error("missing input `{0}`")]
    MissingInput(String),
    #[error("sketch hole ??{0} evaluated without a completion")]
    OpenHole(usize),
    #[error("bad input document: {0}")]
    Input(String),
}

/// Input bindings: variable name to value.
pub type Bindings = BTreeMap<Name, Value>;

/// Valuation of state variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct State(pub BTreeMap<Name, Value>);

impl State {
    pub fn get(&self, n: &str) -> Option<&Value> {
        self.0.get(n)
    }

    pub fn insert(&mut self, n: Name, v: Value) {
        self.0.insert(n, v);
    }

    /// Restriction to the named variables.
    pub fn project(&self, names: &[Name]) -> State {
        State(names.iter().filter_map(|n| self.0.get(n).map(|v| (n.clone(), v.clone()))).collect())
    }

    pub fn to_json(&self) -> Json {
        Json::Object(self.0.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        write!(f, "}}")
    }
}

pub fn apply_unop(op: UnOp, v: &Value) -> Result<Value, EvalError> {
    Ok(match op {
        UnOp::Neg => v.neg()?,
        UnOp::Not => Value::Bool(!v.as_bool()?),
    })
}

/// Strict binary operators (the logical ones short-circuit in the evaluators).
pub fn apply_binop(op: BinOp, a: &Value, b: &Value) -> Result<Value, EvalError> {
    Ok(match op {
        BinOp::Add => a.add(b)?,
        BinOp::Sub => a.sub(b)?,
        BinOp::Mul => a.mul(b)?,
        BinOp::Div => a.div(b)?,
        BinOp::Min => a.min(b)?,
        BinOp::Max => a.max(b)?,
        BinOp::And => Value::Bool(a.as_bool()? && b.as_bool()?),
        BinOp::Or => Value::Bool(a.as_bool()? || b.as_bool()?),
        BinOp::Lt => Value::Bool(a.numeric_cmp(b)? == Ordering::Less),
        BinOp::Le => Value::Bool(a.numeric_cmp(b)? != Ordering::Greater),
        BinOp::Gt => Value::Bool(a.numeric_cmp(b)? == Ordering::Greater),
        BinOp::Ge => Value::Bool(a.numeric_cmp(b)? != Ordering::Less),
        BinOp::Eq => Value::Bool(a.equals(b)?),
        BinOp::Ne => Value::Bool(!a.equals(b)?),
    })
}

pub(crate) fn to_len(v: &Value) -> Result<usize, EvalError> {
    let i = v.as_int()?;
    match i.to_i64() {
        Some(k) if k >= 0 => Ok(k as usize),
        _ => Err(ValueError::OutOfBounds { index: i.to_string(), len: 0 }.into()),
    }
}

/// Tree-walking evaluation over a name-keyed environment.
pub fn eval_expr(e: &Expr, env: &HashMap<Name, Value>) -> Result<Value, EvalError> {
    Ok(match e {
        Expr::Int(i) => Value::Int(i.clone()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::PosInf => Value::PlusInf,
        Expr::NegInf => Value::MinusInf,
        Expr::Var(n) => env.get(n).cloned().ok_or_else(|| EvalError::Unbound(n.to_string()))?,
        Expr::Index(b, i) => {
            let b = eval_expr(b, env)?;
            let i = eval_expr(i, env)?;
            b.index(&i)?.clone()
        }
        Expr::Len(s) => Value::int(eval_expr(s, env)?.as_seq()?.len() as i64),
        Expr::Fill(v, n) => {
            let v = eval_expr(v, env)?;
            Value::fill(v, to_len(&eval_expr(n, env)?)?)
        }
        Expr::Unary(op, a) => apply_unop(*op, &eval_expr(a, env)?)?,
        Expr::Binary(BinOp::And, a, b) => Value::Bool(eval_expr(a, env)?.as_bool()? && eval_expr(b, env)?.as_bool()?),
        Expr::Binary(BinOp::Or, a, b) => Value::Bool(eval_expr(a, env)?.as_bool()? || eval_expr(b, env)?.as_bool()?),
        Expr::Binary(op, a, b) => apply_binop(*op, &eval_expr(a, env)?, &eval_expr(b, env)?)?,
        Expr::Ite(c, t, f) => {
            if eval_expr(c, env)?.as_bool()? {
                eval_expr(t, env)?
            } else {
                eval_expr(f, env)?
            }
        }
        Expr::Hole(h) => return Err(EvalError::OpenHole(*h)),
    })
}

/// Store `v` at `target[idx...]`, copying shared sequences on write.
pub(crate) fn store(target: &mut Value, idx: &[usize], v: Value) -> Result<(), EvalError> {
    match idx.split_first() {
        None => {
            *target = v;
            Ok(())
        }
        Some((&k, rest)) => {
            let Value::Seq(s) = target else {
                return Err(ValueError::Type { expected: "seq", found: target.kind_name().into() }.into());
            };
            let len = s.len();
            let cell =
                std::sync::Arc::make_mut(s).get_mut(k).ok_or(ValueError::OutOfBounds { index: k.to_string(), len })?;
            store(cell, rest, v)
        }
    }
}

fn index_value(v: &Value) -> Result<usize, EvalError> {
    let i = v.as_int()?;
    match i.to_i64() {
        Some(k) if k >= 0 => Ok(k as usize),
        _ => Err(ValueError::OutOfBounds { index: i.to_string(), len: 0 }.into()),
    }
}

fn exec_stmts(stmts: &[Stmt], env: &mut HashMap<Name, Value>) -> Result<(), EvalError> {
    for s in stmts {
        match s {
            Stmt::Assign { target, rhs, .. } => {
                let v = eval_expr(rhs, env)?;
                let idx =
                    target.indices.iter().map(|i| index_value(&eval_expr(i, env)?)).collect::<Result<Vec<_>, _>>()?;
                let slot = env.get_mut(&target.name).ok_or_else(|| EvalError::Unbound(target.name.to_string()))?;
                store(slot, &idx, v)?;
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                if eval_expr(cond, env)?.as_bool()? {
                    exec_stmts(then_branch, env)?;
                } else {
                    exec_stmts(else_branch, env)?;
                }
            }
            Stmt::For { index, lo, hi, body, .. } => {
                let lo = eval_expr(lo, env)?.as_int()?.clone();
                let hi = eval_expr(hi, env)?.as_int()?.clone();
                let (lo, hi) = (lo.to_i64().unwrap_or(0), hi.to_i64().unwrap_or(0));
                for k in lo..hi {
                    env.insert(index.clone(), Value::int(k));
                    exec_stmts(body, env)?;
                }
                env.remove(index);
            }
        }
    }
    Ok(())
}

fn input_env(p_inputs: impl Iterator<Item = Name>, inputs: &Bindings) -> Result<HashMap<Name, Value>, EvalError> {
    let mut env = HashMap::new();
    for n in p_inputs {
        let v = inputs.get(&n).ok_or_else(|| EvalError::MissingInput(n.to_string()))?;
        env.insert(n, v.clone());
    }
    Ok(env)
}

/// Run the source program sequentially; the final state.
pub fn eval_program(p: &Program, inputs: &Bindings) -> Result<State, EvalError> {
    let mut env = input_env(p.input_vars().iter().map(|d| d.name.clone()), inputs)?;
    let mut names = Vec::new();
    for d in p.decls.iter().filter(|d| d.role == Role::State) {
        let v = eval_expr(d.init.as_ref().expect("state init"), &env)?;
        env.insert(d.name.clone(), v);
        names.push(d.name.clone());
    }
    exec_stmts(&p.body, &mut env)?;
    Ok(State(names.into_iter().map(|n| (n.clone(), env.remove(&n).unwrap())).collect()))
}

/// Sequential execution of an equation system in place.
pub fn eval_system(sys: &EquationSystem, env: &mut HashMap<Name, Value>) -> Result<(), EvalError> {
    for eq in &sys.eqs {
        match eq {
            Equation::Simple { lhs, rhs } => {
                let v = eval_expr(rhs, env)?;
                let idx =
                    lhs.indices.iter().map(|i| index_value(&eval_expr(i, env)?)).collect::<Result<Vec<_>, _>>()?;
                let slot = env.entry(lhs.name.clone()).or_insert(Value::Bool(false));
                store(slot, &idx, v)?;
            }
            Equation::Loop { index, lo, hi, body, .. } => {
                let lo = index_value(&eval_expr(lo, env)?)?;
                let hi = index_value(&eval_expr(hi, env)?)?;
                for k in lo..hi {
                    env.insert(index.clone(), Value::int(k as i64));
                    eval_system(body, env)?;
                }
                env.remove(index);
            }
        }
    }
    Ok(())
}

/// Evaluate a functional form from its initial state.
pub fn eval_funcform(ff: &FuncForm, inputs: &Bindings) -> Result<State, EvalError> {
    let mut env: HashMap<Name, Value> = inputs.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    for (n, e) in &ff.init {
        let v = eval_expr(e, &env)?;
        env.insert(n.clone(), v);
    }
    let hi = index_value(&eval_expr(&ff.bound, &env)?)?;
    for k in 0..hi {
        env.insert(ff.index.clone(), Value::int(k as i64));
        eval_system(&ff.step, &mut env)?;
    }
    Ok(State(ff.state.iter().map(|(n, _)| (n.clone(), env[n].clone())).collect()))
}

/// Number of rows (outer iterations) of an input.
pub fn outer_len(shape: &ShapeSpec, inputs: &Bindings) -> usize {
    outer_len_of(inputs, &shape.dims[0])
}

pub(crate) fn outer_len_of(inputs: &Bindings, bound: &str) -> usize {
    match inputs.get(bound).map(|v| v.as_int()) {
        Some(Ok(i)) => i.to_i64().unwrap_or(0).max(0) as usize,
        _ => 0,
    }
}

/// The sub-input made of rows `lo..hi`; broadcast inputs are kept whole.
pub fn slice_rows(shape: &ShapeSpec, inputs: &Bindings, lo: usize, hi: usize) -> Bindings {
    let mut out = inputs.clone();
    out.insert(shape.dims[0].clone(), Value::int((hi - lo) as i64));
    for s in shape.split_inputs() {
        if let Some(Value::Seq(rows)) = inputs.get(&s.name) {
            out.insert(s.name.clone(), Value::seq(rows[lo..hi].to_vec()));
        }
    }
    out
}

/// Concatenation of two inputs along the outer dimension.
pub fn concat_rows(shape: &ShapeSpec, x: &Bindings, y: &Bindings) -> Bindings {
    let mut out = x.clone();
    let n = outer_len(shape, x) + outer_len(shape, y);
    out.insert(shape.dims[0].clone(), Value::int(n as i64));
    for s in shape.split_inputs() {
        let mut rows = x.get(&s.name).and_then(|v| v.as_seq().ok()).map(|r| r.to_vec()).unwrap_or_default();
        rows.extend(y.get(&s.name).and_then(|v| v.as_seq().ok()).map(|r| r.to_vec()).unwrap_or_default());
        out.insert(s.name.clone(), Value::seq(rows));
    }
    out
}

/// Evaluate each chunk of a split from the initial state on its own.
pub fn eval_concat_split(
    ff: &FuncForm,
    shape: &ShapeSpec,
    inputs: &Bindings,
    splits: &[usize],
) -> Result<Vec<State>, EvalError> {
    let n = outer_len(shape, inputs);
    let mut points = vec![0];
    points.extend(splits.iter().copied().filter(|&s| s <= n));
    points.push(n);
    points.sort_unstable();
    points.windows(2).map(|w| eval_funcform(ff, &slice_rows(shape, inputs, w[0], w[1]))).collect()
}

/// Run a nest sequentially (equation form); the final state.
pub fn eval_nest(nest: &LoopNest, inputs: &Bindings) -> Result<State, EvalError> {
    eval_funcform(&nest.funcform(), inputs)
}

/// Read input bindings from a JSON object mapping names to nested arrays or scalars.
pub fn bindings_from_json(j: &Json) -> Result<Bindings, EvalError> {
    let Json::Object(m) = j else { return Err(EvalError::Input("expected a JSON object".into())) };
    m.iter().map(|(k, v)| Ok((name(k), Value::from_json(v)?))).collect()
}

pub fn bindings_to_json(b: &Bindings) -> Json {
    Json::Object(b.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    const SUM: &str = "input n: int; input m: int; input A: seq<seq<int>>; state s: int = 0;
        for i in 0..n { for j in 0..m { s := s + A[i][j]; } }";

    fn grid(rows: &[&[i64]]) -> Bindings {
        let mut b = Bindings::new();
        b.insert(name("n"), Value::int(rows.len() as i64));
        b.insert(name("m"), Value::int(rows.first().map_or(0, |r| r.len()) as i64));
        b.insert(
            name("A"),
            Value::seq(rows.iter().map(|r| Value::seq(r.iter().map(|&x| Value::int(x)).collect())).collect()),
        );
        b
    }

    #[test]
    fn sum_of_grid() {
        let p = parse(SUM).unwrap();
        let st = eval_program(&p, &grid(&[&[1, 2], &[3, 4]])).unwrap();
        assert_eq!(st.get("s"), Some(&Value::int(10)));
    }

    #[test]
    fn split_chunks_start_from_init() {
        let nest = LoopNest::from_source(SUM).unwrap();
        let ff = nest.funcform();
        let b = grid(&[&[1], &[2], &[3], &[4]]);
        let parts = eval_concat_split(&ff, &nest.shape, &b, &[2]).unwrap();
        assert_eq!(parts[0].get("s"), Some(&Value::int(3)));
        assert_eq!(parts[1].get("s"), Some(&Value::int(7)));
        let parts = eval_concat_split(&ff, &nest.shape, &b, &[0]).unwrap();
        assert_eq!(parts[0].get("s"), Some(&Value::int(0)));
    }

    #[test]
    fn out_of_bounds_is_typed() {
        let p = parse("input n: int; input a: seq<int>; state s: int = 0; for i in 0..n { s := a[i]; }").unwrap();
        let mut b = Bindings::new();
        b.insert(name("n"), Value::int(2));
        b.insert(name("a"), Value::seq(vec![Value::int(1)]));
        assert!(matches!(eval_program(&p, &b), Err(EvalError::Value(ValueError::OutOfBounds { .. }))));
    }
}
