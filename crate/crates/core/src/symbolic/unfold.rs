//! Symbolic execution of equation systems with concrete loop bounds.

use std::collections::{BTreeMap, HashMap};

use super::sym::Sym;
use super::SymError;
use crate::expr::{Expr, Name};
use crate::frontend::{Equation, EquationSystem, Type};
use crate::synthesis::{base_name, JoinDef, Side};
use crate::value::Value;

pub const NODE_BUDGET: usize = 50_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymVal {
    Scalar(Sym),
    Seq(Vec<SymVal>),
}

impl SymVal {
    pub fn scalar(&self) -> Option<&Sym> {
        match self {
            SymVal::Scalar(s) => Some(s),
            SymVal::Seq(_) => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            SymVal::Scalar(s) => s.size(),
            SymVal::Seq(xs) => xs.iter().map(SymVal::size).sum(),
        }
    }

    pub fn from_value(v: &Value) -> SymVal {
        match v {
            Value::Seq(xs) => SymVal::Seq(xs.iter().map(SymVal::from_value).collect()),
            v => SymVal::Scalar(Sym::from_value(v).expect("scalar")),
        }
    }

    /// Scalar cells in order, with their index when part of a sequence.
    pub fn cells(&self) -> Vec<(Option<usize>, &Sym)> {
        match self {
            SymVal::Scalar(s) => vec![(None, s)],
            SymVal::Seq(xs) => xs.iter().enumerate().filter_map(|(i, x)| x.scalar().map(|s| (Some(i), s))).collect(),
        }
    }

    fn zip_ite(c: &Sym, t: SymVal, e: SymVal) -> Result<SymVal, SymError> {
        Ok(match (t, e) {
            (SymVal::Scalar(t), SymVal::Scalar(e)) => SymVal::Scalar(Sym::ite(c.clone(), t, e)),
            (SymVal::Seq(t), SymVal::Seq(e)) if t.len() == e.len() => {
                SymVal::Seq(t.into_iter().zip(e).map(|(a, b)| SymVal::zip_ite(c, a, b)).collect::<Result<_, _>>()?)
            }
            _ => return Err(SymError::Shape("conditional branches of different shapes".into())),
        })
    }
}

/// Answers reads of names that are not bound in the environment.
pub trait Reader {
    fn read(&self, name: &Name, idx: &[Sym]) -> Option<SymVal>;
}

impl<F: Fn(&Name, &[Sym]) -> Option<SymVal>> Reader for F {
    fn read(&self, name: &Name, idx: &[Sym]) -> Option<SymVal> {
        self(name, idx)
    }
}

pub struct Exec<'a> {
    pub vars: HashMap<Name, SymVal>,
    reader: &'a dyn Reader,
}

fn concrete(s: &Sym, what: &Expr) -> Result<usize, SymError> {
    s.as_usize().ok_or_else(|| SymError::NotConcrete(what.to_string()))
}

impl<'a> Exec<'a> {
    pub fn new(vars: HashMap<Name, SymVal>, reader: &'a dyn Reader) -> Exec<'a> {
        Exec { vars, reader }
    }

    fn scalar(&self, e: &Expr) -> Result<Sym, SymError> {
        match self.eval(e)? {
            SymVal::Scalar(s) => Ok(s),
            SymVal::Seq(_) => Err(SymError::Shape(format!("`{e}` is a sequence"))),
        }
    }

    pub fn eval(&self, e: &Expr) -> Result<SymVal, SymError> {
        use SymVal::Scalar;
        Ok(match e {
            Expr::Int(i) => Scalar(Sym::Int(i.clone())),
            Expr::Bool(b) => Scalar(Sym::Bool(*b)),
            Expr::PosInf => Scalar(Sym::PosInf),
            Expr::NegInf => Scalar(Sym::NegInf),
            Expr::Var(_) | Expr::Index(..) => self.read(e)?,
            Expr::Len(a) => match self.eval(a)? {
                SymVal::Seq(xs) => Scalar(Sym::int(xs.len() as i64)),
                SymVal::Scalar(_) => return Err(SymError::Shape(format!("len of scalar `{a}`"))),
            },
            Expr::Fill(v, n) => {
                let v = self.eval(v)?;
                let n = concrete(&self.scalar(n)?, n)?;
                SymVal::Seq(vec![v; n])
            }
            Expr::Unary(op, a) => Scalar(Sym::un(*op, self.scalar(a)?)),
            Expr::Binary(op, a, b) => Scalar(Sym::bin(*op, self.scalar(a)?, self.scalar(b)?)),
            Expr::Ite(c, t, f) => match self.scalar(c)? {
                Sym::Bool(true) => self.eval(t)?,
                Sym::Bool(false) => self.eval(f)?,
                c => SymVal::zip_ite(&c, self.eval(t)?, self.eval(f)?)?,
            },
            Expr::Hole(h) => return Err(SymError::Hole(*h)),
        })
    }

    fn read(&self, e: &Expr) -> Result<SymVal, SymError> {
        let mut idx = Vec::new();
        let mut cur = e;
        while let Expr::Index(b, i) = cur {
            idx.push(self.scalar(i)?);
            cur = b;
        }
        idx.reverse();
        let Expr::Var(root) = cur else {
            return Err(SymError::Shape(format!("subscript of `{cur}`")));
        };
        if let Some(v) = self.vars.get(root) {
            let mut v = v;
            for (i, s) in idx.iter().enumerate() {
                let k = s.as_usize().ok_or_else(|| SymError::NotConcrete(format!("{root}[{s}]")))?;
                v = match v {
                    SymVal::Seq(xs) => {
                        xs.get(k).ok_or_else(|| SymError::Shape(format!("{root}: subscript {k} out of bounds")))?
                    }
                    SymVal::Scalar(_) => return Err(SymError::Shape(format!("{root} has no dimension {i}"))),
                };
            }
            return Ok(v.clone());
        }
        self.reader.read(root, &idx).ok_or_else(|| SymError::Unbound(e.to_string()))
    }

    pub fn exec(&mut self, sys: &EquationSystem) -> Result<(), SymError> {
        for eq in &sys.eqs {
            match eq {
                Equation::Simple { lhs, rhs } => {
                    let v = self.eval(rhs)?;
                    if v.size() > NODE_BUDGET {
                        return Err(SymError::Explosion(v.size()));
                    }
                    if lhs.indices.is_empty() {
                        self.vars.insert(lhs.name.clone(), v);
                        continue;
                    }
                    let idx: Vec<usize> =
                        lhs.indices.iter().map(|i| concrete(&self.scalar(i)?, i)).collect::<Result<_, _>>()?;
                    let slot = self.vars.get_mut(&lhs.name).ok_or_else(|| SymError::Unbound(lhs.name.to_string()))?;
                    let mut cell = slot;
                    for k in idx {
                        cell = match cell {
                            SymVal::Seq(xs) if k < xs.len() => &mut xs[k],
                            _ => return Err(SymError::Shape(format!("bad store to {lhs}"))),
                        };
                    }
                    *cell = v;
                }
                Equation::Loop { index, lo, hi, body, .. } => {
                    let lo = concrete(&self.scalar(lo)?, lo)?;
                    let hi = concrete(&self.scalar(hi)?, hi)?;
                    for j in lo..hi {
                        self.vars.insert(index.clone(), SymVal::Scalar(Sym::int(j as i64)));
                        self.exec(body)?;
                    }
                    self.vars.remove(index);
                }
            }
        }
        Ok(())
    }
}

/// Symbolic start state: every variable (every cell of a sequence) is a symbol.
pub fn symbolic_state(vars: &[(Name, Type)], m: usize) -> BTreeMap<Name, SymVal> {
    vars.iter()
        .map(|(n, t)| {
            let v = if t.is_seq() {
                SymVal::Seq((0..m).map(|j| SymVal::Scalar(Sym::State(n.clone(), Some(j)))).collect())
            } else {
                SymVal::Scalar(Sym::State(n.clone(), None))
            };
            (n.clone(), v)
        })
        .collect()
}

/// Fold the step function of `def` over symbolic elements `a_1..a_k`: the
/// left side of each step is the current state, the right side the fields of
/// the next element. Returns the states after 0, 1, .., k steps.
pub fn unfold_join(
    def: &JoinDef,
    start: BTreeMap<Name, SymVal>,
    k: usize,
    m: usize,
) -> Result<Vec<BTreeMap<Name, SymVal>>, SymError> {
    let outs: Vec<(Name, Type)> = def.out.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
    let mut states = vec![start];
    for t in 1..=k {
        let cur = states.last().unwrap();
        let mut vars = HashMap::new();
        for (x, _) in &outs {
            let v = cur.get(x).cloned().ok_or_else(|| SymError::Unbound(x.to_string()))?;
            vars.insert(crate::synthesis::left_name(x), v);
        }
        let types: HashMap<Name, Type> = def.right.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
        let reader = |n: &Name, idx: &[Sym]| -> Option<SymVal> {
            match base_name(n) {
                Some((b, Side::Right)) => {
                    let (b, ty) = types.get_key_value(b)?;
                    match (ty.is_seq(), idx) {
                        (true, [j]) => Some(SymVal::Scalar(Sym::Input(t, b.clone(), Some(j.as_usize()?)))),
                        (true, []) => Some(SymVal::Seq(
                            (0..m).map(|j| SymVal::Scalar(Sym::Input(t, b.clone(), Some(j)))).collect(),
                        )),
                        (false, []) => Some(SymVal::Scalar(Sym::Input(t, b.clone(), None))),
                        _ => None,
                    }
                }
                _ if idx.is_empty() && def.inputs.iter().any(|p| p.name == *n) => {
                    Some(SymVal::Scalar(Sym::Param(n.clone())))
                }
                _ => None,
            }
        };
        let mut ex = Exec::new(vars, &reader);
        ex.exec(&def.body)?;
        let mut next = BTreeMap::new();
        for (x, _) in &outs {
            let v = ex.vars.remove(x).ok_or_else(|| SymError::Unbound(x.to_string()))?;
            next.insert(x.clone(), v);
        }
        states.push(next);
    }
    Ok(states)
}

/// Run iterations `0..k` of a loop body symbolically. Names not bound in the
/// state go to `reader`, which gets the 1-based iteration number. Returns the
/// states after 0, 1, .., k iterations.
pub fn unfold_loop(
    body: &EquationSystem,
    index: &Name,
    start: BTreeMap<Name, SymVal>,
    k: usize,
    reader: &dyn Fn(usize, &Name, &[Sym]) -> Option<SymVal>,
) -> Result<Vec<BTreeMap<Name, SymVal>>, SymError> {
    let names: Vec<Name> = start.keys().cloned().collect();
    let mut states = vec![start];
    for t in 1..=k {
        let mut vars: HashMap<Name, SymVal> = states.last().unwrap().clone().into_iter().collect();
        vars.insert(index.clone(), SymVal::Scalar(Sym::int(t as i64 - 1)));
        let r = |n: &Name, idx: &[Sym]| reader(t, n, idx);
        let mut ex = Exec::new(vars, &r);
        ex.exec(body)?;
        let next = names.iter().map(|n| (n.clone(), ex.vars.remove(n).expect("state survives the body"))).collect();
        states.push(next);
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;
    use crate::synthesis::Param;

    #[test]
    fn sum_unfolds_to_a_flat_sum() {
        let p = vec![Param::new(&name("s"), &Type::Int)];
        let def = JoinDef::parse(p.clone(), p.clone(), p, vec![], "s := s_l + s_r;").unwrap();
        let st = symbolic_state(&[(name("s"), Type::Int)], 0);
        let out = unfold_join(&def, st, 2, 0).unwrap();
        assert_eq!(out[2]["s"].scalar().unwrap().to_string(), "s + a1.s + a2.s");
    }
}
