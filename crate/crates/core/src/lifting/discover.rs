//! Input-only parts of normal forms and the recursions that produce them.

use std::collections::BTreeMap;

use super::LiftError;
use crate::expr::{BinOp, Name};
use crate::symbolic::{equivalent, NormConfig, NormalFormReport, NormalKind, Sym, SymVal};

/// One input-only part `u_k` of a leaf, with the cell it belongs to when all
/// of its symbols come from the same cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub cell: Option<usize>,
    pub expr: Sym,
}

fn cell_of(e: &Sym) -> Option<usize> {
    let mut cells = Vec::new();
    e.walk_leaves(0, &mut |l, _| {
        if let Sym::Input(_, _, c) = l {
            cells.push(*c);
        }
    });
    match cells.split_first() {
        Some((&first, rest)) if rest.iter().all(|c| *c == first) => first,
        _ => None,
    }
}

/// Input-only parts of the leaves. Leaves without a state part are combined
/// by the spine operator into one part, which is the variable's own value on
/// the right chunk when it is a fold.
pub fn extract_required_info(report: &NormalFormReport) -> Result<Vec<Family>, LiftError> {
    if report.kind == NormalKind::None {
        return Err(LiftError::NotNormal { var: String::new(), reason: format!("cost {}", report.cost) });
    }
    let mut out: Vec<Family> = Vec::new();
    let mut push = |e: Sym| {
        let f = Family { cell: cell_of(&e), expr: e };
        if !out.contains(&f) {
            out.push(f);
        }
    };
    let pure: Vec<Sym> = report.leaves.iter().filter(|l| l.state.is_none()).map(|l| l.expr.clone()).collect();
    match report.kind {
        NormalKind::Recursive(op) if pure.len() > 1 => push(Sym::nary(op, pure)),
        _ => pure.into_iter().for_each(&mut push),
    }
    for leaf in report.leaves.iter().filter(|l| l.state.is_some()) {
        for p in &leaf.inputs {
            push(p.clone());
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Atom {
    State(Name),
    Field(Name),
}

/// `u_k = op(u_{k-1}, atom_k)` with `u_0` the identity of `op`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub op: BinOp,
    pub atom: Atom,
    pub cell: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Discovery {
    /// Already the value of an existing variable.
    Covered(Name),
    /// Needs an accumulator; carries `u_1, .., u_k`.
    Aux(Template, Vec<Sym>),
}

struct Ctx<'a> {
    fams: &'a [Vec<Family>],
    states: &'a [BTreeMap<Name, SymVal>],
    atoms: Vec<Atom>,
    cfg: &'a NormConfig,
}

fn value_of(states: &[BTreeMap<Name, SymVal>], k: usize, x: &Name, cell: Option<usize>) -> Option<Sym> {
    match (states.get(k)?.get(x)?, cell) {
        (SymVal::Scalar(s), None) => Some(s.clone()),
        (SymVal::Seq(xs), Some(c)) => xs.get(c)?.scalar().cloned(),
        _ => None,
    }
}

impl Ctx<'_> {
    fn atom_at(&self, a: &Atom, k: usize, cell: Option<usize>) -> Option<Sym> {
        match a {
            Atom::State(x) => value_of(self.states, k, x, cell),
            Atom::Field(f) => Some(Sym::Input(k, f.clone(), cell)),
        }
    }

    fn matches(&self, e: &Sym, a: &Atom, k: usize, cell: Option<usize>) -> bool {
        self.atom_at(a, k, cell).is_some_and(|v| equivalent(e, &v, self.cfg))
    }

    /// Ways to write `e` as `op(q, w)` with `q` a part from the previous step.
    fn split(&self, e: &Sym, k: usize, cell: Option<usize>) -> Vec<(BinOp, Sym, Sym)> {
        let Sym::Nary(op, cs) = e else { return vec![] };
        let mut out = Vec::new();
        for q in self.fams[k - 2].iter().filter(|q| q.cell == cell) {
            let qs: Vec<&Sym> = match &q.expr {
                Sym::Nary(o, qs) if o == op => qs.iter().collect(),
                x => vec![x],
            };
            let mut rest = cs.clone();
            let sub = qs.iter().all(|x| match rest.iter().position(|y| y == *x) {
                Some(i) => {
                    rest.remove(i);
                    true
                }
                None => false,
            });
            if sub && !rest.is_empty() {
                out.push((*op, q.expr.clone(), Sym::nary(*op, rest)));
            }
        }
        out
    }

    fn chain(
        &self,
        e: &Sym,
        k: usize,
        cell: Option<usize>,
        want: Option<(BinOp, &Atom)>,
    ) -> Option<(Template, Vec<Sym>)> {
        if k == 1 {
            let (op, a) = want?;
            return self.matches(e, a, 1, cell).then(|| (Template { op, atom: a.clone(), cell }, vec![e.clone()]));
        }
        for (op, q, w) in self.split(e, k, cell) {
            if want.is_some_and(|(o, _)| o != op) {
                continue;
            }
            let atoms: Vec<&Atom> = match want {
                Some((_, a)) => vec![a],
                None => self.atoms.iter().collect(),
            };
            for a in atoms {
                if !self.matches(&w, a, k, cell) {
                    continue;
                }
                if let Some((t, mut us)) = self.chain(&q, k - 1, cell, Some((op, a))) {
                    us.push(e.clone());
                    return Some((t, us));
                }
            }
        }
        None
    }
}

/// For every part of the last unfolding, either an existing variable that
/// already computes it or a recursion `u_k = u_{k-1} ⊞ w_k` confirmed down to
/// `k = 1`. `fams[k-1]` are the parts after `k` elements and `states[k]` the
/// concrete-start states; `vars` and `fields` are tried in order.
pub fn discover_recursion(
    fams: &[Vec<Family>],
    states: &[BTreeMap<Name, SymVal>],
    vars: &[Name],
    fields: &[Name],
    cfg: &NormConfig,
) -> Result<Vec<(Family, Discovery)>, LiftError> {
    let top = fams.len();
    let mut atoms: Vec<Atom> = vars.iter().cloned().map(Atom::State).collect();
    atoms.extend(fields.iter().cloned().map(Atom::Field));
    let cx = Ctx { fams, states, atoms, cfg };
    let mut out = Vec::new();
    for f in fams.last().into_iter().flatten() {
        if let Some(x) = vars.iter().find(|x| cx.matches(&f.expr, &Atom::State((*x).clone()), top, f.cell)) {
            out.push((f.clone(), Discovery::Covered(x.clone())));
            continue;
        }
        match cx.chain(&f.expr, top, f.cell, None) {
            Some((t, us)) => out.push((f.clone(), Discovery::Aux(t, us))),
            None => return Err(LiftError::NoRecursion(f.expr.to_string())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::name;

    fn inp(k: usize) -> Sym {
        Sym::Input(k, name("b"), None)
    }
    fn sum(ks: std::ops::RangeInclusive<usize>) -> Sym {
        Sym::nary(BinOp::Add, ks.map(inp).collect())
    }

    #[test]
    fn running_sum_is_a_fold_over_the_field() {
        let fams: Vec<Vec<Family>> = (1..=3).map(|k| vec![Family { cell: None, expr: sum(1..=k) }]).collect();
        let states: Vec<BTreeMap<Name, SymVal>> = (0..=3).map(|_| BTreeMap::new()).collect();
        let d = discover_recursion(&fams, &states, &[], &[name("b")], &NormConfig::default()).unwrap();
        let Discovery::Aux(t, us) = &d[0].1 else { panic!("{d:?}") };
        assert_eq!(t.op, BinOp::Add);
        assert_eq!(t.atom, Atom::Field(name("b")));
        assert_eq!(us.len(), 3);
    }

    #[test]
    fn part_equal_to_a_state_is_covered() {
        let fams = vec![vec![], vec![], vec![Family { cell: None, expr: sum(1..=3) }]];
        let mut s3 = BTreeMap::new();
        s3.insert(name("t"), SymVal::Scalar(sum(1..=3)));
        let states = vec![BTreeMap::new(), BTreeMap::new(), BTreeMap::new(), s3];
        let d = discover_recursion(&fams, &states, &[name("t")], &[], &NormConfig::default()).unwrap();
        assert_eq!(d[0].1, Discovery::Covered(name("t")));
    }
}
