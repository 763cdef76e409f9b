//! Laws a plan must satisfy, checked on concrete inputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::simulate::{trees, Runtime};
use super::{PlanError, PlanKind};
use crate::interp::{slice_rows, Bindings, EvalError, State};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LawReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl LawReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, pass: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !pass && self.failures.len() < 10 {
            self.failures.push(what());
        }
    }
}

fn ev<T>(r: Result<T, EvalError>) -> Result<T, PlanError> {
    r.map_err(|e| PlanError::Simulate { path: "check".into(), reason: e.to_string() })
}

fn h_of(rt: &Runtime, x: &Bindings, lo: usize, hi: usize) -> Result<State, PlanError> {
    ev(rt.h(&slice_rows(&rt.nest.shape, x, lo, hi)))
}

/// `h(x • y) = h(x) ⊙ h(y)` at every split point of every input.
pub fn homomorphism_law(rt: &Runtime, inputs: &[Bindings]) -> Result<LawReport, PlanError> {
    let mut rep = LawReport::default();
    for x in inputs {
        let n = ev(rt.rows(x))?;
        let whole = ev(rt.h(x))?;
        for s in 0..=n {
            let got = ev(rt.join(x, &h_of(rt, x, 0, s)?, &h_of(rt, x, s, n)?));
            rep.record(got.as_ref().is_ok_and(|g| *g == whole), || {
                format!("split {s} of {n} rows: {got:?} != {whole}")
            });
        }
    }
    Ok(rep)
}

/// `(a ⊙ b) ⊙ c = a ⊙ (b ⊙ c)` on `per_input` random triples of consecutive
/// chunks per input.
pub fn associativity(rt: &Runtime, inputs: &[Bindings], per_input: usize, seed: u64) -> Result<LawReport, PlanError> {
    let mut rep = LawReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in inputs {
        let n = ev(rt.rows(x))?;
        for _ in 0..per_input {
            let mut cut = [rng.gen_range(0..=n), rng.gen_range(0..=n)];
            cut.sort();
            let (a, b, c) = (h_of(rt, x, 0, cut[0])?, h_of(rt, x, cut[0], cut[1])?, h_of(rt, x, cut[1], n)?);
            let l = ev(rt.join(x, &a, &b)).and_then(|ab| ev(rt.join(x, &ab, &c)));
            let r = ev(rt.join(x, &b, &c)).and_then(|bc| ev(rt.join(x, &a, &bc)));
            let pass = matches!((&l, &r), (Ok(l), Ok(r)) if l == r);
            rep.record(pass, || format!("cuts {cut:?} of {n}: {l:?} vs {r:?}"));
        }
    }
    Ok(rep)
}

/// `h([]) ⊙ h(x) = h(x) = h(x) ⊙ h([])`.
pub fn identity_law(rt: &Runtime, inputs: &[Bindings]) -> Result<LawReport, PlanError> {
    let mut rep = LawReport::default();
    for x in inputs {
        let e = ev(rt.identity(x))?;
        let hx = ev(rt.h(x))?;
        let l = ev(rt.join(x, &e, &hx));
        let r = ev(rt.join(x, &hx, &e));
        rep.record(l.as_ref().is_ok_and(|v| *v == hx), || format!("e ⊙ {hx} = {l:?}"));
        rep.record(r.as_ref().is_ok_and(|v| *v == hx), || format!("{hx} ⊙ e = {r:?}"));
    }
    Ok(rep)
}

/// Simulation over `per_input` trees per input against `oracle`.
pub fn end_to_end(
    rt: &Runtime,
    inputs: &[Bindings],
    per_input: usize,
    seed: u64,
    oracle: &(dyn Fn(&Bindings) -> Result<State, EvalError> + Sync),
) -> Result<LawReport, PlanError> {
    if rt.kind == PlanKind::Failed {
        return Err(PlanError::NotRunnable(rt.kind));
    }
    let mut rep = LawReport::default();
    for (k, x) in inputs.iter().enumerate() {
        let n = ev(rt.rows(x))?;
        let want = ev(oracle(x))?.project(rt.original());
        for t in trees(n, per_input, seed.wrapping_add(k as u64)) {
            let got = rt.simulate(x, &t);
            let pass = got.as_ref().is_ok_and(|g| *g == want);
            rep.record(pass, || format!("input {k}, tree {t}: {got:?} != {want}"));
        }
    }
    Ok(rep)
}

/// Rows mapped in a shuffled order, then folded in order, give the
/// sequential result.
pub fn map_order_independent(rt: &Runtime, x: &Bindings, seed: u64) -> Result<bool, PlanError> {
    let n = ev(rt.rows(x))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut rows: Vec<Option<State>> = vec![None; n];
    for r in order {
        rows[r] = Some(ev(rt.map_row(x, r))?);
    }
    let rows: Vec<State> = rows.into_iter().map(|r| r.expect("every row mapped")).collect();
    let got = ev(rt.fold_rows(x, &rows))?;
    Ok(got == ev(rt.sequential(x))?)
}
