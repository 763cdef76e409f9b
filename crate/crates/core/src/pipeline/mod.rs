//! From a loop nest to a divide-and-conquer plan: memoryless join (lifting
//! the inner loop if needed), summarization, parallel join (lifting the
//! summarized loop if needed), and a map-only fallback.

mod check;
mod simulate;
mod summarize;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, Name};
use crate::frontend::{parse_expr, Equation, EquationSystem, LoopNest, Role};
use crate::interp::{Bindings, EvalError, Sampler, SamplerConfig};
use crate::lifting::{
    check_aux_values, check_projection, homomorphism_lift, memoryless_lift, trivial_memoryless_lift, AuxDef,
    LiftConfig, LiftKind, LiftResult,
};
use crate::synthesis::{
    base_name, empty_variants, layers, memoryless, parallel, synthesize, JoinDoc, Problem, Report, Solution,
    SynthConfig, SynthError,
};

pub use check::{associativity, end_to_end, homomorphism_law, identity_law, map_order_independent, LawReport};
pub use simulate::{trees, Runtime, SimTree, TreeShape};
pub use summarize::{summarize, Summary};

pub const PLAN_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanKind {
    #[serde(rename = "full-dc")]
    FullDc,
    #[serde(rename = "map-only")]
    MapOnly,
    #[serde(rename = "failed")]
    Failed,
}

impl std::fmt::Display for PlanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanKind::FullDc => "FullDC",
            PlanKind::MapOnly => "MapOnly",
            PlanKind::Failed => "Failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDecl {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub init: String,
    pub aux: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDoc {
    /// Initializers replaced by the empty state before running one row.
    pub empty: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub depth: usize,
    pub step: JoinDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftRecord {
    pub kind: LiftKind,
    pub targets: Vec<String>,
    pub aux: Vec<AuxDef>,
    pub explain: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub random_samples: usize,
    pub instances: usize,
    pub kappa_max: usize,
    pub reps_max: usize,
    pub budget: usize,
    pub lift_unfold: (usize, usize),
    pub retry: bool,
    pub stages: Vec<StageRecord>,
}

/// The plan document. Expressions and joins are kept as source text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPlan {
    pub version: u32,
    pub name: String,
    pub kind: PlanKind,
    /// Loop depth of the input program.
    pub n: usize,
    /// Loop depth of the summarized loop.
    pub k: Option<usize>,
    /// The loop every join below refers to, auxiliaries included.
    pub program: String,
    pub state: Vec<StateDecl>,
    pub original_state: Vec<String>,
    pub map: MapDoc,
    pub memoryless_join: Option<JoinDoc>,
    pub summarized: Option<SummaryDoc>,
    pub parallel_join: Option<JoinDoc>,
    pub aux: Vec<AuxDef>,
    /// `h([])`, per summarized variable.
    pub identity: Vec<(String, String)>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Error)]
pub enum PlanError {
    #[error("malformed plan: {0}")]
    Document(String),
    #[error("plan version {0} is not supported")]
    Version(u32),
    #[error("a {0} plan cannot be run")]
    NotRunnable(PlanKind),
    #[error("evaluation failed at {path}: {reason}")]
    Simulate { path: String, reason: String },
    #[error("tree {0} does not cover {1} rows")]
    Tree(String, usize),
}

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Synth(SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl ParallelPlan {
    pub fn map_empty(&self) -> Result<Vec<(Name, Expr)>, PlanError> {
        let nest = LoopNest::from_source(&self.program).map_err(|e| PlanError::Document(e.to_string()))?;
        let vars: HashSet<String> = nest.decls().iter().map(|d| d.name.to_string()).collect();
        self.map
            .empty
            .iter()
            .map(|(n, e)| {
                let e = parse_expr(e, &vars).map_err(|err| PlanError::Document(err.to_string()))?;
                Ok((crate::expr::name(n), e))
            })
            .collect()
    }

    pub fn aux_count(&self) -> usize {
        self.aux.len()
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.provenance.stages.iter().rev().find(|s| s.stage == name)
    }
}

pub fn emit_plan(plan: &ParallelPlan) -> String {
    let mut s = serde_json::to_string_pretty(plan).expect("plan serializes");
    s.push('\n');
    s
}

pub fn load_plan(text: &str) -> Result<ParallelPlan, PlanError> {
    let plan: ParallelPlan = serde_json::from_str(text).map_err(|e| PlanError::Document(e.to_string()))?;
    if plan.version != PLAN_VERSION {
        return Err(PlanError::Version(plan.version));
    }
    Ok(plan)
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub synth: SynthConfig,
    pub lift: LiftConfig,
    pub sampler: SamplerConfig,
    /// One lift-and-retry per stage.
    pub retry: bool,
    /// Inputs and trees per input used to validate the final plan.
    pub validate_inputs: usize,
    pub validate_trees: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            synth: SynthConfig::default(),
            lift: LiftConfig::default(),
            sampler: SamplerConfig::default(),
            retry: true,
            validate_inputs: 200,
            validate_trees: 8,
        }
    }
}

/// A plan with the lifts attempted on the way.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub plan: ParallelPlan,
    pub lifts: Vec<LiftResult>,
}

impl Outcome {
    pub fn report_text(&self) -> String {
        let p = &self.plan;
        let mut s = format!(
            "{}: {} (n = {}, k = {}, {} aux)\n",
            p.name,
            p.kind,
            p.n,
            p.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            p.aux.len()
        );
        for st in &p.provenance.stages {
            s.push_str(&format!("[{}] {}", st.stage, st.outcome));
            if let Some(m) = &st.message {
                s.push_str(&format!(": {m}"));
            }
            s.push('\n');
            if let Some(r) = &st.report {
                s.push_str(&r.text());
            }
        }
        if p.kind == PlanKind::MapOnly {
            if let Ok(nest) = LoopNest::from_source(&p.program) {
                s.push_str(&format!("inner-loop work fraction ~ {:.3} (rows of width 8)\n", work_fraction(&nest, 8)));
            }
        }
        s
    }
}

/// Share of executed assignments inside inner loops when every dimension has
/// `width` elements.
pub fn work_fraction(nest: &LoopNest, width: u64) -> f64 {
    fn weigh(sys: &EquationSystem, width: u64, scale: u64, inner: &mut u64, outer: &mut u64, depth: usize) {
        for eq in &sys.eqs {
            match eq {
                Equation::Simple { .. } if depth == 0 => *outer += scale,
                Equation::Simple { .. } => *inner += scale,
                Equation::Loop { body, .. } => weigh(body, width, scale * width, inner, outer, depth + 1),
            }
        }
    }
    let (mut inner, mut outer) = (0, 0);
    weigh(&nest.body, width, 1, &mut inner, &mut outer, 0);
    if inner + outer == 0 {
        0.0
    } else {
        inner as f64 / (inner + outer) as f64
    }
}

/// Variables each variable's equations read; with `joined`, `x_l` and `x_r`
/// count as `x`.
fn state_deps(sys: &EquationSystem, vars: &[Name], joined: bool) -> BTreeMap<Name, BTreeSet<Name>> {
    let set: BTreeSet<Name> = vars.iter().cloned().collect();
    vars.iter()
        .map(|v| {
            let reads = sys
                .reads_of(v)
                .into_iter()
                .filter_map(|r| {
                    let b = if joined { base_name(&r).map(|(b, _)| b).unwrap_or(&r) } else { &r };
                    set.get(b).cloned()
                })
                .collect();
            (v.clone(), reads)
        })
        .collect()
}

fn add_aux_edges(deps: &mut BTreeMap<Name, BTreeSet<Name>>, aux: &[AuxDef]) {
    for a in aux {
        let t = crate::expr::name(&a.target);
        if let Some(d) = deps.get_mut(&t) {
            d.insert(crate::expr::name(&a.name));
        }
    }
}

/// Synthesize `⊛` for `nest`; variables lifted for an auxiliary are solved
/// after it.
pub fn memoryless_join(
    nest: &LoopNest,
    inputs: &[Bindings],
    aux: &[AuxDef],
    cfg: &SynthConfig,
) -> Result<(Solution, Problem), SynthError> {
    let problem = Problem::memoryless(nest, inputs)?;
    let names = nest.state_names();
    let mut deps = state_deps(&nest.body, &names, false);
    add_aux_edges(&mut deps, aux);
    let ls = layers(&names, &deps);
    let variants: BTreeMap<Name, Vec<Expr>> = names.iter().map(|v| (v.clone(), empty_variants(nest, v))).collect();
    let sol = synthesize(&|r| memoryless(nest, r), &problem, &ls, &variants, cfg)?;
    Ok((sol, problem))
}

/// Synthesize `⊙` for the summarized loop of `nest`.
pub fn parallel_join(
    nest: &LoopNest,
    summary: &Summary,
    inputs: &[Bindings],
    aux: &[AuxDef],
    cfg: &SynthConfig,
) -> Result<Solution, SynthError> {
    let problem = Problem::parallel(nest, &summary.kept, inputs)?;
    let mut deps = state_deps(&summary.step.body, &summary.kept, true);
    add_aux_edges(&mut deps, aux);
    let ls = layers(&summary.kept, &deps);
    let step = summary.step.clone();
    synthesize(&|r| parallel(&step, r, &[]), &problem, &ls, &BTreeMap::new(), cfg)
}

fn synth_stage(stage: &str, r: &Result<Solution, SynthError>) -> StageRecord {
    match r {
        Ok(s) => StageRecord {
            stage: stage.into(),
            outcome: "solved".into(),
            message: None,
            report: Some(s.report.clone()),
            lift: None,
        },
        Err(SynthError::Unsat { layer, bounded, report }) => StageRecord {
            stage: stage.into(),
            outcome: if *bounded { "unsat-bounded".into() } else { "unsat".into() },
            message: Some(format!("no join for {{{}}}", layer.join(", "))),
            report: Some(report.clone()),
            lift: None,
        },
        Err(e) => StageRecord {
            stage: stage.into(),
            outcome: "error".into(),
            message: Some(e.to_string()),
            report: None,
            lift: None,
        },
    }
}

fn lift_stage(stage: &str, targets: &[String], r: &Result<LiftResult, String>) -> StageRecord {
    match r {
        Ok(res) => StageRecord {
            stage: stage.into(),
            outcome: match res.kind {
                LiftKind::Nontrivial => "lifted".into(),
                LiftKind::TrivialMemoryless => "trivial".into(),
                LiftKind::Failed => "failed".into(),
            },
            message: None,
            report: None,
            lift: Some(LiftRecord {
                kind: res.kind,
                targets: targets.to_vec(),
                aux: res.aux.clone(),
                explain: res.explain.clone(),
            }),
        },
        Err(e) => StageRecord {
            stage: stage.into(),
            outcome: "failed".into(),
            message: Some(e.clone()),
            report: None,
            lift: Some(LiftRecord { kind: LiftKind::Failed, targets: targets.to_vec(), aux: vec![], explain: vec![] }),
        },
    }
}

fn simple(stage: &str, outcome: &str, message: Option<String>) -> StageRecord {
    StageRecord { stage: stage.into(), outcome: outcome.into(), message, report: None, lift: None }
}

fn with_empty(nest: &LoopNest, empty: &[(Name, Expr)]) -> LoopNest {
    let mut n = nest.clone();
    for (v, e) in empty {
        if let Some(d) = n.state.iter_mut().find(|d| d.name == *v) {
            d.init = Some(e.clone());
        }
    }
    n
}

/// Validate a lift on the samples: projection onto the original variables,
/// then the accumulator values against their recorded parts.
fn validate_lift(res: &LiftResult, before: &LoopNest, g: &LoopNest, inputs: &[Bindings]) -> Result<(), String> {
    check_projection(before, &res.lifted, inputs).map_err(|e| e.to_string())?;
    check_aux_values(res, g, inputs)?;
    Ok(())
}

struct Parts<'a> {
    name: &'a str,
    original: &'a LoopNest,
    inputs: usize,
    cfg: &'a PipelineConfig,
}

impl Parts<'_> {
    #[allow(clippy::too_many_arguments)]
    fn plan(
        &self,
        kind: PlanKind,
        k: Option<usize>,
        nest: &LoopNest,
        star: Option<&Solution>,
        summary: Option<&Summary>,
        join: Option<&Solution>,
        aux: Vec<AuxDef>,
        stages: Vec<StageRecord>,
    ) -> ParallelPlan {
        let original: Vec<String> = self.original.state_names().iter().map(|n| n.to_string()).collect();
        let s = |v: &[Name]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>();
        let cfg = self.cfg;
        ParallelPlan {
            version: PLAN_VERSION,
            name: self.name.to_string(),
            kind,
            n: self.original.depth(),
            k,
            program: nest.source(),
            state: nest
                .state
                .iter()
                .filter(|d| d.role == Role::State)
                .map(|d| StateDecl {
                    name: d.name.to_string(),
                    ty: d.ty.to_string(),
                    init: d.init.as_ref().map(|e| e.to_string()).unwrap_or_default(),
                    aux: !original.iter().any(|o| *o == *d.name),
                })
                .collect(),
            original_state: original,
            map: MapDoc {
                empty: star
                    .map(|s| s.empty.iter().map(|(n, e)| (n.to_string(), e.to_string())).collect())
                    .unwrap_or_default(),
            },
            memoryless_join: star.map(|s| s.join.to_doc()),
            summarized: summary.map(|m| SummaryDoc {
                kept: s(&m.kept),
                dropped: s(&m.dropped),
                depth: m.depth,
                step: m.step.to_doc(),
            }),
            parallel_join: join.map(|j| j.join.to_doc()),
            aux,
            identity: summary
                .map(|m| {
                    m.kept
                        .iter()
                        .map(|v| (v.to_string(), nest.init_of(v).map(|e| e.to_string()).unwrap_or_default()))
                        .collect()
                })
                .unwrap_or_default(),
            provenance: Provenance {
                seed: cfg.sampler.seed,
                random_samples: cfg.sampler.budget,
                instances: self.inputs,
                kappa_max: cfg.synth.kappa_max,
                reps_max: cfg.synth.reps_max,
                budget: cfg.synth.budget,
                lift_unfold: (cfg.lift.m, cfg.lift.k),
                retry: cfg.retry,
                stages,
            },
        }
    }
}

struct Memoryless {
    nest: LoopNest,
    star: Solution,
    problem: Problem,
    aux: Vec<AuxDef>,
}

/// Run the whole schema on `nest`.
pub fn parallelize(name: &str, nest: &LoopNest, cfg: &PipelineConfig) -> Result<Outcome, PipelineError> {
    let sampler = Sampler::new(&nest.shape, &nest.inputs, cfg.sampler.clone());
    let inputs: Vec<Bindings> = sampler.stream().collect();
    let parts = Parts { name, original: nest, inputs: inputs.len(), cfg };
    let n = nest.depth();
    let mut stages = Vec::new();
    let mut lifts = Vec::new();

    // memoryless join, lifting the inner loop once if needed
    let first = memoryless_join(nest, &inputs, &[], &cfg.synth);
    stages.push(synth_stage("memoryless", &first.as_ref().map(|(s, _)| s.clone()).map_err(Clone::clone)));
    let mem = match first {
        Ok((star, problem)) => Memoryless { nest: nest.clone(), star, problem, aux: vec![] },
        Err(SynthError::Unsat { layer, .. }) => {
            let targets: Vec<Name> = layer.iter().map(|v| crate::expr::name(v)).collect();
            let lifted = if cfg.retry {
                memoryless_lift(nest, &targets, &cfg.lift)
                    .map_err(|e| e.to_string())
                    .and_then(|res| validate_lift(&res, nest, nest, &inputs).map(|()| res))
            } else {
                Err("retry disabled".into())
            };
            stages.push(lift_stage("memoryless-lift", &layer, &lifted));
            let retried = match &lifted {
                Ok(res) => {
                    lifts.push(res.clone());
                    let r = memoryless_join(&res.lifted, &inputs, &res.aux, &cfg.synth);
                    stages.push(synth_stage("memoryless", &r.as_ref().map(|(s, _)| s.clone()).map_err(Clone::clone)));
                    match r {
                        Ok((star, problem)) => {
                            Some(Memoryless { nest: res.lifted.clone(), star, problem, aux: res.aux.clone() })
                        }
                        Err(SynthError::Unsat { .. }) => None,
                        Err(e) => return Err(PipelineError::Synth(e)),
                    }
                }
                Err(_) => None,
            };
            match retried {
                Some(m) => m,
                None => {
                    let triv = trivial_memoryless_lift(nest, &targets);
                    stages.push(lift_stage("memoryless-lift", &layer, &Ok(triv.clone())));
                    stages.push(simple("summarize", "skipped", Some("the trivial lift keeps every row; k = n".into())));
                    lifts.push(triv);
                    let plan = parts.plan(PlanKind::Failed, Some(n), nest, None, None, None, vec![], stages);
                    return Ok(Outcome { plan, lifts });
                }
            }
        }
        Err(e) => return Err(PipelineError::Synth(e)),
    };

    let summary = summarize(&mem.nest, &mem.star, &mem.problem)?;
    let k = summary.depth;
    stages.push(simple(
        "summarize",
        "done",
        Some(format!(
            "k = {k}; kept {{{}}}, dropped {{{}}}",
            summary.kept.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
            summary.dropped.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        )),
    ));

    let mut full: Option<(LoopNest, Solution, Summary, Solution, Vec<AuxDef>)> = None;
    let par = parallel_join(&mem.nest, &summary, &inputs, &[], &cfg.synth);
    stages.push(synth_stage("parallel", &par));
    match par {
        Ok(join) => full = Some((mem.nest.clone(), mem.star.clone(), summary.clone(), join, mem.aux.clone())),
        Err(SynthError::Unsat { layer, .. }) if cfg.retry => {
            let targets: Vec<Name> = layer.iter().map(|v| crate::expr::name(v)).collect();
            let g = with_empty(&mem.nest, &mem.star.empty);
            let lifted = homomorphism_lift(&mem.nest, &summary.step, &summary.dropped, &targets, &cfg.lift)
                .map_err(|e| e.to_string())
                .and_then(|res| validate_lift(&res, &mem.nest, &g, &inputs).map(|()| res));
            stages.push(lift_stage("homomorphism-lift", &layer, &lifted));
            if let Ok(res) = lifted {
                lifts.push(res.clone());
                let again = memoryless_join(&res.lifted, &inputs, &res.aux, &cfg.synth);
                stages.push(synth_stage("memoryless", &again.as_ref().map(|(s, _)| s.clone()).map_err(Clone::clone)));
                if let Ok((star2, prob2)) = again {
                    let sum2 = summarize(&res.lifted, &star2, &prob2)?;
                    stages.push(simple("summarize", "done", Some(format!("k = {}", sum2.depth))));
                    let mut aux = mem.aux.clone();
                    aux.extend(res.aux.iter().cloned());
                    let par2 = parallel_join(&res.lifted, &sum2, &inputs, &res.aux, &cfg.synth);
                    stages.push(synth_stage("parallel", &par2));
                    if let Ok(join) = par2 {
                        full = Some((res.lifted.clone(), star2, sum2, join, aux));
                    }
                }
            }
        }
        Err(SynthError::Unsat { .. }) => {}
        Err(e) => return Err(PipelineError::Synth(e)),
    }

    let fallback = |stages: Vec<StageRecord>| {
        let kind = if k < n { PlanKind::MapOnly } else { PlanKind::Failed };
        let (star, summ) = if kind == PlanKind::MapOnly { (Some(&mem.star), Some(&summary)) } else { (None, None) };
        let aux = if kind == PlanKind::MapOnly { mem.aux.clone() } else { vec![] };
        parts.plan(kind, Some(k), &mem.nest, star, summ, None, aux, stages)
    };
    let plan = match full {
        Some((lnest, star, summ, join, aux)) => parts.plan(
            PlanKind::FullDc,
            Some(summ.depth),
            &lnest,
            Some(&star),
            Some(&summ),
            Some(&join),
            aux,
            stages.clone(),
        ),
        None => fallback(stages.clone()),
    };
    let plan = match validate(&plan, nest, &sampler, cfg) {
        Ok(()) => {
            let mut p = plan;
            if p.kind != PlanKind::Failed {
                p.provenance.stages.push(simple("validate", "passed", None));
            }
            p
        }
        Err(e) => {
            let mut st = stages;
            st.push(simple("validate", "failed", Some(e)));
            match plan.kind {
                PlanKind::FullDc if k < n => fallback(st),
                _ => parts.plan(PlanKind::Failed, Some(k), &mem.nest, None, None, None, vec![], st),
            }
        }
    };
    Ok(Outcome { plan, lifts })
}

/// End-to-end check of a fresh plan against the original loop.
fn validate(plan: &ParallelPlan, original: &LoopNest, sampler: &Sampler, cfg: &PipelineConfig) -> Result<(), String> {
    if plan.kind == PlanKind::Failed {
        return Ok(());
    }
    let rt = Runtime::new(&load_plan(&emit_plan(plan)).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let c = crate::interp::CompiledNest::new(original);
    let inputs: Vec<Bindings> = sampler.fork(7).stream().take(cfg.validate_inputs).collect();
    let r =
        end_to_end(&rt, &inputs, cfg.validate_trees, cfg.sampler.seed, &|x| c.run_all(x)).map_err(|e| e.to_string())?;
    match r.failures.first() {
        None => Ok(()),
        Some(f) => Err(f.clone()),
    }
}
