use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use parsynth::corpus::{self, CorpusEntry};
use parsynth::frontend::LoopNest;
use parsynth::interp::{bindings_from_json, CompiledNest, Sampler};
use parsynth::pipeline::{
    associativity, emit_plan, end_to_end, homomorphism_law, identity_law, load_plan, parallelize, LawReport, Outcome,
    ParallelPlan, PipelineConfig, PlanKind, Runtime, SimTree,
};

const VERIFY_FAILED: u8 = 1;
const UNSAT: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "parsynth", version, about = "Divide-and-conquer parallelization of nested loops")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Seed of the input sampler and of every random choice.
    #[arg(long, global = true, env = "PARSYNTH_SEED", default_value_t = 42)]
    seed: u64,
    /// Random inputs drawn after the exhaustive small inputs.
    #[arg(long, global = true, env = "PARSYNTH_SAMPLES", default_value_t = 1000)]
    samples: usize,
    #[arg(long, global = true, env = "PARSYNTH_KAPPA_MAX", default_value_t = 2)]
    kappa_max: usize,
    #[arg(long, global = true, env = "PARSYNTH_REPS_MAX", default_value_t = 2)]
    reps_max: usize,
    /// Wall-clock limit per synthesis run.
    #[arg(long, global = true, env = "PARSYNTH_TIMEOUT_S")]
    timeout_s: Option<u64>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "PARSYNTH_JOBS")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize a plan for a loop nest.
    Parallelize {
        file: PathBuf,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print what each lift discovered.
        #[arg(long)]
        explain_lift: bool,
        /// Print the rewrite traces of the lifts.
        #[arg(long)]
        dump_normalization: bool,
    },
    /// Verify a plan against the loop it was made from.
    Check {
        file: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Trees simulated per input.
        #[arg(long, default_value_t = 16)]
        trees: usize,
    },
    /// Run a plan on one input over a random tree of chunks.
    Simulate {
        #[arg(long)]
        plan: PathBuf,
        /// JSON object mapping input names to values.
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the bundled benchmarks and compare with the expected outcomes.
    Corpus {
        #[arg(long, value_enum, default_value_t = Subset::All)]
        subset: Subset,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Subset {
    All,
    Smoke,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verify(String),
    Unsat(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => USAGE,
            Failure::Verify(_) => VERIFY_FAILED,
            Failure::Unsat(_) => UNSAT,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

impl Global {
    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.sampler.seed = self.seed;
        cfg.sampler.budget = self.samples;
        cfg.synth.kappa_max = self.kappa_max;
        cfg.synth.reps_max = self.reps_max;
        cfg.synth.timeout = self.timeout_s.map(Duration::from_secs);
        cfg
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_nest(path: &Path) -> Result<LoopNest, Failure> {
    LoopNest::from_source(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("loop").to_string()
}

fn synth_time(plan: &ParallelPlan) -> Duration {
    plan.provenance.stages.iter().filter_map(|s| s.report.as_ref()).map(|r| r.elapsed).sum()
}

fn cmd_parallelize(g: &Global, file: &Path, out: Option<&Path>, explain: bool, dump: bool) -> Result<(), Failure> {
    let nest = load_nest(file)?;
    let outcome: Outcome = parallelize(&stem(file), &nest, &g.config()).map_err(|e| Failure::Unsat(e.to_string()))?;
    eprint!("{}", outcome.report_text());
    if explain {
        for l in &outcome.lifts {
            eprint!("{}", l.explain_text());
        }
    }
    if dump {
        if outcome.lifts.is_empty() {
            eprintln!("no lift was needed; nothing was normalized");
        }
        for l in &outcome.lifts {
            eprint!("{}", l.trace_text());
        }
    }
    let doc = emit_plan(&outcome.plan);
    match out {
        Some(p) => std::fs::write(p, doc).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => print!("{doc}"),
    }
    if outcome.plan.kind == PlanKind::Failed {
        return Err(Failure::Unsat(format!("{}: no divide-and-conquer plan", outcome.plan.name)));
    }
    Ok(())
}

fn law(name: &str, r: Result<LawReport, parsynth::pipeline::PlanError>) -> Result<bool, Failure> {
    let r = r.map_err(|e| Failure::Verify(format!("{name}: {e}")))?;
    println!("{name}: {} checks, {} failures", r.checked, r.failures.len());
    for f in &r.failures {
        println!("  {f}");
    }
    Ok(r.ok())
}

fn cmd_check(g: &Global, file: &Path, plan: &Path, per_input: usize) -> Result<(), Failure> {
    let nest = load_nest(file)?;
    let plan = load_plan(&read(plan)?).map_err(usage)?;
    if plan.kind == PlanKind::Failed {
        return Err(Failure::Unsat(format!("{}: the plan is {}", plan.name, plan.kind)));
    }
    let rt = Runtime::new(&plan).map_err(usage)?;
    let cfg = g.config();
    let sampler = Sampler::new(&nest.shape, &nest.inputs, cfg.sampler.clone());
    let inputs: Vec<_> = sampler.stream().collect();
    let oracle = CompiledNest::new(&nest);
    let mut ok = law("end-to-end", end_to_end(&rt, &inputs, per_input, g.seed, &|x| oracle.run_all(x)))?;
    if plan.kind == PlanKind::FullDc {
        ok &= law("homomorphism", homomorphism_law(&rt, &inputs))?;
        ok &= law("associativity", associativity(&rt, &inputs, 4, g.seed))?;
        ok &= law("identity", identity_law(&rt, &inputs))?;
    }
    if ok {
        println!("{}: {} plan verified on {} inputs", plan.name, plan.kind, inputs.len());
        Ok(())
    } else {
        Err(Failure::Verify(format!("{}: verification failed", plan.name)))
    }
}

fn cmd_simulate(g: &Global, plan: &Path, input: &Path) -> Result<(), Failure> {
    let plan = load_plan(&read(plan)?).map_err(usage)?;
    let json: serde_json::Value = serde_json::from_str(&read(input)?).map_err(usage)?;
    let x = bindings_from_json(&json).map_err(usage)?;
    let rt = Runtime::new(&plan).map_err(|e| match e {
        parsynth::pipeline::PlanError::NotRunnable(_) => Failure::Unsat(e.to_string()),
        e => usage(e),
    })?;
    let n = rt.rows(&x).map_err(usage)?;
    let tree = SimTree::random(n, &mut ChaCha8Rng::seed_from_u64(g.seed), false);
    let got = rt.simulate(&x, &tree).map_err(|e| Failure::Verify(e.to_string()))?;
    let want = rt.sequential(&x).map_err(|e| Failure::Verify(e.to_string()))?;
    eprintln!("tree {tree}");
    println!("{}", serde_json::to_string(&got.to_json()).expect("state serializes"));
    if got != want {
        return Err(Failure::Verify(format!("sequential run gives {want}")));
    }
    Ok(())
}

fn cmd_corpus(g: &Global, subset: Subset) -> Result<(), Failure> {
    let entries: Vec<&CorpusEntry> = match subset {
        Subset::All => corpus::CORPUS.iter().collect(),
        Subset::Smoke => corpus::smoke().collect(),
    };
    let cfg = g.config();
    println!(
        "{:<18} {:<17} {:<8} {:>3} {:<18} {:>9} {:>9}  verdict",
        "name", "category", "kind", "aux", "expected", "synth", "total"
    );
    let mut bad = Vec::new();
    for e in entries {
        let t = Instant::now();
        let nest = LoopNest::from_source(e.source).map_err(|err| usage(format!("{}: {err}", e.name)))?;
        let (kind, aux, synth) = match parallelize(e.name, &nest, &cfg) {
            Ok(o) => (Some(o.plan.kind), o.plan.aux_count(), synth_time(&o.plan)),
            Err(_) => (None, 0, Duration::ZERO),
        };
        let total = t.elapsed();
        let ok = kind.is_some_and(|k| e.matches(k, aux));
        let expected = format!(
            "{}{}",
            e.kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("|"),
            e.aux.map(|a| format!(" aux {a}")).unwrap_or_default()
        );
        println!(
            "{:<18} {:<17} {:<8} {:>3} {:<18} {:>8.2}s {:>8.2}s  {}",
            e.name,
            e.category.to_string(),
            kind.map(|k| k.to_string()).unwrap_or_else(|| "error".into()),
            aux,
            expected,
            synth.as_secs_f64(),
            total.as_secs_f64(),
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            bad.push(e.name);
        }
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verify(format!("expectations not met: {}", bad.join(", "))))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(j) = cli.global.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().map_err(usage)?;
    }
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Parallelize { file, out, explain_lift, dump_normalization } => {
            cmd_parallelize(g, file, out.as_deref(), *explain_lift, *dump_normalization)
        }
        Cmd::Check { file, plan, trees } => cmd_check(g, file, plan, *trees),
        Cmd::Simulate { plan, input } => cmd_simulate(g, plan, input),
        Cmd::Corpus { subset } => cmd_corpus(g, *subset),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Verify(m) | Failure::Unsat(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
