use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hardlab::bench_harness::{generate_instances, run_bench};
use hardlab::gadget_core::gadget_params;
use hardlab::graph_core::{parse_sparse6, write_sparse6};
use hardlab::kcut_solver::{solve, Backend, SolveError};
use hardlab::lp_bounds::{certify_with, ClassMode, CertifyOptions};
use hardlab::reduction_calc::{reduction_summary, rotate_shift, rotate_swap_last};
use hardlab::search_loop::{hill_climb_gadget, hill_climb_graph, Budget, GadgetSearch, Genome, GraphSearch, Objective};
use hardlab::spectral_cert::{
    cut_fraction, independent_set_fraction, is_ramanujan, spectrum, IsOutcome, Mode, Score, Verdict, Witness, WitnessKind,
};
use hardlab::{rational_to_f64, Gadget, KCutInstance, MultiGraph, Rational};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "hardlab", version, about = "Certify Ramanujan witnesses, gadgets, reductions and LP bounds", arg_required_else_help = true)]
struct Cli {
    /// Worker threads (default: hardware parallelism).
    #[arg(long, global = true, env = "HARDLAB_THREADS")]
    threads: Option<usize>,
    /// Print the JSON report instead of `key: value` lines.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    #[command(subcommand)]
    Graph(GraphCmd),
    #[command(subcommand)]
    Gadget(GadgetCmd),
    /// Exact MAX-k-CUT of an instance file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "bnb")]
        backend: BackendArg,
        #[arg(long)]
        deadline_ms: Option<u64>,
    },
    /// Completeness, soundness and ratio of a gadget family.
    Reduce(ReduceArgs),
    /// LP upper bound on the max-cut or independent-set fraction.
    LpBound(LpArgs),
    #[command(subcommand)]
    Bench(BenchCmd),
    #[command(subcommand)]
    Search(SearchCmd),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Regularity, Ramanujan verdict and witness fraction.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
    },
    /// Adjacency eigenvalues.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Subcommand)]
enum GadgetCmd {
    /// Parameters `(c, c', s, t)` of an `i`-gadget.
    Params {
        #[arg(long)]
        gadget: PathBuf,
        #[arg(long, default_value_t = 0)]
        residue: usize,
        #[arg(long, value_enum, default_value = "bnb")]
        backend: BackendArg,
        #[arg(long)]
        deadline_ms: Option<u64>,
    },
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    k: usize,
    /// Gadget files in residue order; repeat the flag.
    #[arg(long = "gadget", required = true)]
    gadgets: Vec<PathBuf>,
    /// Append the last gadget with its last two globals swapped.
    #[arg(long, conflicts_with = "rotate_shift")]
    rotate_last: bool,
    /// Append shift rotations of the last gadget until there are `k`.
    #[arg(long)]
    rotate_shift: bool,
    #[arg(long, value_enum, default_value = "bnb")]
    backend: BackendArg,
    #[arg(long)]
    deadline_ms: Option<u64>,
}

#[derive(Args)]
struct LpArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    depth: usize,
    #[arg(long, value_enum)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0.0005)]
    delta: f64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    /// Write every assembled LP in CPLEX LP format here.
    #[arg(long)]
    export_dir: Option<PathBuf>,
    #[arg(long)]
    class_guard: Option<usize>,
    /// Solve every grid point instead of pruning alpha intervals.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Write a seeded dataset, one instance file per line of the report.
    Gen {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `inst_NNN.kcut` files.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Time backends on a seeded dataset.
    Run {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["brute", "bnb"])]
        backends: Vec<BackendArg>,
        #[arg(long, default_value_t = 1000)]
        deadline_ms: u64,
    },
}

#[derive(Subcommand)]
enum SearchCmd {
    /// Hill-climb a gadget family, minimizing `b / a`.
    Gadget {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        naux: usize,
        #[arg(long, default_value_t = 1000)]
        budget_evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting free gadgets (k = 3: I0 and I1; k >= 4: I0).
        #[arg(long = "init")]
        init: Vec<PathBuf>,
        #[arg(long)]
        freeze_first: bool,
        /// Directory for the resulting `.gad` files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Hill-climb a (Ramanujan graph, witness) pair.
    Graph {
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 24)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        budget_evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for `best.s6` and `best.witness`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Brute,
    Bnb,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Brute => Backend::Brute,
            BackendArg::Bnb => Backend::Bnb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cut,
    Is,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Float,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Mc,
    Is,
}

/// Report plus whether the check it describes passed.
struct Outcome {
    report: Value,
    ok: bool,
}

impl Outcome {
    fn pass(report: Value) -> Self {
        Self { report, ok: true }
    }
}

fn deadline(ms: Option<u64>) -> Option<Instant> {
    ms.map(|ms| Instant::now() + Duration::from_millis(ms))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<MultiGraph> {
    let text = read(path)?;
    parse_sparse6(text.trim_end().as_bytes()).with_context(|| format!("parsing {}", path.display()))
}

fn load_gadget(path: &Path) -> Result<Gadget> {
    Gadget::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn rat(r: &Rational) -> Value {
    Value::String(r.to_string())
}

fn verdict_name(v: Option<Verdict>) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn graph_verify(graph: &Path, witness: &Path, kind: KindArg, mode: ModeArg) -> Result<Outcome> {
    let g = load_graph(graph)?;
    let kind = match kind {
        KindArg::Cut => WitnessKind::Cut,
        KindArg::Is => WitnessKind::IndependentSet,
    };
    let w = Witness::parse(kind, &read(witness)?)?;
    let mode = match mode {
        ModeArg::Float => Mode::Float,
        ModeArg::Exact => Mode::Exact,
    };
    let profile = g.degree_profile();
    let report = is_ramanujan(&g, mode);
    let (fraction, violations) = match kind {
        WitnessKind::Cut => (Some(cut_fraction(&g, &w)?), vec![]),
        WitnessKind::IndependentSet => match independent_set_fraction(&g, &w)? {
            IsOutcome::Fraction(f) => (Some(f), vec![]),
            IsOutcome::Violation(v) => (None, v),
        },
    };
    let verdict = report.as_ref().ok().and_then(|r| r.verdict);
    let ok = verdict == Some(Verdict::Ramanujan) && fraction.is_some();
    let mut out = json!({
        "n": g.n(),
        "d": profile.degree,
        "edges": g.edge_count(),
        "verdict": verdict_name(verdict),
        "fraction": fraction.as_ref().map(rat),
        "fraction_num": fraction.as_ref().map(|f| f.numer().to_string()),
        "fraction_den": fraction.as_ref().map(|f| f.denom().to_string()),
        "fraction_decimal": fraction.as_ref().map(rational_to_f64),
        "violations": violations,
    });
    match report {
        Ok(r) => {
            out["lambda_star"] = json!(r.lambda_star);
            out["threshold"] = json!(r.threshold);
            out["error_bound"] = json!(r.error_bound);
        }
        Err(e) => out["error"] = json!(e.to_string()),
    }
    Ok(Outcome { report: out, ok })
}

fn graph_spectrum(graph: &Path) -> Result<Outcome> {
    let g = load_graph(graph)?;
    let r = spectrum(&g);
    Ok(Outcome::pass(json!({
        "n": g.n(),
        "d": g.degree_profile().degree,
        "eigenvalues": r.eigenvalues,
        "lambda_star": r.lambda_star,
        "threshold": r.threshold,
        "error_bound": r.error_bound,
    })))
}

fn params_json(p: &hardlab::GadgetParams) -> Value {
    json!({"c": rat(&p.c), "c_prime": rat(&p.c_prime), "s": rat(&p.s), "t": rat(&p.t)})
}

fn gadget_cmd(gadget: &Path, residue: usize, backend: BackendArg, ms: Option<u64>) -> Result<Outcome> {
    let g = load_gadget(gadget)?;
    let p = gadget_params(&g, residue, matches!(backend, BackendArg::Brute), deadline(ms))?;
    let mut out = params_json(&p);
    out["k"] = json!(g.k);
    out["vars"] = json!(g.vars());
    out["residue"] = json!(residue);
    Ok(Outcome::pass(out))
}

fn solve_cmd(instance: &Path, backend: BackendArg, ms: Option<u64>) -> Result<Outcome> {
    let inst = KCutInstance::parse(&read(instance)?)?;
    match solve(&inst, backend.into(), deadline(ms)) {
        Ok(s) => Ok(Outcome::pass(json!({
            "k": inst.k,
            "vars": inst.m,
            "value": rat(&s.value),
            "total_weight": rat(&inst.total_weight()),
            "assignment": s.assignment,
        }))),
        Err(SolveError::Timeout) => Ok(Outcome { report: json!({"error": "deadline exceeded"}), ok: false }),
        Err(e) => Err(e.into()),
    }
}

fn reduce_cmd(a: &ReduceArgs) -> Result<Outcome> {
    let mut fam = a.gadgets.iter().map(|p| load_gadget(p)).collect::<Result<Vec<_>>>()?;
    if a.rotate_last {
        let last = fam.last().context("no gadgets")?;
        fam.push(rotate_swap_last(last)?);
    }
    if a.rotate_shift {
        while fam.len() < a.k {
            let last = fam.last().context("no gadgets")?;
            fam.push(rotate_shift(last)?);
        }
    }
    if fam.len() != a.k {
        bail!("need {} gadgets, have {}", a.k, fam.len());
    }
    let s = reduction_summary(&fam, matches!(a.backend, BackendArg::Brute), deadline(a.deadline_ms))?;
    Ok(Outcome::pass(json!({
        "k": s.k,
        "a": rat(&s.a),
        "b": rat(&s.b),
        "ratio": rat(&s.ratio),
        "ratio_decimal": format!("{:.4}", rational_to_f64(&s.ratio)),
        "r_perm": s.r_perm,
        "params": s.params.iter().map(params_json).collect::<Vec<_>>(),
        "statement": s.hardness_statement(),
    })))
}

fn lp_cmd(a: &LpArgs) -> Result<Outcome> {
    let mode = match a.objective {
        ObjectiveArg::Mc => ClassMode::MaxCut,
        ObjectiveArg::Is => ClassMode::IndependentSet,
    };
    let opts = CertifyOptions { export_dir: a.export_dir.clone(), class_guard: a.class_guard, exhaustive: a.exhaustive };
    let c = certify_with(a.d, a.depth, mode, a.delta, a.eps, &opts)?;
    let ok = c.bound.is_finite();
    Ok(Outcome { report: serde_json::to_value(&c)?, ok })
}

fn bench_cmd(cmd: &BenchCmd) -> Result<Outcome> {
    match cmd {
        BenchCmd::Gen { k, m, count, seed, dir } => {
            let data = generate_instances(*k, *m, *count, *seed)?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(dir)?;
                for (i, inst) in data.iter().enumerate() {
                    std::fs::write(dir.join(format!("inst_{i:03}.kcut")), inst.to_text())?;
                }
            }
            Ok(Outcome::pass(json!({
                "k": k, "m": m, "count": count, "seed": seed,
                "instances": data.iter().map(|i| i.to_text()).collect::<Vec<_>>(),
            })))
        }
        BenchCmd::Run { k, m, count, seed, backends, deadline_ms } => {
            let data = generate_instances(*k, *m, *count, *seed)?;
            let backends: Vec<Backend> = backends.iter().map(|&b| b.into()).collect();
            let r = run_bench(&data, &backends, Duration::from_millis(*deadline_ms))?;
            let mut out = serde_json::to_value(&r)?;
            out["k"] = json!(k);
            out["m"] = json!(m);
            out["seed"] = json!(seed);
            out["agreement"] = json!(r.agreement());
            Ok(Outcome { report: out, ok: r.agreement() })
        }
    }
}

fn score_json(s: &Score) -> Value {
    match s {
        Score::NegInfinity => json!("-inf"),
        Score::Value(v) => rat(v),
    }
}

fn search_cmd(cmd: &SearchCmd) -> Result<Outcome> {
    match cmd {
        SearchCmd::Gadget { k, naux, budget_evals, seed, init, freeze_first, out_dir } => {
            let mut cfg = GadgetSearch::new(*k, *naux, Budget::evals(*budget_evals), *seed);
            cfg.freeze_first = *freeze_first;
            if !init.is_empty() {
                let free = init.iter().map(|p| load_gadget(p)).collect::<Result<Vec<_>>>()?;
                if free.len() != Genome::slots(*k) {
                    bail!("k = {k} takes {} --init gadgets", Genome::slots(*k));
                }
                cfg.initial = Some(Genome { k: *k, free });
            }
            let r = hill_climb_gadget(&cfg)?;
            let mut files = Vec::new();
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                for (i, g) in r.family.iter().enumerate() {
                    let p = dir.join(format!("k{k}_I{i}.gad"));
                    std::fs::write(&p, g.to_text())?;
                    files.push(p.display().to_string());
                }
            }
            Ok(Outcome::pass(json!({
                "k": k,
                "evaluations": r.evaluations,
                "initial_ratio": rat(&r.initial_ratio),
                "ratio": rat(&r.summary.ratio),
                "a": rat(&r.summary.a),
                "b": rat(&r.summary.b),
                "files": files,
            })))
        }
        SearchCmd::Graph { d, objective, n_max, budget_evals, seed, out_dir } => {
            let objective = match objective {
                ObjectiveArg::Mc => Objective::MaxCut,
                ObjectiveArg::Is => Objective::IndependentSet,
            };
            let cfg = GraphSearch { d: *d, n_max: *n_max, objective, budget: Budget::evals(*budget_evals), seed: *seed };
            let r = hill_climb_graph(&cfg)?;
            let mut files = Vec::new();
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(dir)?;
                let g = dir.join("best.s6");
                let w = dir.join("best.witness");
                std::fs::write(&g, write_sparse6(&r.graph) + "\n")?;
                let ids: Vec<String> = r.witness.vertices.iter().map(|v| v.to_string()).collect();
                std::fs::write(&w, ids.join(" ") + "\n")?;
                files = vec![g.display().to_string(), w.display().to_string()];
            }
            Ok(Outcome::pass(json!({
                "d": d,
                "n": r.graph.n(),
                "evaluations": r.evaluations,
                "initial_score": score_json(&r.initial_score),
                "score": score_json(&r.score),
                "files": files,
            })))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.cmd {
        Cmd::Graph(GraphCmd::Verify { graph, witness, kind, mode }) => graph_verify(graph, witness, *kind, *mode),
        Cmd::Graph(GraphCmd::Spectrum { graph }) => graph_spectrum(graph),
        Cmd::Gadget(GadgetCmd::Params { gadget, residue, backend, deadline_ms }) => gadget_cmd(gadget, *residue, *backend, *deadline_ms),
        Cmd::Solve { instance, backend, deadline_ms } => solve_cmd(instance, *backend, *deadline_ms),
        Cmd::Reduce(a) => reduce_cmd(a),
        Cmd::LpBound(a) => lp_cmd(a),
        Cmd::Bench(b) => bench_cmd(b),
        Cmd::Search(s) => search_cmd(s),
    }
}

fn print_lines(v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::String(s) => println!("{k}: {s}"),
                    other => println!("{k}: {other}"),
                }
            }
        }
        other => println!("{other}"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match dispatch(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let mut report = outcome.report;
    if let Value::Object(map) = &mut report {
        map.insert("schema_version".into(), json!(SCHEMA_VERSION));
        map.insert("ok".into(), json!(outcome.ok));
    }
    if let Some(path) = &cli.out {
        let text = serde_json::to_string_pretty(&report).expect("serializable");
        if let Err(e) = std::fs::write(path, text + "\n") {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        print_lines(&report);
    }
    ExitCode::from(if outcome.ok { 0 } else { 1 })
}
