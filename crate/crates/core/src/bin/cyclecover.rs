//! Command-line front end. Every subcommand prints one JSON document on
//! stdout and, with `--output-dir`, also writes it there.
//!
//! Exit codes: 0 processed, 1 runtime failure (no cover, I/O), 2 bad
//! arguments or config, 3 a result failed validation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use serde_json::{json, Value};

use cyclecover::absorber::{build_absorber, verify_absorber, AbsorberParams};
use cyclecover::connect::{connect_all, default_path_length, ConnectionDemand};
use cyclecover::cover::{cover_graph, partition_params, PipelineConfig};
use cyclecover::expander::{certify_expander_with, expansion_exact, sparse_cut_search};
use cyclecover::experiment::{replay, run_experiment_to, ExperimentError, ExperimentSpec, Instance, Sweep};
use cyclecover::graph::{read_edge_list, validate_cycle_cover, write_edge_list};
use cyclecover::partition::split_into_expanders;
use cyclecover::randgen::{apply_adversary, Adversary, Strategy};
use cyclecover::sparse::{certify_spectral, check_sparse_exact, spectral_beta, violation_search};
use cyclecover::{Graph, Seed, VertexSet};

#[derive(Parser)]
#[command(name = "cyclecover", version, about = "Cycle covers of sparse expanding graphs")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance, optionally after an adversary.
    Gen(GenArgs),
    /// Check (p, β)-sparseness.
    CheckSparse(SparseArgs),
    /// Check q-expansion.
    CheckExpander(ExpanderArgs),
    /// Split a graph into expanding parts.
    Partition(PartitionArgs),
    /// Route a demand multigraph through a vertex set.
    Connect(ConnectArgs),
    /// Build and verify an absorber on a bipartite graph.
    BuildAbsorber(AbsorberArgs),
    /// Cover a graph by at most k − 1 cycles.
    Cover(CoverArgs),
    /// Run a resilience experiment and store spec, report and tables.
    ResilienceExperiment(ExperimentArgs),
    /// Rerun a stored spec and compare with the stored report.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gnp,
    PlantedBlocks,
    RandomRegular,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    RandomDeletion,
    BipartiteSplit,
    CliqueSplit,
    TargetedMinDegree,
}

impl StrategyArg {
    fn build(self, parts: usize) -> Strategy {
        match self {
            StrategyArg::RandomDeletion => Strategy::RandomDeletion,
            StrategyArg::BipartiteSplit => Strategy::BipartiteSplit,
            StrategyArg::CliqueSplit => Strategy::CliqueSplit { parts },
            StrategyArg::TargetedMinDegree => Strategy::TargetedMinDegree,
        }
    }
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, value_enum, default_value = "gnp")]
    model: Model,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    p: f64,
    /// Blocks for planted-blocks.
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    /// Degree for random-regular.
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Parts for clique-split.
    #[arg(long, default_value_t = 2)]
    parts: usize,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
}

impl InstanceArgs {
    fn instance(&self) -> Instance {
        match self.model {
            Model::Gnp => Instance::Gnp { n: self.n, p: self.p },
            Model::PlantedBlocks => Instance::PlantedBlocks { blocks: self.blocks, n: self.n, p: self.p },
            Model::RandomRegular => Instance::RandomRegular { n: self.n, d: self.d },
        }
    }

    fn adversary(&self) -> Option<Adversary> {
        self.strategy.map(|s| Adversary { strategy: s.build(self.parts), r: self.r })
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Edge-list destination; defaults to `graph.txt` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SparseMethodArg {
    Exact,
    Spectral,
    Search,
}

#[derive(Args)]
struct SparseArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Defaults to the edge density.
    #[arg(long)]
    p: Option<f64>,
    /// Defaults to the spectral bound.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value = "spectral")]
    method: SparseMethodArg,
    #[arg(long, default_value_t = 64)]
    budget: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpanderMode {
    Exact,
    Search,
    Certify,
}

#[derive(Args)]
struct ExpanderArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    q: f64,
    #[arg(long, value_enum, default_value = "certify")]
    mode: ExpanderMode,
    #[arg(long, default_value_t = 3)]
    budget: usize,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Pipeline config (JSON) supplying c, α, ξ, γ and the cut budget.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct ConnectArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Lines `u v mult`.
    #[arg(long)]
    demand: PathBuf,
    /// Whitespace-separated vertex ids; defaults to every non-terminal.
    #[arg(long)]
    through: Option<PathBuf>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
}

#[derive(Args)]
struct AbsorberArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Build on the bipartite double cover instead of requiring a bipartite input.
    #[arg(long)]
    double_cover: bool,
    /// Absorbable vertices, half on each side.
    #[arg(long, default_value_t = 8)]
    u_size: usize,
    #[arg(long, default_value_t = 2)]
    matchings: usize,
    #[arg(long, default_value_t = 8)]
    ell: usize,
    #[arg(long, default_value_t = 100)]
    verify: usize,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Spec file; without one the spec is assembled from the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "resilience")]
    name: String,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Bisect r over [sweep-lo, sweep-hi].
    #[arg(long, requires = "sweep_hi")]
    sweep_lo: Option<f64>,
    #[arg(long, requires = "sweep_lo")]
    sweep_hi: Option<f64>,
    #[arg(long, default_value_t = 4)]
    sweep_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    sweep_threshold: f64,
    #[arg(long)]
    save_artifacts: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// A spec file, or an experiment directory holding `spec.json`.
    spec: PathBuf,
}

enum CliError {
    Failure(String),
    Config(String),
    Validation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Io { .. } => CliError::Failure(e.to_string()),
            ExperimentError::Config(_) | ExperimentError::Schema(_) => CliError::Config(e.to_string()),
            ExperimentError::Validation { .. } => CliError::Validation(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_graph(path: &Path) -> CliResult<Graph> {
    read_edge_list(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> CliResult<PipelineConfig> {
    let Some(path) = path else {
        return Ok(PipelineConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn gen(cli: &Cli, a: &GenArgs) -> CliResult<Value> {
    let seed = Seed(cli.seed);
    let base =
        a.instance.instance().generate(seed.derive_str("instance")).map_err(|e| CliError::Config(e.to_string()))?;
    let g = match a.instance.adversary() {
        Some(adv) => apply_adversary(&base, &adv, seed.derive_str("adversary")),
        None => base,
    };
    let out = match (&a.out, &cli.output_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(d)) => Some(d.join("graph.txt")),
        (None, None) => None,
    };
    if let Some(path) = &out {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Failure(e.to_string()))?;
        }
        write_edge_list(&g, path).map_err(|e| CliError::Failure(e.to_string()))?;
    }
    Ok(json!({
        "n": g.n(),
        "m": g.m(),
        "min_degree": g.min_degree(),
        "max_degree": g.max_degree(),
        "path": out,
    }))
}

fn check_sparse(cli: &Cli, a: &SparseArgs) -> CliResult<Value> {
    let g = load_graph(&a.graph)?;
    let p = a.p.unwrap_or_else(|| g.density());
    let beta = a.beta.unwrap_or_else(|| spectral_beta(&g, p).beta);
    match a.method {
        SparseMethodArg::Exact => {
            let cert = check_sparse_exact(&g, p, beta).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(to_value(&cert))
        }
        SparseMethodArg::Spectral => {
            let cert = certify_spectral(&g, p);
            Ok(
                json!({"method": "spectral", "p": p, "beta": cert.beta, "certifies": cert.certifies(beta), "witness": null, "spectral": cert.spectral}),
            )
        }
        SparseMethodArg::Search => {
            let w = violation_search(&g, p, beta, a.budget, Seed(cli.seed));
            Ok(json!({"method": "search", "p": p, "beta": beta, "witness": w}))
        }
    }
}

fn check_expander(cli: &Cli, a: &ExpanderArgs) -> CliResult<Value> {
    let g = load_graph(&a.graph)?;
    let seed = Seed(cli.seed);
    match a.mode {
        ExpanderMode::Exact => {
            let (q_star, cut) = expansion_exact(&g).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(json!({"mode": "exact", "q_star": q_star, "passes": q_star >= a.q, "cut": cut}))
        }
        ExpanderMode::Search => {
            let cut = sparse_cut_search(&g, a.q, a.budget, seed);
            Ok(json!({"mode": "search", "q": a.q, "cut": cut}))
        }
        ExpanderMode::Certify => {
            let v = certify_expander_with(&g, a.q, a.budget, seed);
            Ok(json!({"mode": "certify", "passes": v.passes(), "verdict": v}))
        }
    }
}

fn partition(cli: &Cli, a: &PartitionArgs) -> CliResult<Value> {
    let g = load_graph(&a.graph)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if a.p.is_some() {
        cfg.p = a.p;
    }
    let params = partition_params(&g, &cfg);
    let out = split_into_expanders(&g, &params, Seed(cli.seed)).map_err(|e| CliError::Failure(e.to_string()))?;
    let parts: Vec<&[usize]> = out.parts.iter().map(VertexSet::as_slice).collect();
    Ok(json!({"parts": parts, "report": out}))
}

fn read_ids(path: &Path) -> CliResult<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| CliError::Config(format!("{}: bad vertex id {t:?}", path.display()))))
        .collect()
}

fn connect(cli: &Cli, a: &ConnectArgs) -> CliResult<Value> {
    let g = load_graph(&a.graph)?;
    let n = g.n();
    let text = fs::read_to_string(&a.demand).map_err(|e| CliError::Config(e.to_string()))?;
    let demand = ConnectionDemand::parse(n, &text).map_err(|e| CliError::Config(e.to_string()))?;
    let w: VertexSet = match &a.through {
        Some(path) => VertexSet::new(n, read_ids(path)?).map_err(|e| CliError::Config(e.to_string()))?,
        None => (0..n).filter(|&v| !demand.terminals.contains(v)).collect(),
    };
    let ell = a.ell.unwrap_or_else(|| default_path_length(n, a.gamma));
    let sys =
        connect_all(&g, &demand, &w, ell, a.restarts, Seed(cli.seed)).map_err(|e| CliError::Failure(e.to_string()))?;
    let routes: Vec<&[usize]> = sys.routes.iter().map(|p| p.vertices()).collect();
    Ok(json!({"ell": ell, "routes": routes, "used_internal": sys.used_internal}))
}

fn absorber(cli: &Cli, a: &AbsorberArgs) -> CliResult<Value> {
    let base = load_graph(&a.graph)?;
    let (g, side) = if a.double_cover {
        base.bipartite_double_cover()
    } else {
        let comps = base.components();
        let mut side = vec![false; base.n()];
        // Two-colour each component from its smallest vertex.
        for comp in comps {
            let mut stack = vec![comp[0]];
            let mut seen = vec![false; base.n()];
            seen[comp[0]] = true;
            side[comp[0]] = true;
            while let Some(v) = stack.pop() {
                for &w in base.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        side[w] = !side[v];
                        stack.push(w);
                    }
                }
            }
        }
        if !base.is_bipartite_with(&side) {
            return Err(CliError::Config("graph is not bipartite; pass --double-cover".into()));
        }
        (base, side)
    };
    let seed = Seed(cli.seed);
    let mut rng = seed.derive_str("u").rng();
    let mut sides: [Vec<usize>; 2] =
        [(0..g.n()).filter(|&v| side[v]).collect(), (0..g.n()).filter(|&v| !side[v]).collect()];
    for s in sides.iter_mut() {
        s.shuffle(&mut rng);
    }
    let half = a.u_size / 2;
    let u: VertexSet = sides[0].iter().take(half).chain(sides[1].iter().take(a.u_size - half)).copied().collect();
    let w: VertexSet = (0..g.n()).filter(|&v| !u.contains(v)).collect();
    let params = AbsorberParams { matchings: a.matchings, ell: a.ell, ..AbsorberParams::default() };
    let abs = build_absorber(&g, &u, &w, &side, &params, seed.derive_str("absorber"))
        .map_err(|e| CliError::Failure(e.to_string()))?;
    let report = verify_absorber(&abs, &g, a.verify, seed.derive_str("verify"));
    if !report.all_passed() {
        return Err(CliError::Validation(format!("absorber failed verification: {:?}", report.counterexample)));
    }
    Ok(json!({
        "a": abs.a,
        "b": abs.b,
        "gadget_paths": abs.gadgets.iter().map(|gd| &gd.path_p).collect::<Vec<_>>(),
        "f": abs.f,
        "absorber": abs,
        "report": report,
    }))
}

fn cover(cli: &Cli, a: &CoverArgs) -> CliResult<Value> {
    let g = load_graph(&a.graph)?;
    let mut cfg = load_config(a.config.as_deref())?;
    cfg.seed = cli.seed;
    cfg.check(a.k).map_err(|e| CliError::Config(e.to_string()))?;
    let out = cover_graph(&g, a.k, &cfg).map_err(|e| CliError::Failure(format!("{} (stage {:?})", e, e.stage())))?;
    let report = validate_cycle_cover(&g, &out.cover);
    if !report.pass {
        return Err(CliError::Validation(format!("{:?}", report.violation)));
    }
    let cycles: Vec<&[usize]> = out.cover.cycles.iter().map(|c| c.vertices()).collect();
    Ok(json!({
        "cycles": cycles,
        "parts": out.parts,
        "stats": out.part_stats,
        "stage_timings": out.timings,
        "validation": "pass",
    }))
}

fn experiment(cli: &Cli, a: &ExperimentArgs) -> CliResult<Value> {
    let spec = match &a.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text)?
        }
        None => {
            let mut spec =
                ExperimentSpec::new(&a.name, a.instance.instance(), a.instance.adversary(), a.k, a.trials, cli.seed);
            if let (Some(lo), Some(hi)) = (a.sweep_lo, a.sweep_hi) {
                spec.sweep = Some(Sweep { lo, hi, steps: a.sweep_steps, threshold: a.sweep_threshold });
            }
            spec.save_artifacts = a.save_artifacts;
            spec.validate()?;
            spec
        }
    };
    let dir = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from("experiments")).join(&spec.name);
    let report = run_experiment_to(&spec, &dir)?;
    Ok(json!({
        "directory": dir,
        "success_rate": report.success_rate,
        "points": report.points,
        "bracket": report.bracket,
    }))
}

fn replay_cmd(cli: &Cli, a: &ReplayArgs) -> CliResult<Value> {
    let spec_file = if a.spec.is_dir() { a.spec.join("spec.json") } else { a.spec.clone() };
    let report = replay(&spec_file)?;
    let text = report.to_json();
    let stored = spec_file.parent().map(|d| d.join("report.json")).filter(|p| p.exists());
    let identical = match &stored {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| CliError::Failure(e.to_string()))? == text),
        None => None,
    };
    if let Some(dir) = &cli.output_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Failure(e.to_string()))?;
        fs::write(dir.join("report.json"), &text).map_err(|e| CliError::Failure(e.to_string()))?;
    }
    if identical == Some(false) {
        return Err(CliError::Validation(format!("replay differs from {}", stored.expect("compared").display())));
    }
    Ok(
        json!({"identical": identical, "success_rate": report.success_rate, "points": report.points, "bracket": report.bracket}),
    )
}

fn run(cli: &Cli) -> CliResult<Value> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let (name, value) = match &cli.command {
        Command::Gen(a) => ("gen", gen(cli, a)?),
        Command::CheckSparse(a) => ("check-sparse", check_sparse(cli, a)?),
        Command::CheckExpander(a) => ("check-expander", check_expander(cli, a)?),
        Command::Partition(a) => ("partition", partition(cli, a)?),
        Command::Connect(a) => ("connect", connect(cli, a)?),
        Command::BuildAbsorber(a) => ("build-absorber", absorber(cli, a)?),
        Command::Cover(a) => ("cover", cover(cli, a)?),
        Command::ResilienceExperiment(a) => return experiment(cli, a),
        Command::Replay(a) => return replay_cmd(cli, a),
    };
    if let Some(dir) = &cli.output_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Failure(e.to_string()))?;
        let text = serde_json::to_string_pretty(&value).expect("json");
        fs::write(dir.join(format!("{name}.json")), text).map_err(|e| CliError::Failure(e.to_string()))?;
    }
    Ok(value)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (CliError::Failure(m) | CliError::Config(m) | CliError::Validation(m)) = &e;
            eprintln!("error: {m}");
            ExitCode::from(e.code())
        }
    }
}
