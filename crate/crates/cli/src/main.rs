//! Command-line front end: graph export, walk simulation, exact exit laws,
//! reflection-coupling traces, Green/Martin tables, and identity verifiers.
//!
//! Exit status: 0 on success, 1 on verification or runtime failure, 2 on
//! usage errors. All artifacts are written atomically and embed the build
//! identifier; identical invocations produce byte-identical output.

mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gasket_core::coupling::{fold_path, folded_limit_cell_histogram, CouplingTrace};
use gasket_core::exact::{
    exit_distribution_with_budget, first_step_system, truncated_green_row_approx,
    truncated_green_with_budget, EXIT_SOLVER_BUDGET, GREEN_SOLVER_BUDGET,
};
use gasket_core::measures::{
    rational_to_f64, verify_group_invariance, verify_selfsimilar, verify_shift_identity,
    CellHistogram, VerifyReport, VerifySpec,
};
use gasket_core::symbolic::{GasketConfig, Word};
use gasket_core::walk::{limit_cell_histogram, RngSpec, SimulationSpec, DEFAULT_STEP_CAP};

#[derive(Parser)]
#[command(name = "gasket-walk", version, about = "Simple random walks on Sierpinski graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph structure utilities.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Monte Carlo histogram of the limit-cell estimator.
    Simulate(SimulateArgs),
    /// Distribution of the walk's first entrance to a level.
    ExitDist(ExitDistArgs),
    /// Reflection-coupling trace of a given or simulated path.
    Coupling(CouplingArgs),
    /// Killed Green function / Martin kernel tables.
    Green(GreenArgs),
    /// Identity verifiers with machine-readable reports.
    Verify(VerifyArgs),
    /// The first-step linear system at level one.
    FirstStep(FirstStepArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    /// CSV edge list of the truncated graph (columns: src, dst, kind).
    Export(GraphExportArgs),
}

#[derive(Args)]
struct Dimension {
    /// Gasket dimension d >= 1 (alphabet 0..=d).
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..=255))]
    d: u16,
}

impl Dimension {
    fn config(&self) -> GasketConfig {
        GasketConfig::new(self.d as usize).expect("range-checked by clap")
    }
}

#[derive(Args)]
struct GraphExportArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Truncation level.
    #[arg(long)]
    level: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Cell resolution of the histogram.
    #[arg(long)]
    level: usize,
    /// Extra depth below `level` before the cell is read off.
    #[arg(long, default_value_t = 15)]
    burn: usize,
    /// Number of independent walks.
    #[arg(long, default_value_t = 100_000)]
    walks: u64,
    /// Master seed; walk i uses stream i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start vertex ("-" is the root).
    #[arg(long, default_value = "-")]
    start: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Fold each walk onto the 0-subtree before reading the cell.
    #[arg(long)]
    folded: bool,
    /// Abort a walk after this many steps.
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExitDistArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Absorption level.
    #[arg(long)]
    level: usize,
    #[arg(long, default_value = "-")]
    start: String,
    /// Solve the absorbing chain exactly instead of simulating.
    #[arg(long)]
    exact: bool,
    /// State budget for the exact solver.
    #[arg(long, default_value_t = EXIT_SOLVER_BUDGET)]
    budget: usize,
    /// Walks for the Monte Carlo mode.
    #[arg(long, default_value_t = 100_000)]
    walks: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Comma-separated path to fold, e.g. "-,0,-,1,10,100,011,01,00".
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["random", "steps", "seed"])]
    path: Option<String>,
    /// Simulate a path instead of reading one.
    #[arg(long, requires = "steps")]
    random: bool,
    /// Number of simulated steps.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    start: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Killing radius: the walk dies on first reaching this level.
    #[arg(long)]
    radius: usize,
    /// Emit Martin kernels K(x,y) = G(x,y)/G(root,y) instead of G.
    #[arg(long)]
    kernel: bool,
    /// State budget for the exact dense inversion.
    #[arg(long, default_value_t = GREEN_SOLVER_BUDGET)]
    budget: usize,
    /// Iterative f64 fallback: emit only rows for --start sources.
    #[arg(long)]
    approx: bool,
    /// Source words for --approx (repeatable).
    #[arg(long, default_value = "-")]
    start: Vec<String>,
    /// Residual bound for the iterative fallback.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    dim: Dimension,
    /// Which identity to verify.
    #[arg(long, value_parser = ["group", "selfsimilar", "shift"])]
    identity: String,
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = 100_000)]
    walks: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 15)]
    burn: usize,
    /// Number of sampled cell sets.
    #[arg(long, default_value_t = 10)]
    sets: usize,
    /// Start vertex in the 0-subtree (shift identity only).
    #[arg(long, default_value = "00")]
    start: String,
    #[arg(long)]
    jobs: Option<usize>,
    /// Report file (stdout when omitted).
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct FirstStepArgs {
    #[command(flatten)]
    dim: Dimension,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_word(text: &str, cfg: &GasketConfig, flag: &str) -> Word {
    match Word::parse(text, cfg) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: invalid value for --{flag}: {e}");
            std::process::exit(2);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Graph {
            command: GraphCommand::Export(args),
        } => graph_export(args),
        Command::Simulate(args) => simulate(args),
        Command::ExitDist(args) => exit_dist(args),
        Command::Coupling(args) => coupling(args),
        Command::Green(args) => green(args),
        Command::Verify(args) => verify(args),
        Command::FirstStep(args) => first_step(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn graph_export(args: GraphExportArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let mut out = output::csv_header();
    out.push_str("src,dst,kind\n");
    for (src, dst, kind) in gasket_core::geometry::edges_up_to_level(args.level, &cfg) {
        writeln!(out, "{},{},{}", src.encode(&cfg), dst.encode(&cfg), kind.as_str())?;
    }
    output::emit(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn histogram_csv(hist: &CellHistogram, cfg: &GasketConfig) -> String {
    let mut out = output::csv_header();
    out.push_str("word,count,fraction\n");
    for (word, count) in hist.counts() {
        let _ = writeln!(
            out,
            "{},{},{}",
            word.encode(cfg),
            count,
            *count as f64 / hist.total() as f64
        );
    }
    out
}

fn simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let start = parse_word(&args.start, &cfg, "start");
    let mut spec = SimulationSpec::new(cfg, start, args.level, args.burn, args.walks)
        .with_seed(args.seed)
        .with_jobs(args.jobs);
    spec.step_cap = args.step_cap;
    let hist = if args.folded {
        folded_limit_cell_histogram(&spec)?
    } else {
        limit_cell_histogram(&spec)?
    };
    output::emit(args.out.as_deref(), &histogram_csv(&hist, &cfg))?;
    Ok(ExitCode::SUCCESS)
}

fn exit_dist(args: ExitDistArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let start = parse_word(&args.start, &cfg, "start");
    if args.exact {
        let dist = exit_distribution_with_budget(&start, args.level, &cfg, args.budget)?;
        let mut out = output::csv_header();
        out.push_str("word,prob,prob_float\n");
        for (word, p) in dist.entries() {
            writeln!(out, "{},{},{}", word.encode(&cfg), p, rational_to_f64(p))?;
        }
        output::emit(args.out.as_deref(), &out)?;
    } else {
        let spec = SimulationSpec::new(cfg, start, args.level, 0, args.walks)
            .with_seed(args.seed)
            .with_jobs(args.jobs);
        let hist = limit_cell_histogram(&spec)?;
        output::emit(args.out.as_deref(), &histogram_csv(&hist, &cfg))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn trace_json(trace: &CouplingTrace, cfg: &GasketConfig) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = trace
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "z": r.z.encode(cfg),
                "k": r.k,
                "y": r.y.as_ref().map(|w| w.encode(cfg)),
                "l": r.l,
                "g": r.g.as_ref().map(|g| g.encode()),
                "z_tilde": r.z_tilde.as_ref().map(|w| w.encode(cfg)),
            })
        })
        .collect();
    json!({
        "version": output::BUILD_ID,
        "d": cfg.d(),
        "rows": rows,
    })
}

fn coupling(args: CouplingArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let steps: Vec<Word> = if let Some(path_text) = &args.path {
        path_text
            .split(',')
            .map(|part| parse_word(part, &cfg, "path"))
            .collect()
    } else if args.random {
        let start = parse_word(&args.start, &cfg, "start");
        let count = args.steps.expect("clap enforces --steps with --random");
        let mut rng = RngSpec::new(args.seed, 0).stream();
        let mut steps = vec![start];
        for _ in 0..count {
            let next = gasket_core::walk::step(steps.last().unwrap(), &mut rng, &cfg);
            steps.push(next);
        }
        steps
    } else {
        eprintln!("error: coupling needs either --path or --random --steps K");
        std::process::exit(2);
    };
    // Reject paths that are not walks.
    for pair in steps.windows(2) {
        if !gasket_core::geometry::adjacent_combinatorial(&pair[0], &pair[1]) {
            eprintln!(
                "error: invalid value for --path: {} and {} are not adjacent",
                pair[0].encode(&cfg),
                pair[1].encode(&cfg)
            );
            std::process::exit(2);
        }
    }
    let trace = fold_path(&steps, &cfg);
    let doc = trace_json(&trace, &cfg);
    output::emit(
        args.out.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn green(args: GreenArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let mut out = output::csv_header();
    out.push_str("x,y,value,exact_flag\n");
    if args.approx {
        if args.kernel {
            anyhow::bail!("--kernel requires the exact mode (drop --approx)");
        }
        for source_text in &args.start {
            let source = parse_word(source_text, &cfg, "start");
            let row = truncated_green_row_approx(
                args.radius,
                &source,
                &cfg,
                args.tolerance,
                args.max_sweeps,
                args.budget.max(EXIT_SOLVER_BUDGET),
            )?;
            if row.residual > args.tolerance {
                anyhow::bail!(
                    "iteration stalled: residual {} above tolerance {} after {} sweeps",
                    row.residual,
                    args.tolerance,
                    row.sweeps
                );
            }
            for (y, v) in &row.values {
                writeln!(out, "{},{},{},false", source.encode(&cfg), y.encode(&cfg), v)?;
            }
        }
    } else {
        let green = truncated_green_with_budget(args.radius, &cfg, args.budget)?;
        for x in green.words() {
            for y in green.words() {
                let value = if args.kernel {
                    green.martin_kernel(x, y).expect("in-range pair")
                } else {
                    green.value(x, y).expect("in-range pair")
                };
                writeln!(out, "{},{},{},true", x.encode(&cfg), y.encode(&cfg), value)?;
            }
        }
    }
    output::emit(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let mut spec = VerifySpec::new(cfg, args.level, args.walks, args.seed);
    spec.burn = args.burn;
    spec.sample_sets = args.sets;
    spec.jobs = args.jobs;
    let report: VerifyReport = match args.identity.as_str() {
        "group" => verify_group_invariance(&spec)?,
        "selfsimilar" => verify_selfsimilar(&spec)?,
        "shift" => {
            let start = parse_word(&args.start, &cfg, "start");
            verify_shift_identity(&start, &spec)?
        }
        other => unreachable!("clap restricts identities, got {other}"),
    };
    let passed = report.passed;
    let mut doc = serde_json::to_value(&report)?;
    doc.as_object_mut()
        .expect("report serializes to an object")
        .insert("version".to_string(), json!(output::BUILD_ID));
    output::emit(
        args.json.as_deref(),
        &format!("{}\n", serde_json::to_string_pretty(&doc)?),
    )?;
    if passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed: see report");
        Ok(ExitCode::from(1))
    }
}

fn first_step(args: FirstStepArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.dim.config();
    let q = first_step_system(&cfg)?;
    let mut out = output::csv_header();
    out.push_str("state,value,value_float\n");
    let names = std::iter::once("-".to_string()).chain(cfg.symbols().map(|i| i.to_string()));
    for (name, value) in names.zip(&q) {
        writeln!(out, "{},{},{}", name, value, rational_to_f64(value))?;
    }
    output::emit(args.out.as_deref(), &out)?;
    Ok(ExitCode::SUCCESS)
}
