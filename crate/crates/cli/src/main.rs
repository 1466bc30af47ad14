mod error;
mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tensorlog::compiler::compile;
use tensorlog::datalog::{bench_tc, tc, BenchConfig, TcConfig, TcMethod, DEFAULT_TAU};
use tensorlog::evaluator::{evaluate_with, EvalOptions};
use tensorlog::formula::{parse_formula, Formula};
use tensorlog::matkit::AdjMatrix;
use tensorlog::model::{ground_eval, load_model, Assignment, FiniteModel};

use error::{CliError, EXIT_DISAGREE, EXIT_INPUT};

/// Evaluate first-order formulas over finite models by compiling them to
/// tensor programs, and compute transitive closures.
#[derive(Parser)]
#[command(name = "tensorlog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a closed prenex formula over a fact file.
    Eval(EvalArgs),
    /// Compile a formula and write the tensor program as JSON.
    Compile(CompileArgs),
    /// Transitive closure of a relation given as an edge list or CSV matrix.
    Tc(TcArgs),
    /// Time closure methods on random relations over a range of densities.
    Bench(BenchArgs),
    /// Run the bundled oracle-equivalence suites.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct FormulaSource {
    /// Fact file with `pred(c1,...,ck).` statements.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "formula_file", required_unless_present = "formula_file")]
    formula: Option<String>,
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    source: FormulaSource,
    /// Also evaluate by direct substitution and compare.
    #[arg(long)]
    oracle: bool,
    /// Include every definition tensor in the output.
    #[arg(long)]
    dump_intermediates: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    source: FormulaSource,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TcArgs {
    /// 1-based `i j` pairs, one per line; a `.csv` file is read as a dense matrix.
    #[arg(long)]
    edges: PathBuf,
    /// Relation size; defaults to the largest endpoint.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value = "closed", value_parser = parse_method)]
    method: TcMethod,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Closure destination: CSV if it ends in `.csv`, else an edge list.
    /// Without it the edge list goes to stdout and the summary to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    n: usize,
    /// Comma-separated edge probabilities.
    #[arg(long, value_delimiter = ',', required = true)]
    pe: Vec<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "closed", value_parser = parse_method)]
    methods: Vec<TcMethod>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Also write the rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Random formula cases; the other suites run a quarter as many.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_method(s: &str) -> Result<TcMethod, String> {
    s.parse().map_err(|e: tensorlog::datalog::TcError| e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn load(source: &FormulaSource) -> Result<(FiniteModel, Formula), CliError> {
    let m = load_model(&read(&source.model)?).map_err(|e| CliError::Model {
        path: source.model.clone(),
        source: e,
    })?;
    let text = match (&source.formula, &source.formula_file) {
        (Some(f), _) => f.clone(),
        (None, Some(path)) => read(path)?,
        (None, None) => return Err(CliError::Usage("one of --formula or --formula-file is required".into())),
    };
    Ok((m, parse_formula(text.trim())?))
}

fn cmd_eval(args: &EvalArgs) -> Result<u8, CliError> {
    let (m, f) = load(&args.source)?;
    let program = compile(&m, &f)?;
    let opts = EvalOptions {
        keep_intermediates: args.dump_intermediates,
        ..EvalOptions::default()
    };
    let result = evaluate_with(&m, &program, opts)?;
    let oracle = if args.oracle {
        Some(ground_eval(&m, &f, &Assignment::new())?)
    } else {
        None
    };
    let agree = oracle.is_none_or(|t| t == result.truth);

    if args.json {
        let mut v = result.to_json();
        if let Some(t) = oracle {
            v["oracle"] = json!({ "truth": t, "agree": agree });
        }
        println!("{v}");
    } else {
        println!("truth: {}", result.truth);
        println!("raw: {}", result.raw);
        println!(
            "contractions: {}  peak order: {}  wall: {:.3} ms",
            result.stats.contractions, result.stats.peak_order, result.stats.wall_ms
        );
        if let Some(t) = oracle {
            println!("oracle: {t} ({})", if agree { "agree" } else { "DISAGREE" });
        }
        for (name, t) in result.intermediates.iter().flatten() {
            println!("{name}: {}", t.to_json());
        }
    }
    Ok(if agree { 0 } else { EXIT_DISAGREE })
}

fn cmd_compile(args: &CompileArgs) -> Result<u8, CliError> {
    let (m, f) = load(&args.source)?;
    let text = serde_json::to_string_pretty(&compile(&m, &f)?.to_json()).expect("program serializes") + "\n";
    match &args.out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn cmd_tc(args: &TcArgs) -> Result<u8, CliError> {
    let text = read(&args.edges)?;
    let parsed = if is_csv(&args.edges) {
        AdjMatrix::read_csv(&text).and_then(|m| match args.n {
            Some(n) if n != m.dim() => Err(tensorlog::matkit::MatError::DimMismatch { left: n, right: m.dim() }),
            _ => m.check_boolean().map(|_| m),
        })
    } else {
        AdjMatrix::read_edge_list(&text, args.n)
    };
    let r1 = parsed.map_err(|e| CliError::Matrix {
        path: args.edges.clone(),
        source: e,
    })?;
    let cfg = TcConfig {
        tau: args.tau,
        ..TcConfig::default()
    };
    let sol = tc(args.method, &r1, &cfg)?;

    let summary = format!(
        "method: {}  n: {}  closure edges: {}  epsilon: {}  iterations: {}  wall: {:.3} ms",
        sol.method,
        sol.closure.dim(),
        sol.closure.count_ones(),
        sol.epsilon.map_or("-".into(), |e| format!("{e:e}")),
        sol.iterations.map_or("-".into(), |k| k.to_string()),
        sol.wall_ms
    );
    match &args.out {
        Some(path) => {
            let body = if is_csv(path) {
                sol.closure.to_csv()
            } else {
                sol.closure.to_edge_list()
            };
            write(path, &body)?;
            println!("{summary}");
        }
        None => {
            print!("{}", sol.closure.to_edge_list());
            eprintln!("{summary}");
        }
    }
    Ok(0)
}

fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let cfg = BenchConfig {
        n: args.n,
        p_es: args.pe.clone(),
        runs: args.runs as usize,
        seed: args.seed,
        methods: args.methods.clone(),
        tc: TcConfig {
            tau: args.tau,
            ..TcConfig::default()
        },
    };
    let report = bench_tc(&cfg)?;
    if let Some(path) = &args.csv {
        let text = report.to_csv().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
        write(path, &text)?;
    }
    println!("{}", serde_json::to_string_pretty(&report.to_json()).expect("report serializes"));
    Ok(0)
}

fn cmd_selftest(args: &SelftestArgs) -> Result<u8, CliError> {
    let suites = selftest::run(args.cases, args.seed)?;
    for s in &suites {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        println!("{status} {}: {} cases, {} failures", s.name, s.cases, s.failures.len());
        for f in s.failures.iter().take(5) {
            println!("  {f}");
        }
    }
    Ok(if suites.iter().all(|s| s.passed()) { 0 } else { EXIT_DISAGREE })
}

/// Sizes the global rayon pool from `TENSORLOG_THREADS`, if set.
fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TENSORLOG_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Threads(format!("expected a positive integer, found `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    init_threads()?;
    match &cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Tc(a) => cmd_tc(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
