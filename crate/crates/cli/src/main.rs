//! Command-line front end: termination checks of single processes,
//! benchmark runs over directories, and state-space exploration.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use piterm::chc::{emit_smtlib2_horn, SolverSpec};
use piterm::explore::{Exploration, NondetDomain};
use piterm::pipeline::{run_benchmarks, run_pipeline, CheckMode, EmitKind, Mode, PipelineConfig};
use piterm::pisem::explore_terminates;
use piterm::refine::RefineFlavor;
use piterm::seq::{explore_seq_terminates, Semantics};
use piterm::syntax::parse_process;
use piterm::termcheck::CheckConfig;
use piterm::translate::{normalize, translate_basic};
use piterm::typing::infer_simple_types;
use tracing_subscriber::EnvFilter;

/// Exit code for input, type and I/O errors.
const EXIT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "pi-term", version, about = "Termination analysis for pi-calculus processes")]
struct Cli {
    /// More log output; repeat for more detail. `RUST_LOG` overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one process for termination.
    Check(CheckArgs),
    /// Check every `.pi` file of a directory and compare with `.expect` sidecars.
    Bench(BenchArgs),
    /// Explore the reachable states of a process, or of its translation.
    Explore(ExploreArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Basic,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    /// One refinement per channel type.
    Plain,
    /// Separate input and output refinements with subtyping.
    Io,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Builtin,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmitArg {
    Ir,
    C,
    Smt2,
}

#[derive(Args)]
struct AnalysisArgs {
    #[arg(long, value_enum, default_value = "basic")]
    mode: ModeArg,
    /// Refinement templates used in refined mode.
    #[arg(long, value_enum, default_value = "io")]
    flavor: FlavorArg,
    /// Termination check of the translated program.
    #[arg(long, value_enum, default_value = "builtin")]
    check: CheckArg,
    /// Horn clause solver: a shell command, with `{file}` standing for the
    /// problem file (stdin otherwise), or `file:PATH` to replay recorded
    /// responses.
    #[arg(long, value_name = "CMD")]
    solver_cmd: Option<String>,
    /// A second solver; solutions of both are conjoined.
    #[arg(long, value_name = "CMD")]
    solver_cmd2: Option<String>,
    /// Per-query solver timeout in seconds.
    #[arg(long, default_value_t = 30, value_name = "SECS")]
    solver_timeout: u64,
    /// SMT solver reading SMT-LIB2 on stdin, for ranking functions with
    /// arbitrary coefficients (e.g. `z3 -in`).
    #[arg(long, value_name = "CMD")]
    smt_cmd: Option<String>,
    /// Maximal number of refinement rounds.
    #[arg(long, default_value_t = 5, value_name = "N")]
    cegar_max: usize,
    /// Extra values for nondeterministic choices in the lasso search:
    /// `a..b` or a comma-separated list.
    #[arg(long, default_value = "-1..1", allow_hyphen_values = true)]
    dom: NondetDomain,
    /// Maximal number of call states visited by the lasso search.
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    budget: usize,
}

impl AnalysisArgs {
    fn config(&self) -> PipelineConfig {
        let timeout = Duration::from_secs(self.solver_timeout);
        let solvers = [&self.solver_cmd, &self.solver_cmd2]
            .into_iter()
            .flatten()
            .map(|c| SolverSpec::parse(c, timeout))
            .collect();
        PipelineConfig {
            mode: match self.mode {
                ModeArg::Basic => Mode::Basic,
                ModeArg::Refined => Mode::Refined,
            },
            flavor: match self.flavor {
                FlavorArg::Plain => RefineFlavor::Plain,
                FlavorArg::Io => RefineFlavor::InputOutput,
            },
            check: match self.check {
                CheckArg::Builtin => CheckMode::Builtin,
                CheckArg::None => CheckMode::None,
            },
            solvers,
            cegar_max: self.cegar_max,
            termcheck: CheckConfig {
                dom: self.dom.clone(),
                lasso_budget: self.budget,
                smt: self.smt_cmd.as_ref().map(|c| SolverSpec::parse(c, timeout)),
            },
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Files to write: the translated program, its C rendering, the Horn
    /// problem.
    #[arg(long, value_enum, value_delimiter = ',')]
    emit: Vec<EmitArg>,
    /// Also keep the Horn problem and program of every refinement round.
    #[arg(long)]
    keep_artifacts: bool,
    /// Output directory.
    #[arg(short, long, default_value = "pi-term-out")]
    output: PathBuf,
    /// Print the final Horn problem (refined mode).
    #[arg(long)]
    dump_chc: bool,
    /// Save the responses of the first solver as a replayable stub file.
    #[arg(long, value_name = "PATH")]
    record_models: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    analysis: AnalysisArgs,
}

#[derive(Args)]
struct ExploreArgs {
    file: PathBuf,
    /// Values for nondeterministic choices: `a..b` or a comma-separated list.
    #[arg(long, default_value = "-1..2", allow_hyphen_values = true)]
    dom: NondetDomain,
    /// Maximal number of distinct states.
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    /// Explore the basic translation under the given semantics instead of
    /// the process.
    #[arg(long, value_enum)]
    program: Option<SemanticsArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Standard,
    Nonstandard,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    let result = match cli.command {
        Command::Check(args) => check(args),
        Command::Bench(args) => bench(args),
        Command::Explore(args) => explore(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn check(args: CheckArgs) -> Result<u8> {
    let source = std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let stem = args.file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    let cfg = PipelineConfig {
        emit: args
            .emit
            .iter()
            .map(|e| match e {
                EmitArg::Ir => EmitKind::Ir,
                EmitArg::C => EmitKind::C,
                EmitArg::Smt2 => EmitKind::Smt2,
            })
            .collect(),
        out_dir: args.output,
        keep_artifacts: args.keep_artifacts,
        record_models: args.record_models,
        ..args.analysis.config()
    };
    let report = run_pipeline(&source, &stem, &cfg)?;
    if args.dump_chc && cfg.mode == Mode::Refined {
        print!("{}", emit_smtlib2_horn(&report.clauses));
    }
    tracing::info!(iterations = report.cegar_iters, elapsed = ?report.elapsed, "done");
    println!("{}", report.verdict);
    Ok(report.verdict.exit_code() as u8)
}

fn bench(args: BenchArgs) -> Result<u8> {
    let cfg = args.analysis.config();
    let records = run_benchmarks(&args.dir, &cfg).with_context(|| format!("reading {}", args.dir.display()))?;
    let mut out = std::io::stdout().lock();
    let mut mismatches = 0;
    for r in &records {
        writeln!(out, "{r}")?;
        if r.matches_expectation() == Some(false) {
            mismatches += 1;
            eprintln!("{}: expected {}, got {}", r.file, r.expected.as_deref().unwrap_or("?"), r.detail);
        }
    }
    Ok(u8::from(mismatches > 0))
}

fn explore(args: ExploreArgs) -> Result<u8> {
    let source = std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let process = parse_process(&source)?;
    let outcome: Exploration<String> = match args.program {
        None => explore_terminates(&process, &args.dom, args.budget).map(|s| s.to_string()),
        Some(sem) => {
            let prog = normalize(&translate_basic(&infer_simple_types(&process)?));
            let sem = match sem {
                SemanticsArg::Standard => Semantics::Standard,
                SemanticsArg::Nonstandard => Semantics::Nonstandard,
            };
            explore_seq_terminates(&prog, &args.dom, args.budget, sem).map(|e| e.to_string())
        }
    };
    println!("{outcome}");
    Ok(match outcome {
        Exploration::Terminates { .. } => 0,
        Exploration::Diverges { .. } => 1,
        Exploration::BudgetExhausted { .. } => 2,
    })
}
