//! End-to-end analysis: parse, type, optionally infer refinements, translate
//! and check; and the benchmark harness built on it.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::chc::{add_nonloop_clauses, emit_smtlib2_horn, solve_all, Solver, SolverKind, SolverOutcome, SolverSpec};
use crate::emit_c::emit_c;
use crate::refine::{apply_solution, gen_constraints, HornClause, PredInfo, RefineFlavor, Solution};
use crate::seq::SeqProgram;
use crate::syntax::{parse_process, ParseError};
use crate::termcheck::{check_termination, cycle_clauses, CheckConfig, CycleClause, CheckResult, Lasso, RankingCertificate};
use crate::translate::{normalize, translate_basic, translate_refined, TranslateError};
use crate::typing::{infer_simple_types, TypeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Mode {
    #[default]
    Basic,
    Refined,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Basic => "basic",
            Mode::Refined => "refined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CheckMode {
    #[default]
    Builtin,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmitKind {
    Ir,
    C,
    Smt2,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub flavor: RefineFlavor,
    pub check: CheckMode,
    pub emit: BTreeSet<EmitKind>,
    pub solvers: Vec<SolverSpec>,
    pub cegar_max: usize,
    pub termcheck: CheckConfig,
    /// Where emitted files and artifacts go.
    pub out_dir: PathBuf,
    /// Keep the Horn problem and program of every refinement round.
    pub keep_artifacts: bool,
    /// Write the raw responses of the first solver here, as a stub file.
    pub record_models: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Basic,
            flavor: RefineFlavor::default(),
            check: CheckMode::Builtin,
            emit: BTreeSet::new(),
            solvers: Vec::new(),
            cegar_max: 5,
            termcheck: CheckConfig::default(),
            out_dir: PathBuf::from("pi-term-out"),
            keep_artifacts: false,
            record_models: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    /// The program has an infinite run; refinement could not exclude it.
    Lasso(Lasso),
    /// Neither a ranking function nor a lasso was found.
    Budget,
    SolverFailure(String),
    NotChecked,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Terminating { certificate: RankingCertificate, mode: Mode },
    Unknown { reason: UnknownReason, artifacts: Vec<PathBuf> },
}

impl Verdict {
    pub fn is_terminating(&self) -> bool {
        matches!(self, Verdict::Terminating { .. })
    }

    /// `TERMINATING` or `UNKNOWN`.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Terminating { .. } => "TERMINATING",
            Verdict::Unknown { .. } => "UNKNOWN",
        }
    }

    /// 0 terminating, 1 lasso, 2 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Terminating { .. } => 0,
            Verdict::Unknown { reason: UnknownReason::Lasso(_), .. } => 1,
            Verdict::Unknown { .. } => 2,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Terminating { certificate, .. } => write!(f, "TERMINATING (rank: {certificate})"),
            Verdict::Unknown { reason, .. } => match reason {
                UnknownReason::Lasso(l) => write!(f, "UNKNOWN (lasso: {l})"),
                UnknownReason::Budget => write!(f, "UNKNOWN (budget)"),
                UnknownReason::SolverFailure(why) => write!(f, "UNKNOWN (solver failure: {why})"),
                UnknownReason::NotChecked => write!(f, "UNKNOWN (not checked)"),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse: {0}")]
    Parse(#[from] ParseError),
    #[error("type: {0}")]
    Type(#[from] TypeError),
    #[error("translate: {0}")]
    Translate(#[from] TranslateError),
    #[error("refine: refined mode needs a solver")]
    NoSolver,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub verdict: Verdict,
    /// Refinement rounds run; 0 in basic mode.
    pub cegar_iters: usize,
    /// The last program checked.
    pub program: SeqProgram,
    /// The last solution used, in refined mode.
    pub solution: Option<Solution>,
    /// The Horn clauses of the last round, extra clauses included.
    pub clauses: Vec<HornClause>,
    /// Predicate variables of the templates, in refined mode.
    pub preds: Vec<PredInfo>,
    /// Every solution obtained, with the clauses it was asked to satisfy.
    pub rounds: Vec<(Vec<HornClause>, Solution)>,
    pub elapsed: Duration,
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    stem: String,
    artifacts: Vec<PathBuf>,
}

impl Run<'_> {
    fn write(&mut self, name: String, text: &str) -> Result<(), PipelineError> {
        std::fs::create_dir_all(&self.cfg.out_dir)?;
        let path = self.cfg.out_dir.join(name);
        std::fs::write(&path, text)?;
        self.artifacts.push(path);
        Ok(())
    }

    fn emit(&mut self, prog: &SeqProgram, clauses: &[HornClause]) -> Result<(), PipelineError> {
        let kinds = self.cfg.emit.clone();
        for k in kinds {
            match k {
                EmitKind::Ir => self.write(format!("{}.ir", self.stem), &prog.to_string())?,
                EmitKind::C => self.write(format!("{}.c", self.stem), &emit_c(prog))?,
                EmitKind::Smt2 if self.cfg.mode == Mode::Refined => {
                    self.write(format!("{}.smt2", self.stem), &emit_smtlib2_horn(clauses))?
                }
                EmitKind::Smt2 => {}
            }
        }
        Ok(())
    }

    fn check(&self, prog: &SeqProgram) -> CheckResult {
        match self.cfg.check {
            CheckMode::Builtin => check_termination(prog, &self.cfg.termcheck),
            CheckMode::None => CheckResult::Unknown,
        }
    }

    fn unknown(&self, reason: UnknownReason) -> Verdict {
        let reason = if self.cfg.check == CheckMode::None { UnknownReason::NotChecked } else { reason };
        Verdict::Unknown { reason, artifacts: self.artifacts.clone() }
    }
}

/// Runs the analysis on the source text of a process. `stem` names the
/// emitted files.
pub fn run_pipeline(source: &str, stem: &str, cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let start = Instant::now();
    let typed = infer_simple_types(&parse_process(source)?)?;
    let mut run = Run { cfg, stem: stem.to_string(), artifacts: Vec::new() };

    if cfg.mode == Mode::Basic {
        let prog = normalize(&translate_basic(&typed));
        run.emit(&prog, &[])?;
        let verdict = match run.check(&prog) {
            CheckResult::Terminating(certificate) => Verdict::Terminating { certificate, mode: Mode::Basic },
            CheckResult::NonTerminating(l) => run.unknown(UnknownReason::Lasso(l)),
            CheckResult::Unknown => run.unknown(UnknownReason::Budget),
        };
        return Ok(PipelineReport {
            verdict,
            cegar_iters: 0,
            program: prog,
            solution: None,
            clauses: Vec::new(),
            preds: Vec::new(),
            rounds: Vec::new(),
            elapsed: start.elapsed(),
        });
    }

    if cfg.solvers.is_empty() {
        return Err(PipelineError::NoSolver);
    }
    let cons = gen_constraints(&typed, cfg.flavor);
    let preds = &cons.templates.preds;
    let symbolic = normalize(&translate_refined(&typed, &cons.templates.typing)?);
    let solvers: Vec<Solver> = cfg.solvers.iter().cloned().map(Solver::new).collect();
    let mut clauses = cons.clauses.clone();
    let mut last_lasso = None;
    let mut program = symbolic.clone();
    let mut solution = None;
    let mut rounds = Vec::new();
    let mut iters = 0;
    let verdict = loop {
        if iters == cfg.cegar_max {
            let reason = last_lasso.take().map(UnknownReason::Lasso).unwrap_or(UnknownReason::Budget);
            break run.unknown(reason);
        }
        iters += 1;
        if cfg.keep_artifacts {
            run.write(format!("{stem}.iter{iters}.smt2"), &emit_smtlib2_horn(&clauses))?;
        }
        let sol = match solve_all(&solvers, &clauses, preds) {
            SolverOutcome::Sat(sol) => sol,
            other => break run.unknown(UnknownReason::SolverFailure(format!("{other:?}"))),
        };
        tracing::info!(round = iters, solution = %sol, "refinement");
        rounds.push((clauses.clone(), sol.clone()));
        let typing = apply_solution(&cons.templates, &sol);
        program = normalize(&translate_refined(&typed, &typing)?);
        solution = Some(sol);
        if cfg.keep_artifacts {
            run.write(format!("{stem}.iter{iters}.ir"), &program.to_string())?;
        }
        match run.check(&program) {
            CheckResult::Terminating(certificate) => break Verdict::Terminating { certificate, mode: Mode::Refined },
            CheckResult::Unknown => break run.unknown(UnknownReason::Budget),
            CheckResult::NonTerminating(lasso) => {
                let cands = cycle_clauses(&lasso, &symbolic);
                if cands.is_empty() {
                    tracing::info!(%lasso, "lasso has no refinement-guarded call");
                    break run.unknown(UnknownReason::Lasso(lasso));
                }
                // Prefer a new clause that forbids a step of this very cycle.
                let fresh = |c: &&CycleClause| !clauses.contains(&c.clause);
                let Some(extra) = cands.iter().filter(fresh).find(|c| c.refutes_step).or_else(|| cands.iter().find(fresh))
                else {
                    tracing::info!(%lasso, "every extra clause for this lasso is already present");
                    break run.unknown(UnknownReason::Lasso(lasso));
                };
                let extra = extra.clause.clone();
                let next = add_nonloop_clauses(&clauses, std::slice::from_ref(&extra));
                tracing::info!(clause = %extra, "adding extra clause");
                clauses = next;
                last_lasso = Some(lasso);
            }
        }
    };
    run.emit(&program, &clauses)?;
    let verdict = match verdict {
        Verdict::Unknown { reason, .. } => Verdict::Unknown { reason, artifacts: run.artifacts.clone() },
        v => v,
    };
    if let Some(path) = &cfg.record_models {
        std::fs::write(path, solvers[0].transcript())?;
    }
    Ok(PipelineReport {
        verdict,
        cegar_iters: iters,
        program,
        solution,
        clauses,
        preds: preds.clone(),
        rounds,
        elapsed: start.elapsed(),
    })
}

/// One line of a benchmark report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub file: String,
    pub mode: Mode,
    /// `TERMINATING`, `UNKNOWN` or `ERROR`.
    pub verdict: String,
    /// The full verdict or error message.
    pub detail: String,
    pub cegar_iters: usize,
    pub wall_ms: u128,
    /// Expected verdict from the `.expect` sidecar, if any.
    pub expected: Option<String>,
}

impl BenchRecord {
    pub fn matches_expectation(&self) -> Option<bool> {
        self.expected.as_ref().map(|e| *e == self.verdict)
    }
}

impl fmt::Display for BenchRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}, {}, {}", self.file, self.mode, self.verdict, self.cegar_iters, self.wall_ms)
    }
}

/// Reads a `.expect` sidecar: lines `basic: TERMINATING`, `refined: UNKNOWN`;
/// `#` starts a comment.
pub fn read_expectation(text: &str, mode: Mode) -> Option<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter_map(|l| l.split_once(':'))
        .find(|(m, _)| m.trim() == mode.to_string())
        .map(|(_, v)| v.trim().to_string())
}

/// Runs every `.pi` file of `dir` in parallel and reports in file name
/// order. In refined mode without a configured solver, the recorded
/// solver responses in the `.model` sidecar of each file are used.
pub fn run_benchmarks(dir: &Path, cfg: &PipelineConfig) -> std::io::Result<Vec<BenchRecord>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pi"))
        .collect();
    files.sort();
    Ok(files.par_iter().map(|p| bench_one(p, cfg)).collect())
}

fn bench_one(path: &Path, cfg: &PipelineConfig) -> BenchRecord {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = path.file_stem().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let expected =
        std::fs::read_to_string(path.with_extension("expect")).ok().and_then(|t| read_expectation(&t, cfg.mode));
    let mut cfg = cfg.clone();
    let stub = path.with_extension("model");
    if cfg.mode == Mode::Refined && cfg.solvers.is_empty() && stub.exists() {
        cfg.solvers.push(SolverSpec {
            name: format!("stub {}", stub.display()),
            kind: SolverKind::Stub(stub),
            timeout: Duration::from_secs(30),
        });
    }
    let start = Instant::now();
    let result = std::fs::read_to_string(path).map_err(PipelineError::from).and_then(|src| run_pipeline(&src, &stem, &cfg));
    let wall_ms = start.elapsed().as_millis();
    match result {
        Ok(r) => BenchRecord {
            file,
            mode: cfg.mode,
            verdict: r.verdict.label().to_string(),
            detail: r.verdict.to_string(),
            cegar_iters: r.cegar_iters,
            wall_ms,
            expected,
        },
        Err(e) => BenchRecord {
            file,
            mode: cfg.mode,
            verdict: "ERROR".into(),
            detail: e.to_string(),
            cegar_iters: 0,
            wall_ms,
            expected,
        },
    }
}
