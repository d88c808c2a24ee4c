//! Horn clause serialization in the SMT-LIB2 `HORN` logic, and driving
//! external CHC solvers.
//!
//! A solver is a shell command template in which `{file}` is replaced by
//! the path of the query. A spec of the form `file:PATH` replays recorded
//! solver responses instead: the responses in `PATH` are separated by
//! lines reading `;; ---` and the i-th query gets the i-th response, the
//! last one repeating.

mod sexp;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write as _};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::logic::{CmpOp, Formula, PredApp, PredVar};
use crate::refine::{Head, HornClause, PredInfo, Solution};
use crate::syntax::{Op, SimpleExpr};

pub use sexp::{parse_sexps, read_model, ModelEntry, Sexp};

/// Separator between recorded responses in a stub file.
pub const STUB_SEPARATOR: &str = ";; ---";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverKind {
    /// A shell command; `{file}` is replaced by the query path, otherwise
    /// the query is passed on stdin.
    Command(String),
    /// Recorded responses replayed in order.
    Stub(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverSpec {
    pub name: String,
    pub kind: SolverKind,
    pub timeout: Duration,
}

impl SolverSpec {
    /// Parses `file:PATH` as a stub and anything else as a command.
    pub fn parse(text: &str, timeout: Duration) -> SolverSpec {
        match text.strip_prefix("file:") {
            Some(path) => SolverSpec { name: format!("stub {path}"), kind: SolverKind::Stub(path.into()), timeout },
            None => {
                let name = text.split_whitespace().next().unwrap_or("solver").to_string();
                SolverSpec { name, kind: SolverKind::Command(text.to_string()), timeout }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverOutcome {
    Sat(Solution),
    Unsat,
    Unknown,
    Timeout,
    ToolError(String),
}

impl SolverOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            SolverOutcome::Sat(s) => Some(s),
            _ => None,
        }
    }
}

fn symbol(s: &str) -> String {
    const RESERVED: &[&str] =
        &["and", "or", "not", "let", "forall", "exists", "ite", "true", "false", "distinct", "assert", "Int", "Bool"];
    let plain = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain && !RESERVED.contains(&s) {
        s.to_string()
    } else {
        format!("|{s}|")
    }
}

fn cmp_smt(op: CmpOp, a: String, b: String) -> String {
    match op {
        CmpOp::Lt => format!("(< {a} {b})"),
        CmpOp::Le => format!("(<= {a} {b})"),
        CmpOp::Eq => format!("(= {a} {b})"),
        CmpOp::Ne => format!("(not (= {a} {b}))"),
        CmpOp::Gt => format!("(> {a} {b})"),
        CmpOp::Ge => format!("(>= {a} {b})"),
    }
}

/// An integer term. Boolean-valued subexpressions read as 1 or 0.
fn int_smt(e: &SimpleExpr) -> String {
    match e {
        SimpleExpr::Var(x) => symbol(x),
        SimpleExpr::IntLit(k) if *k < 0 => format!("(- {})", k.unsigned_abs()),
        SimpleExpr::IntLit(k) => k.to_string(),
        SimpleExpr::Op(op, args) => match op {
            Op::Add => format!("(+ {} {})", int_smt(&args[0]), int_smt(&args[1])),
            Op::Sub => format!("(- {} {})", int_smt(&args[0]), int_smt(&args[1])),
            Op::Mul => format!("(* {} {})", int_smt(&args[0]), int_smt(&args[1])),
            Op::Neg => format!("(- {})", int_smt(&args[0])),
            _ => format!("(ite {} 1 0)", formula_smt(&Formula::from_expr(e))),
        },
    }
}

fn app_smt(p: &PredApp) -> String {
    if p.args.is_empty() {
        return p.pred.to_string();
    }
    let args: Vec<String> = p.args.iter().map(int_smt).collect();
    format!("({} {})", p.pred, args.join(" "))
}

fn formula_smt(f: &Formula) -> String {
    let many = |op: &str, fs: &[Formula], unit: &str| match fs {
        [] => unit.to_string(),
        [g] => formula_smt(g),
        _ => format!("({op} {})", fs.iter().map(formula_smt).collect::<Vec<_>>().join(" ")),
    };
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Cmp(op, a, b) => cmp_smt(*op, int_smt(a), int_smt(b)),
        Formula::Not(g) => format!("(not {})", formula_smt(g)),
        Formula::And(fs) => many("and", fs, "true"),
        Formula::Or(fs) => many("or", fs, "false"),
        Formula::Pred(p) => app_smt(p),
    }
}

fn pred_arities(clauses: &[HornClause]) -> Vec<(PredVar, usize)> {
    let mut out: Vec<(PredVar, usize)> = Vec::new();
    for c in clauses {
        let heads = match &c.head {
            Head::Pred(p) => vec![p],
            Head::Constraint(_) => vec![],
        };
        for p in c.body.iter().chain(heads) {
            if !out.iter().any(|(v, _)| *v == p.pred) {
                out.push((p.pred, p.args.len()));
            }
        }
    }
    out
}

/// The clauses as an SMT-LIB2 `HORN` problem. Predicate variables are
/// declared in order of first use and clauses keep their order.
pub fn emit_smtlib2_horn(clauses: &[HornClause]) -> String {
    let mut out = String::from("(set-logic HORN)\n");
    for (p, arity) in pred_arities(clauses) {
        let sorts = vec!["Int"; arity].join(" ");
        writeln!(out, "(declare-fun {p} ({sorts}) Bool)").expect("writing to a string");
    }
    for c in clauses {
        let mut lhs: Vec<String> = c.body.iter().map(app_smt).collect();
        if !c.constraint.is_true() {
            lhs.push(formula_smt(&c.constraint));
        }
        let body = match lhs.len() {
            0 => "true".to_string(),
            1 => lhs.pop().expect("one element"),
            _ => format!("(and {})", lhs.join(" ")),
        };
        let imp = format!("(=> {body} {})", formula_smt(&c.head_formula()));
        if c.vars.is_empty() {
            writeln!(out, "(assert {imp})").expect("writing to a string");
        } else {
            let binds: Vec<String> = c.vars.iter().map(|v| format!("({} Int)", symbol(v))).collect();
            writeln!(out, "(assert (forall ({}) {imp}))", binds.join(" ")).expect("writing to a string");
        }
    }
    out.push_str("(check-sat)\n");
    if !clauses.is_empty() {
        out.push_str("(get-model)\n");
    }
    out
}

/// Interprets the standard output of a solver. Definitions of predicate
/// variables get the formal parameters of `preds`; predicates the model
/// leaves out read as `true`.
pub fn parse_solver_output(text: &str, preds: &[PredInfo]) -> SolverOutcome {
    let sexps = match parse_sexps(text) {
        Ok(s) => s,
        Err(e) => return SolverOutcome::ToolError(format!("unreadable solver output: {e}")),
    };
    let mut it = sexps.iter();
    let status = loop {
        match it.next() {
            Some(Sexp::Atom(a)) => break a.as_str(),
            Some(Sexp::List(l)) if l.first() == Some(&Sexp::Atom("error".into())) => {
                return SolverOutcome::ToolError(Sexp::List(l.clone()).to_string())
            }
            Some(_) => continue,
            None => return SolverOutcome::ToolError("empty solver output".into()),
        }
    };
    match status {
        "unsat" => return SolverOutcome::Unsat,
        "unknown" => return SolverOutcome::Unknown,
        "timeout" => return SolverOutcome::Timeout,
        "sat" => {}
        other => return SolverOutcome::ToolError(format!("unexpected solver answer `{other}`")),
    }
    let by_name: BTreeMap<String, &PredInfo> = preds.iter().map(|p| (p.var.to_string(), p)).collect();
    let mut sol = Solution::trivial(preds);
    for model in it {
        let param = |f: &str, i: usize| by_name.get(f).and_then(|p| p.params.get(i).cloned());
        let entries = match read_model(model, &param) {
            Ok(e) => e,
            Err(e) => return SolverOutcome::ToolError(format!("malformed model: {e}")),
        };
        for e in entries {
            let Some(info) = by_name.get(&e.name) else { continue };
            if info.params.len() != e.arity {
                return SolverOutcome::ToolError(format!("{} has arity {} in the model", e.name, e.arity));
            }
            sol.map.insert(info.var, e.body);
        }
    }
    SolverOutcome::Sat(sol)
}

/// Pointwise conjunction of two solutions, simplified.
pub fn conjoin_solutions(a: &Solution, b: &Solution) -> Solution {
    if a == b {
        return a.clone();
    }
    a.conjoin(b)
}

/// Appends the clauses of `extras` that are not already present.
pub fn add_nonloop_clauses(clauses: &[HornClause], extras: &[HornClause]) -> Vec<HornClause> {
    let mut out = clauses.to_vec();
    for e in extras {
        if !out.contains(e) {
            out.push(e.clone());
        }
    }
    out
}

/// A solver together with its position in a stub response sequence.
#[derive(Debug)]
pub struct Solver {
    pub spec: SolverSpec,
    calls: AtomicUsize,
    transcript: Mutex<Vec<String>>,
}

impl Solver {
    pub fn new(spec: SolverSpec) -> Solver {
        Solver { spec, calls: AtomicUsize::new(0), transcript: Mutex::new(Vec::new()) }
    }

    /// Every output received so far, in the format of a stub file.
    pub fn transcript(&self) -> String {
        let t = self.transcript.lock().expect("transcript lock");
        t.iter().map(|r| r.trim_end().to_string()).collect::<Vec<_>>().join(&format!("\n{STUB_SEPARATOR}\n")) + "\n"
    }

    /// Solves a problem already written as SMT-LIB2 text, returning the
    /// raw output.
    pub fn run_raw(&self, horn: &str) -> Result<String, SolverOutcome> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        match &self.spec.kind {
            SolverKind::Stub(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| SolverOutcome::ToolError(format!("cannot read {}: {e}", path.display())))?;
                let responses = split_stub(&text);
                let last = responses.len().saturating_sub(1);
                Ok(responses.get(call.min(last)).cloned().unwrap_or_default())
            }
            SolverKind::Command(cmd) => run_smt_command(cmd, horn, self.spec.timeout),
        }
    }

    pub fn solve(&self, horn: &str, preds: &[PredInfo]) -> SolverOutcome {
        match self.run_raw(horn) {
            Ok(out) => {
                self.transcript.lock().expect("transcript lock").push(out.clone());
                parse_solver_output(&out, preds)
            }
            Err(o) => {
                let text = match &o {
                    SolverOutcome::Timeout => "timeout".to_string(),
                    other => format!("; {other:?}\nunknown"),
                };
                self.transcript.lock().expect("transcript lock").push(text);
                o
            }
        }
    }
}

/// Runs one solver on one problem.
pub fn run_solver(spec: &SolverSpec, horn: &str, preds: &[PredInfo]) -> SolverOutcome {
    Solver::new(spec.clone()).solve(horn, preds)
}

/// The responses of a stub file.
pub fn split_stub(text: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    for line in text.lines() {
        if line.trim() == STUB_SEPARATOR {
            out.push(String::new());
        } else {
            let cur = out.last_mut().expect("non-empty");
            cur.push_str(line);
            cur.push('\n');
        }
    }
    out
}

/// Runs a shell command on an SMT-LIB2 problem and returns its output.
pub fn run_smt_command(cmd: &str, horn: &str, timeout: Duration) -> Result<String, SolverOutcome> {
    let tool = |e: std::io::Error| SolverOutcome::ToolError(e.to_string());
    let mut file = tempfile::Builder::new().suffix(".smt2").tempfile().map_err(tool)?;
    file.write_all(horn.as_bytes()).map_err(tool)?;
    file.flush().map_err(tool)?;
    let uses_file = cmd.contains("{file}");
    let line = cmd.replace("{file}", &file.path().display().to_string());
    tracing::debug!(command = %line, "running CHC solver");
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&line)
        .stdin(if uses_file { Stdio::null() } else { Stdio::piped() })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(tool)?;
    if !uses_file {
        let mut stdin = child.stdin.take().expect("piped stdin");
        let text = horn.to_string();
        std::thread::spawn(move || stdin.write_all(text.as_bytes()));
    }
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait().map_err(tool)? {
            Some(st) => break st,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SolverOutcome::Timeout);
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    };
    let out = reader.join().expect("reader thread").map_err(tool)?;
    let err = err_reader.join().expect("reader thread");
    if out.trim().is_empty() {
        return Err(SolverOutcome::ToolError(format!("solver exited with {status} and no output: {}", err.trim())));
    }
    Ok(out)
}

/// Runs every solver concurrently. Solutions that do not satisfy the
/// clauses are discarded; the remaining ones are conjoined. Without any
/// solution, the first failure is reported.
pub fn solve_all(solvers: &[Solver], clauses: &[HornClause], preds: &[PredInfo]) -> SolverOutcome {
    let horn = emit_smtlib2_horn(clauses);
    let outcomes: Vec<SolverOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = solvers.iter().map(|sv| s.spawn(|| sv.solve(&horn, preds))).collect();
        handles.into_iter().map(|h| h.join().expect("solver thread")).collect()
    });
    let mut solutions = Vec::new();
    let mut failure = None;
    for (sv, o) in solvers.iter().zip(outcomes) {
        match o {
            SolverOutcome::Sat(sol) => match sol.check(preds, clauses) {
                Ok(()) => solutions.push(sol),
                Err(c) => {
                    tracing::warn!(solver = %sv.spec.name, clause = %c, "solution violates a clause");
                    failure.get_or_insert(SolverOutcome::ToolError(format!("{}: model violates {c}", sv.spec.name)));
                }
            },
            other => {
                tracing::info!(solver = %sv.spec.name, outcome = ?other, "no solution");
                failure.get_or_insert(other);
            }
        }
    }
    let mut it = solutions.into_iter();
    match it.next() {
        Some(first) => {
            let joined = it.fold(first, |a, b| conjoin_solutions(&a, &b));
            SolverOutcome::Sat(joined)
        }
        None => failure.unwrap_or(SolverOutcome::ToolError("no solver configured".into())),
    }
}
