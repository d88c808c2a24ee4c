mod common;

use std::path::Path;
use std::time::Duration;

use piterm::chc::{SolverKind, SolverSpec};
use piterm::emit_c::emit_c;
use piterm::pipeline::{
    read_expectation, run_benchmarks, run_pipeline, BenchRecord, CheckMode, EmitKind, Mode, PipelineConfig,
    PipelineError, UnknownReason, Verdict,
};
use piterm::refine::{gen_constraints, RefineFlavor};
use piterm::syntax::parse_process;
use piterm::typing::infer_simple_types;

/// First round: every predicate true. Second round: `P2(n, x) = x < n`.
const DEC_STUB: &str = "sat\n(model)\n;; ---\nsat\n(model (define-fun P2 ((x!0 Int) (x!1 Int)) Bool (< x!1 x!0)))\n";

fn stub(dir: &Path, text: &str) -> SolverSpec {
    let path = dir.join("responses.model");
    std::fs::write(&path, text).unwrap();
    SolverSpec { name: "stub".into(), kind: SolverKind::Stub(path), timeout: Duration::from_secs(5) }
}

fn config(dir: &Path) -> PipelineConfig {
    PipelineConfig { out_dir: dir.join("out"), ..PipelineConfig::default() }
}

fn bench_dir() -> std::path::PathBuf {
    Path::new(&common::bench_dir()).to_path_buf()
}

fn mismatches(records: &[BenchRecord]) -> Vec<String> {
    records.iter().filter(|r| r.matches_expectation() != Some(true)).map(|r| format!("{r} ({})", r.detail)).collect()
}

#[test]
fn dec_refinement_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        mode: Mode::Refined,
        flavor: RefineFlavor::Plain,
        solvers: vec![stub(dir.path(), DEC_STUB)],
        cegar_max: 2,
        ..config(dir.path())
    };
    let r = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    assert!(r.verdict.is_terminating(), "{}", r.verdict);
    assert_eq!(r.cegar_iters, 2);
    assert_eq!(r.verdict.to_string(), "TERMINATING (rank: F_r3(n_1) = n_1)");
    // The extra clause of the first round.
    let extra = r.clauses.last().unwrap();
    assert_eq!(extra.body.len(), 1);
    assert_eq!(extra.body[0].pred.0, 2);
    assert!(r.program.to_string().contains("assume(x < n_1)"), "{}", r.program);
}

#[test]
fn cegar_stops_at_the_iteration_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        mode: Mode::Refined,
        flavor: RefineFlavor::Plain,
        solvers: vec![stub(dir.path(), DEC_STUB)],
        cegar_max: 1,
        ..config(dir.path())
    };
    let r = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    assert_eq!(r.cegar_iters, 1);
    assert!(matches!(r.verdict, Verdict::Unknown { reason: UnknownReason::Lasso(_), .. }), "{}", r.verdict);
    assert_eq!(r.verdict.exit_code(), 1);
}

#[test]
fn unsat_constraints_are_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        PipelineConfig { mode: Mode::Refined, solvers: vec![stub(dir.path(), "unsat\n")], ..config(dir.path()) };
    let r = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    assert!(matches!(r.verdict, Verdict::Unknown { reason: UnknownReason::SolverFailure(_), .. }), "{}", r.verdict);
    assert_eq!(r.verdict.exit_code(), 2);
}

#[test]
fn refined_mode_needs_a_solver() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { mode: Mode::Refined, ..config(dir.path()) };
    assert!(matches!(run_pipeline(&common::bench("dec.pi"), "dec", &cfg), Err(PipelineError::NoSolver)));
}

#[test]
fn stage_errors_are_tagged() {
    let cfg = PipelineConfig::default();
    let parse = run_pipeline("new x in (", "bad", &cfg).unwrap_err();
    assert!(parse.to_string().starts_with("parse: "), "{parse}");
    let ty = run_pipeline("new x in (x!(1) | x!(1, 2))", "bad", &cfg).unwrap_err();
    assert!(ty.to_string().starts_with("type: "), "{ty}");
}

#[test]
fn basic_verdicts() {
    let cfg = PipelineConfig::default();
    let fib = run_pipeline(&common::bench("fibonacci.pi"), "fibonacci", &cfg).unwrap();
    assert!(fib.verdict.is_terminating());
    assert_eq!(fib.verdict.exit_code(), 0);
    assert_eq!(fib.cegar_iters, 0);
    let fact = run_pipeline(&common::bench("factorial-pred.pi"), "factorial-pred", &cfg).unwrap();
    assert!(matches!(fact.verdict, Verdict::Unknown { reason: UnknownReason::Lasso(_), .. }), "{}", fact.verdict);
}

#[test]
fn unchecked_programs_are_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { check: CheckMode::None, ..config(dir.path()) };
    let r = run_pipeline(&common::bench("fibonacci.pi"), "fibonacci", &cfg).unwrap();
    assert_eq!(r.verdict.to_string(), "UNKNOWN (not checked)");
    assert_eq!(r.verdict.exit_code(), 2);
}

#[test]
fn emitted_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        mode: Mode::Refined,
        flavor: RefineFlavor::Plain,
        solvers: vec![stub(dir.path(), DEC_STUB)],
        emit: [EmitKind::Ir, EmitKind::C, EmitKind::Smt2].into_iter().collect(),
        keep_artifacts: true,
        ..config(dir.path())
    };
    let r = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    let out = dir.path().join("out");
    let c = std::fs::read_to_string(out.join("dec.c")).unwrap();
    assert_eq!(c, emit_c(&r.program));
    let ir = std::fs::read_to_string(out.join("dec.ir")).unwrap();
    assert_eq!(ir, r.program.to_string());
    let smt = std::fs::read_to_string(out.join("dec.smt2")).unwrap();
    assert!(smt.starts_with("(set-logic HORN)"));
    let mut kept: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    kept.sort();
    assert!(kept.len() > 3, "{kept:?}");
}

#[test]
fn models_are_recorded_as_stubs() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("recorded.model");
    let cfg = PipelineConfig {
        mode: Mode::Refined,
        flavor: RefineFlavor::Plain,
        solvers: vec![stub(dir.path(), DEC_STUB)],
        record_models: Some(record.clone()),
        ..config(dir.path())
    };
    let first = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    let replay = PipelineConfig {
        solvers: vec![SolverSpec { name: "replay".into(), kind: SolverKind::Stub(record), timeout: Duration::from_secs(5) }],
        record_models: None,
        ..cfg
    };
    let second = run_pipeline(&common::bench("dec.pi"), "dec", &replay).unwrap();
    assert_eq!(first.verdict.to_string(), second.verdict.to_string());
    assert_eq!(first.cegar_iters, second.cegar_iters);
}

#[test]
fn empty_directory_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_benchmarks(dir.path(), &PipelineConfig::default()).unwrap().is_empty());
}

#[test]
fn expectation_sidecars() {
    let text = "# verdicts\nbasic: UNKNOWN\nrefined: TERMINATING # after one round\n";
    assert_eq!(read_expectation(text, Mode::Basic).as_deref(), Some("UNKNOWN"));
    assert_eq!(read_expectation(text, Mode::Refined).as_deref(), Some("TERMINATING"));
    assert_eq!(read_expectation("", Mode::Basic), None);
}

#[test]
fn corpus_basic_mode() {
    let dir = tempfile::tempdir().unwrap();
    let records = run_benchmarks(&bench_dir(), &config(dir.path())).unwrap();
    assert_eq!(records.len(), common::corpus().len());
    assert_eq!(mismatches(&records), Vec::<String>::new());
}

#[test]
fn corpus_refined_mode_from_recorded_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { mode: Mode::Refined, ..config(dir.path()) };
    let records = run_benchmarks(&bench_dir(), &cfg).unwrap();
    assert_eq!(mismatches(&records), Vec::<String>::new());
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |rs: Vec<BenchRecord>| rs.into_iter().map(|r| BenchRecord { wall_ms: 0, ..r }).collect::<Vec<_>>();
    let a = strip(run_benchmarks(&bench_dir(), &config(dir.path())).unwrap());
    let b = strip(run_benchmarks(&bench_dir(), &config(dir.path())).unwrap());
    assert_eq!(a, b);
}

#[test]
fn dec_with_z3() {
    const Z3: &str = "/usr/local/bin/z3";
    if !Path::new(Z3).exists() {
        eprintln!("skipped: {Z3} not found");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let cmd = format!("{Z3} fp.engine=spacer fp.xform.inline_eager=false fp.xform.inline_linear=false {{file}}");
    let cfg = PipelineConfig {
        mode: Mode::Refined,
        solvers: vec![SolverSpec::parse(&cmd, Duration::from_secs(30))],
        ..config(dir.path())
    };
    let r = run_pipeline(&common::bench("dec.pi"), "dec", &cfg).unwrap();
    assert!(r.verdict.is_terminating(), "{}", r.verdict);
    let typed = infer_simple_types(&parse_process(&common::bench("dec.pi")).unwrap()).unwrap();
    let preds = gen_constraints(&typed, RefineFlavor::InputOutput).templates.preds;
    assert_eq!(r.solution.unwrap().check(&preds, &r.clauses), Ok(()));
}
