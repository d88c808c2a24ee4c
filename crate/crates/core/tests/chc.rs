mod common;

use std::path::Path;
use std::time::Duration;

use piterm::chc::{
    add_nonloop_clauses, conjoin_solutions, emit_smtlib2_horn, parse_solver_output, run_solver, solve_all, Solver,
    SolverKind, SolverOutcome, SolverSpec,
};
use piterm::logic::{is_valid, lia::equivalent, parse_formula, Formula, PredApp, PredVar};
use piterm::refine::{gen_constraints, Constraints, Head, HornClause, PredInfo, RefineFlavor, Solution};
use piterm::syntax::{name, parse_process, SimpleExpr};
use piterm::typing::infer_simple_types;

const Z3: &str = "/usr/local/bin/z3";

fn f(src: &str) -> Formula {
    parse_formula(src).unwrap()
}

fn dec() -> Constraints {
    let t = infer_simple_types(&parse_process(&common::bench("dec.pi")).unwrap()).unwrap();
    gen_constraints(&t, RefineFlavor::Plain)
}

/// `P2(n, x) ⇒ n ≠ x` over the formal parameters of P2.
fn dec_extra(c: &Constraints) -> HornClause {
    let p2 = c.templates.pred_info(PredVar(2)).unwrap();
    let args: Vec<SimpleExpr> = p2.params.iter().cloned().map(SimpleExpr::Var).collect();
    HornClause::new(
        &[Formula::Pred(PredApp { pred: PredVar(2), args: args.clone() })],
        Head::Constraint(f(&format!("{} != {}", p2.params[0], p2.params[1]))),
    )
}

fn z3() -> Option<SolverSpec> {
    Path::new(Z3).exists().then(|| SolverSpec::parse(&format!("{Z3} {{file}}"), Duration::from_secs(30)))
}

#[test]
fn dec_horn_file_shape() {
    let c = dec();
    let text = emit_smtlib2_horn(&c.clauses);
    assert!(text.starts_with("(set-logic HORN)\n"));
    assert_eq!(text.matches("(declare-fun ").count(), 4);
    assert_eq!(text.matches("(assert ").count(), 5);
    assert!(text.ends_with("(check-sat)\n(get-model)\n"));
    assert!(text.contains("(declare-fun P2 (Int Int) Bool)"));
    // Byte-identical across runs.
    assert_eq!(text, emit_smtlib2_horn(&dec().clauses));

    let more = add_nonloop_clauses(&c.clauses, &[dec_extra(&c)]);
    let text = emit_smtlib2_horn(&more);
    assert_eq!(text.matches("(assert ").count(), 6);
    let ps = &c.templates.pred_info(PredVar(2)).unwrap().params;
    assert!(text.contains(&format!("(not (= {} {})))", ps[0], ps[1])), "{text}");
}

#[test]
fn empty_problem() {
    assert_eq!(emit_smtlib2_horn(&[]), "(set-logic HORN)\n(check-sat)\n");
}

#[test]
fn nonloop_clauses_are_deduplicated() {
    let c = dec();
    let e1 = dec_extra(&c);
    let e2 = HornClause::new(&[f("P1(n)")], Head::Constraint(f("n > 5")));
    assert_eq!(add_nonloop_clauses(&c.clauses, &[e1.clone()]).len(), 6);
    let once = add_nonloop_clauses(&c.clauses, &[e1.clone()]);
    assert_eq!(add_nonloop_clauses(&once, &[e1.clone()]), once);
    let both = add_nonloop_clauses(&c.clauses, &[e1.clone(), e2.clone()]);
    assert_eq!(both.len(), 7);
    assert!(both.contains(&e1) && both.contains(&e2));
}

fn one_pred(params: &[&str]) -> Vec<PredInfo> {
    vec![PredInfo { var: PredVar(1), params: params.iter().map(|p| name(p)).collect(), origin: "test".into() }]
}

fn sol(body: &str) -> Solution {
    Solution { map: [(PredVar(1), f(body))].into_iter().collect() }
}

#[test]
fn conjoining_solutions() {
    assert_eq!(conjoin_solutions(&sol("x < n"), &sol("true")), sol("x < n"));
    let both = conjoin_solutions(&sol("x < n"), &sol("x >= 0"));
    assert!(equivalent(&both.map[&PredVar(1)], &f("x < n and x >= 0")));
    assert_eq!(conjoin_solutions(&sol("x < n"), &sol("x < n")), sol("x < n"));
    // The conjunction entails both sides.
    for side in [sol("x < n"), sol("x >= 0")] {
        assert!(is_valid(&Formula::implies(both.map[&PredVar(1)].clone(), side.map[&PredVar(1)].clone())));
    }
}

#[test]
fn reads_z3_models() {
    let preds = one_pred(&["n", "x"]);
    let out = "sat\n(\n  (define-fun P1 ((x!0 Int) (x!1 Int)) Bool\n    (let ((a!1 (<= x!1 (+ (- 1) x!0)))) (and a!1 (>= x!0 0))))\n)\n";
    let SolverOutcome::Sat(s) = parse_solver_output(out, &preds) else { panic!() };
    assert!(equivalent(&s.map[&PredVar(1)], &f("x < n and n >= 0")));

    let out = "sat\n(model\n  (define-fun P1 ((v_0 Int) (v_1 Int)) Bool (not (= v_0 v_1)))\n)";
    let SolverOutcome::Sat(s) = parse_solver_output(out, &preds) else { panic!() };
    assert!(equivalent(&s.map[&PredVar(1)], &f("n != x")));

    assert_eq!(parse_solver_output("unsat\n", &preds), SolverOutcome::Unsat);
    assert_eq!(parse_solver_output("unknown\n", &preds), SolverOutcome::Unknown);
    assert!(matches!(parse_solver_output("sat\n((define-fun P1 ((a Int)) Bool (div a 2)))", &preds), SolverOutcome::ToolError(_)));
    assert!(matches!(parse_solver_output("(error \"line 1\")", &preds), SolverOutcome::ToolError(_)));
    assert!(matches!(parse_solver_output("", &preds), SolverOutcome::ToolError(_)));
}

#[test]
fn stub_replays_responses_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dec.model");
    std::fs::write(
        &path,
        "sat\n((define-fun P1 ((a Int) (b Int)) Bool true))\n;; ---\nsat\n((define-fun P1 ((a Int) (b Int)) Bool (< b a)))\n",
    )
    .unwrap();
    let spec = SolverSpec::parse(&format!("file:{}", path.display()), Duration::from_secs(1));
    assert_eq!(spec.kind, SolverKind::Stub(path.clone()));
    let preds = one_pred(&["n", "x"]);
    let solver = Solver::new(spec);
    let first = solver.solve("", &preds);
    assert_eq!(first, SolverOutcome::Sat(sol("true")));
    for _ in 0..2 {
        let SolverOutcome::Sat(s) = solver.solve("", &preds) else { panic!() };
        assert!(equivalent(&s.map[&PredVar(1)], &f("x < n")));
    }
}

#[test]
fn command_timeout_and_errors() {
    let preds = one_pred(&["x"]);
    let slow = SolverSpec::parse("sleep 5; echo sat", Duration::from_millis(200));
    let start = std::time::Instant::now();
    assert_eq!(run_solver(&slow, "", &preds), SolverOutcome::Timeout);
    assert!(start.elapsed() < Duration::from_secs(3));
    let broken = SolverSpec::parse("/nonexistent/solver {file}", Duration::from_secs(5));
    assert!(matches!(run_solver(&broken, "", &preds), SolverOutcome::ToolError(_)));
    let echo = SolverSpec::parse("cat {file} > /dev/null; echo unsat", Duration::from_secs(5));
    assert_eq!(run_solver(&echo, "(check-sat)", &preds), SolverOutcome::Unsat);
}

#[test]
fn invalid_models_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    // P1(x) := x > 0 violates true ⇒ P1(0).
    std::fs::write(&path, "sat\n((define-fun P1 ((a Int)) Bool (> a 0)))\n").unwrap();
    let preds = one_pred(&["x"]);
    let clauses = [HornClause::new(&[], Head::Pred(PredApp { pred: PredVar(1), args: vec![SimpleExpr::IntLit(0)] }))];
    let s = [Solver::new(SolverSpec::parse(&format!("file:{}", path.display()), Duration::from_secs(1)))];
    assert!(matches!(solve_all(&s, &clauses, &preds), SolverOutcome::ToolError(_)));
}

#[test]
fn two_solvers_are_conjoined() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.model");
    let b = dir.path().join("b.model");
    std::fs::write(&a, "sat\n((define-fun P1 ((a Int)) Bool (>= a 0)))\n").unwrap();
    std::fs::write(&b, "sat\n((define-fun P1 ((a Int)) Bool (<= a 5)))\n").unwrap();
    let unknown = dir.path().join("u.model");
    std::fs::write(&unknown, "unknown\n").unwrap();
    let preds = one_pred(&["x"]);
    let clauses = [HornClause::new(&[], Head::Pred(PredApp { pred: PredVar(1), args: vec![SimpleExpr::IntLit(0)] }))];
    let stub = |p: &Path| Solver::new(SolverSpec::parse(&format!("file:{}", p.display()), Duration::from_secs(1)));
    let SolverOutcome::Sat(s) = solve_all(&[stub(&a), stub(&b)], &clauses, &preds) else { panic!() };
    assert!(equivalent(&s.map[&PredVar(1)], &f("x >= 0 and x <= 5")));
    // One solver without an answer: the other's solution is used.
    let SolverOutcome::Sat(s) = solve_all(&[stub(&unknown), stub(&a)], &clauses, &preds) else { panic!() };
    assert!(equivalent(&s.map[&PredVar(1)], &f("x >= 0")));
    assert_eq!(solve_all(&[stub(&unknown)], &clauses, &preds), SolverOutcome::Unknown);
}

#[test]
fn z3_solves_dec() {
    let Some(spec) = z3() else {
        eprintln!("z3 not installed; skipped");
        return;
    };
    let c = dec();
    let preds = &c.templates.preds;
    let SolverOutcome::Sat(s) = run_solver(&spec, &emit_smtlib2_horn(&c.clauses), preds) else { panic!() };
    assert!(s.check(preds, &c.clauses).is_ok());

    let more = add_nonloop_clauses(&c.clauses, &[dec_extra(&c)]);
    let SolverOutcome::Sat(s) = run_solver(&spec, &emit_smtlib2_horn(&more), preds) else { panic!() };
    assert!(s.check(preds, &more).is_ok());
    // The reply of pred is below its argument.
    let p2 = &s.map[&PredVar(2)];
    let ps = &c.templates.pred_info(PredVar(2)).unwrap().params;
    let below = f(&format!("{} < {}", ps[1], ps[0]));
    assert!(is_valid(&Formula::implies(p2.clone(), below)), "{p2}");

    let p = one_pred(&["x"]);
    let app = |a: SimpleExpr| PredApp { pred: PredVar(1), args: vec![a] };
    let unsat = [
        HornClause::new(&[], Head::Pred(app(SimpleExpr::IntLit(0)))),
        HornClause::new(&[Formula::Pred(app(SimpleExpr::var("x")))], Head::Constraint(f("x > 0"))),
    ];
    assert_eq!(run_solver(&spec, &emit_smtlib2_horn(&unsat), &p), SolverOutcome::Unsat);
}
