mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use piterm::chc::SolverSpec;
use piterm::explore::NondetDomain;
use piterm::logic::lia::equivalent;
use piterm::logic::{parse_formula, CmpOp, Formula, PredApp, PredVar};
use piterm::refine::{apply_solution, gen_constraints, Head, RefineFlavor, Solution};
use piterm::seq::{parse_program, SeqProgram};
use piterm::syntax::{name, parse_process, SimpleExpr};
use piterm::termcheck::{
    check_termination, cycle_clauses, extract_transitions, find_lasso, lasso_to_clause, synth_ranking,
    verify_certificate, CallState, CheckConfig, CheckResult, Lasso, LassoSearch, LinearRank, NotExtractable,
};
use piterm::translate::{normalize, translate_basic, translate_refined};
use piterm::typing::infer_simple_types;

const EXAMPLE1: &str = "def A(n) = if n < 2 then B(1) else (A(n - 1) [] A(n - 2) [] let* x, y in B(x + y))
                        def B(z) = skip
                        main = let* m in A(m)";

const REFINED_DEC: &str = "def F1(n) = F2(n - 1)
                           def F2(z) = skip
                           def F3(n) = if n < 0 then F4(1) else (F1(n) [] let* x in assume(x < n); F3(x))
                           def F4(z) = skip
                           main = let* m in F3(m)";

const UPPERBOUND: &str = "def F(x) = if x > 10 then skip else F(x + 1)\nmain = let* m in F(m)";

const MERGED_REGIONS: &str = "def F(x) = if x < 0 then skip else F(x - 1)
                              def F(x) = if x > 0 then skip else F(x + 1)
                              main = F(0)";

const Z3: &str = "/usr/local/bin/z3";

fn prog(src: &str) -> SeqProgram {
    parse_program(src).unwrap()
}

fn formula(src: &str) -> Formula {
    parse_formula(src).unwrap()
}

fn dec_basic() -> SeqProgram {
    normalize(&translate_basic(&infer_simple_types(&parse_process(&common::bench("dec.pi")).unwrap()).unwrap()))
}

fn lasso_of(p: &SeqProgram) -> Lasso {
    match find_lasso(p, &NondetDomain::range(-1, 1).unwrap(), 10_000) {
        LassoSearch::Found(l) => l,
        other => panic!("no lasso: {other:?}"),
    }
}

fn z3() -> Option<SolverSpec> {
    Path::new(Z3).exists().then(|| SolverSpec::parse(&format!("{Z3} -in"), Duration::from_secs(30)))
}

#[test]
fn example1_transitions() {
    let ts = extract_transitions(&prog(EXAMPLE1));
    let recursive: Vec<_> = ts.edges.iter().filter(|t| &*t.src == "A" && &*t.dst == "A").collect();
    assert_eq!(recursive.len(), 2);
    let args: BTreeSet<String> = recursive.iter().map(|t| t.args[0].to_string()).collect();
    assert_eq!(args, ["n - 1", "n - 2"].into_iter().map(String::from).collect());
    for t in &recursive {
        assert!(equivalent(&t.guard, &formula("not (n < 2)")), "{t}");
    }
    assert_eq!(ts.edges.iter().filter(|t| &*t.src == "A" && &*t.dst == "B").count(), 2);
    assert_eq!(ts.entry.len(), 1);
    assert_eq!(ts.entry[0].locals.len(), 1);
}

#[test]
fn refined_dec_transition_carries_the_assumption() {
    let ts = extract_transitions(&prog(REFINED_DEC));
    let rec: Vec<_> = ts.edges.iter().filter(|t| &*t.src == "F3" && &*t.dst == "F3").collect();
    assert_eq!(rec.len(), 1);
    let x = &rec[0].locals[0];
    assert_eq!(rec[0].args, vec![SimpleExpr::Var(x.clone())]);
    let n = SimpleExpr::var("n");
    let want = Formula::and([
        Formula::not(Formula::Cmp(CmpOp::Lt, n.clone(), SimpleExpr::IntLit(0))),
        Formula::Cmp(CmpOp::Lt, SimpleExpr::Var(x.clone()), n),
    ]);
    assert!(equivalent(&rec[0].guard, &want), "{}", rec[0]);
}

#[test]
fn skip_only_definitions_have_no_transitions() {
    let ts = extract_transitions(&prog("def F(x) = skip\nmain = F(0)"));
    assert!(ts.edges.is_empty());
}

#[test]
fn dec_ranks_by_n() {
    let p = prog(REFINED_DEC);
    let ts = extract_transitions(&p).prune();
    let cert = synth_ranking(&ts, None).expect("ranking");
    assert_eq!(cert.to_string(), "F3(n) = n");
    assert!(verify_certificate(&ts, &cert));
    assert_eq!(check_termination(&p, &CheckConfig::default()).to_string(), "TERMINATING (rank: F3(n) = n)");
}

#[test]
fn upperbound_ranks_by_distance_to_the_bound() {
    let ts = extract_transitions(&prog(UPPERBOUND)).prune();
    let cert = synth_ranking(&ts, None).expect("ranking");
    assert_eq!(cert.to_string(), "F(x) = 10 - x");
    assert!(verify_certificate(&ts, &cert));
}

#[test]
fn identity_recursion_has_no_ranking() {
    let ts = extract_transitions(&prog("def F(x) = F(x)\nmain = F(0)"));
    assert!(synth_ranking(&ts, None).is_none());
    if let Some(smt) = z3() {
        assert!(synth_ranking(&ts, Some(&smt)).is_none());
    }
}

#[test]
fn lexicographic_ranking() {
    // x decreases while y is reset; then y counts down with x fixed.
    let p = prog("def F(x, y) = if x <= 0 then skip else (let* z in assume(z >= 0); F(x - 1, z)) [] if y <= 0 then skip else F(x, y - 1)
                  main = let* a, b in F(a, b)");
    let ts = extract_transitions(&p).prune();
    let cert = synth_ranking(&ts, None).expect("ranking");
    assert_eq!(cert.sccs[0].components.len(), 2, "{cert}");
    assert!(verify_certificate(&ts, &cert));
}

#[test]
fn farkas_finds_coefficients_outside_the_enumeration() {
    let Some(smt) = z3() else {
        eprintln!("skipped: {Z3} not found");
        return;
    };
    // 2x + y decreases by one; no combination with coefficients in {-1, 0, 1}
    // is both decreasing and bounded.
    let p = prog("def F(x, y) = if 2 * x + y > 0 then F(x - 1, y + 1) else skip\nmain = let* a, b in F(a, b)");
    let ts = extract_transitions(&p).prune();
    assert!(synth_ranking(&ts, None).is_none());
    let cert = synth_ranking(&ts, Some(&smt)).expect("ranking");
    assert!(verify_certificate(&ts, &cert), "{cert}");
}

#[test]
fn tampered_certificates_are_rejected() {
    let ts = extract_transitions(&prog(REFINED_DEC)).prune();
    let mut cert = synth_ranking(&ts, None).unwrap();
    cert.sccs[0].components[0] = LinearRank { coeffs: vec![1], constant: -1 };
    assert!(!verify_certificate(&ts, &cert));
    cert.sccs[0].components[0] = LinearRank { coeffs: vec![-1], constant: 0 };
    assert!(!verify_certificate(&ts, &cert));
}

fn assert_replays(p: &SeqProgram, l: &Lasso) {
    let values: Vec<i64> = l.stem.iter().chain(&l.cycle).flat_map(|s| s.args.clone()).collect();
    let dom = NondetDomain::range(-1, 1).unwrap().union(values);
    let states: Vec<&CallState> = l.stem.iter().chain(&l.cycle).chain(std::iter::once(&l.cycle[0])).collect();
    for w in states.windows(2) {
        assert!(common::reaches_call(p, Some(w[0]), w[1], &dom), "{} does not reach {}", w[0], w[1]);
    }
}

#[test]
fn dec_lasso_repeats_a_state() {
    let p = dec_basic();
    let l = lasso_of(&p);
    assert_eq!(l.cycle.len(), 1, "{l}");
    assert!(l.stem.is_empty(), "{l}");
    assert_replays(&p, &l);
    let ts = extract_transitions(&p);
    let rec = ts.edges.iter().find(|t| t.src == t.dst).unwrap();
    assert_eq!(l.cycle[0].fname, rec.src);
}

#[test]
fn merged_regions_lasso() {
    let p = prog(MERGED_REGIONS);
    let l = lasso_of(&p);
    assert_eq!(l.to_string(), "[F(0) -> F(-1) -> F(0)]");
    assert_replays(&p, &l);
}

#[test]
fn terminating_program_has_no_lasso() {
    let r = find_lasso(&prog(EXAMPLE1), &NondetDomain::range(-1, 1).unwrap(), 10_000);
    assert!(matches!(r, LassoSearch::NoneFound { exhausted: false, .. }), "{r:?}");
}

#[test]
fn budget_exhaustion_is_reported() {
    let p = prog("def F(x) = F(x + 1)\nmain = F(0)");
    assert_eq!(find_lasso(&p, &NondetDomain::range(-1, 1).unwrap(), 100), LassoSearch::NoneFound {
        states: 100,
        exhausted: true
    });
    let cfg = CheckConfig { lasso_budget: 100, ..CheckConfig::default() };
    assert!(matches!(check_termination(&p, &cfg), CheckResult::Unknown));
}

#[test]
fn dec_lasso_gives_the_disequality_clause() {
    let t = infer_simple_types(&parse_process(&common::bench("dec.pi")).unwrap()).unwrap();
    let c = gen_constraints(&t, RefineFlavor::Plain);
    let symbolic = normalize(&translate_refined(&t, &c.templates.typing).unwrap());
    let solved = apply_solution(&c.templates, &Solution::trivial(&c.templates.preds));
    let trivial = normalize(&translate_refined(&t, &solved).unwrap());
    let l = lasso_of(&trivial);
    let clause = lasso_to_clause(&l, &symbolic).unwrap();
    // The parameter of the recursive function and the received value.
    let f3 = symbolic.defs.iter().find(|d| d.body.calls().iter().any(|(g, _)| **g == d.fname)).unwrap();
    let (n, x) = (SimpleExpr::Var(f3.params[0].clone()), SimpleExpr::var("x"));
    assert_eq!(clause.body, vec![PredApp { pred: PredVar(2), args: vec![n.clone(), x.clone()] }]);
    let Head::Constraint(head) = &clause.head else { panic!("{clause}") };
    assert!(equivalent(head, &Formula::Cmp(CmpOp::Ne, n, x)), "{clause}");
}

#[test]
fn literal_arguments_are_not_extractable() {
    for src in ["def F() = F()\nmain = F()", "def F(x) = F(1)\nmain = F(1)"] {
        let p = prog(src);
        assert_eq!(lasso_to_clause(&lasso_of(&p), &p), Err(NotExtractable));
    }
}

#[test]
fn cycle_closing_call_is_used_first() {
    let p = prog("def G(n) = let* x in assume(P1(n, x)); H(x)
                  def H(n) = let* y in assume(P2(n, y)); G(y)
                  main = G(0)");
    let l = Lasso {
        stem: vec![],
        cycle: vec![CallState { fname: name("G"), args: vec![0] }, CallState { fname: name("H"), args: vec![0] }],
    };
    let all = cycle_clauses(&l, &p);
    let preds: Vec<PredVar> = all.iter().map(|c| c.clause.body[0].pred).collect();
    assert_eq!(preds, vec![PredVar(2), PredVar(1)]);
    assert!(all.iter().all(|c| c.refutes_step));
    assert_eq!(lasso_to_clause(&l, &p).unwrap(), all[0].clause);
}
