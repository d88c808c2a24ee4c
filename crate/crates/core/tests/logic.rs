use std::collections::BTreeMap;

use piterm::logic::lia::{equivalent, implies};
use piterm::logic::{is_sat, is_valid, parse_formula, CmpOp, Formula, SatResult};
use piterm::syntax::{name, SimpleExpr};
use proptest::prelude::*;

fn f(src: &str) -> Formula {
    parse_formula(src).unwrap()
}

#[test]
fn parse_and_print_round_trip() {
    for src in [
        "true",
        "x < n",
        "P2(n, x) and n >= 0",
        "not (x = 1 or y != 2)",
        "P0()",
        "(a or b > 0) and c <= 3",
    ] {
        let once = f(src);
        let again = f(&once.to_string());
        assert_eq!(once, again, "{src} -> {once}");
    }
    assert!(parse_formula("Q(x)").is_err());
}

#[test]
fn simplification() {
    assert_eq!(f("true and x < 1").simplify(), f("x < 1"));
    assert_eq!(f("1 < 2 or x = 0").simplify(), Formula::True);
    assert_eq!(f("not (x < 1)").simplify(), f("x >= 1"));
    assert_eq!(f("x + 0 = x").simplify(), Formula::True);
    assert_eq!(f("(a = 1 and b = 1) and a = 1").simplify(), f("a = 1 and b = 1"));
}

#[test]
fn known_validities() {
    assert!(is_valid(&f("x < n or x >= n")));
    assert!(is_valid(&f("not (n >= 0 and x < n) or (x < n and n >= 0)")));
    assert!(is_valid(&f("not (x < y and y < z) or x + 2 <= z")));
    assert!(!is_valid(&f("x < n")));
    // integer reasoning: 2x = 1 has no integer solution
    assert_eq!(is_sat(&f("2 * x = 1")), SatResult::Unsat);
    assert_eq!(is_sat(&f("2 * x >= 1 and 2 * x <= 1")), SatResult::Unsat);
    assert_eq!(is_sat(&f("3 * x + 3 * y = 6 and x - y = 0")), SatResult::Sat);
    assert!(implies(&f("x >= 3"), &f("x > 1")));
    assert!(equivalent(&f("not (x != y)"), &f("x = y")));
    // predicate applications are opaque propositions
    assert!(is_valid(&f("not P1(n) or P1(n)")));
    assert!(!is_valid(&f("not P1(n) or P1(m)")));
    // non-linear terms are opaque but consistent
    assert!(is_valid(&f("n * x = n * x")));
    assert!(!is_valid(&f("n * x >= 0")));
}

#[test]
fn boolean_subterms_are_bounded() {
    assert!(is_valid(&f("(x < y) + (y <= x) <= 2")));
    assert!(is_valid(&f("(x < y) >= 0")));
}

#[test]
fn evaluation_matches_semantics() {
    let env = BTreeMap::from([(name("x"), 2), (name("n"), 3)]);
    assert_eq!(f("x < n and not (x = 3)").eval(&env), Some(true));
    assert_eq!(f("P1(x)").eval(&env), None);
}

/// Small random linear formulas over x, y.
fn arb_formula() -> impl Strategy<Value = Formula> {
    let term = (-2i64..=2, -2i64..=2, -3i64..=3).prop_map(|(a, b, k)| {
        let x = SimpleExpr::bin(piterm::syntax::Op::Mul, SimpleExpr::IntLit(a), SimpleExpr::var("x"));
        let y = SimpleExpr::bin(piterm::syntax::Op::Mul, SimpleExpr::IntLit(b), SimpleExpr::var("y"));
        SimpleExpr::bin(piterm::syntax::Op::Add, SimpleExpr::bin(piterm::syntax::Op::Add, x, y), SimpleExpr::IntLit(k))
    });
    let op = prop::sample::select(vec![CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Ge]);
    let atom = (op, term).prop_map(|(op, t)| Formula::Cmp(op, t, SimpleExpr::IntLit(0)));
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::And),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::Or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn brute_force_model(fm: &Formula, r: i64) -> bool {
    (-r..=r).any(|x| {
        (-r..=r).any(|y| fm.eval(&BTreeMap::from([(name("x"), x), (name("y"), y)])) == Some(true))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]
    #[test]
    fn unsat_answers_have_no_small_models(fm in arb_formula()) {
        match is_sat(&fm) {
            SatResult::Unsat => prop_assert!(!brute_force_model(&fm, 12), "{}", fm),
            SatResult::Sat | SatResult::Unknown => {}
        }
        // With coefficients this small, any satisfiable formula has a model near the origin.
        if brute_force_model(&fm, 12) {
            prop_assert_ne!(is_sat(&fm), SatResult::Unsat);
        }
    }

    #[test]
    fn print_parse_round_trip(fm in arb_formula()) {
        // Connectives may re-associate, so compare printed fixpoints and truth tables.
        let back = parse_formula(&fm.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), fm.to_string());
        for x in -3..=3 {
            for y in -3..=3 {
                let env = BTreeMap::from([(name("x"), x), (name("y"), y)]);
                prop_assert_eq!(back.eval(&env), fm.eval(&env));
            }
        }
    }
}
