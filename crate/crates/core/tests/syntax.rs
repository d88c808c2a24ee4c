use std::collections::BTreeMap;

use piterm::syntax::expr::parse_simple_expr;
use piterm::syntax::{
    alpha_equal, free_names, name, parse_process, print_process, substitute, Name, Op, Process,
    SimpleExpr,
};
use proptest::prelude::*;

fn corpus() -> Vec<(String, String)> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/benchmarks");
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "pi")
                .then(|| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        })
        .collect();
    out.sort();
    out
}

fn v(s: &str) -> SimpleExpr {
    SimpleExpr::var(s)
}

fn set(xs: &[&str]) -> std::collections::BTreeSet<Name> {
    xs.iter().map(|x| name(x)).collect()
}

#[test]
fn parses_nil_and_output() {
    assert_eq!(parse_process("0").unwrap(), Process::Nil);
    let p = parse_process("fib!(m;r).0").unwrap();
    assert_eq!(p, Process::output("fib", vec![v("m")], &["r"], Process::Nil));
}

#[test]
fn parallel_is_right_associative_and_loosest() {
    let p = parse_process("*f?(x;r).0 | f!(2;r).0").unwrap();
    assert_eq!(
        p,
        Process::par(
            Process::rep_input("f", &["x"], &["r"], Process::Nil),
            Process::output("f", vec![SimpleExpr::IntLit(2)], &["r"], Process::Nil)
        )
    );
    let q = parse_process("a!() | b!() | c!()").unwrap();
    match q {
        Process::Par(_, rest) => assert!(matches!(*rest, Process::Par(..))),
        _ => panic!("expected a parallel composition"),
    }
    // prefixes bind tighter than `|`
    let r = parse_process("new x in x!() | x?()").unwrap();
    assert!(matches!(r, Process::Par(..)));
}

#[test]
fn printer_basics() {
    assert_eq!(print_process(&Process::Nil), "0");
    assert_eq!(print_process(&Process::par(Process::Nil, Process::Nil)), "0 | 0");
    let p = parse_process("a!(1).(b!() | c!())").unwrap();
    assert_eq!(print_process(&p), "a!(1).(b!() | c!())");
}

#[test]
fn expression_precedence() {
    let e = parse_simple_expr("a + b * c < d or not e and f").unwrap();
    let expected = SimpleExpr::bin(
        Op::Or,
        SimpleExpr::bin(
            Op::Lt,
            SimpleExpr::bin(Op::Add, v("a"), SimpleExpr::bin(Op::Mul, v("b"), v("c"))),
            v("d"),
        ),
        SimpleExpr::bin(Op::And, SimpleExpr::op(Op::Not, vec![v("e")]), v("f")),
    );
    assert_eq!(e, expected);
    assert_eq!(parse_simple_expr("x - -1").unwrap().to_string(), "x - -1");
    assert_eq!(parse_simple_expr("a - (b - c)").unwrap().to_string(), "a - (b - c)");
    assert_eq!(parse_simple_expr("true").unwrap(), SimpleExpr::IntLit(1));
}

#[test]
fn parse_errors_carry_position() {
    let err = parse_process("new x in\n  x!(1").unwrap_err();
    assert_eq!(err.line, 2);
    assert!(err.expected.iter().any(|e| e.contains(')')));
    assert!(parse_process("if x then 0").is_err());
    assert!(parse_process("new in in 0").is_err());
}

#[test]
fn free_names_examples() {
    assert_eq!(free_names(&Process::Nil).all().len(), 0);
    let dec = "*pred?(n; r). r!(n - 1) \
               | *f?(n; r). if n < 0 then r!(1) else new s in (pred!(n; s) | s?(x). f!(x; r)) \
               | f!(m; r)";
    let fv = free_names(&parse_process(dec).unwrap());
    assert_eq!(fv.chans, set(&["f", "pred", "r"]));
    assert_eq!(fv.ints, set(&["m"]));
    let p = Process::nu("x", Process::output("x", vec![], &[], Process::Nil));
    assert!(free_names(&p).all().is_empty());
}

#[test]
fn substitution_examples() {
    let p = Process::output("r", vec![v("x")], &[], Process::Nil);
    let ints = BTreeMap::from([(name("x"), 5)]);
    assert_eq!(
        substitute(&p, &ints, &BTreeMap::new()),
        Process::output("r", vec![SimpleExpr::IntLit(5)], &[], Process::Nil)
    );
    let q = Process::input("s", &["x"], &[], Process::output("f", vec![v("x")], &["r"], Process::Nil));
    let chans = BTreeMap::from([(name("r"), name("t"))]);
    assert_eq!(
        substitute(&q, &BTreeMap::new(), &chans),
        Process::input("s", &["x"], &[], Process::output("f", vec![v("x")], &["t"], Process::Nil))
    );
}

#[test]
fn substitution_avoids_capture() {
    // [t/r](new t in r!(; t)) must not capture the substituted t.
    let p = parse_process("new t in r!(; t)").unwrap();
    let chans = BTreeMap::from([(name("r"), name("t"))]);
    let got = substitute(&p, &BTreeMap::new(), &chans);
    // Naive substitution on a pre-renamed term.
    let renamed = parse_process("new u in r!(; u)").unwrap();
    let naive = parse_process("new u in t!(; u)").unwrap();
    assert!(alpha_equal(&p, &renamed));
    assert!(alpha_equal(&got, &naive), "got {got}");
    assert!(free_names(&got).chans.contains("t"));
}

#[test]
fn alpha_equality_examples() {
    let a = parse_process("new x in x!(1; y)").unwrap();
    let b = parse_process("new z in z!(1; y)").unwrap();
    assert!(alpha_equal(&a, &b));
    let c = Process::input("c", &["x"], &[], Process::Nil);
    let d = Process::input("d", &["x"], &[], Process::Nil);
    assert!(!alpha_equal(&c, &d));
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmarks/fibonacci.pi")).unwrap();
    assert!(alpha_equal(&parse_process(&src).unwrap(), &parse_process(&src).unwrap()));
    // binders shadow
    let e = parse_process("x?(y). y?(y). y!()").unwrap();
    let f = parse_process("x?(a). a?(b). b!()").unwrap();
    let g = parse_process("x?(a). a?(b). a!()").unwrap();
    assert!(alpha_equal(&e, &f));
    assert!(!alpha_equal(&e, &g));
}

#[test]
fn corpus_round_trips() {
    for (file, src) in corpus() {
        let p = parse_process(&src).unwrap_or_else(|e| panic!("{file}: {e}"));
        let printed = print_process(&p);
        let q = parse_process(&printed).unwrap_or_else(|e| panic!("{file}: {e}\n{printed}"));
        assert!(alpha_equal(&p, &q), "{file}");
        assert_eq!(print_process(&q), printed, "{file}: printing is not a fixpoint");
    }
}

// ---------------------------------------------------------------------------
// Generated processes

fn arb_expr() -> impl Strategy<Value = SimpleExpr> {
    let leaf = prop_oneof![
        (-5i64..6).prop_map(SimpleExpr::IntLit),
        prop_oneof![Just("x"), Just("y"), Just("n")].prop_map(SimpleExpr::var),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        let ops = prop_oneof![
            Just(Op::Add),
            Just(Op::Sub),
            Just(Op::Mul),
            Just(Op::Lt),
            Just(Op::Le),
            Just(Op::Eq),
            Just(Op::Ne),
            Just(Op::Gt),
            Just(Op::Ge),
            Just(Op::And),
            Just(Op::Or),
        ];
        prop_oneof![
            (ops, inner.clone(), inner.clone()).prop_map(|(o, a, b)| SimpleExpr::bin(o, a, b)),
            inner.clone().prop_map(|a| SimpleExpr::op(Op::Neg, vec![a])),
            inner.prop_map(|a| SimpleExpr::op(Op::Not, vec![a])),
        ]
    })
}

fn chan() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("a"), Just("b"), Just("c")]
}

fn ivar() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("x"), Just("y"), Just("n")]
}

fn arb_process() -> impl Strategy<Value = Process> {
    let leaf = prop_oneof![
        Just(Process::Nil),
        (chan(), prop::collection::vec(arb_expr(), 0..3), prop::collection::vec(chan(), 0..2))
            .prop_map(|(c, ints, chans)| Process::output(c, ints, &chans, Process::Nil)),
    ];
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Process::par(a, b)),
            (chan(), inner.clone()).prop_map(|(x, b)| Process::nu(x, b)),
            (arb_expr(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Process::if_(c, a, b)),
            (prop::collection::vec(ivar(), 1..3), inner.clone())
                .prop_map(|(xs, b)| Process::let_nd(&xs, b)),
            (any::<bool>(), chan(), prop::collection::vec(ivar(), 0..3), prop::collection::vec(chan(), 0..2), inner.clone())
                .prop_map(|(rep, c, xs, zs, b)| {
                    if rep {
                        Process::rep_input(c, &xs, &zs, b)
                    } else {
                        Process::input(c, &xs, &zs, b)
                    }
                }),
            (chan(), prop::collection::vec(arb_expr(), 0..2), prop::collection::vec(chan(), 0..2), inner)
                .prop_map(|(c, ints, chans, b)| Process::output(c, ints, &chans, b)),
        ]
    })
}

fn ints_map(m: Vec<(&'static str, i64)>) -> BTreeMap<Name, i64> {
    m.into_iter().map(|(k, v)| (name(k), v)).collect()
}

fn chans_map(m: Vec<(&'static str, &'static str)>) -> BTreeMap<Name, Name> {
    m.into_iter().map(|(k, v)| (name(k), name(v))).collect()
}

proptest! {
    #[test]
    fn generated_round_trip(p in arb_process()) {
        let text = print_process(&p);
        let q = parse_process(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert!(alpha_equal(&p, &q), "{}", text);
    }

    #[test]
    fn expression_round_trip(e in arb_expr()) {
        let text = e.to_string();
        prop_assert_eq!(parse_simple_expr(&text).unwrap(), e);
    }

    #[test]
    fn substitution_composes(
        p in arb_process(),
        s1 in prop::collection::vec((ivar(), -3i64..4), 0..2),
        c1 in prop::collection::vec((chan(), chan()), 0..2),
        c2 in prop::collection::vec((chan(), chan()), 0..2),
    ) {
        // Disjoint domains: chans of σ2 act on names not touched by σ1.
        let s1 = ints_map(s1);
        let c1 = chans_map(c1);
        let c2: BTreeMap<Name, Name> = chans_map(c2)
            .into_iter()
            .filter(|(k, _)| !c1.contains_key(k) && !c1.values().any(|v| v == k))
            .collect();
        let step = substitute(&substitute(&p, &s1, &c1), &BTreeMap::new(), &c2);
        let mut composed: BTreeMap<Name, Name> =
            c1.iter().map(|(k, v)| (k.clone(), c2.get(v).cloned().unwrap_or_else(|| v.clone()))).collect();
        for (k, v) in &c2 {
            composed.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let once = substitute(&p, &s1, &composed);
        prop_assert!(alpha_equal(&step, &once), "{} vs {}", step, once);
    }

    #[test]
    fn substituted_int_is_not_free(p in arb_process(), i in -3i64..4) {
        let q = substitute(&p, &ints_map(vec![("x", i)]), &BTreeMap::new());
        prop_assert!(!free_names(&q).ints.contains("x"));
    }
}
