mod common;

use std::collections::BTreeMap;

use piterm::logic::{parse_formula, Formula, PredVar};
use piterm::refine::{
    apply_solution, gen_constraints, subtype_check, wf_check, RefChanType, RefineFlavor, Solution, WfError,
};
use piterm::syntax::{name, parse_process, Name, SimpleExpr};
use piterm::typing::{infer_simple_types, Typed};

fn typed(src: &str) -> Typed {
    infer_simple_types(&parse_process(src).unwrap()).unwrap()
}

fn f(src: &str) -> Formula {
    parse_formula(src).unwrap()
}

fn names(xs: &[&str]) -> Vec<Name> {
    xs.iter().map(|x| name(x)).collect()
}

/// `ch[r](x̃: {i} / {o}; in pi / out po)`
fn io(region: usize, xs: &[&str], i: &str, o: &str, pi: Vec<RefChanType>, po: Vec<RefChanType>) -> RefChanType {
    RefChanType::io(region, names(xs), (f(i), f(o)), (pi, po))
}

#[test]
fn dec_plain_constraints() {
    let c = gen_constraints(&typed(&common::bench("dec.pi")), RefineFlavor::Plain);
    let ty = &c.templates.typing;
    assert_eq!(ty.get("pred").unwrap().to_string(), "ch[r1](n: {P1(n)}; ch[r2](x: {P2(n, x)}))");
    assert_eq!(ty.get("f").unwrap().to_string(), "ch[r3](n: {P3(n)}; ch[r4](x: {P4(n, x)}))");
    let clauses: Vec<String> = c.clauses.iter().map(|c| c.to_string().replace("n_1", "n")).collect();
    assert_eq!(
        clauses,
        [
            "P1(n) => P2(n, n - 1)",
            "P3(n) and n < 0 => P4(n, 1)",
            "P3(n) and n >= 0 => P1(n)",
            "P3(n) and P2(n, x) and n >= 0 => P3(x)",
            "true => P3(m)",
        ]
    );
    assert_eq!(c.used_preds().len(), 4);

    // A solution that bounds the reply of pred below its argument.
    let mut sol = Solution::trivial(&c.templates.preds);
    sol.map.insert(PredVar(2), f("x < n"));
    assert!(sol.check(&c.templates.preds, &c.clauses).is_ok());
    let typing = apply_solution(&c.templates, &sol);
    assert_eq!(typing.get("s").unwrap().to_string(), "ch[r2](x: {x < n_1})");
    sol.map.insert(PredVar(2), f("x < n - 1"));
    assert!(sol.check(&c.templates.preds, &c.clauses).is_err());
}

#[test]
fn trivial_solution_satisfies_generated_clauses() {
    for file in common::corpus() {
        let t = typed(&common::bench(&file));
        for flavor in [RefineFlavor::Plain, RefineFlavor::InputOutput] {
            let c = gen_constraints(&t, flavor);
            let sol = Solution::trivial(&c.templates.preds);
            if let Err(bad) = sol.check(&c.templates.preds, &c.clauses) {
                panic!("{file} {flavor:?}: {bad}");
            }
            for cl in &c.clauses {
                assert!(!cl.is_tautology(), "{file}: {cl}");
            }
        }
    }
}

#[test]
fn io_mode_separates_views() {
    let c = gen_constraints(&typed(&common::bench("io-subtyping.pi")), RefineFlavor::InputOutput);
    for x in ["pred", "c"] {
        let t = c.templates.typing.get(x).unwrap();
        assert_ne!(t.phi_i, t.phi_o, "{x}: {t}");
        assert_ne!(t.payload_i, t.payload_o, "{x}: {t}");
    }
    // pred and c are not forced to share a type.
    assert_ne!(c.templates.typing.get("pred").unwrap(), c.templates.typing.get("c").unwrap());
}

/// Without subtyping pred and c, both sent on d, need one type, so pred's
/// reply cannot be bounded by its argument.
#[test]
fn plain_mode_forces_a_shared_type() {
    let c = gen_constraints(&typed(&common::bench("io-subtyping.pi")), RefineFlavor::Plain);
    let mut sol = Solution::trivial(&c.templates.preds);
    for p in &c.templates.preds {
        if p.params.len() == 2 {
            let (x, y) = (&p.params[0], &p.params[1]);
            sol.map.insert(p.var, f(&format!("{y} < {x}")));
        }
    }
    assert!(sol.check(&c.templates.preds, &c.clauses).is_err());
}

#[test]
fn well_formedness() {
    let t = RefChanType::simple(1, names(&["y"]), f("y < x"), vec![]);
    assert_eq!(wf_check(&names(&["x"]), &[], &t), Ok(()));
    assert!(matches!(wf_check(&[], &[], &t), Err(WfError::Unscoped { var, .. }) if &*var == "x"));
    let bad = io(1, &["x"], "x > 0", "x < 0", vec![], vec![]);
    assert!(matches!(wf_check(&[], &[], &bad), Err(WfError::Inconsistent { .. })));
    // Assumptions can make a type consistent.
    let cond = io(1, &["y"], "y > 0", "y > k", vec![], vec![]);
    assert!(wf_check(&names(&["k"]), &[], &cond).is_err());
    assert_eq!(wf_check(&names(&["k"]), &[f("k >= 0")], &cond), Ok(()));
}

#[test]
fn common_supertype_for_shared_region() {
    let reply = |o: &str| io(2, &["y"], "true", o, vec![], vec![]);
    let pred = io(1, &["x"], "true", "true", vec![reply("y < x")], vec![reply("y < x")]);
    let c = io(1, &["x"], "true", "true", vec![reply("true")], vec![reply("true")]);
    let xi = io(1, &["x"], "true", "true", vec![reply("y < x")], vec![reply("true")]);
    let d = io(0, &[], "true", "true", vec![xi.clone()], vec![xi.clone()]);
    assert_eq!(subtype_check(&[], &[], &pred, &xi), Ok(()));
    assert_eq!(subtype_check(&[], &[], &c, &xi), Ok(()));
    assert!(subtype_check(&[], &[], &c, &pred).is_err());
    assert!(subtype_check(&[], &[], &pred, &c).is_err());
    for t in [&pred, &c, &d] {
        assert_eq!(wf_check(&[], &[], t), Ok(()), "{t}");
    }
}

#[test]
fn substitution_avoids_capture() {
    let t = RefChanType::simple(1, names(&["x"]), f("x < n"), vec![]);
    let map: BTreeMap<Name, SimpleExpr> = [(name("n"), SimpleExpr::var("x"))].into_iter().collect();
    let s = t.subst(&map);
    assert_ne!(&*s.binders[0], "x");
    assert_eq!(s.open(&[SimpleExpr::IntLit(3)]).phi_i.to_string(), "3 < x");
}
