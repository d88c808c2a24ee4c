use std::collections::BTreeMap;

use piterm::explore::{Exploration, NondetDomain};
use piterm::pisem::{eval_simple_expr, explore_terminates, step_process, step_raw, ProcState};
use piterm::syntax::expr::parse_simple_expr;
use piterm::syntax::{name, parse_process, Process};
use piterm::typing::infer_simple_types;
use proptest::prelude::*;

fn bench(file: &str) -> String {
    std::fs::read_to_string(format!("{}/benchmarks/{file}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn state(src: &str) -> ProcState {
    ProcState::from_process(&parse_process(src).unwrap())
}

fn dom(lo: i64, hi: i64) -> NondetDomain {
    NondetDomain::range(lo, hi).unwrap()
}

#[test]
fn evaluation() {
    let env = BTreeMap::from([(name("n"), 1)]);
    assert_eq!(eval_simple_expr(&parse_simple_expr("3 + 4").unwrap(), &env), Ok(7));
    assert_eq!(eval_simple_expr(&parse_simple_expr("n < 2").unwrap(), &env), Ok(1));
    let env0 = BTreeMap::from([(name("n"), 0)]);
    assert_eq!(eval_simple_expr(&parse_simple_expr("n - 1").unwrap(), &env0), Ok(-1));
    assert!(eval_simple_expr(&parse_simple_expr("m").unwrap(), &env0).is_err());
    assert_eq!(eval_simple_expr(&parse_simple_expr("not (1 and 0) or 0").unwrap(), &env0), Ok(1));
}

#[test]
fn communication_step() {
    let s = state("x?(y;).0 | x!(3;).0");
    let next = step_process(&s, &dom(0, 1));
    assert_eq!(next.len(), 1);
    assert!(next.iter().next().unwrap().is_nil());
}

#[test]
fn conditional_steps() {
    let s = state("if 0 then a!() else b!()");
    let next: Vec<_> = step_process(&s, &dom(0, 0)).into_iter().collect();
    assert_eq!(next, vec![state("b!()")]);
}

#[test]
fn let_nd_ranges_over_domain() {
    let s = state("let* x in a!(x)");
    assert_eq!(step_process(&s, &dom(-1, 1)).len(), 3);
}

#[test]
fn ds_ex5_1_runs_to_a_stuck_state() {
    let mut s = state(&bench("ds-ex5-1.pi"));
    let mut steps = 0;
    loop {
        let next: Vec<_> = step_process(&s, &dom(0, 0)).into_iter().collect();
        if next.is_empty() {
            break;
        }
        assert_eq!(next.len(), 1, "deterministic: {s}");
        s = next[0].clone();
        steps += 1;
    }
    assert_eq!(steps, 3);
    assert!(!s.is_nil(), "the replicated input remains");
    assert!(explore_terminates(&parse_process(&bench("ds-ex5-1.pi")).unwrap(), &dom(0, 0), 100).terminates());
}

#[test]
fn fibonacci_terminates_on_small_domain() {
    let p = parse_process(&bench("fibonacci.pi")).unwrap();
    let r = explore_terminates(&p, &dom(0, 2), 100_000);
    assert!(r.terminates(), "{r}");
}

#[test]
fn self_reproducing_loop_diverges() {
    let p = parse_process("*loop?().loop!() | loop!()").unwrap();
    match explore_terminates(&p, &dom(0, 0), 1000) {
        Exploration::Diverges { cycle, .. } => assert_eq!(cycle.len(), 1),
        other => panic!("{other}"),
    }
    assert!(explore_terminates(&Process::Nil, &dom(0, 0), 10).terminates());
}

#[test]
fn restriction_scoped_communication_fires() {
    let s = state("new c in (c!(1) | c?(x). if x = 1 then done!() else 0)");
    let next = step_process(&s, &dom(0, 0));
    assert_eq!(next.len(), 1);
    let after: Vec<_> = step_process(next.iter().next().unwrap(), &dom(0, 0)).into_iter().collect();
    assert_eq!(after, vec![state("done!()")]);
}

#[test]
fn replicated_input_persists() {
    for file in ["fibonacci.pi", "dec.pi", "loop.pi", "even-odd.pi"] {
        let p = parse_process(&bench(file)).unwrap();
        let d = dom(0, 1);
        let mut frontier = vec![ProcState::from_process(&p)];
        for _ in 0..4 {
            let mut next = Vec::new();
            for s in &frontier {
                let reps: Vec<String> = s
                    .members
                    .iter()
                    .filter(|m| matches!(m, Process::RepInput(_)))
                    .map(|m| m.to_string())
                    .collect();
                for t in step_process(s, &d) {
                    let succ_text: Vec<String> = t.members.iter().map(|m| m.to_string()).collect();
                    // Replicated members never disappear (their channel names may be renumbered,
                    // so compare counts of replicated members).
                    let reps_after = t.members.iter().filter(|m| matches!(m, Process::RepInput(_))).count();
                    assert!(reps_after >= reps.len(), "{file}: {s} -> {t} ({succ_text:?})");
                    next.push(t);
                }
            }
            next.truncate(40);
            frontier = next;
        }
    }
}

#[test]
fn canonical_form_is_deterministic() {
    let a = state("new a in new b in (a!() | b!() | a?().0)");
    let b = state("new b in new a in (b?().0 | a!() | b!())");
    assert_eq!(a, b);
    let c = state("new a in (a!() | new b in b!())");
    let d = state("new x in new y in (y!() | x!())");
    assert_eq!(c, d);
    // unused restrictions vanish
    assert_eq!(state("new z in a!()"), state("a!()"));
}

/// Randomly re-associates and commutes a parallel composition.
fn shuffle(p: &Process, seed: &[bool], k: &mut usize) -> Process {
    let mut flip = || {
        let b = seed.get(*k % seed.len().max(1)).copied().unwrap_or(false);
        *k += 1;
        b
    };
    fn members(p: &Process, out: &mut Vec<Process>) {
        match p {
            Process::Par(a, b) => {
                members(a, out);
                members(b, out)
            }
            other => out.push(other.clone()),
        }
    }
    match p {
        Process::Par(..) => {
            let mut ms = Vec::new();
            members(p, &mut ms);
            if flip() {
                ms.reverse();
            }
            if ms.len() > 2 && flip() {
                ms.rotate_left(1);
            }
            // left-nested instead of right-nested, sometimes
            let mut it = ms.into_iter();
            let first = it.next().unwrap();
            if flip() {
                it.fold(first, Process::par)
            } else {
                let rest: Vec<Process> = it.collect();
                Process::par(first, Process::par_all(rest))
            }
        }
        Process::Nu { name, annot, body, span } => Process::Nu {
            name: name.clone(),
            annot: annot.clone(),
            body: Box::new(shuffle(body, seed, k)),
            span: *span,
        },
        other => other.clone(),
    }
}

proptest! {
    #[test]
    fn steps_respect_congruence(
        file in prop::sample::select(vec!["fibonacci.pi", "dec.pi", "even-odd.pi", "ds-ex5-1.pi", "region-merge.pi", "sum-neg.pi"]),
        seed in prop::collection::vec(any::<bool>(), 1..8),
    ) {
        let p = parse_process(&bench(file)).unwrap();
        let q = shuffle(&p, &seed, &mut 0);
        let d = dom(0, 1);
        let s = ProcState::from_process(&p);
        let t = ProcState::from_process(&q);
        prop_assert_eq!(&s, &t);
        prop_assert_eq!(step_process(&s, &d), step_process(&t, &d));
        // one step further, through a shuffled rendering of each successor
        for succ in step_process(&s, &d) {
            let shuffled = ProcState::from_process(&shuffle(&succ.to_process(), &seed, &mut 1));
            prop_assert_eq!(&shuffled, &succ);
        }
    }
}

/// Whenever a channel is received into a binder, the binder and the sent
/// name have the same region.
#[test]
fn regions_are_sound_under_reduction() {
    for file in ["fibonacci.pi", "dec.pi", "factorial-pred.pi", "even-odd-pred.pi", "region-merge.pi", "io-subtyping.pi", "nested-replicated-input1.pi"] {
        let typed = infer_simple_types(&parse_process(&bench(file)).unwrap()).unwrap();
        let region = |x: &str| {
            let base = piterm::syntax::strip_fresh_suffix(x);
            typed.chan_type(x).or_else(|| typed.chan_type(base)).map(|t| t.region)
        };
        let d = dom(0, 2);
        let mut frontier = vec![typed.process.clone()];
        let mut checked = 0;
        for _ in 0..6 {
            let mut next = Vec::new();
            for p in &frontier {
                for st in step_raw(p, &d) {
                    if let Some(ev) = &st.comm {
                        for (binder, value) in &ev.chan_bindings {
                            let (rb, rv) = (region(binder), region(value));
                            assert!(rb.is_some() && rb == rv, "{file}: {binder} <- {value}");
                            checked += 1;
                        }
                    }
                    next.push(st.result);
                }
            }
            next.truncate(60);
            frontier = next;
        }
        let _ = checked;
    }
}
