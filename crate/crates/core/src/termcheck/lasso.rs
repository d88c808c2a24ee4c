//! Concrete search for infinite call sequences, and the extra Horn clause
//! that rules out a found cycle.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::explore::NondetDomain;
use crate::logic::{CmpOp, Formula, PredApp};
use crate::pisem::eval_simple_expr;
use crate::refine::{Head, HornClause};
use crate::seq::{SeqExpr, SeqProgram};
use crate::syntax::{name, Name, SimpleExpr};

use super::MAIN;

/// Most nondeterministic tuples tried for one `let*`.
const MAX_TUPLES: usize = 4096;

/// A function applied to concrete arguments. `main` has no arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallState {
    pub fname: Name,
    pub args: Vec<i64>,
}

impl fmt::Display for CallState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{}({})", self.fname, args.join(", "))
    }
}

/// An infinite run: `stem` followed by `cycle` repeated forever. The state
/// after the last of `cycle` is its first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<CallState>,
    pub cycle: Vec<CallState>,
}

impl fmt::Display for Lasso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |xs: &[CallState]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" -> ");
        if !self.stem.is_empty() {
            write!(f, "{} -> ", show(&self.stem))?;
        }
        write!(f, "[{} -> {}]", show(&self.cycle), self.cycle[0])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LassoSearch {
    Found(Lasso),
    /// `exhausted` is set when the budget ran out before the search did.
    NoneFound { states: usize, exhausted: bool },
}

struct Stepper<'a> {
    prog: &'a SeqProgram,
    constants: Vec<i64>,
    dom: &'a NondetDomain,
}

impl Stepper<'_> {
    /// Values tried for a nondeterministic choice: values in scope first,
    /// then 0 and program constants, then neighbours, then the domain.
    fn candidates(&self, env: &BTreeMap<Name, i64>) -> Vec<i64> {
        let mut out: Vec<i64> = Vec::new();
        let mut push = |v: i64| {
            if !out.contains(&v) {
                out.push(v)
            }
        };
        env.values().for_each(|v| push(*v));
        push(0);
        self.constants.iter().for_each(|v| push(*v));
        for v in env.values().chain(&self.constants) {
            push(v.wrapping_sub(1));
            push(v.wrapping_add(1));
        }
        self.dom.values().iter().for_each(|v| push(*v));
        out
    }

    fn calls(&self, e: &SeqExpr, env: &BTreeMap<Name, i64>, out: &mut Vec<CallState>) {
        match e {
            SeqExpr::Skip => {}
            SeqExpr::Call(f, args) => {
                if let Ok(vals) = args.iter().map(|a| eval_simple_expr(a, env)).collect::<Result<Vec<_>, _>>() {
                    let s = CallState { fname: f.clone(), args: vals };
                    if !out.contains(&s) {
                        out.push(s);
                    }
                }
            }
            SeqExpr::Choice(a, b) => {
                self.calls(a, env, out);
                self.calls(b, env, out);
            }
            SeqExpr::If(c, a, b) => match eval_simple_expr(c, env) {
                Ok(0) => self.calls(b, env, out),
                Ok(_) => self.calls(a, env, out),
                Err(_) => {}
            },
            SeqExpr::Assume(phi, body) => {
                if phi.eval(env) == Some(true) {
                    self.calls(body, env, out);
                }
            }
            SeqExpr::LetNd(xs, body) => {
                let cands = self.candidates(env);
                let mut tuple = vec![0usize; xs.len()];
                for _ in 0..MAX_TUPLES {
                    let mut inner = env.clone();
                    for (x, i) in xs.iter().zip(&tuple) {
                        inner.insert(x.clone(), cands[*i]);
                    }
                    self.calls(body, &inner, out);
                    // Next tuple in lexicographic order.
                    let Some(pos) = (0..xs.len()).rev().find(|&p| tuple[p] + 1 < cands.len()) else {
                        break;
                    };
                    tuple[pos] += 1;
                    tuple[pos + 1..].iter_mut().for_each(|t| *t = 0);
                }
            }
        }
    }

    fn successors(&self, s: &CallState) -> Vec<CallState> {
        let mut out = Vec::new();
        if &*s.fname == MAIN && self.prog.defs_of(MAIN).next().is_none() {
            self.calls(&self.prog.main, &BTreeMap::new(), &mut out);
            return out;
        }
        for d in self.prog.defs_of(&s.fname) {
            let env: BTreeMap<Name, i64> = d.params.iter().cloned().zip(s.args.iter().copied()).collect();
            self.calls(&d.body, &env, &mut out);
        }
        out
    }
}

/// The calls that `state` can make next, resolving nondeterministic
/// choices from values in scope, program constants and `dom`. The state
/// `main()` stands for the main expression.
pub fn successors(prog: &SeqProgram, state: &CallState, dom: &NondetDomain) -> Vec<CallState> {
    Stepper { prog, constants: prog.constants(), dom }.successors(state)
}

/// Depth-first search of the call states reachable from `main` for one
/// that reaches itself.
pub fn find_lasso(prog: &SeqProgram, dom: &NondetDomain, budget: usize) -> LassoSearch {
    #[derive(PartialEq)]
    enum Color {
        Gray,
        Black,
    }
    let st = Stepper { prog, constants: prog.constants(), dom };
    let root = CallState { fname: name(MAIN), args: vec![] };
    let mut color: HashMap<CallState, Color> = HashMap::new();
    let mut path: Vec<CallState> = Vec::new();
    let mut stack: Vec<(CallState, Vec<CallState>)> = Vec::new();
    color.insert(root.clone(), Color::Gray);
    stack.push((root.clone(), st.successors(&root).into_iter().rev().collect()));
    path.push(root);
    while let Some((_, todo)) = stack.last_mut() {
        match todo.pop() {
            None => {
                let (s, _) = stack.pop().expect("non-empty");
                path.pop();
                color.insert(s, Color::Black);
            }
            Some(next) => match color.get(&next) {
                Some(Color::Black) => {}
                Some(Color::Gray) => {
                    let at = path.iter().position(|p| *p == next).expect("gray states are on the path");
                    return LassoSearch::Found(Lasso { stem: path[1..at].to_vec(), cycle: path[at..].to_vec() });
                }
                None => {
                    if color.len() >= budget {
                        return LassoSearch::NoneFound { states: color.len(), exhausted: true };
                    }
                    color.insert(next.clone(), Color::Gray);
                    let succ: Vec<CallState> = st.successors(&next).into_iter().rev().collect();
                    path.push(next.clone());
                    stack.push((next, succ));
                }
            },
        }
    }
    LassoSearch::NoneFound { states: color.len(), exhausted: false }
}

/// The lasso does not pass through a call whose argument is a refined
/// nondeterministic value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no refinement-guarded call on the cycle")]
pub struct NotExtractable;

/// Collects, from the body of a definition, the calls to `callee` whose
/// arguments mention a `let*` variable constrained by an assumed
/// predicate, each with the innermost such predicate application.
fn guarded_calls(
    e: &SeqExpr,
    callee: &str,
    bound: &BTreeSet<Name>,
    assumed: &[PredApp],
    out: &mut Vec<(PredApp, Vec<SimpleExpr>)>,
) {
    match e {
        SeqExpr::Skip => {}
        SeqExpr::Call(f, args) if &**f == callee => {
            let nondet: BTreeSet<Name> =
                args.iter().flat_map(|a| a.vars()).filter(|v| bound.contains(v)).collect();
            let app = assumed
                .iter()
                .rev()
                .find(|p| p.args.iter().any(|a| a.vars().iter().any(|v| nondet.contains(v))));
            if let Some(app) = app {
                out.push((app.clone(), args.clone()));
            }
        }
        SeqExpr::Call(..) => {}
        SeqExpr::Choice(a, b) | SeqExpr::If(_, a, b) => {
            guarded_calls(a, callee, bound, assumed, out);
            guarded_calls(b, callee, bound, assumed, out);
        }
        SeqExpr::Assume(phi, body) => {
            let mut assumed = assumed.to_vec();
            assumed.extend(phi.preds().into_iter().cloned());
            guarded_calls(body, callee, bound, &assumed, out);
        }
        SeqExpr::LetNd(xs, body) => {
            let mut bound = bound.clone();
            bound.extend(xs.iter().cloned());
            guarded_calls(body, callee, &bound, assumed, out);
        }
    }
}

/// A clause that rules out one step of a cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleClause {
    pub clause: HornClause,
    /// The concrete step passes equal arguments, so the clause forbids it.
    pub refutes_step: bool,
}

/// For every step `g(x̃) → f(ẽ)` of the cycle, starting from the step that
/// closes it, and every call site of `f` in `g`, the clause `P(ỹ) ⇒ x̃ ≠ ẽ` when the call passes a
/// nondeterministic value constrained by `P` in `symbolic` (the refined
/// translation with unsolved templates).
pub fn cycle_clauses(lasso: &Lasso, symbolic: &SeqProgram) -> Vec<CycleClause> {
    let n = lasso.cycle.len();
    let steps = std::iter::once((n - 1, 0)).chain((0..n - 1).map(|i| (i, i + 1)));
    let mut out = Vec::new();
    for (a, b) in steps {
        let (g, f) = (&lasso.cycle[a], &lasso.cycle[b]);
        for d in symbolic.defs_of(&g.fname) {
            let mut sites = Vec::new();
            guarded_calls(&d.body, &f.fname, &BTreeSet::new(), &[], &mut sites);
            for (app, args) in sites {
                if args.len() != d.params.len() || args.is_empty() {
                    continue;
                }
                let differs = Formula::or(
                    d.params
                        .iter()
                        .zip(&args)
                        .map(|(p, e)| Formula::not(Formula::Cmp(CmpOp::Eq, SimpleExpr::Var(p.clone()), e.clone()))),
                )
                .simplify();
                let clause = HornClause::new(&[Formula::Pred(app)], Head::Constraint(differs));
                if !out.iter().any(|c: &CycleClause| c.clause == clause) {
                    out.push(CycleClause { clause, refutes_step: g.args == f.args });
                }
            }
        }
    }
    out
}

/// The first clause of [`cycle_clauses`].
pub fn lasso_to_clause(lasso: &Lasso, symbolic: &SeqProgram) -> Result<HornClause, NotExtractable> {
    cycle_clauses(lasso, symbolic).into_iter().next().map(|c| c.clause).ok_or(NotExtractable)
}
