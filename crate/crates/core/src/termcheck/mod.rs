//! Termination checking of sequential programs: linear ranking functions
//! as termination certificates, and lassos as evidence of a proof failure.

mod farkas;
mod lasso;
mod rank;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::chc::SolverSpec;
use crate::explore::NondetDomain;
use crate::logic::{is_sat, Formula, SatResult};
use crate::seq::{SeqExpr, SeqProgram};
use crate::syntax::{name, Name, SimpleExpr};

pub use lasso::{cycle_clauses, find_lasso, lasso_to_clause, CycleClause, successors, CallState, Lasso, LassoSearch, NotExtractable};
pub use rank::{synth_ranking, verify_certificate, LinearRank, RankingCertificate, SccRanking};

/// Name of the pseudo-node that the entry transitions leave from.
pub const MAIN: &str = "main";

/// A call from `src` to `dst`, taken when `guard` holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub src: Name,
    pub dst: Name,
    /// Over the parameters of `src` and `locals`.
    pub guard: Formula,
    pub args: Vec<SimpleExpr>,
    /// Variables bound by `let*` on the way to the call.
    pub locals: Vec<Name>,
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
        write!(f, "{} -> {}({}) when {}", self.src, self.dst, args.join(", "), self.guard)
    }
}

/// The call graph of a program with integer guards and arguments.
#[derive(Debug, Clone, Default)]
pub struct TransitionSystem {
    /// Parameters of every function, taken from its first definition.
    pub params: BTreeMap<Name, Vec<Name>>,
    pub edges: Vec<Transition>,
    /// Calls made by the main expression.
    pub entry: Vec<Transition>,
}

impl TransitionSystem {
    /// Functions reachable from the entry through transitions with
    /// satisfiable guards.
    pub fn reachable(&self) -> BTreeSet<Name> {
        let live = |t: &Transition| is_sat(&t.guard) != SatResult::Unsat;
        let mut seen: BTreeSet<Name> = BTreeSet::new();
        let mut todo: VecDeque<Name> = self.entry.iter().filter(|t| live(t)).map(|t| t.dst.clone()).collect();
        while let Some(f) = todo.pop_front() {
            if !seen.insert(f.clone()) {
                continue;
            }
            todo.extend(self.edges.iter().filter(|t| t.src == f && live(t)).map(|t| t.dst.clone()));
        }
        seen
    }

    /// Drops transitions that can never fire: unsatisfiable guards, or a
    /// source that is never reached.
    pub fn prune(&self) -> TransitionSystem {
        let reach = self.reachable();
        let live = |t: &Transition| is_sat(&t.guard) != SatResult::Unsat;
        TransitionSystem {
            params: self.params.iter().filter(|(f, _)| reach.contains(*f)).map(|(f, p)| (f.clone(), p.clone())).collect(),
            edges: self.edges.iter().filter(|t| reach.contains(&t.src) && live(t)).cloned().collect(),
            entry: self.entry.iter().filter(|t| live(t)).cloned().collect(),
        }
    }
}

impl fmt::Display for TransitionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.entry.iter().chain(&self.edges) {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

struct Extractor<'a> {
    src: Name,
    counter: &'a mut usize,
    out: Vec<Transition>,
}

impl Extractor<'_> {
    fn walk(&mut self, e: &SeqExpr, env: &BTreeMap<Name, SimpleExpr>, guard: &[Formula], locals: &[Name]) {
        match e {
            SeqExpr::Skip => {}
            SeqExpr::Call(f, args) => self.out.push(Transition {
                src: self.src.clone(),
                dst: f.clone(),
                guard: Formula::and(guard.to_vec()).simplify(),
                args: args.iter().map(|a| a.subst_vars(env)).collect(),
                locals: locals.to_vec(),
            }),
            SeqExpr::Choice(a, b) => {
                self.walk(a, env, guard, locals);
                self.walk(b, env, guard, locals);
            }
            SeqExpr::If(c, a, b) => {
                let c = Formula::from_expr(&c.subst_vars(env));
                let mut g = guard.to_vec();
                g.push(c.clone());
                self.walk(a, env, &g, locals);
                *g.last_mut().expect("just pushed") = Formula::not(c).simplify();
                self.walk(b, env, &g, locals);
            }
            SeqExpr::Assume(phi, body) => {
                let mut g = guard.to_vec();
                g.push(phi.subst(env));
                self.walk(body, env, &g, locals);
            }
            SeqExpr::LetNd(xs, body) => {
                let mut env = env.clone();
                let mut locals = locals.to_vec();
                for x in xs {
                    *self.counter += 1;
                    let fresh = name(&format!("{x}'{}", self.counter));
                    env.insert(x.clone(), SimpleExpr::Var(fresh.clone()));
                    locals.push(fresh);
                }
                self.walk(body, &env, guard, &locals);
            }
        }
    }
}

/// One transition per call site. Guards collect the conditions and
/// assumptions on the path to the call; every `let*` variable becomes a
/// fresh local. Definitions of one function all use the parameter names
/// of its first definition.
pub fn extract_transitions(prog: &SeqProgram) -> TransitionSystem {
    let mut ts = TransitionSystem::default();
    for d in &prog.defs {
        ts.params.entry(d.fname.clone()).or_insert_with(|| d.params.clone());
    }
    let mut counter = 0;
    for d in &prog.defs {
        let canon = &ts.params[&d.fname];
        let env: BTreeMap<Name, SimpleExpr> =
            d.params.iter().cloned().zip(canon.iter().cloned().map(SimpleExpr::Var)).collect();
        let mut ex = Extractor { src: d.fname.clone(), counter: &mut counter, out: Vec::new() };
        ex.walk(&d.body, &env, &[], &[]);
        ts.edges.extend(ex.out);
    }
    let mut ex = Extractor { src: name(MAIN), counter: &mut counter, out: Vec::new() };
    ex.walk(&prog.main, &BTreeMap::new(), &[], &[]);
    ts.entry = ex.out;
    ts
}

/// Settings of the termination check.
#[derive(Debug, Clone)]
pub struct CheckConfig {
    /// Extra values tried for nondeterministic choices in the lasso search.
    pub dom: NondetDomain,
    /// Maximal number of call states visited by the lasso search.
    pub lasso_budget: usize,
    /// SMT solver for the second stage of the ranking search.
    pub smt: Option<SolverSpec>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { dom: NondetDomain::range(-1, 1).expect("non-empty"), lasso_budget: 10_000, smt: None }
    }
}

#[derive(Debug, Clone)]
pub enum CheckResult {
    Terminating(RankingCertificate),
    NonTerminating(Lasso),
    /// Neither a ranking function nor a lasso was found.
    Unknown,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckResult::Terminating(c) => write!(f, "TERMINATING (rank: {c})"),
            CheckResult::NonTerminating(l) => write!(f, "UNKNOWN (lasso: {l})"),
            CheckResult::Unknown => write!(f, "UNKNOWN (budget)"),
        }
    }
}

/// Searches a ranking certificate and, failing that, a lasso.
pub fn check_termination(prog: &SeqProgram, cfg: &CheckConfig) -> CheckResult {
    let ts = extract_transitions(prog).prune();
    if let Some(cert) = synth_ranking(&ts, cfg.smt.as_ref()) {
        if verify_certificate(&ts, &cert) {
            return CheckResult::Terminating(cert);
        }
        tracing::warn!("ranking certificate failed re-verification");
    }
    match find_lasso(prog, &cfg.dom, cfg.lasso_budget) {
        LassoSearch::Found(l) => CheckResult::NonTerminating(l),
        LassoSearch::NoneFound { .. } => CheckResult::Unknown,
    }
}
