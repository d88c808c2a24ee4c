//! Reference interpreter for the reduction semantics of processes.
//!
//! States are kept in a canonical form modulo structural congruence: the
//! parallel composition is flattened into a sorted multiset of members,
//! inaction is dropped, and restrictions are hoisted to the top with
//! canonical names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::explore::{explore, Exploration, NondetDomain};
use crate::syntax::{
    free_names, fresh_name, name, substitute, InputPrefix, Name, Op, OutputPrefix, Process,
    SimpleExpr, TypeAnnot,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(Name),
    #[error("malformed expression `{0}`")]
    Malformed(String),
}

/// Evaluates an expression with wrapping 64-bit arithmetic; comparisons and
/// connectives yield 0 or 1.
pub fn eval_simple_expr(v: &SimpleExpr, env: &BTreeMap<Name, i64>) -> Result<i64, EvalError> {
    match v {
        SimpleExpr::IntLit(i) => Ok(*i),
        SimpleExpr::Var(x) => env.get(x).copied().ok_or_else(|| EvalError::UnboundVariable(x.clone())),
        SimpleExpr::Op(op, args) => {
            let vals = args.iter().map(|a| eval_simple_expr(a, env)).collect::<Result<Vec<_>, _>>()?;
            apply_op(*op, &vals).ok_or_else(|| EvalError::Malformed(v.to_string()))
        }
    }
}

pub fn apply_op(op: Op, vals: &[i64]) -> Option<i64> {
    let b = |x: bool| x as i64;
    Some(match (op, vals) {
        (Op::Add, [a, c]) => a.wrapping_add(*c),
        (Op::Sub, [a, c]) => a.wrapping_sub(*c),
        (Op::Mul, [a, c]) => a.wrapping_mul(*c),
        (Op::Neg, [a]) => a.wrapping_neg(),
        (Op::Lt, [a, c]) => b(a < c),
        (Op::Le, [a, c]) => b(a <= c),
        (Op::Eq, [a, c]) => b(a == c),
        (Op::Ne, [a, c]) => b(a != c),
        (Op::Gt, [a, c]) => b(a > c),
        (Op::Ge, [a, c]) => b(a >= c),
        (Op::And, [a, c]) => b(*a != 0 && *c != 0),
        (Op::Or, [a, c]) => b(*a != 0 || *c != 0),
        (Op::Not, [a]) => b(*a == 0),
        _ => return None,
    })
}

fn eval_closed(e: &SimpleExpr) -> Option<i64> {
    eval_simple_expr(e, &BTreeMap::new()).ok()
}

/// A process modulo structural congruence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcState {
    /// Restricted names, `_r0`, `_r1`, ... in canonical order.
    pub restricted: Vec<Name>,
    /// Sequential members: no `Nil`, `Par` or `Nu` at top level. Sorted.
    pub members: Vec<Process>,
}

impl ProcState {
    pub fn from_process(p: &Process) -> ProcState {
        let mut fl = Flattener::new(p, true);
        fl.flatten(p.clone());
        canonicalize(fl.restricted.into_iter().map(|(x, _)| x).collect(), fl.members)
    }

    pub fn to_process(&self) -> Process {
        let body = Process::par_all(self.members.clone());
        self.restricted.iter().rev().fold(body, |acc, x| Process::nu(x, acc))
    }

    pub fn is_nil(&self) -> bool {
        self.members.is_empty()
    }
}

impl fmt::Display for ProcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_process())
    }
}

/// Splits a process into hoisted restrictions and sequential members.
/// Hoisted names are renamed only when they clash with names already in use.
struct Flattener {
    restricted: Vec<(Name, Option<TypeAnnot>)>,
    members: Vec<Process>,
    used: BTreeSet<Name>,
    /// Rename every hoisted name to a reserved `_h<k>` name.
    canonical: bool,
}

impl Flattener {
    fn new(p: &Process, canonical: bool) -> Self {
        Flattener { restricted: Vec::new(), members: Vec::new(), used: free_names(p).all(), canonical }
    }

    fn flatten(&mut self, p: Process) {
        match p {
            Process::Nil => {}
            Process::Par(a, b) => {
                self.flatten(*a);
                self.flatten(*b);
            }
            Process::Nu { name: x, annot, body, .. } => {
                let y = if self.canonical {
                    name(&format!("_h{}", self.restricted.len()))
                } else {
                    fresh_name(&x, &|c| self.used.contains(c))
                };
                self.used.insert(y.clone());
                let body = if y != x {
                    substitute(&body, &BTreeMap::new(), &BTreeMap::from([(x, y.clone())]))
                } else {
                    *body
                };
                self.restricted.push((y, annot));
                self.flatten(body);
            }
            other => {
                for x in crate::syntax::bound_names(&other) {
                    self.used.insert(x);
                }
                self.members.push(other)
            }
        }
    }
}

/// Renames binders inside a member to `_v0`, `_v1`, ... in pre-order.
fn normalize_binders(p: &Process) -> Process {
    let mut counter = 0usize;
    norm(p, &BTreeMap::new(), &mut counter)
}

fn norm(p: &Process, ren: &BTreeMap<Name, Name>, k: &mut usize) -> Process {
    let rn = |x: &Name| ren.get(x).cloned().unwrap_or_else(|| x.clone());
    let mut fresh = |ren: &mut BTreeMap<Name, Name>, x: &Name| {
        let y = name(&format!("_v{}", *k));
        *k += 1;
        ren.insert(x.clone(), y.clone());
        y
    };
    match p {
        Process::Nil => Process::Nil,
        Process::Output(o) => Process::Output(OutputPrefix {
            chan: rn(&o.chan),
            ints: o.ints.iter().map(|e| e.rename_vars(ren)).collect(),
            chans: o.chans.iter().map(rn).collect(),
            cont: Box::new(norm(&o.cont, ren, k)),
            span: o.span,
        }),
        Process::Input(i) | Process::RepInput(i) => {
            let mut inner = ren.clone();
            let ints = i.ints.iter().map(|x| fresh(&mut inner, x)).collect();
            let chans = i.chans.iter().map(|x| fresh(&mut inner, x)).collect();
            let ip = InputPrefix { chan: rn(&i.chan), ints, chans, cont: Box::new(norm(&i.cont, &inner, k)), span: i.span };
            if matches!(p, Process::Input(_)) {
                Process::Input(ip)
            } else {
                Process::RepInput(ip)
            }
        }
        Process::Par(a, b) => {
            let a = norm(a, ren, k);
            Process::par(a, norm(b, ren, k))
        }
        Process::Nu { name: x, annot, body, span } => {
            let mut inner = ren.clone();
            let y = fresh(&mut inner, x);
            Process::Nu { name: y, annot: annot.clone(), body: Box::new(norm(body, &inner, k)), span: *span }
        }
        Process::If { cond, then, els, span } => {
            let cond = cond.rename_vars(ren);
            let then = Box::new(norm(then, ren, k));
            Process::If { cond, then, els: Box::new(norm(els, ren, k)), span: *span }
        }
        Process::LetNd { names, body, span } => {
            let mut inner = ren.clone();
            let names = names.iter().map(|x| fresh(&mut inner, x)).collect();
            Process::LetNd { names, body: Box::new(norm(body, &inner, k)), span: *span }
        }
    }
}

fn rename_free(p: &Process, map: &BTreeMap<Name, Name>) -> Process {
    substitute(p, &BTreeMap::new(), map)
}

/// Canonical form: binders normalized, unused restrictions dropped,
/// restricted names ordered by how they are used, members sorted.
fn canonicalize(restricted: Vec<Name>, members: Vec<Process>) -> ProcState {
    let members: Vec<Process> = members.iter().map(normalize_binders).collect();
    let restricted_set: BTreeSet<Name> = restricted.iter().cloned().collect();
    let member_names: Vec<BTreeSet<Name>> = members.iter().map(|m| free_names(m).all()).collect();
    let live: Vec<Name> = restricted
        .into_iter()
        .filter(|x| member_names.iter().any(|s| s.contains(x)))
        .collect();

    // Anonymized view: every restricted name replaced by `_`.
    let hole = name("_");
    let anon_map: BTreeMap<Name, Name> = restricted_set.iter().map(|x| (x.clone(), hole.clone())).collect();
    let anon: Vec<String> = members.iter().map(|m| rename_free(m, &anon_map).to_string()).collect();

    // Signature of a restricted name: sorted member texts with that name
    // marked and all other restricted names anonymized.
    let mark = name("_m");
    let mut keyed: Vec<(Vec<String>, usize, Name)> = live
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut map = anon_map.clone();
            map.insert(x.clone(), mark.clone());
            let mut sig: Vec<String> = members
                .iter()
                .zip(&member_names)
                .zip(&anon)
                .map(|((m, names), a)| if names.contains(x) { rename_free(m, &map).to_string() } else { a.clone() })
                .collect();
            sig.sort();
            (sig, i, x.clone())
        })
        .collect();
    keyed.sort();

    let final_names: Vec<Name> = (0..keyed.len()).map(|i| name(&format!("_r{i}"))).collect();
    let map: BTreeMap<Name, Name> =
        keyed.iter().zip(&final_names).map(|((_, _, x), y)| (x.clone(), y.clone())).collect();
    let mut members: Vec<Process> = members.iter().map(|m| rename_free(m, &map)).collect();
    members.sort_by_cached_key(|m| m.to_string());
    ProcState { restricted: final_names, members }
}

/// Record of a communication: which binders received which names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommEvent {
    pub chan: Name,
    pub chan_bindings: Vec<(Name, Name)>,
    pub int_bindings: Vec<(Name, i64)>,
}

/// One reduction step on the members of a flattened process.
#[derive(Debug, Clone)]
struct MemberStep {
    removed: Vec<usize>,
    added: Vec<Process>,
    comm: Option<CommEvent>,
}

fn member_steps(members: &[Process], dom: &NondetDomain) -> Vec<MemberStep> {
    let mut out = Vec::new();
    for (i, m) in members.iter().enumerate() {
        match m {
            Process::Output(o) => {
                let vals: Option<Vec<i64>> = o.ints.iter().map(eval_closed).collect();
                let Some(vals) = vals else { continue };
                for (j, n) in members.iter().enumerate() {
                    let (inp, rep) = match n {
                        Process::Input(inp) => (inp, false),
                        Process::RepInput(inp) => (inp, true),
                        _ => continue,
                    };
                    if i == j || inp.chan != o.chan || inp.ints.len() != vals.len() || inp.chans.len() != o.chans.len() {
                        continue;
                    }
                    let ints: BTreeMap<Name, i64> = inp.ints.iter().cloned().zip(vals.iter().copied()).collect();
                    let chans: BTreeMap<Name, Name> = inp.chans.iter().cloned().zip(o.chans.iter().cloned()).collect();
                    let body = substitute(&inp.cont, &ints, &chans);
                    let removed = if rep { vec![i] } else { vec![i, j] };
                    out.push(MemberStep {
                        removed,
                        added: vec![(*o.cont).clone(), body],
                        comm: Some(CommEvent {
                            chan: o.chan.clone(),
                            chan_bindings: inp.chans.iter().cloned().zip(o.chans.iter().cloned()).collect(),
                            int_bindings: inp.ints.iter().cloned().zip(vals.iter().copied()).collect(),
                        }),
                    });
                }
            }
            Process::If { cond, then, els, .. } => {
                if let Some(v) = eval_closed(cond) {
                    let next = if v != 0 { then } else { els };
                    out.push(MemberStep { removed: vec![i], added: vec![(**next).clone()], comm: None });
                }
            }
            Process::LetNd { names, body, .. } => {
                for t in dom.tuples(names.len()) {
                    let ints: BTreeMap<Name, i64> = names.iter().cloned().zip(t).collect();
                    out.push(MemberStep {
                        removed: vec![i],
                        added: vec![substitute(body, &ints, &BTreeMap::new())],
                        comm: None,
                    });
                }
            }
            _ => {}
        }
    }
    out
}

fn apply_member_step(members: &[Process], step: &MemberStep) -> Vec<Process> {
    let mut next: Vec<Process> = members
        .iter()
        .enumerate()
        .filter(|(k, _)| !step.removed.contains(k))
        .map(|(_, m)| m.clone())
        .collect();
    next.extend(step.added.iter().cloned());
    next
}

/// All one-step successors of a state, each re-canonicalized.
pub fn step_process(s: &ProcState, dom: &NondetDomain) -> BTreeSet<ProcState> {
    let mut out = BTreeSet::new();
    for step in member_steps(&s.members, dom) {
        let next = Process::par_all(apply_member_step(&s.members, &step));
        let wrapped = s.restricted.iter().rev().fold(next, |acc, x| Process::nu(x, acc));
        out.insert(ProcState::from_process(&wrapped));
    }
    out
}

/// A successor produced without canonical renaming, for tests that track
/// individual names across steps.
#[derive(Debug, Clone)]
pub struct RawStep {
    pub result: Process,
    pub comm: Option<CommEvent>,
}

/// One-step successors of `p` that keep the original names wherever
/// possible. Restrictions are hoisted to the top of the result.
pub fn step_raw(p: &Process, dom: &NondetDomain) -> Vec<RawStep> {
    let mut fl = Flattener::new(p, false);
    fl.flatten(p.clone());
    let restricted = fl.restricted;
    member_steps(&fl.members, dom)
        .into_iter()
        .map(|step| {
            let body = Process::par_all(apply_member_step(&fl.members, &step));
            let result = restricted.iter().rev().fold(body, |acc, (x, annot)| Process::Nu {
                name: x.clone(),
                annot: annot.clone(),
                body: Box::new(acc),
                span: Default::default(),
            });
            RawStep { result, comm: step.comm }
        })
        .collect()
}

/// Explores every reduction sequence of `p` with nondeterministic integers
/// drawn from `dom`.
pub fn explore_terminates(p: &Process, dom: &NondetDomain, budget: usize) -> Exploration<ProcState> {
    explore(ProcState::from_process(p), |s| step_process(s, dom).into_iter().collect(), budget)
}
