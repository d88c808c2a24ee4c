//! Standard and non-standard reduction of sequential programs.
//!
//! Standard reduction resolves a choice by discarding one side. The
//! non-standard relation instead reduces inside either operand and keeps
//! both, and works up to congruence of `[]` (commutative, associative, with
//! `skip` as unit). States of the non-standard relation are kept in a
//! canonical form: binders renamed by depth, choices flattened into a sorted
//! multiset of branches with `skip` removed.

use std::collections::{BTreeMap, BTreeSet};

use super::{SeqDef, SeqExpr, SeqProgram};
use crate::explore::{explore, Exploration, NondetDomain};
use crate::pisem::eval_simple_expr;
use crate::syntax::{name, Name, SimpleExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Semantics {
    Standard,
    Nonstandard,
}

fn eval_closed(e: &SimpleExpr) -> Option<i64> {
    eval_simple_expr(e, &BTreeMap::new()).ok()
}

fn bind(xs: &[Name], vals: &[i64]) -> BTreeMap<Name, SimpleExpr> {
    xs.iter().cloned().zip(vals.iter().map(|v| SimpleExpr::IntLit(*v))).collect()
}

/// Successors of a closed expression that is not a choice.
fn base_steps(defs: &[SeqDef], e: &SeqExpr, dom: &NondetDomain) -> Vec<SeqExpr> {
    match e {
        SeqExpr::Skip | SeqExpr::Choice(..) => Vec::new(),
        SeqExpr::LetNd(xs, body) => dom.tuples(xs.len()).iter().map(|t| body.subst(&bind(xs, t))).collect(),
        SeqExpr::Call(f, args) => {
            let Some(vals) = args.iter().map(eval_closed).collect::<Option<Vec<_>>>() else {
                return Vec::new();
            };
            defs.iter()
                .filter(|d| d.fname == *f && d.params.len() == vals.len())
                .map(|d| d.body.subst(&bind(&d.params, &vals)))
                .collect()
        }
        SeqExpr::If(c, a, b) => match eval_closed(c) {
            Some(0) => vec![(**b).clone()],
            Some(_) => vec![(**a).clone()],
            None => Vec::new(),
        },
        SeqExpr::Assume(f, body) => match f.eval(&BTreeMap::new()) {
            Some(true) => vec![(**body).clone()],
            Some(false) => vec![SeqExpr::Skip],
            None => Vec::new(),
        },
    }
}

/// One-step successors of `e` under the standard reduction.
pub fn standard_successors(defs: &[SeqDef], e: &SeqExpr, dom: &NondetDomain) -> BTreeSet<SeqExpr> {
    match e {
        SeqExpr::Choice(a, b) => [(**a).clone(), (**b).clone()].into_iter().collect(),
        _ => base_steps(defs, e, dom).into_iter().collect(),
    }
}

/// One-step successors of `e` under the non-standard reduction, each in
/// canonical form.
pub fn nonstandard_successors(defs: &[SeqDef], e: &SeqExpr, dom: &NondetDomain) -> BTreeSet<SeqExpr> {
    let branches: Vec<SeqExpr> = e.branches().into_iter().filter(|b| **b != SeqExpr::Skip).cloned().collect();
    let mut out = BTreeSet::new();
    for (i, b) in branches.iter().enumerate() {
        for s in base_steps(defs, b, dom) {
            let mut next: Vec<SeqExpr> = Vec::with_capacity(branches.len());
            next.extend(branches[..i].iter().cloned());
            next.extend(s.branches().into_iter().cloned());
            next.extend(branches[i + 1..].iter().cloned());
            out.insert(canonical(&SeqExpr::choice_all(next)));
        }
    }
    out
}

pub fn step_standard(prog: &SeqProgram, dom: &NondetDomain) -> BTreeSet<SeqExpr> {
    standard_successors(&prog.defs, &prog.main, dom)
}

pub fn step_nonstandard(prog: &SeqProgram, dom: &NondetDomain) -> BTreeSet<SeqExpr> {
    nonstandard_successors(&prog.defs, &canonical(&prog.main), dom)
}

/// Renames `let*` binders to names determined by their nesting depth, so
/// that α-equivalent expressions coincide regardless of branch order.
fn alpha_normalize(e: &SeqExpr, depth: usize) -> SeqExpr {
    match e {
        SeqExpr::Skip | SeqExpr::Call(..) => e.clone(),
        SeqExpr::LetNd(xs, body) => {
            let fresh: Vec<Name> = (0..xs.len()).map(|i| name(&format!("_b{depth}_{i}"))).collect();
            let map: BTreeMap<Name, SimpleExpr> =
                xs.iter().cloned().zip(fresh.iter().map(|y| SimpleExpr::Var(y.clone()))).collect();
            SeqExpr::LetNd(fresh, Box::new(alpha_normalize(&body.subst(&map), depth + 1)))
        }
        SeqExpr::Choice(a, b) => SeqExpr::choice(alpha_normalize(a, depth), alpha_normalize(b, depth)),
        SeqExpr::If(c, a, b) => SeqExpr::if_(c.clone(), alpha_normalize(a, depth), alpha_normalize(b, depth)),
        SeqExpr::Assume(f, body) => SeqExpr::assume(f.clone(), alpha_normalize(body, depth)),
    }
}

fn sort_choices(e: &SeqExpr) -> SeqExpr {
    match e {
        SeqExpr::Skip | SeqExpr::Call(..) => e.clone(),
        SeqExpr::Choice(..) => {
            let mut bs: Vec<SeqExpr> =
                e.branches().into_iter().map(sort_choices).filter(|b| *b != SeqExpr::Skip).collect();
            let mut keyed: Vec<(String, SeqExpr)> = bs.drain(..).map(|b| (b.to_string(), b)).collect();
            keyed.sort();
            SeqExpr::choice_all(keyed.into_iter().map(|(_, b)| b).collect())
        }
        SeqExpr::LetNd(xs, body) => SeqExpr::LetNd(xs.clone(), Box::new(sort_choices(body))),
        SeqExpr::If(c, a, b) => SeqExpr::if_(c.clone(), sort_choices(a), sort_choices(b)),
        SeqExpr::Assume(f, body) => SeqExpr::assume(f.clone(), sort_choices(body)),
    }
}

/// Canonical representative of the congruence class of `e` (up to α).
pub fn canonical(e: &SeqExpr) -> SeqExpr {
    sort_choices(&alpha_normalize(e, 0))
}

/// Decides congruence generated by commutativity and associativity of
/// `[]` and `skip` as its unit, up to renaming of bound variables.
pub fn expr_congruent(a: &SeqExpr, b: &SeqExpr) -> bool {
    canonical(a) == canonical(b)
}

/// Explores every expression reachable from `main`.
pub fn explore_seq_terminates(
    prog: &SeqProgram,
    dom: &NondetDomain,
    budget: usize,
    semantics: Semantics,
) -> Exploration<SeqExpr> {
    let defs = &prog.defs;
    match semantics {
        Semantics::Standard => explore(
            prog.main.clone(),
            |e| standard_successors(defs, e, dom).into_iter().collect(),
            budget,
        ),
        Semantics::Nonstandard => explore(
            canonical(&prog.main),
            |e| nonstandard_successors(defs, e, dom).into_iter().collect(),
            budget,
        ),
    }
}
