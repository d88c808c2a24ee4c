//! Lexicographic linear ranking functions, searched per strongly connected
//! component of the call graph.
//!
//! All functions of a component share one coefficient vector, applied to
//! their parameters by position, and one constant. A transition is ranked
//! by a tuple position that strictly decreases on it and is bounded below
//! by zero, while earlier positions do not increase.

use std::collections::BTreeMap;
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::farkas;
use super::{Transition, TransitionSystem};
use crate::chc::SolverSpec;
use crate::logic::{fold_expr, is_valid, CmpOp, Formula};
use crate::syntax::{Name, Op, SimpleExpr};

/// Offsets tried for the constant of a ranking function.
const OFFSETS: std::ops::RangeInclusive<i64> = -16..=16;

/// Longest lexicographic tuple searched.
const MAX_DEPTH: usize = 2;

/// `Σ coeffs[i] * arg_i + constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRank {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl LinearRank {
    /// The function applied to actual arguments; missing positions count
    /// as zero.
    pub fn at(&self, args: &[SimpleExpr]) -> SimpleExpr {
        let mut acc: Option<SimpleExpr> = (self.constant != 0).then_some(SimpleExpr::IntLit(self.constant));
        for (c, a) in self.coeffs.iter().zip(args) {
            let (op, term) = match *c {
                0 => continue,
                1 => (Op::Add, a.clone()),
                -1 => (Op::Sub, a.clone()),
                k if k > 0 => (Op::Add, SimpleExpr::bin(Op::Mul, SimpleExpr::IntLit(k), a.clone())),
                k => (Op::Sub, SimpleExpr::bin(Op::Mul, SimpleExpr::IntLit(-k), a.clone())),
            };
            acc = Some(match acc {
                None if op == Op::Add => term,
                None => SimpleExpr::op(Op::Neg, vec![term]),
                Some(x) => SimpleExpr::bin(op, x, term),
            });
        }
        acc.unwrap_or(SimpleExpr::IntLit(0))
    }

    fn strict(&self, ts: &TransitionSystem, t: &Transition) -> Formula {
        Formula::implies(t.guard.clone(), Formula::cmp(CmpOp::Gt, self.at_src(ts, t), self.at(&t.args)))
    }

    fn non_increasing(&self, ts: &TransitionSystem, t: &Transition) -> Formula {
        Formula::implies(t.guard.clone(), Formula::cmp(CmpOp::Ge, self.at_src(ts, t), self.at(&t.args)))
    }

    fn bounded(&self, ts: &TransitionSystem, t: &Transition) -> Formula {
        Formula::implies(t.guard.clone(), Formula::cmp(CmpOp::Ge, self.at_src(ts, t), SimpleExpr::IntLit(0)))
    }

    fn at_src(&self, ts: &TransitionSystem, t: &Transition) -> SimpleExpr {
        let params: Vec<SimpleExpr> = ts.params[&t.src].iter().cloned().map(SimpleExpr::Var).collect();
        self.at(&params)
    }
}

/// Ranking of one component: the tuple, and for every transition inside
/// it the tuple position that ranks it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccRanking {
    pub nodes: Vec<Name>,
    pub components: Vec<LinearRank>,
    /// Indices into the transition system's edges, with their position.
    pub levels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankingCertificate {
    pub sccs: Vec<SccRanking>,
    /// Parameters of the ranked functions, for display.
    pub params: BTreeMap<Name, Vec<Name>>,
}

impl fmt::Display for RankingCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sccs.is_empty() {
            return f.write_str("no recursion");
        }
        let mut parts = Vec::new();
        for scc in &self.sccs {
            for n in &scc.nodes {
                let params = &self.params[n];
                let args: Vec<SimpleExpr> = params.iter().cloned().map(SimpleExpr::Var).collect();
                let vals: Vec<String> = scc.components.iter().map(|r| fold_expr(&r.at(&args)).to_string()).collect();
                let tuple = if vals.len() == 1 { vals[0].clone() } else { format!("({})", vals.join(", ")) };
                parts.push(format!("{n}({}) = {tuple}", params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")));
            }
        }
        f.write_str(&parts.join("; "))
    }
}

/// Coefficient vectors over `{-1, 0, 1}`, fewest non-zero entries first.
fn coefficient_vectors(k: usize) -> Vec<Vec<i64>> {
    let max_nonzero = if k > 4 { 2 } else { k };
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                [1, -1, 0].into_iter().map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .filter(|v| v.iter().filter(|c| **c != 0).count() <= max_nonzero)
            .collect();
    }
    out.retain(|v| v.iter().any(|c| *c != 0));
    out.sort_by_key(|v| v.iter().filter(|c| **c != 0).count());
    out
}

/// The smallest offset in range for which `t` is bounded, if any.
/// Boundedness is monotone in the offset.
fn min_offset(ts: &TransitionSystem, t: &Transition, coeffs: &[i64]) -> Option<i64> {
    let ok = |c0: i64| LinearRank { coeffs: coeffs.to_vec(), constant: c0 }.bounded(ts, t);
    let (mut lo, mut hi) = (*OFFSETS.start(), *OFFSETS.end());
    if !is_valid(&ok(hi)) {
        return None;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if is_valid(&ok(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

/// A function that does not increase on `edges` and ranks a non-empty
/// subset of them. Returns the function and the ranked subset.
fn level_candidates(ts: &TransitionSystem, edges: &[usize], k: usize) -> Vec<(LinearRank, Vec<usize>)> {
    let mut out = Vec::new();
    for coeffs in coefficient_vectors(k) {
        let probe = LinearRank { coeffs: coeffs.clone(), constant: 0 };
        let mut ranked = Vec::new();
        let mut offset = i64::MIN;
        let mut ok = true;
        for &i in edges {
            let t = &ts.edges[i];
            if is_valid(&probe.strict(ts, t)) {
                if let Some(c0) = min_offset(ts, t, &coeffs) {
                    ranked.push(i);
                    offset = offset.max(c0);
                    continue;
                }
            }
            if !is_valid(&probe.non_increasing(ts, t)) {
                ok = false;
                break;
            }
        }
        if ok && !ranked.is_empty() {
            // The offset closest to zero that bounds every ranked edge.
            let constant = if offset <= 0 { 0 } else { offset };
            out.push((LinearRank { coeffs, constant }, ranked));
        }
    }
    out
}

fn rank_edges(ts: &TransitionSystem, edges: &[usize], k: usize, depth: usize) -> Option<Vec<(LinearRank, Vec<usize>)>> {
    if edges.is_empty() {
        return Some(vec![]);
    }
    let mut cands = level_candidates(ts, edges, k);
    if let Some((r, s)) = cands.iter().find(|(_, s)| s.len() == edges.len()) {
        return Some(vec![(r.clone(), s.clone())]);
    }
    if depth <= 1 {
        return None;
    }
    cands.sort_by_key(|(_, s)| std::cmp::Reverse(s.len()));
    for (r, s) in cands {
        let rest: Vec<usize> = edges.iter().copied().filter(|i| !s.contains(i)).collect();
        if let Some(mut tail) = rank_edges(ts, &rest, k, depth - 1) {
            let mut out = vec![(r, s)];
            out.append(&mut tail);
            return Some(out);
        }
    }
    None
}

/// Strongly connected components that contain a cycle, each with the
/// indices of its internal transitions, in a deterministic order.
pub(super) fn recursive_components(ts: &TransitionSystem) -> Vec<(Vec<Name>, Vec<usize>)> {
    let mut g: DiGraph<Name, usize> = DiGraph::new();
    let mut idx = BTreeMap::new();
    for f in ts.params.keys() {
        idx.insert(f.clone(), g.add_node(f.clone()));
    }
    for (i, t) in ts.edges.iter().enumerate() {
        if let (Some(&a), Some(&b)) = (idx.get(&t.src), idx.get(&t.dst)) {
            g.add_edge(a, b, i);
        }
    }
    let mut out = Vec::new();
    for comp in tarjan_scc(&g) {
        let mut nodes: Vec<Name> = comp.iter().map(|n| g[*n].clone()).collect();
        nodes.sort();
        let edges: Vec<usize> = ts
            .edges
            .iter()
            .enumerate()
            .filter(|(_, t)| nodes.contains(&t.src) && nodes.contains(&t.dst))
            .map(|(i, _)| i)
            .collect();
        if !edges.is_empty() {
            out.push((nodes, edges));
        }
    }
    out.sort();
    out
}

/// Searches a lexicographic linear ranking function for every recursive
/// component: first by enumerating small coefficients, then, if `smt` is
/// given, by a Farkas encoding handed to that solver.
pub fn synth_ranking(ts: &TransitionSystem, smt: Option<&SolverSpec>) -> Option<RankingCertificate> {
    let mut cert = RankingCertificate { sccs: Vec::new(), params: ts.params.clone() };
    for (nodes, edges) in recursive_components(ts) {
        let k = nodes.iter().map(|n| ts.params[n].len()).max().unwrap_or(0);
        let tuple = rank_edges(ts, &edges, k, MAX_DEPTH)
            .or_else(|| smt.and_then(|s| farkas::single_ranking(ts, &edges, k, s)).map(|r| vec![(r, edges.clone())]));
        let Some(tuple) = tuple else {
            tracing::debug!(?nodes, "no ranking function");
            return None;
        };
        let mut levels = Vec::new();
        for (pos, (_, ranked)) in tuple.iter().enumerate() {
            levels.extend(ranked.iter().map(|&i| (i, pos)));
        }
        levels.sort();
        cert.sccs.push(SccRanking { nodes, components: tuple.into_iter().map(|(r, _)| r).collect(), levels });
    }
    Some(cert)
}

/// Re-checks every obligation of a certificate from scratch.
pub fn verify_certificate(ts: &TransitionSystem, cert: &RankingCertificate) -> bool {
    for (nodes, edges) in recursive_components(ts) {
        let Some(scc) = cert.sccs.iter().find(|s| s.nodes == nodes) else {
            return false;
        };
        for i in edges {
            let Some(&(_, pos)) = scc.levels.iter().find(|(j, _)| *j == i) else {
                return false;
            };
            let Some(r) = scc.components.get(pos) else { return false };
            let t = &ts.edges[i];
            let earlier = scc.components[..pos].iter().all(|q| is_valid(&q.non_increasing(ts, t)));
            if !(earlier && is_valid(&r.strict(ts, t)) && is_valid(&r.bounded(ts, t))) {
                return false;
            }
        }
    }
    true
}
