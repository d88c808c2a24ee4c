//! Free names, capture-avoiding substitution and α-equivalence.

use std::collections::{BTreeMap, BTreeSet};

use super::{name, InputPrefix, Name, OutputPrefix, Process, SimpleExpr};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreeNames {
    pub ints: BTreeSet<Name>,
    pub chans: BTreeSet<Name>,
}

impl FreeNames {
    pub fn all(&self) -> BTreeSet<Name> {
        self.ints.union(&self.chans).cloned().collect()
    }
}

pub fn free_names(p: &Process) -> FreeNames {
    let mut out = FreeNames::default();
    let mut bound = Vec::new();
    collect_free(p, &mut bound, &mut out);
    out
}

fn collect_free(p: &Process, bound: &mut Vec<Name>, out: &mut FreeNames) {
    let is_bound = |bound: &Vec<Name>, x: &Name| bound.contains(x);
    let expr_vars = |e: &SimpleExpr, bound: &Vec<Name>, out: &mut FreeNames| {
        for v in e.vars() {
            if !is_bound(bound, &v) {
                out.ints.insert(v);
            }
        }
    };
    match p {
        Process::Nil => {}
        Process::Output(o) => {
            if !is_bound(bound, &o.chan) {
                out.chans.insert(o.chan.clone());
            }
            for e in &o.ints {
                expr_vars(e, bound, out);
            }
            for c in &o.chans {
                if !is_bound(bound, c) {
                    out.chans.insert(c.clone());
                }
            }
            collect_free(&o.cont, bound, out);
        }
        Process::Input(i) | Process::RepInput(i) => {
            if !is_bound(bound, &i.chan) {
                out.chans.insert(i.chan.clone());
            }
            let n = bound.len();
            bound.extend(i.binders().cloned());
            collect_free(&i.cont, bound, out);
            bound.truncate(n);
        }
        Process::Par(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Process::Nu { name, body, .. } => {
            bound.push(name.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Process::If { cond, then, els, .. } => {
            expr_vars(cond, bound, out);
            collect_free(then, bound, out);
            collect_free(els, bound, out);
        }
        Process::LetNd { names, body, .. } => {
            let n = bound.len();
            bound.extend(names.iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(n);
        }
    }
}

/// Every name occurring in binding position, in pre-order.
pub fn bound_names(p: &Process) -> Vec<Name> {
    fn go(p: &Process, out: &mut Vec<Name>) {
        match p {
            Process::Nil => {}
            Process::Output(o) => go(&o.cont, out),
            Process::Input(i) | Process::RepInput(i) => {
                out.extend(i.binders().cloned());
                go(&i.cont, out)
            }
            Process::Par(a, b) => {
                go(a, out);
                go(b, out)
            }
            Process::Nu { name, body, .. } => {
                out.push(name.clone());
                go(body, out)
            }
            Process::If { then, els, .. } => {
                go(then, out);
                go(els, out)
            }
            Process::LetNd { names, body, .. } => {
                out.extend(names.iter().cloned());
                go(body, out)
            }
        }
    }
    let mut out = Vec::new();
    go(p, &mut out);
    out
}

/// Removes a trailing `_<digits>` suffix added by [`fresh_name`].
pub fn strip_fresh_suffix(s: &str) -> &str {
    match s.rfind('_') {
        Some(i) if i > 0 && i + 1 < s.len() && s[i + 1..].bytes().all(|b| b.is_ascii_digit()) => {
            strip_fresh_suffix(&s[..i])
        }
        _ => s,
    }
}

/// A variant `base_k` of `base` for which `taken` is false.
pub fn fresh_name(base: &str, taken: &dyn Fn(&str) -> bool) -> Name {
    if !taken(base) {
        return name(base);
    }
    let stem = strip_fresh_suffix(base);
    (1..)
        .map(|k| format!("{stem}_{k}"))
        .find(|c| !taken(c))
        .map(|c| name(&c))
        .expect("unbounded search")
}

fn all_names(p: &Process, out: &mut BTreeSet<Name>) {
    let fv = free_names(p);
    out.extend(fv.ints);
    out.extend(fv.chans);
    out.extend(bound_names(p));
}

/// Renames binders so that every binder is distinct from every other binder
/// and from every free name. The first binder of a name keeps it.
pub fn uniquify_binders(p: &Process) -> Process {
    let mut used: BTreeSet<Name> = free_names(p).all();
    let mut all = used.clone();
    all_names(p, &mut all);
    let mut ren = BTreeMap::new();
    uniq(p, &mut used, &all, &mut ren)
}

fn uniq(
    p: &Process,
    used: &mut BTreeSet<Name>,
    all: &BTreeSet<Name>,
    ren: &mut BTreeMap<Name, Name>,
) -> Process {
    let pick = |x: &Name, used: &mut BTreeSet<Name>| -> Name {
        let y = if used.contains(x) {
            fresh_name(x, &|c| used.contains(c) || all.contains(c))
        } else {
            x.clone()
        };
        used.insert(y.clone());
        y
    };
    let rn = |x: &Name, ren: &BTreeMap<Name, Name>| ren.get(x).cloned().unwrap_or_else(|| x.clone());
    match p {
        Process::Nil => Process::Nil,
        Process::Output(o) => Process::Output(OutputPrefix {
            chan: rn(&o.chan, ren),
            ints: o.ints.iter().map(|e| e.rename_vars(ren)).collect(),
            chans: o.chans.iter().map(|c| rn(c, ren)).collect(),
            cont: Box::new(uniq(&o.cont, used, all, ren)),
            span: o.span,
        }),
        Process::Input(i) | Process::RepInput(i) => {
            let saved = ren.clone();
            let chan = rn(&i.chan, ren);
            let ints: Vec<Name> = i.ints.iter().map(|x| pick(x, used)).collect();
            let chans: Vec<Name> = i.chans.iter().map(|x| pick(x, used)).collect();
            for (old, new) in i.binders().zip(ints.iter().chain(chans.iter())) {
                ren.insert(old.clone(), new.clone());
            }
            let cont = Box::new(uniq(&i.cont, used, all, ren));
            *ren = saved;
            let ip = InputPrefix { chan, ints, chans, cont, span: i.span };
            if matches!(p, Process::Input(_)) {
                Process::Input(ip)
            } else {
                Process::RepInput(ip)
            }
        }
        Process::Par(a, b) => {
            let a = uniq(a, used, all, ren);
            let b = uniq(b, used, all, ren);
            Process::par(a, b)
        }
        Process::Nu { name: x, annot, body, span } => {
            let saved = ren.clone();
            let y = pick(x, used);
            ren.insert(x.clone(), y.clone());
            let body = Box::new(uniq(body, used, all, ren));
            *ren = saved;
            Process::Nu { name: y, annot: annot.clone(), body, span: *span }
        }
        Process::If { cond, then, els, span } => Process::If {
            cond: cond.rename_vars(ren),
            then: Box::new(uniq(then, used, all, ren)),
            els: Box::new(uniq(els, used, all, ren)),
            span: *span,
        },
        Process::LetNd { names, body, span } => {
            let saved = ren.clone();
            let ys: Vec<Name> = names.iter().map(|x| pick(x, used)).collect();
            for (x, y) in names.iter().zip(&ys) {
                ren.insert(x.clone(), y.clone());
            }
            let body = Box::new(uniq(body, used, all, ren));
            *ren = saved;
            Process::LetNd { names: ys, body, span: *span }
        }
    }
}

/// Simultaneous substitution of expressions for integer variables and names
/// for channel variables.
#[derive(Debug, Clone, Default)]
struct Subst {
    ints: BTreeMap<Name, SimpleExpr>,
    chans: BTreeMap<Name, Name>,
}

impl Subst {
    fn is_empty(&self) -> bool {
        self.ints.is_empty() && self.chans.is_empty()
    }

    fn range_names(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self.chans.values().cloned().collect();
        for e in self.ints.values() {
            out.extend(e.vars());
        }
        out
    }

    fn chan(&self, x: &Name) -> Name {
        self.chans.get(x).cloned().unwrap_or_else(|| x.clone())
    }

    fn expr(&self, e: &SimpleExpr) -> SimpleExpr {
        e.subst_with(&|x| {
            self.ints
                .get(x)
                .cloned()
                .or_else(|| self.chans.get(x).map(|y| SimpleExpr::Var(y.clone())))
        })
    }

    /// Handles entering the scope of binders `xs` in `body`; returns the new
    /// binder names and the substitution for the body.
    fn enter(&self, xs: &[Name], body: &Process) -> (Vec<Name>, Subst) {
        let mut inner = self.clone();
        for x in xs {
            inner.ints.remove(x);
            inner.chans.remove(x);
        }
        if inner.is_empty() {
            return (xs.to_vec(), inner);
        }
        let range = inner.range_names();
        let mut avoid = range.clone();
        all_names(body, &mut avoid);
        avoid.extend(inner.ints.keys().cloned());
        avoid.extend(inner.chans.keys().cloned());
        avoid.extend(xs.iter().cloned());
        let mut out = Vec::with_capacity(xs.len());
        for x in xs {
            if range.contains(x) {
                let y = fresh_name(x, &|c| avoid.contains(c));
                avoid.insert(y.clone());
                inner.chans.insert(x.clone(), y.clone());
                out.push(y);
            } else {
                out.push(x.clone());
            }
        }
        (out, inner)
    }

    fn apply(&self, p: &Process) -> Process {
        if self.is_empty() {
            return p.clone();
        }
        match p {
            Process::Nil => Process::Nil,
            Process::Output(o) => Process::Output(OutputPrefix {
                chan: self.chan(&o.chan),
                ints: o.ints.iter().map(|e| self.expr(e)).collect(),
                chans: o.chans.iter().map(|c| self.chan(c)).collect(),
                cont: Box::new(self.apply(&o.cont)),
                span: o.span,
            }),
            Process::Input(i) | Process::RepInput(i) => {
                let binders: Vec<Name> = i.binders().cloned().collect();
                let (new, inner) = self.enter(&binders, &i.cont);
                let (ints, chans) = new.split_at(i.ints.len());
                let ip = InputPrefix {
                    chan: self.chan(&i.chan),
                    ints: ints.to_vec(),
                    chans: chans.to_vec(),
                    cont: Box::new(inner.apply(&i.cont)),
                    span: i.span,
                };
                if matches!(p, Process::Input(_)) {
                    Process::Input(ip)
                } else {
                    Process::RepInput(ip)
                }
            }
            Process::Par(a, b) => Process::par(self.apply(a), self.apply(b)),
            Process::Nu { name: x, annot, body, span } => {
                let (new, inner) = self.enter(std::slice::from_ref(x), body);
                Process::Nu {
                    name: new[0].clone(),
                    annot: annot.clone(),
                    body: Box::new(inner.apply(body)),
                    span: *span,
                }
            }
            Process::If { cond, then, els, span } => Process::If {
                cond: self.expr(cond),
                then: Box::new(self.apply(then)),
                els: Box::new(self.apply(els)),
                span: *span,
            },
            Process::LetNd { names, body, span } => {
                let (new, inner) = self.enter(names, body);
                Process::LetNd { names: new, body: Box::new(inner.apply(body)), span: *span }
            }
        }
    }
}

/// Capture-avoiding simultaneous substitution of integers for integer
/// variables and names for channel variables.
pub fn substitute(
    p: &Process,
    ints: &BTreeMap<Name, i64>,
    chans: &BTreeMap<Name, Name>,
) -> Process {
    let s = Subst {
        ints: ints.iter().map(|(k, v)| (k.clone(), SimpleExpr::IntLit(*v))).collect(),
        chans: chans.clone(),
    };
    s.apply(p)
}

/// Structural equality up to renaming of bound names.
pub fn alpha_equal(p: &Process, q: &Process) -> bool {
    let mut ep = Vec::new();
    let mut eq = Vec::new();
    alpha(p, q, &mut ep, &mut eq)
}

fn lookup(env: &[Name], x: &Name) -> Option<usize> {
    env.iter().rposition(|y| y == x)
}

fn same_name(a: &Name, b: &Name, ea: &[Name], eb: &[Name]) -> bool {
    match (lookup(ea, a), lookup(eb, b)) {
        (Some(i), Some(j)) => i == j,
        (None, None) => a == b,
        _ => false,
    }
}

pub(crate) fn alpha_expr(a: &SimpleExpr, b: &SimpleExpr, ea: &[Name], eb: &[Name]) -> bool {
    match (a, b) {
        (SimpleExpr::Var(x), SimpleExpr::Var(y)) => same_name(x, y, ea, eb),
        (SimpleExpr::IntLit(i), SimpleExpr::IntLit(j)) => i == j,
        (SimpleExpr::Op(o1, a1), SimpleExpr::Op(o2, a2)) => {
            o1 == o2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| alpha_expr(x, y, ea, eb))
        }
        _ => false,
    }
}

fn alpha(p: &Process, q: &Process, ep: &mut Vec<Name>, eq: &mut Vec<Name>) -> bool {
    match (p, q) {
        (Process::Nil, Process::Nil) => true,
        (Process::Output(a), Process::Output(b)) => {
            same_name(&a.chan, &b.chan, ep, eq)
                && a.ints.len() == b.ints.len()
                && a.chans.len() == b.chans.len()
                && a.ints.iter().zip(&b.ints).all(|(x, y)| alpha_expr(x, y, ep, eq))
                && a.chans.iter().zip(&b.chans).all(|(x, y)| same_name(x, y, ep, eq))
                && alpha(&a.cont, &b.cont, ep, eq)
        }
        (Process::Input(a), Process::Input(b)) | (Process::RepInput(a), Process::RepInput(b)) => {
            if !same_name(&a.chan, &b.chan, ep, eq)
                || a.ints.len() != b.ints.len()
                || a.chans.len() != b.chans.len()
            {
                return false;
            }
            let (np, nq) = (ep.len(), eq.len());
            ep.extend(a.binders().cloned());
            eq.extend(b.binders().cloned());
            let r = alpha(&a.cont, &b.cont, ep, eq);
            ep.truncate(np);
            eq.truncate(nq);
            r
        }
        (Process::Par(a1, b1), Process::Par(a2, b2)) => {
            alpha(a1, a2, ep, eq) && alpha(b1, b2, ep, eq)
        }
        (
            Process::Nu { name: x, annot: t1, body: b1, .. },
            Process::Nu { name: y, annot: t2, body: b2, .. },
        ) => {
            if t1 != t2 {
                return false;
            }
            ep.push(x.clone());
            eq.push(y.clone());
            let r = alpha(b1, b2, ep, eq);
            ep.pop();
            eq.pop();
            r
        }
        (
            Process::If { cond: c1, then: t1, els: e1, .. },
            Process::If { cond: c2, then: t2, els: e2, .. },
        ) => alpha_expr(c1, c2, ep, eq) && alpha(t1, t2, ep, eq) && alpha(e1, e2, ep, eq),
        (
            Process::LetNd { names: n1, body: b1, .. },
            Process::LetNd { names: n2, body: b2, .. },
        ) => {
            if n1.len() != n2.len() {
                return false;
            }
            let (np, nq) = (ep.len(), eq.len());
            ep.extend(n1.iter().cloned());
            eq.extend(n2.iter().cloned());
            let r = alpha(b1, b2, ep, eq);
            ep.truncate(np);
            eq.truncate(nq);
            r
        }
        _ => false,
    }
}
