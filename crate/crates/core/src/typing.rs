//! Simple channel types with regions, inferred by unification.
//!
//! Each union-find class of channel-type variables is a region: two names
//! that may be bound to the same channel at run time end up in one class.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::{name, uniquify_binders, Name, Process, Span, TypeAnnot};

/// Regions are numbered from 1 in order of first occurrence.
pub type RegionId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChanType {
    pub region: RegionId,
    pub ints: usize,
    pub chans: Vec<ChanType>,
}

impl ChanType {
    pub fn to_annot(&self) -> TypeAnnot {
        TypeAnnot {
            label: Some(name(&format!("r{}", self.region))),
            ints: self.ints,
            chans: self.chans.iter().map(ChanType::to_annot).collect(),
        }
    }
}

impl fmt::Display for ChanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_annot())
    }
}

/// Shape shared by all channels of a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSig {
    pub ints: usize,
    pub chans: Vec<RegionId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionTable {
    pub entries: BTreeMap<RegionId, RegionSig>,
}

impl RegionTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Name of the sequential function standing for region `r`.
pub fn region_fn(r: RegionId) -> Name {
    name(&format!("F_r{r}"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeEnv {
    pub ints: BTreeSet<Name>,
    pub chans: BTreeMap<Name, ChanType>,
}

/// Result of inference on a process whose binders have been made unique.
#[derive(Debug, Clone)]
pub struct Typed {
    /// The input with unique binders and every `new` annotated.
    pub process: Process,
    /// Types of the free names.
    pub env: TypeEnv,
    /// Types of every channel name, free or bound.
    pub chan_types: BTreeMap<Name, ChanType>,
    /// Every integer name, free or bound.
    pub int_names: BTreeSet<Name>,
    pub regions: RegionTable,
    /// Channel names in order of first occurrence.
    pub chan_order: Vec<Name>,
}

impl Typed {
    pub fn chan_type(&self, x: &str) -> Option<&ChanType> {
        self.chan_types.get(x)
    }

    /// One `name : type` line per channel, in order of first occurrence.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for x in &self.chan_order {
            out.push_str(&format!("{x} : {}\n", self.chan_types[x]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{span}: channel `{chan}` used with {found} but elsewhere with {expected}")]
    ArityMismatch { chan: Name, span: Span, expected: String, found: String },
    #[error("{span}: `{name}` is used both as an integer and as a channel")]
    IntChanConfusion { name: Name, span: Span },
    #[error("{span}: channel `{chan}` would need a recursive type")]
    OccursCheck { chan: Name, span: Span },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Chan,
}

#[derive(Debug, Clone)]
struct Shape {
    ints: usize,
    chans: Vec<usize>,
}

#[derive(Default)]
struct Unifier {
    parent: Vec<usize>,
    shape: Vec<Option<Shape>>,
}

impl Unifier {
    fn fresh(&mut self, shape: Option<Shape>) -> usize {
        self.parent.push(self.parent.len());
        self.shape.push(shape);
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn describe(s: &Shape) -> String {
        format!("{} integer(s) and {} channel(s)", s.ints, s.chans.len())
    }

    /// Unifies two classes; on shape mismatch returns `(expected, found)`.
    fn unify(&mut self, a: usize, b: usize) -> Result<(), (String, String)> {
        let mut work = vec![(a, b)];
        while let Some((a, b)) = work.pop() {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra == rb {
                continue;
            }
            let sa = self.shape[ra].take();
            let sb = self.shape[rb].take();
            self.parent[rb] = ra;
            self.shape[ra] = match (sa, sb) {
                (None, s) | (s, None) => s,
                (Some(sa), Some(sb)) => {
                    if sa.ints != sb.ints || sa.chans.len() != sb.chans.len() {
                        return Err((Self::describe(&sa), Self::describe(&sb)));
                    }
                    work.extend(sa.chans.iter().copied().zip(sb.chans.iter().copied()));
                    Some(sa)
                }
            };
        }
        Ok(())
    }
}

struct Infer {
    uf: Unifier,
    kinds: BTreeMap<Name, Kind>,
    nodes: BTreeMap<Name, usize>,
    labels: BTreeMap<Name, usize>,
    first_span: BTreeMap<Name, Span>,
}

impl Infer {
    fn node(&mut self, x: &Name) -> usize {
        if let Some(&n) = self.nodes.get(x) {
            return n;
        }
        let n = self.uf.fresh(None);
        self.nodes.insert(x.clone(), n);
        n
    }

    fn use_as(&mut self, x: &Name, kind: Kind, span: Span) -> Result<(), TypeError> {
        self.first_span.entry(x.clone()).or_insert(span);
        match self.kinds.get(x) {
            Some(k) if *k != kind => {
                Err(TypeError::IntChanConfusion { name: x.clone(), span })
            }
            Some(_) => Ok(()),
            None => {
                self.kinds.insert(x.clone(), kind);
                Ok(())
            }
        }
    }

    fn bind(&mut self, x: &Name, kind: Kind, span: Span) -> Result<(), TypeError> {
        self.use_as(x, kind, span)
    }

    fn annot_node(&mut self, t: &TypeAnnot) -> Result<usize, (String, String)> {
        let chans = t.chans.iter().map(|c| self.annot_node(c)).collect::<Result<Vec<_>, _>>()?;
        let n = self.uf.fresh(Some(Shape { ints: t.ints, chans }));
        if let Some(l) = &t.label {
            match self.labels.get(l) {
                Some(&m) => self.uf.unify(m, n)?,
                None => {
                    self.labels.insert(l.clone(), n);
                }
            }
        }
        Ok(n)
    }

    fn constrain(&mut self, chan: &Name, ints: usize, payload: &[Name], span: Span) -> Result<(), TypeError> {
        self.use_as(chan, Kind::Chan, span)?;
        let mut chans = Vec::with_capacity(payload.len());
        for c in payload {
            self.use_as(c, Kind::Chan, span)?;
            chans.push(self.node(c));
        }
        let shaped = self.uf.fresh(Some(Shape { ints, chans }));
        let n = self.node(chan);
        self.uf.unify(n, shaped).map_err(|(expected, found)| TypeError::ArityMismatch {
            chan: chan.clone(),
            span,
            expected,
            found,
        })
    }

    fn expr(&mut self, e: &crate::syntax::SimpleExpr, span: Span) -> Result<(), TypeError> {
        for v in e.vars() {
            self.use_as(&v, Kind::Int, span)?;
        }
        Ok(())
    }

    fn walk(&mut self, p: &Process, span: Span) -> Result<(), TypeError> {
        match p {
            Process::Nil => Ok(()),
            Process::Output(o) => {
                for e in &o.ints {
                    self.expr(e, o.span)?;
                }
                self.constrain(&o.chan, o.ints.len(), &o.chans, o.span)?;
                self.walk(&o.cont, o.span)
            }
            Process::Input(i) | Process::RepInput(i) => {
                for x in &i.ints {
                    self.bind(x, Kind::Int, i.span)?;
                }
                for x in &i.chans {
                    self.bind(x, Kind::Chan, i.span)?;
                }
                self.constrain(&i.chan, i.ints.len(), &i.chans, i.span)?;
                self.walk(&i.cont, i.span)
            }
            Process::Par(a, b) => {
                self.walk(a, span)?;
                self.walk(b, span)
            }
            Process::Nu { name, annot, body, span } => {
                self.bind(name, Kind::Chan, *span)?;
                let n = self.node(name);
                if let Some(t) = annot {
                    let m = self.annot_node(t).map_err(|(expected, found)| {
                        TypeError::ArityMismatch { chan: name.clone(), span: *span, expected, found }
                    })?;
                    self.uf.unify(n, m).map_err(|(expected, found)| TypeError::ArityMismatch {
                        chan: name.clone(),
                        span: *span,
                        expected,
                        found,
                    })?;
                }
                self.walk(body, *span)
            }
            Process::If { cond, then, els, span } => {
                self.expr(cond, *span)?;
                self.walk(then, *span)?;
                self.walk(els, *span)
            }
            Process::LetNd { names, body, span } => {
                for x in names {
                    self.bind(x, Kind::Int, *span)?;
                }
                self.walk(body, *span)
            }
        }
    }

    /// Rejects cyclic types: a class reachable from its own payload.
    fn occurs_check(&mut self) -> Result<(), TypeError> {
        let names: Vec<(Name, usize)> = self.nodes.iter().map(|(k, v)| (k.clone(), *v)).collect();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<usize, u8> = BTreeMap::new();
        for (x, n) in names {
            let root = self.uf.find(n);
            if state.get(&root).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
            state.insert(root, 1);
            while let Some(&mut (node, ref mut idx)) = stack.last_mut() {
                let children: Vec<usize> =
                    self.uf.shape[node].as_ref().map(|s| s.chans.clone()).unwrap_or_default();
                if *idx < children.len() {
                    let child = self.uf.find(children[*idx]);
                    *idx += 1;
                    match state.get(&child).copied().unwrap_or(0) {
                        0 => {
                            state.insert(child, 1);
                            stack.push((child, 0));
                        }
                        1 => {
                            let span = self.first_span.get(&x).copied().unwrap_or_default();
                            return Err(TypeError::OccursCheck { chan: x, span });
                        }
                        _ => {}
                    }
                } else {
                    state.insert(node, 2);
                    stack.pop();
                }
            }
        }
        Ok(())
    }
}

struct Numbering<'a> {
    uf: &'a mut Unifier,
    ids: BTreeMap<usize, RegionId>,
    table: RegionTable,
}

impl Numbering<'_> {
    fn number(&mut self, node: usize) -> RegionId {
        let root = self.uf.find(node);
        if let Some(&r) = self.ids.get(&root) {
            return r;
        }
        let r = self.ids.len() + 1;
        self.ids.insert(root, r);
        let shape = self.uf.shape[root].clone().unwrap_or(Shape { ints: 0, chans: vec![] });
        let chans = shape.chans.iter().map(|&c| self.number(c)).collect();
        self.table.entries.insert(r, RegionSig { ints: shape.ints, chans });
        r
    }

    fn chan_type(&self, r: RegionId) -> ChanType {
        let sig = &self.table.entries[&r];
        ChanType { region: r, ints: sig.ints, chans: sig.chans.iter().map(|&c| self.chan_type(c)).collect() }
    }
}

/// Channel names in order of first occurrence (binders and uses).
fn occurrence_order(p: &Process) -> Vec<Name> {
    fn go(p: &Process, seen: &mut BTreeSet<Name>, out: &mut Vec<Name>) {
        let mut see = |x: &Name, out: &mut Vec<Name>| {
            if seen.insert(x.clone()) {
                out.push(x.clone());
            }
        };
        match p {
            Process::Nil => {}
            Process::Output(o) => {
                see(&o.chan, out);
                o.chans.iter().for_each(|c| see(c, out));
                go(&o.cont, seen, out)
            }
            Process::Input(i) | Process::RepInput(i) => {
                see(&i.chan, out);
                i.chans.iter().for_each(|c| see(c, out));
                go(&i.cont, seen, out)
            }
            Process::Par(a, b) => {
                go(a, seen, out);
                go(b, seen, out)
            }
            Process::Nu { name, body, .. } => {
                see(name, out);
                go(body, seen, out)
            }
            Process::If { then, els, .. } => {
                go(then, seen, out);
                go(els, seen, out)
            }
            Process::LetNd { body, .. } => go(body, seen, out),
        }
    }
    let mut out = Vec::new();
    go(p, &mut BTreeSet::new(), &mut out);
    out
}

fn annotate(p: &Process, types: &BTreeMap<Name, ChanType>) -> Process {
    let rec = |q: &Process| Box::new(annotate(q, types));
    match p {
        Process::Nil => Process::Nil,
        Process::Output(o) => {
            let mut o = o.clone();
            o.cont = rec(&o.cont);
            Process::Output(o)
        }
        Process::Input(i) => {
            let mut i = i.clone();
            i.cont = rec(&i.cont);
            Process::Input(i)
        }
        Process::RepInput(i) => {
            let mut i = i.clone();
            i.cont = rec(&i.cont);
            Process::RepInput(i)
        }
        Process::Par(a, b) => Process::Par(rec(a), rec(b)),
        Process::Nu { name, body, span, .. } => Process::Nu {
            name: name.clone(),
            annot: types.get(name).map(ChanType::to_annot),
            body: rec(body),
            span: *span,
        },
        Process::If { cond, then, els, span } => {
            Process::If { cond: cond.clone(), then: rec(then), els: rec(els), span: *span }
        }
        Process::LetNd { names, body, span } => {
            Process::LetNd { names: names.clone(), body: rec(body), span: *span }
        }
    }
}

/// Infers simple types. Binders are first renamed apart so that every name
/// has a single type.
pub fn infer_simple_types(p: &Process) -> Result<Typed, TypeError> {
    let p = uniquify_binders(p);
    let free = crate::syntax::free_names(&p);
    let mut inf = Infer {
        uf: Unifier::default(),
        kinds: BTreeMap::new(),
        nodes: BTreeMap::new(),
        labels: BTreeMap::new(),
        first_span: BTreeMap::new(),
    };
    inf.walk(&p, Span::default())?;
    inf.occurs_check()?;

    let order = occurrence_order(&p);
    let mut num = Numbering { uf: &mut inf.uf, ids: BTreeMap::new(), table: RegionTable::default() };
    let mut chan_types = BTreeMap::new();
    for x in &order {
        let n = match inf.nodes.get(x) {
            Some(&n) => n,
            None => continue,
        };
        let r = num.number(n);
        chan_types.insert(x.clone(), num.chan_type(r));
    }
    let regions = num.table.clone();
    let int_names: BTreeSet<Name> =
        inf.kinds.iter().filter(|(_, k)| **k == Kind::Int).map(|(x, _)| x.clone()).collect();
    let env = TypeEnv {
        ints: free.ints.iter().filter(|x| int_names.contains(*x)).cloned().collect(),
        chans: free.chans.iter().filter_map(|x| chan_types.get(x).map(|t| (x.clone(), t.clone()))).collect(),
    };
    let process = annotate(&p, &chan_types);
    Ok(Typed { process, env, chan_types, int_names, regions, chan_order: order })
}

/// Region table of a process (one entry per region class).
pub fn regions_of(p: &Process) -> Result<RegionTable, TypeError> {
    infer_simple_types(p).map(|t| t.regions)
}
