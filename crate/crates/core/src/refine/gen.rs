//! Template refinement types and constraint generation.
//!
//! Every channel type gets unknown refinements `P(scope, x̃)` where `scope`
//! is the integer variables in scope where the channel is created. Walking
//! the process then yields one Horn clause per proof obligation of the
//! refinement type system.
//!
//! Refinements of a region that is never used for input are never assumed
//! anywhere: they only occur in clause heads, so reading them as `true`
//! satisfies every obligation about them. Equality, subtyping and
//! well-formedness obligations between such refinements are therefore not
//! generated.

use std::collections::{BTreeMap, BTreeSet};

use super::{HornClause, Head, PredInfo, RefChanType, RefTyping};
use crate::logic::{Formula, PredApp, PredVar};
use crate::syntax::{fresh_name, name, strip_fresh_suffix, InputPrefix, Name, Process, SimpleExpr};
use crate::typing::{ChanType, RegionId, Typed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RefineFlavor {
    /// One refinement per channel type, no subtyping. A channel created by
    /// `new` takes the type expected where it is first sent.
    Plain,
    /// Separate input and output refinements with subtyping.
    #[default]
    InputOutput,
}

#[derive(Debug, Clone)]
pub struct Templates {
    pub flavor: RefineFlavor,
    pub preds: Vec<PredInfo>,
    /// Template type of every channel name used by the process.
    pub typing: RefTyping,
}

impl Templates {
    pub fn pred_info(&self, p: PredVar) -> Option<&PredInfo> {
        self.preds.iter().find(|i| i.var == p)
    }
}

#[derive(Debug, Clone)]
pub struct Constraints {
    pub templates: Templates,
    pub clauses: Vec<HornClause>,
}

impl Constraints {
    /// Predicate variables that occur in some clause, in numbering order.
    pub fn used_preds(&self) -> Vec<&PredInfo> {
        let used: BTreeSet<PredVar> = self.clauses.iter().flat_map(|c| c.preds()).collect();
        self.templates.preds.iter().filter(|p| used.contains(&p.var)).collect()
    }
}

pub fn make_templates(typed: &Typed, flavor: RefineFlavor) -> Templates {
    gen_constraints(typed, flavor).templates
}

pub fn gen_constraints(typed: &Typed, flavor: RefineFlavor) -> Constraints {
    let mut g = Gen {
        typed,
        flavor,
        observed: BTreeSet::new(),
        hints: BTreeMap::new(),
        preds: Vec::new(),
        types: BTreeMap::new(),
        pending: BTreeMap::new(),
        clauses: Vec::new(),
    };
    g.survey(&typed.process);
    for x in typed.env.chans.keys() {
        g.declare(x, &[], &[]);
    }
    g.walk(&typed.process, &[], &[]);
    Constraints {
        templates: Templates { flavor, preds: g.preds, typing: RefTyping { chans: g.types } },
        clauses: g.clauses,
    }
}

struct Gen<'a> {
    typed: &'a Typed,
    flavor: RefineFlavor,
    /// Regions some input is performed on.
    observed: BTreeSet<RegionId>,
    /// Binder names for each region, taken from its first input.
    hints: BTreeMap<RegionId, Vec<Name>>,
    preds: Vec<PredInfo>,
    types: BTreeMap<Name, RefChanType>,
    /// Channels created by `new` whose type is not fixed yet, with the
    /// integer scope at their creation.
    pending: BTreeMap<Name, Vec<Name>>,
    clauses: Vec<HornClause>,
}

fn vars(xs: &[Name]) -> Vec<SimpleExpr> {
    xs.iter().map(|x| SimpleExpr::Var(x.clone())).collect()
}

fn extend<T: Clone>(xs: &[T], more: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut v = xs.to_vec();
    v.extend(more);
    v
}

impl Gen<'_> {
    fn survey(&mut self, p: &Process) {
        match p {
            Process::Nil => {}
            Process::Input(i) | Process::RepInput(i) => {
                let r = self.shape(&i.chan).region;
                self.observed.insert(r);
                self.hints.entry(r).or_insert_with(|| i.ints.iter().map(|y| name(strip_fresh_suffix(y))).collect());
                self.survey(&i.cont);
            }
            Process::Output(o) => self.survey(&o.cont),
            Process::Par(a, b) | Process::If { then: a, els: b, .. } => {
                self.survey(a);
                self.survey(b);
            }
            Process::Nu { body, .. } | Process::LetNd { body, .. } => self.survey(body),
        }
    }

    fn shape(&self, x: &str) -> ChanType {
        self.typed.chan_type(x).cloned().unwrap_or_else(|| panic!("channel `{x}` has no simple type"))
    }

    fn observed(&self, r: RegionId) -> bool {
        self.observed.contains(&r)
    }

    fn new_pred(&mut self, params: Vec<Name>, origin: String) -> Formula {
        let var = PredVar(self.preds.len() + 1);
        let args = vars(&params);
        self.preds.push(PredInfo { var, params, origin });
        Formula::Pred(PredApp { pred: var, args })
    }

    fn binder_names(&self, shape: &ChanType, scope: &[Name]) -> Vec<Name> {
        const FALLBACK: [&str; 4] = ["x", "y", "z", "w"];
        let hint = self.hints.get(&shape.region);
        let mut taken: BTreeSet<Name> = scope.iter().cloned().collect();
        (0..shape.ints)
            .map(|i| {
                let base = match hint.and_then(|h| h.get(i)) {
                    Some(h) => h.clone(),
                    None => name(FALLBACK.get(i).copied().unwrap_or("x")),
                };
                let b = if taken.contains(&base) { fresh_name(&base, &|s: &str| taken.contains(s)) } else { base };
                taken.insert(b.clone());
                b
            })
            .collect()
    }

    fn fresh_template(&mut self, shape: &ChanType, scope: &[Name], origin: &str) -> RefChanType {
        let binders = self.binder_names(shape, scope);
        let params = extend(scope, binders.iter().cloned());
        let payload = |g: &mut Self, tag: &str| -> Vec<RefChanType> {
            shape
                .chans
                .iter()
                .enumerate()
                .map(|(i, c)| g.fresh_template(c, &params, &format!("{origin}{tag}.{i}")))
                .collect()
        };
        match self.flavor {
            RefineFlavor::Plain => {
                let phi = self.new_pred(params.clone(), origin.to_string());
                let pl = payload(self, "");
                RefChanType::simple(shape.region, binders, phi, pl)
            }
            RefineFlavor::InputOutput => {
                let phi_i = self.new_pred(params.clone(), format!("{origin}.in"));
                let phi_o = self.new_pred(params.clone(), format!("{origin}.out"));
                let pi = payload(self, ".in");
                let po = payload(self, ".out");
                RefChanType::io(shape.region, binders, (phi_i, phi_o), (pi, po))
            }
        }
    }

    /// Introduces a channel created at integer scope `gamma`.
    fn declare(&mut self, x: &Name, gamma: &[Name], theta: &[Formula]) {
        match self.flavor {
            RefineFlavor::Plain => {
                self.pending.insert(x.clone(), gamma.to_vec());
            }
            RefineFlavor::InputOutput => {
                let t = self.fresh_template(&self.shape(x), gamma, x);
                self.types.insert(x.clone(), t.clone());
                self.wf_obligations(gamma, theta, &t);
            }
        }
    }

    fn type_of(&mut self, x: &Name) -> RefChanType {
        if let Some(t) = self.types.get(x) {
            return t.clone();
        }
        let scope = self.pending.remove(x).unwrap_or_default();
        let t = self.fresh_template(&self.shape(x), &scope, x);
        self.types.insert(x.clone(), t.clone());
        t
    }

    fn emit(&mut self, theta: &[Formula], head: &Formula) {
        let head = match head {
            Formula::Pred(p) => Head::Pred(p.clone()),
            f => Head::Constraint(f.clone()),
        };
        let c = HornClause::new(theta, head);
        if !c.is_tautology() && !self.clauses.contains(&c) {
            self.clauses.push(c);
        }
    }

    fn fresh_binders(&self, n: usize, gamma: &[Name], theta: &[Formula], tys: &[&RefChanType]) -> Vec<Name> {
        let mut taken: BTreeSet<Name> = gamma.iter().cloned().collect();
        taken.extend(theta.iter().flat_map(|f| f.vars()));
        for t in tys {
            taken.extend(t.free_vars());
        }
        (0..n)
            .map(|_| {
                let b = fresh_name("u", &|s: &str| taken.contains(s));
                taken.insert(b.clone());
                b
            })
            .collect()
    }

    /// `a` and `b` must agree under `theta`.
    fn equal_obligations(&mut self, gamma: &[Name], theta: &[Formula], a: &RefChanType, b: &RefChanType) {
        if a == b || !self.observed(a.region) {
            return;
        }
        let us = self.fresh_binders(a.binders.len(), gamma, theta, &[a, b]);
        let (oa, ob) = (a.open_vars(&us), b.open_vars(&us));
        self.emit(&extend(theta, [oa.phi_i.clone()]), &ob.phi_i);
        self.emit(&extend(theta, [ob.phi_i.clone()]), &oa.phi_i);
        let g2 = extend(gamma, us.iter().cloned());
        let th = extend(theta, [oa.phi_i.clone()]);
        for (x, y) in oa.payload_i.iter().zip(&ob.payload_i) {
            self.equal_obligations(&g2, &th, x, y);
        }
    }

    /// `a <: b` under `theta`.
    fn subtype_obligations(&mut self, gamma: &[Name], theta: &[Formula], a: &RefChanType, b: &RefChanType) {
        if a == b || !self.observed(a.region) {
            return;
        }
        let us = self.fresh_binders(a.binders.len(), gamma, theta, &[a, b]);
        let (oa, ob) = (a.open_vars(&us), b.open_vars(&us));
        let g2 = extend(gamma, us.iter().cloned());
        let th_i = extend(theta, [oa.phi_i.clone()]);
        self.emit(&th_i, &ob.phi_i);
        for (x, y) in oa.payload_i.iter().zip(&ob.payload_i) {
            self.subtype_obligations(&g2, &th_i, x, y);
        }
        let th_o = extend(theta, [ob.phi_o.clone()]);
        self.emit(&th_o, &oa.phi_o);
        for (x, y) in oa.payload_o.iter().zip(&ob.payload_o) {
            self.subtype_obligations(&g2, &th_o, y, x);
        }
    }

    /// What is sent on a channel must satisfy what its receivers assume.
    fn wf_obligations(&mut self, gamma: &[Name], theta: &[Formula], t: &RefChanType) {
        if !self.observed(t.region) {
            return;
        }
        let us = self.fresh_binders(t.binders.len(), gamma, theta, &[t]);
        let o = t.open_vars(&us);
        let th = extend(theta, [o.phi_o.clone()]);
        self.emit(&th, &o.phi_i);
        let g2 = extend(gamma, us.iter().cloned());
        for (po, pi) in o.payload_o.iter().zip(&o.payload_i) {
            self.subtype_obligations(&g2, &th, po, pi);
        }
    }

    fn input(&mut self, i: &InputPrefix, gamma: &[Name], theta: &[Formula]) {
        let t = self.type_of(&i.chan);
        let o = t.open_vars(&i.ints);
        let gamma2 = extend(gamma, i.ints.iter().cloned());
        let theta2 = extend(theta, [o.phi_i.clone()]);
        for (z, pt) in i.chans.iter().zip(o.payload_i) {
            self.types.insert(z.clone(), pt.clone());
            if self.flavor == RefineFlavor::InputOutput {
                self.wf_obligations(&gamma2, &theta2, &pt);
            }
        }
        self.walk(&i.cont, &gamma2, &theta2);
    }

    fn walk(&mut self, p: &Process, gamma: &[Name], theta: &[Formula]) {
        match p {
            Process::Nil => {}
            Process::Par(a, b) => {
                self.walk(a, gamma, theta);
                self.walk(b, gamma, theta);
            }
            Process::Nu { name: x, body, .. } => {
                self.declare(x, gamma, theta);
                self.walk(body, gamma, theta);
            }
            Process::If { cond, then, els, .. } => {
                let c = Formula::from_expr(cond).simplify();
                self.walk(then, gamma, &extend(theta, [c.clone()]));
                self.walk(els, gamma, &extend(theta, [Formula::not(c).simplify()]));
            }
            Process::LetNd { names, body, .. } => {
                self.walk(body, &extend(gamma, names.iter().cloned()), theta);
            }
            Process::Input(i) | Process::RepInput(i) => self.input(i, gamma, theta),
            Process::Output(o) => {
                let t = self.type_of(&o.chan);
                let opened = t.open(&o.ints);
                self.emit(theta, &opened.phi_o);
                // Channels sent on a channel nobody reads are never received
                // through it. With subtyping a common supertype of any payload
                // types exists, so the obligations can be dropped.
                let skip_payload = self.flavor == RefineFlavor::InputOutput && !self.observed(t.region);
                for (w, expected) in o.chans.iter().zip(&opened.payload_o) {
                    let actual = match self.pending.remove(w) {
                        Some(scope) if self.flavor == RefineFlavor::Plain => {
                            if expected.free_vars().iter().all(|v| scope.contains(v)) {
                                self.types.insert(w.clone(), expected.clone());
                                continue;
                            }
                            let t = self.fresh_template(&self.shape(w), &scope, w);
                            self.types.insert(w.clone(), t.clone());
                            t
                        }
                        Some(scope) => {
                            self.pending.insert(w.clone(), scope);
                            self.type_of(w)
                        }
                        None => self.type_of(w),
                    };
                    if skip_payload {
                        continue;
                    }
                    match self.flavor {
                        RefineFlavor::Plain => self.equal_obligations(gamma, theta, &actual, expected),
                        RefineFlavor::InputOutput => self.subtype_obligations(gamma, theta, &actual, expected),
                    }
                }
                self.walk(&o.cont, gamma, theta);
            }
        }
    }
}
