//! Refinement channel types and their well-formedness and subtyping checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::logic::{is_valid, Formula};
use crate::syntax::{fresh_name, Name, SimpleExpr};
use crate::typing::{ChanType, RegionId};

/// A channel type whose integer payload `x̃` is refined by formulas.
///
/// `phi_i` and `payload_i` describe what a receiver may assume, `phi_o` and
/// `payload_o` what a sender must establish. A type without separate input
/// and output views has equal components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RefChanType {
    pub region: RegionId,
    pub binders: Vec<Name>,
    pub phi_i: Formula,
    pub phi_o: Formula,
    pub payload_i: Vec<RefChanType>,
    pub payload_o: Vec<RefChanType>,
}

/// The components of a channel type after instantiating its binders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opened {
    pub phi_i: Formula,
    pub phi_o: Formula,
    pub payload_i: Vec<RefChanType>,
    pub payload_o: Vec<RefChanType>,
}

/// Refinement types of the channel names of a process.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefTyping {
    pub chans: BTreeMap<Name, RefChanType>,
}

impl RefTyping {
    pub fn get(&self, x: &str) -> Option<&RefChanType> {
        self.chans.get(x)
    }

    pub fn map_formulas(&self, f: &dyn Fn(&Formula) -> Formula) -> RefTyping {
        RefTyping { chans: self.chans.iter().map(|(k, t)| (k.clone(), t.map_formulas(f))).collect() }
    }
}

impl fmt::Display for RefTyping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (x, t) in &self.chans {
            writeln!(f, "{x} : {t}")?;
        }
        Ok(())
    }
}

impl RefChanType {
    /// A type with one refinement for both directions.
    pub fn simple(region: RegionId, binders: Vec<Name>, phi: Formula, payload: Vec<RefChanType>) -> Self {
        RefChanType { region, binders, phi_i: phi.clone(), phi_o: phi, payload_i: payload.clone(), payload_o: payload }
    }

    /// A type with distinct input and output views.
    pub fn io(
        region: RegionId,
        binders: Vec<Name>,
        (phi_i, phi_o): (Formula, Formula),
        (payload_i, payload_o): (Vec<RefChanType>, Vec<RefChanType>),
    ) -> Self {
        RefChanType { region, binders, phi_i, phi_o, payload_i, payload_o }
    }

    /// The type with every refinement `true`.
    pub fn trivial(shape: &ChanType, names: &mut dyn FnMut() -> Name) -> Self {
        let binders = (0..shape.ints).map(|_| names()).collect();
        let payload: Vec<RefChanType> = shape.chans.iter().map(|c| RefChanType::trivial(c, names)).collect();
        RefChanType::simple(shape.region, binders, Formula::True, payload)
    }

    pub fn is_simple(&self) -> bool {
        self.phi_i == self.phi_o
            && self.payload_i == self.payload_o
            && self.payload_i.iter().all(RefChanType::is_simple)
    }

    /// The region-annotated simple type obtained by forgetting refinements.
    pub fn erase(&self) -> ChanType {
        ChanType {
            region: self.region,
            ints: self.binders.len(),
            chans: self.payload_i.iter().map(RefChanType::erase).collect(),
        }
    }

    pub fn map_formulas(&self, f: &dyn Fn(&Formula) -> Formula) -> RefChanType {
        RefChanType {
            region: self.region,
            binders: self.binders.clone(),
            phi_i: f(&self.phi_i),
            phi_o: f(&self.phi_o),
            payload_i: self.payload_i.iter().map(|t| t.map_formulas(f)).collect(),
            payload_o: self.payload_o.iter().map(|t| t.map_formulas(f)).collect(),
        }
    }

    /// Every formula of the type, outermost first.
    pub fn formulas(&self) -> Vec<&Formula> {
        let mut out = vec![&self.phi_i, &self.phi_o];
        for t in self.payload_i.iter().chain(&self.payload_o) {
            out.extend(t.formulas());
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = BTreeSet::new();
        for f in [&self.phi_i, &self.phi_o] {
            out.extend(f.vars());
        }
        for t in self.payload_i.iter().chain(&self.payload_o) {
            out.extend(t.free_vars());
        }
        for b in &self.binders {
            out.remove(b);
        }
        out
    }

    /// Capture-avoiding substitution of free integer variables.
    pub fn subst(&self, map: &BTreeMap<Name, SimpleExpr>) -> RefChanType {
        let map: BTreeMap<Name, SimpleExpr> =
            map.iter().filter(|(k, _)| !self.binders.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
        if map.is_empty() {
            return self.clone();
        }
        let mut avoid: BTreeSet<Name> = map.values().flat_map(|e| e.vars()).collect();
        avoid.extend(self.free_vars());
        let (binders, inner) = self.rename_binders_avoiding(&avoid);
        let mut full = map;
        full.extend(inner);
        self.with_binders(binders, &full)
    }

    /// Instantiates the binders with `args`.
    pub fn open(&self, args: &[SimpleExpr]) -> Opened {
        assert_eq!(args.len(), self.binders.len(), "arity of refinement type");
        let map: BTreeMap<Name, SimpleExpr> = self.binders.iter().cloned().zip(args.iter().cloned()).collect();
        let sub = |t: &RefChanType| t.subst(&map);
        Opened {
            phi_i: self.phi_i.subst(&map),
            phi_o: self.phi_o.subst(&map),
            payload_i: self.payload_i.iter().map(sub).collect(),
            payload_o: self.payload_o.iter().map(sub).collect(),
        }
    }

    /// Instantiates the binders with variables named `xs`.
    pub fn open_vars(&self, xs: &[Name]) -> Opened {
        let args: Vec<SimpleExpr> = xs.iter().map(|x| SimpleExpr::Var(x.clone())).collect();
        self.open(&args)
    }

    fn rename_binders_avoiding(&self, avoid: &BTreeSet<Name>) -> (Vec<Name>, BTreeMap<Name, SimpleExpr>) {
        let mut taken = avoid.clone();
        let mut binders = Vec::new();
        let mut map = BTreeMap::new();
        for b in &self.binders {
            if taken.contains(b) {
                let nb = fresh_name(b, &|s: &str| taken.contains(s));
                map.insert(b.clone(), SimpleExpr::Var(nb.clone()));
                taken.insert(nb.clone());
                binders.push(nb);
            } else {
                taken.insert(b.clone());
                binders.push(b.clone());
            }
        }
        (binders, map)
    }

    fn with_binders(&self, binders: Vec<Name>, map: &BTreeMap<Name, SimpleExpr>) -> RefChanType {
        RefChanType {
            region: self.region,
            binders,
            phi_i: self.phi_i.subst(map),
            phi_o: self.phi_o.subst(map),
            payload_i: self.payload_i.iter().map(|t| t.subst(map)).collect(),
            payload_o: self.payload_o.iter().map(|t| t.subst(map)).collect(),
        }
    }
}

fn write_payload(f: &mut fmt::Formatter<'_>, ts: &[RefChanType]) -> fmt::Result {
    for (i, t) in ts.iter().enumerate() {
        f.write_str(if i == 0 { "" } else { ", " })?;
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for RefChanType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ch[r{}](", self.region)?;
        let bs: Vec<&str> = self.binders.iter().map(|b| &**b).collect();
        if !bs.is_empty() {
            write!(f, "{}: ", bs.join(", "))?;
        }
        if self.phi_i == self.phi_o {
            write!(f, "{{{}}}", self.phi_i)?;
        } else {
            write!(f, "{{{}}} / {{{}}}", self.phi_i, self.phi_o)?;
        }
        if self.payload_i == self.payload_o {
            if !self.payload_i.is_empty() {
                f.write_str("; ")?;
                write_payload(f, &self.payload_i)?;
            }
        } else {
            f.write_str("; in ")?;
            write_payload(f, &self.payload_i)?;
            f.write_str(" / out ")?;
            write_payload(f, &self.payload_o)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WfError {
    #[error("variable `{var}` is not in scope in {ty}")]
    Unscoped { var: Name, ty: String },
    #[error("output refinement does not imply input refinement in {ty}")]
    Inconsistent { ty: String },
    #[error("{sub} is not a subtype of {sup}")]
    NotSubtype { sub: String, sup: String },
    #[error("{a} and {b} have different shapes")]
    Shape { a: String, b: String },
}

fn entails(theta: &[Formula], goal: &Formula) -> bool {
    is_valid(&Formula::implies(Formula::and(theta.iter().cloned()), goal.clone()))
}

fn fresh_binders(n: usize, gamma: &[Name], extra: &BTreeSet<Name>) -> Vec<Name> {
    let mut taken: BTreeSet<Name> = gamma.iter().cloned().collect();
    taken.extend(extra.iter().cloned());
    (0..n)
        .map(|_| {
            let b = fresh_name("u", &|s: &str| taken.contains(s));
            taken.insert(b.clone());
            b
        })
        .collect()
}

fn theta_vars(theta: &[Formula]) -> BTreeSet<Name> {
    theta.iter().flat_map(|f| f.vars()).collect()
}

/// Checks that `ty` may enter an environment with integer scope `gamma`
/// and assumptions `theta`: refinements only mention variables in scope,
/// and what a sender establishes implies what a receiver assumes. Nested
/// payload types are only checked for scoping; their consistency is
/// checked when they are received.
pub fn wf_check(gamma: &[Name], theta: &[Formula], ty: &RefChanType) -> Result<(), WfError> {
    for f in theta {
        if let Some(v) = f.vars().into_iter().find(|v| !gamma.contains(v)) {
            return Err(WfError::Unscoped { var: v, ty: format!("assumption {f}") });
        }
    }
    if let Some(v) = ty.free_vars().into_iter().find(|v| !gamma.contains(v)) {
        return Err(WfError::Unscoped { var: v, ty: ty.to_string() });
    }
    let us = fresh_binders(ty.binders.len(), gamma, &theta_vars(theta));
    let o = ty.open_vars(&us);
    let mut g2: Vec<Name> = gamma.to_vec();
    g2.extend(us.iter().cloned());
    let mut th = theta.to_vec();
    th.push(o.phi_o.clone());
    if !entails(&th, &o.phi_i) {
        return Err(WfError::Inconsistent { ty: ty.to_string() });
    }
    for (po, pi) in o.payload_o.iter().zip(&o.payload_i) {
        subtype_check(&g2, &th, po, pi)?;
    }
    Ok(())
}

/// Checks `a <: b`: covariant in the input view, contravariant in the
/// output view.
pub fn subtype_check(gamma: &[Name], theta: &[Formula], a: &RefChanType, b: &RefChanType) -> Result<(), WfError> {
    let shape = |x: &RefChanType| (x.region, x.binders.len(), x.payload_i.len(), x.payload_o.len());
    if shape(a) != shape(b) {
        return Err(WfError::Shape { a: a.to_string(), b: b.to_string() });
    }
    let not_sub = || WfError::NotSubtype { sub: a.to_string(), sup: b.to_string() };
    let us = fresh_binders(a.binders.len(), gamma, &theta_vars(theta));
    let (oa, ob) = (a.open_vars(&us), b.open_vars(&us));
    let mut g2: Vec<Name> = gamma.to_vec();
    g2.extend(us.iter().cloned());
    let mut th_i = theta.to_vec();
    th_i.push(oa.phi_i.clone());
    if !entails(&th_i, &ob.phi_i) {
        return Err(not_sub());
    }
    for (x, y) in oa.payload_i.iter().zip(&ob.payload_i) {
        subtype_check(&g2, &th_i, x, y)?;
    }
    let mut th_o = theta.to_vec();
    th_o.push(ob.phi_o.clone());
    if !entails(&th_o, &oa.phi_o) {
        return Err(not_sub());
    }
    for (x, y) in oa.payload_o.iter().zip(&ob.payload_o) {
        subtype_check(&g2, &th_o, y, x)?;
    }
    Ok(())
}
