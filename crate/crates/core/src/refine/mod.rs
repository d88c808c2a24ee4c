//! Refinement types for channels and the Horn clauses whose solutions make
//! a template typing valid.

mod gen;
mod types;

use std::collections::BTreeMap;
use std::fmt;

use crate::logic::{is_valid, Formula, PredApp, PredVar};
use crate::syntax::{Name, SimpleExpr};

pub use gen::{gen_constraints, make_templates, Constraints, RefineFlavor, Templates};
pub use types::{subtype_check, wf_check, Opened, RefChanType, RefTyping, WfError};

/// An unknown refinement together with its formal parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredInfo {
    pub var: PredVar,
    pub params: Vec<Name>,
    /// Where the template sits, for diagnostics (`f.in`, `f.out.0`, ...).
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    Pred(PredApp),
    Constraint(Formula),
}

/// `body ∧ constraint ⇒ head`, universally quantified over `vars`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HornClause {
    pub vars: Vec<Name>,
    pub body: Vec<PredApp>,
    pub constraint: Formula,
    pub head: Head,
}

impl HornClause {
    /// Builds a clause from assumptions, splitting predicate applications
    /// from constraints, and quantifying over the variables that occur.
    pub fn new(assumptions: &[Formula], head: Head) -> HornClause {
        let mut body = Vec::new();
        let mut cons = Vec::new();
        for f in assumptions {
            match f {
                Formula::Pred(p) => {
                    if !body.contains(p) {
                        body.push(p.clone())
                    }
                }
                Formula::True => {}
                other => cons.push(other.clone()),
            }
        }
        let constraint = Formula::and(cons).simplify();
        let mut clause = HornClause { vars: Vec::new(), body, constraint, head };
        clause.vars = clause.as_formula().vars();
        clause
    }

    /// Trivially valid clauses: the head occurs in the body, or is `true`.
    pub fn is_tautology(&self) -> bool {
        match &self.head {
            Head::Pred(p) => self.body.contains(p),
            Head::Constraint(f) => f.is_true() || self.constraint.is_false(),
        }
    }

    pub fn head_formula(&self) -> Formula {
        match &self.head {
            Head::Pred(p) => Formula::Pred(p.clone()),
            Head::Constraint(f) => f.clone(),
        }
    }

    /// The clause as one implication with free variables.
    pub fn as_formula(&self) -> Formula {
        let mut lhs: Vec<Formula> = self.body.iter().cloned().map(Formula::Pred).collect();
        lhs.push(self.constraint.clone());
        Formula::implies(Formula::and(lhs), self.head_formula())
    }

    pub fn preds(&self) -> Vec<PredVar> {
        let mut out: Vec<PredVar> = self.body.iter().map(|p| p.pred).collect();
        if let Head::Pred(p) = &self.head {
            out.push(p.pred);
        }
        out
    }
}

impl fmt::Display for HornClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lhs: Vec<String> = self.body.iter().map(|p| p.to_string()).collect();
        if !self.constraint.is_true() || lhs.is_empty() {
            lhs.push(self.constraint.to_string());
        }
        write!(f, "{} => {}", lhs.join(" and "), self.head_formula())
    }
}

/// An interpretation of predicate variables as formulas over their
/// formal parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Solution {
    pub map: BTreeMap<PredVar, Formula>,
}

impl Solution {
    /// Interprets every predicate variable as `true`.
    pub fn trivial(preds: &[PredInfo]) -> Solution {
        Solution { map: preds.iter().map(|p| (p.var, Formula::True)).collect() }
    }

    /// Replaces every application of a solved predicate variable.
    /// Unsolved variables read as `true`.
    pub fn apply(&self, preds: &[PredInfo], f: &Formula) -> Formula {
        f.replace_preds(&|app| {
            let info = preds.iter().find(|p| p.var == app.pred)?;
            let body = self.map.get(&app.pred).cloned().unwrap_or(Formula::True);
            let map: BTreeMap<Name, SimpleExpr> = info.params.iter().cloned().zip(app.args.iter().cloned()).collect();
            Some(body.subst(&map))
        })
        .simplify()
    }

    /// Pointwise conjunction.
    pub fn conjoin(&self, other: &Solution) -> Solution {
        let mut map = self.map.clone();
        for (k, f) in &other.map {
            let merged = match map.remove(k) {
                Some(g) => Formula::and([g, f.clone()]).simplify(),
                None => f.clone(),
            };
            map.insert(*k, merged);
        }
        Solution { map }
    }

    /// Whether every clause is valid under this interpretation. Returns the
    /// first clause that is not.
    pub fn check<'a>(&self, preds: &[PredInfo], clauses: &'a [HornClause]) -> Result<(), &'a HornClause> {
        for c in clauses {
            if !is_valid(&self.apply(preds, &c.as_formula())) {
                return Err(c);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.map {
            writeln!(f, "{k} := {v}")?;
        }
        Ok(())
    }
}

/// The refinement typing obtained by substituting a solution into the
/// templates.
pub fn apply_solution(templates: &Templates, sol: &Solution) -> RefTyping {
    templates.typing.map_formulas(&|f| sol.apply(&templates.preds, f))
}
