//! Translation of typed processes into sequential programs whose
//! termination implies termination of the process.
//!
//! Every region `r` becomes a function `F_r`: an output on a channel of
//! region `r` becomes a call, a replicated input becomes a definition, and
//! parallel composition becomes choice. In refined mode every input is
//! followed by `assume` of its refinement.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::refine::RefTyping;
use crate::seq::sem::canonical;
use crate::seq::{SeqDef, SeqExpr, SeqProgram};
use crate::logic::{fold_expr, Formula};
use crate::syntax::{name, InputPrefix, Name, Process, SimpleExpr};
use crate::typing::{region_fn, Typed};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("channel `{0}` has no refinement type")]
    MissingRefinement(Name),
}

/// The translation without refinements.
pub fn translate_basic(typed: &Typed) -> SeqProgram {
    Translator { typed, typing: None }.run().expect("basic translation does not consult refinements")
}

/// The translation that assumes the input refinement of `typing` after
/// every input.
pub fn translate_refined(typed: &Typed, typing: &RefTyping) -> Result<SeqProgram, TranslateError> {
    Translator { typed, typing: Some(typing) }.run()
}

struct Translator<'a> {
    typed: &'a Typed,
    typing: Option<&'a RefTyping>,
}

type Out = (Vec<SeqDef>, SeqExpr);

/// Multiset union of definitions, dropping exact duplicates.
fn merge(mut a: Vec<SeqDef>, b: Vec<SeqDef>) -> Vec<SeqDef> {
    for d in b {
        if !a.contains(&d) {
            a.push(d);
        }
    }
    a
}

fn wrap_defs(defs: Vec<SeqDef>, f: &dyn Fn(SeqExpr) -> SeqExpr) -> Vec<SeqDef> {
    let mut out = Vec::new();
    for d in defs {
        let d = SeqDef { body: f(d.body), ..d };
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

impl Translator<'_> {
    fn run(&self) -> Result<SeqProgram, TranslateError> {
        let delta: Vec<Name> = self.typed.env.chans.keys().cloned().collect();
        let (defs, main) = self.tr(&self.typed.process, &delta)?;
        Ok(SeqProgram { defs, main })
    }

    fn fname(&self, x: &str) -> Name {
        region_fn(self.typed.chan_type(x).expect("every channel is typed").region)
    }

    /// The input refinement of the subject of `i`, instantiated with its
    /// binders, in refined mode.
    fn assumption(&self, i: &InputPrefix) -> Result<Option<Formula>, TranslateError> {
        let Some(t) = self.typing else {
            return Ok(None);
        };
        let ty = t.get(&i.chan).ok_or_else(|| TranslateError::MissingRefinement(i.chan.clone()))?;
        Ok(Some(ty.open_vars(&i.ints).phi_i))
    }

    /// `let* ỹ in assume(φ); _` for an input.
    fn guard(&self, i: &InputPrefix) -> Result<impl Fn(SeqExpr) -> SeqExpr, TranslateError> {
        let phi = self.assumption(i)?;
        let ys = i.ints.clone();
        Ok(move |e: SeqExpr| SeqExpr::let_nd(ys.clone(), assume_opt(&phi, e)))
    }

    fn tr(&self, p: &Process, delta: &[Name]) -> Result<Out, TranslateError> {
        Ok(match p {
            Process::Nil => {
                let mut defs = Vec::new();
                for x in delta {
                    let arity = self.typed.chan_type(x).expect("every channel is typed").ints;
                    let params = (0..arity).map(|i| name(&if i == 0 { "z".into() } else { format!("z{i}") })).collect();
                    let d = SeqDef { fname: self.fname(x), params, body: SeqExpr::Skip };
                    if !defs.contains(&d) {
                        defs.push(d);
                    }
                }
                (defs, SeqExpr::Skip)
            }
            Process::Output(o) => {
                let (d, e) = self.tr(&o.cont, delta)?;
                (d, SeqExpr::choice(SeqExpr::Call(self.fname(&o.chan), o.ints.clone()), e))
            }
            Process::Input(i) => {
                let (d, e) = self.tr(&i.cont, &extend(delta, &i.chans))?;
                let g = self.guard(i)?;
                (wrap_defs(d, &g), g(e))
            }
            Process::RepInput(i) => {
                let (d, e) = self.tr(&i.cont, &extend(delta, &i.chans))?;
                let g = self.guard(i)?;
                let body = assume_opt(&self.assumption(i)?, e);
                let def = SeqDef { fname: self.fname(&i.chan), params: i.ints.clone(), body };
                (merge(vec![def], wrap_defs(d, &g)), SeqExpr::Skip)
            }
            Process::Par(a, b) => {
                let (d1, e1) = self.tr(a, delta)?;
                let (d2, e2) = self.tr(b, delta)?;
                (merge(d1, d2), SeqExpr::choice(e1, e2))
            }
            Process::Nu { name: x, body, .. } => self.tr(body, &extend(delta, std::slice::from_ref(x)))?,
            Process::If { cond, then, els, .. } => {
                let (d1, e1) = self.tr(then, delta)?;
                let (d2, e2) = self.tr(els, delta)?;
                (merge(d1, d2), SeqExpr::if_(cond.clone(), e1, e2))
            }
            Process::LetNd { names, body, .. } => {
                let (d, e) = self.tr(body, delta)?;
                let ys = names.clone();
                let wrap = move |e: SeqExpr| SeqExpr::let_nd(ys.clone(), e);
                (wrap_defs(d, &wrap), wrap(e))
            }
        })
    }
}

fn assume_opt(phi: &Option<Formula>, e: SeqExpr) -> SeqExpr {
    match phi {
        Some(f) => SeqExpr::assume(f.clone(), e),
        None => e,
    }
}

fn extend(xs: &[Name], more: &[Name]) -> Vec<Name> {
    let mut v = xs.to_vec();
    v.extend(more.iter().cloned());
    v
}

/// Termination-preserving clean-up of a translated program.
///
/// Within expressions: `assume(true)` is erased, `assume` before `skip`
/// and unused `let*` binders are dropped, nested `let*` are merged,
/// `skip` branches of choices are removed, and conditionals with constant
/// conditions are resolved. Definitions: α-equivalent duplicates are
/// merged, and a definition with body `skip` is dropped when its function
/// has another definition or is never called. An extra `skip` alternative
/// only adds a terminating run, so none of this changes termination.
pub fn normalize(prog: &SeqProgram) -> SeqProgram {
    let main = simplify(&prog.main);
    let mut defs: Vec<SeqDef> = Vec::new();
    let mut seen: BTreeSet<(Name, SeqExpr)> = BTreeSet::new();
    for d in &prog.defs {
        let d = SeqDef { body: simplify(&d.body), ..d.clone() };
        if seen.insert((d.fname.clone(), canonical_body(&d))) {
            defs.push(d);
        }
    }
    let mut called: BTreeSet<Name> = main.calls().into_iter().map(|(f, _)| f.clone()).collect();
    for d in &defs {
        called.extend(d.body.calls().into_iter().map(|(f, _)| f.clone()));
    }
    let has_real: BTreeSet<Name> = defs.iter().filter(|d| d.body != SeqExpr::Skip).map(|d| d.fname.clone()).collect();
    defs.retain(|d| d.body != SeqExpr::Skip || (called.contains(&d.fname) && !has_real.contains(&d.fname)));
    SeqProgram { defs, main }
}

fn simplify(e: &SeqExpr) -> SeqExpr {
    match e {
        SeqExpr::Skip => SeqExpr::Skip,
        SeqExpr::Call(f, args) => SeqExpr::Call(f.clone(), args.iter().map(fold_expr).collect()),
        SeqExpr::LetNd(xs, body) => {
            let b = simplify(body);
            let free: BTreeSet<Name> = b.free_vars().into_iter().collect();
            let kept: Vec<Name> = xs.iter().filter(|x| free.contains(*x)).cloned().collect();
            match b {
                SeqExpr::LetNd(ys, inner) if !ys.iter().any(|y| kept.contains(y)) => {
                    let mut all = kept;
                    all.extend(ys);
                    SeqExpr::LetNd(all, inner)
                }
                b => SeqExpr::let_nd(kept, b),
            }
        }
        SeqExpr::Choice(..) => {
            let bs: Vec<SeqExpr> =
                e.branches().into_iter().map(simplify).flat_map(|b| b.branches().into_iter().cloned().collect::<Vec<_>>()).filter(|b| *b != SeqExpr::Skip).collect();
            SeqExpr::choice_all(bs)
        }
        SeqExpr::If(c, a, b) => {
            let c = fold_expr(c);
            let (a, b) = (simplify(a), simplify(b));
            match c {
                SimpleExpr::IntLit(0) => b,
                SimpleExpr::IntLit(_) => a,
                _ if a == b => a,
                c => SeqExpr::if_(c, a, b),
            }
        }
        SeqExpr::Assume(f, body) => {
            let f = f.simplify();
            let b = simplify(body);
            if f.is_false() || b == SeqExpr::Skip {
                SeqExpr::Skip
            } else if f.is_true() {
                b
            } else {
                SeqExpr::assume(f, b)
            }
        }
    }
}

fn param_names(n: usize) -> Vec<Name> {
    (0..n).map(|i| name(&format!("_p{i}"))).collect()
}

/// The body with parameters renamed positionally and calls renamed by
/// `f`, in canonical form.
fn canonical_body_with(d: &SeqDef, f: &dyn Fn(&Name) -> Name) -> SeqExpr {
    let map: BTreeMap<Name, SimpleExpr> =
        d.params.iter().cloned().zip(param_names(d.params.len()).into_iter().map(SimpleExpr::Var)).collect();
    canonical(&d.body.subst(&map).rename_calls(f))
}

fn canonical_body(d: &SeqDef) -> SeqExpr {
    canonical_body_with(d, &|n| n.clone())
}

fn canonical_defs(p: &SeqProgram, rename: &BTreeMap<Name, Name>) -> Vec<(Name, usize, SeqExpr)> {
    let f = |n: &Name| rename.get(n).cloned().unwrap_or_else(|| n.clone());
    let mut out: Vec<(Name, usize, SeqExpr)> = p
        .defs
        .iter()
        .map(|d| (f(&d.fname), d.params.len(), canonical_body_with(d, &f)))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Whether two programs coincide after normalization, up to renaming of
/// bound variables, congruence of choice, and a bijective renaming of
/// function names.
pub fn programs_equivalent(a: &SeqProgram, b: &SeqProgram) -> bool {
    let (a, b) = (normalize(a), normalize(b));
    let (fa, fb) = (a.fnames(), b.fnames());
    if fa.len() != fb.len() {
        return false;
    }
    let target = canonical_defs(&b, &BTreeMap::new());
    let target_main = canonical(&b.main);
    let mut perm: Vec<usize> = (0..fb.len()).collect();
    loop {
        let rename: BTreeMap<Name, Name> = fa.iter().cloned().zip(perm.iter().map(|&i| fb[i].clone())).collect();
        let f = |n: &Name| rename.get(n).cloned().unwrap_or_else(|| n.clone());
        if canonical(&a.main.rename_calls(&f)) == target_main && canonical_defs(&a, &rename) == target {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("a larger element exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
