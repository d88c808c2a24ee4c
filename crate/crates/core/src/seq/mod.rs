//! The nondeterministic sequential target language: first-order recursive
//! functions, nondeterministic integers (`let*`), binary choice `[]` and
//! `assume` guards.

mod parse;
pub mod sem;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::logic::Formula;
use crate::syntax::{fresh_name, name, Name, SimpleExpr};

pub use parse::{parse_program, parse_seq_expr};
pub use sem::{explore_seq_terminates, expr_congruent, step_nonstandard, step_standard, Semantics};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeqExpr {
    Skip,
    LetNd(Vec<Name>, Box<SeqExpr>),
    Call(Name, Vec<SimpleExpr>),
    Choice(Box<SeqExpr>, Box<SeqExpr>),
    If(SimpleExpr, Box<SeqExpr>, Box<SeqExpr>),
    Assume(Formula, Box<SeqExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeqDef {
    pub fname: Name,
    pub params: Vec<Name>,
    pub body: SeqExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeqProgram {
    pub defs: Vec<SeqDef>,
    pub main: SeqExpr,
}

impl Default for SeqExpr {
    fn default() -> Self {
        SeqExpr::Skip
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeqError {
    #[error("call to undefined function `{0}`")]
    UndefinedFunction(Name),
    #[error("`{fname}` called with {found} arguments but defined with {expected}")]
    ArityMismatch { fname: Name, expected: usize, found: usize },
    #[error("definitions of `{fname}` disagree on arity")]
    InconsistentArity { fname: Name },
    #[error("free variable `{var}` in {place}")]
    FreeVariable { var: Name, place: String },
}

impl SeqExpr {
    pub fn call(f: &str, args: Vec<SimpleExpr>) -> SeqExpr {
        SeqExpr::Call(name(f), args)
    }

    pub fn choice(a: SeqExpr, b: SeqExpr) -> SeqExpr {
        SeqExpr::Choice(Box::new(a), Box::new(b))
    }

    /// Right-nested choice over `items`; `Skip` when empty.
    pub fn choice_all(mut items: Vec<SeqExpr>) -> SeqExpr {
        let Some(mut acc) = items.pop() else { return SeqExpr::Skip };
        while let Some(e) = items.pop() {
            acc = SeqExpr::choice(e, acc);
        }
        acc
    }

    pub fn let_nd(names: Vec<Name>, body: SeqExpr) -> SeqExpr {
        if names.is_empty() {
            body
        } else {
            SeqExpr::LetNd(names, Box::new(body))
        }
    }

    pub fn if_(c: SimpleExpr, a: SeqExpr, b: SeqExpr) -> SeqExpr {
        SeqExpr::If(c, Box::new(a), Box::new(b))
    }

    pub fn assume(f: Formula, body: SeqExpr) -> SeqExpr {
        SeqExpr::Assume(f, Box::new(body))
    }

    /// The operands of nested choices, left to right.
    pub fn branches(&self) -> Vec<&SeqExpr> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a SeqExpr, out: &mut Vec<&'a SeqExpr>) {
            match e {
                SeqExpr::Choice(a, b) => {
                    go(a, out);
                    go(b, out)
                }
                other => out.push(other),
            }
        }
        go(self, &mut out);
        out
    }

    /// Free integer variables, in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
        let add = |vs: Vec<Name>, bound: &Vec<Name>, out: &mut Vec<Name>| {
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            SeqExpr::Skip => {}
            SeqExpr::LetNd(xs, body) => {
                let n = bound.len();
                bound.extend(xs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(n);
            }
            SeqExpr::Call(_, args) => add(args.iter().flat_map(|a| a.vars()).collect(), bound, out),
            SeqExpr::Choice(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            SeqExpr::If(c, a, b) => {
                add(c.vars(), bound, out);
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            SeqExpr::Assume(f, body) => {
                add(f.vars(), bound, out);
                body.collect_free(bound, out);
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            SeqExpr::Skip => {}
            SeqExpr::LetNd(xs, body) => {
                out.extend(xs.iter().cloned());
                body.all_vars(out);
            }
            SeqExpr::Call(_, args) => args.iter().for_each(|a| out.extend(a.vars())),
            SeqExpr::Choice(a, b) => {
                a.all_vars(out);
                b.all_vars(out);
            }
            SeqExpr::If(c, a, b) => {
                out.extend(c.vars());
                a.all_vars(out);
                b.all_vars(out);
            }
            SeqExpr::Assume(f, body) => {
                out.extend(f.vars());
                body.all_vars(out);
            }
        }
    }

    /// Capture-avoiding simultaneous substitution of expressions for
    /// integer variables.
    pub fn subst(&self, map: &BTreeMap<Name, SimpleExpr>) -> SeqExpr {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            SeqExpr::Skip => SeqExpr::Skip,
            SeqExpr::Call(f, args) => SeqExpr::Call(f.clone(), args.iter().map(|a| a.subst_vars(map)).collect()),
            SeqExpr::Choice(a, b) => SeqExpr::choice(a.subst(map), b.subst(map)),
            SeqExpr::If(c, a, b) => SeqExpr::if_(c.subst_vars(map), a.subst(map), b.subst(map)),
            SeqExpr::Assume(f, body) => SeqExpr::assume(f.subst(map), body.subst(map)),
            SeqExpr::LetNd(xs, body) => {
                let mut inner: BTreeMap<Name, SimpleExpr> =
                    map.iter().filter(|(k, _)| !xs.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                let body_free: BTreeSet<Name> = body.free_vars().into_iter().collect();
                let range_vars: BTreeSet<Name> = inner
                    .iter()
                    .filter(|(k, _)| body_free.contains(*k))
                    .flat_map(|(_, v)| v.vars())
                    .collect();
                let mut taken: BTreeSet<Name> = range_vars.clone();
                body.all_vars(&mut taken);
                taken.extend(inner.keys().cloned());
                let mut new_xs = Vec::new();
                for x in xs {
                    if range_vars.contains(x) {
                        let y = fresh_name(x, &|s: &str| taken.contains(s));
                        taken.insert(y.clone());
                        inner.insert(x.clone(), SimpleExpr::Var(y.clone()));
                        new_xs.push(y);
                    } else {
                        new_xs.push(x.clone());
                    }
                }
                SeqExpr::LetNd(new_xs, Box::new(body.subst(&inner)))
            }
        }
    }

    /// Calls occurring in the expression, in order.
    pub fn calls(&self) -> Vec<(&Name, &[SimpleExpr])> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a SeqExpr, out: &mut Vec<(&'a Name, &'a [SimpleExpr])>) {
            match e {
                SeqExpr::Skip => {}
                SeqExpr::Call(f, args) => out.push((f, args)),
                SeqExpr::LetNd(_, b) | SeqExpr::Assume(_, b) => go(b, out),
                SeqExpr::Choice(a, b) | SeqExpr::If(_, a, b) => {
                    go(a, out);
                    go(b, out)
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn constants(&self, out: &mut Vec<i64>) {
        match self {
            SeqExpr::Skip => {}
            SeqExpr::Call(_, args) => args.iter().for_each(|a| a.constants(out)),
            SeqExpr::LetNd(_, b) => b.constants(out),
            SeqExpr::Assume(f, b) => {
                f.constants(out);
                b.constants(out)
            }
            SeqExpr::Choice(a, b) => {
                a.constants(out);
                b.constants(out)
            }
            SeqExpr::If(c, a, b) => {
                c.constants(out);
                a.constants(out);
                b.constants(out)
            }
        }
    }

    /// Renames called functions.
    pub fn rename_calls(&self, f: &dyn Fn(&Name) -> Name) -> SeqExpr {
        match self {
            SeqExpr::Skip => SeqExpr::Skip,
            SeqExpr::Call(g, args) => SeqExpr::Call(f(g), args.clone()),
            SeqExpr::LetNd(xs, b) => SeqExpr::LetNd(xs.clone(), Box::new(b.rename_calls(f))),
            SeqExpr::Assume(p, b) => SeqExpr::assume(p.clone(), b.rename_calls(f)),
            SeqExpr::Choice(a, b) => SeqExpr::choice(a.rename_calls(f), b.rename_calls(f)),
            SeqExpr::If(c, a, b) => SeqExpr::if_(c.clone(), a.rename_calls(f), b.rename_calls(f)),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            SeqExpr::Skip | SeqExpr::Call(..) => 1,
            SeqExpr::LetNd(_, b) | SeqExpr::Assume(_, b) => 1 + b.size(),
            SeqExpr::Choice(a, b) | SeqExpr::If(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl SeqProgram {
    pub fn new(defs: Vec<SeqDef>, main: SeqExpr) -> Self {
        SeqProgram { defs, main }
    }

    pub fn defs_of<'a>(&'a self, fname: &'a str) -> impl Iterator<Item = &'a SeqDef> + 'a {
        self.defs.iter().filter(move |d| &*d.fname == fname)
    }

    /// Function names in order of first definition.
    pub fn fnames(&self) -> Vec<Name> {
        let mut out: Vec<Name> = Vec::new();
        for d in &self.defs {
            if !out.contains(&d.fname) {
                out.push(d.fname.clone());
            }
        }
        out
    }

    pub fn arity_of(&self, fname: &str) -> Option<usize> {
        self.defs_of(fname).next().map(|d| d.params.len())
    }

    pub fn constants(&self) -> Vec<i64> {
        let mut out = Vec::new();
        for d in &self.defs {
            d.body.constants(&mut out);
        }
        self.main.constants(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Checks that every call targets a defined function with the right
    /// arity and that definitions and `main` are closed.
    pub fn check(&self) -> Result<(), SeqError> {
        let mut arity: BTreeMap<&Name, usize> = BTreeMap::new();
        for d in &self.defs {
            if *arity.entry(&d.fname).or_insert(d.params.len()) != d.params.len() {
                return Err(SeqError::InconsistentArity { fname: d.fname.clone() });
            }
        }
        let bodies = self.defs.iter().map(|d| (&d.body, Some(d))).chain([(&self.main, None)]);
        for (body, def) in bodies {
            for (f, args) in body.calls() {
                match arity.get(f) {
                    None => return Err(SeqError::UndefinedFunction(f.clone())),
                    Some(&n) if n != args.len() => {
                        return Err(SeqError::ArityMismatch { fname: f.clone(), expected: n, found: args.len() })
                    }
                    _ => {}
                }
            }
            let params: &[Name] = def.map(|d| d.params.as_slice()).unwrap_or(&[]);
            if let Some(v) = body.free_vars().into_iter().find(|v| !params.contains(v)) {
                let place = def.map(|d| format!("definition of `{}`", d.fname)).unwrap_or_else(|| "main".into());
                return Err(SeqError::FreeVariable { var: v, place });
            }
        }
        Ok(())
    }
}

fn write_expr(out: &mut String, e: &SeqExpr, top: bool) {
    match e {
        SeqExpr::Choice(..) => {
            if !top {
                out.push('(');
            }
            // Chains associate to the right, so a left operand that is itself
            // a choice keeps its parentheses.
            let mut cur = e;
            while let SeqExpr::Choice(a, b) = cur {
                write_expr(out, a, false);
                out.push_str(" [] ");
                cur = b;
            }
            write_expr(out, cur, false);
            if !top {
                out.push(')');
            }
        }
        SeqExpr::Skip => out.push_str("skip"),
        SeqExpr::Call(f, args) => {
            out.push_str(f);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&a.to_string());
            }
            out.push(')');
        }
        SeqExpr::LetNd(xs, body) => {
            out.push_str("let* ");
            out.push_str(&xs.join(", "));
            out.push_str(" in ");
            write_expr(out, body, false);
        }
        SeqExpr::If(c, a, b) => {
            out.push_str("if ");
            out.push_str(&c.to_string());
            out.push_str(" then ");
            write_expr(out, a, false);
            out.push_str(" else ");
            write_expr(out, b, false);
        }
        SeqExpr::Assume(f, body) => {
            out.push_str("assume(");
            out.push_str(&f.to_string());
            out.push_str("); ");
            write_expr(out, body, false);
        }
    }
}

impl fmt::Display for SeqExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self, true);
        f.write_str(&s)
    }
}

impl fmt::Display for SeqDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "def {}({}) = {}", self.fname, self.params.join(", "), self.body)
    }
}

impl fmt::Display for SeqProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.defs {
            writeln!(f, "{d}")?;
        }
        writeln!(f, "main = {}", self.main)
    }
}
