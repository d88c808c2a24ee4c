//! Abstract syntax of the π-calculus with integers, together with its
//! concrete-syntax parser and printer.

pub mod expr;
pub mod lexer;
mod names;
mod parser;
mod print;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use names::{
    alpha_equal, bound_names, free_names, fresh_name, strip_fresh_suffix, substitute,
    uniquify_binders, FreeNames,
};
pub use parser::parse_process;
pub use print::print_process;

/// Identifiers are shared, immutable strings.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Source position used in diagnostics. All spans compare equal so that
/// they never influence structural equality or hashing of syntax trees.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Span {}
impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}
impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Span {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{col}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
    pub found: String,
}

/// Operators of simple expressions. Comparisons and boolean connectives
/// evaluate to 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Neg,
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
    And,
    Or,
    Not,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub | Op::Neg => "-",
            Op::Mul => "*",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Op::Neg | Op::Not => 1,
            _ => 2,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Lt | Op::Le | Op::Eq | Op::Ne | Op::Gt | Op::Ge)
    }

    pub fn is_boolean(self) -> bool {
        self.is_comparison() || matches!(self, Op::And | Op::Or | Op::Not)
    }
}

/// Integer-valued expressions over integer variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleExpr {
    Var(Name),
    IntLit(i64),
    Op(Op, Vec<SimpleExpr>),
}

impl SimpleExpr {
    pub fn var(s: &str) -> Self {
        SimpleExpr::Var(name(s))
    }

    pub fn op(op: Op, args: Vec<SimpleExpr>) -> Self {
        debug_assert_eq!(op.arity(), args.len());
        SimpleExpr::Op(op, args)
    }

    pub fn bin(op: Op, a: SimpleExpr, b: SimpleExpr) -> Self {
        SimpleExpr::Op(op, vec![a, b])
    }

    /// Free variables in left-to-right order of first occurrence.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            SimpleExpr::Var(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            SimpleExpr::IntLit(_) => {}
            SimpleExpr::Op(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        match self {
            SimpleExpr::Var(y) => &**y == x,
            SimpleExpr::IntLit(_) => false,
            SimpleExpr::Op(_, args) => args.iter().any(|a| a.mentions(x)),
        }
    }

    /// Replaces variables according to `f`; variables mapped to `None` stay.
    pub fn subst_with(&self, f: &dyn Fn(&Name) -> Option<SimpleExpr>) -> SimpleExpr {
        match self {
            SimpleExpr::Var(x) => f(x).unwrap_or_else(|| self.clone()),
            SimpleExpr::IntLit(_) => self.clone(),
            SimpleExpr::Op(op, args) => {
                SimpleExpr::Op(*op, args.iter().map(|a| a.subst_with(f)).collect())
            }
        }
    }

    pub fn subst_vars(&self, map: &std::collections::BTreeMap<Name, SimpleExpr>) -> SimpleExpr {
        self.subst_with(&|x| map.get(x).cloned())
    }

    pub fn rename_vars(&self, map: &std::collections::BTreeMap<Name, Name>) -> SimpleExpr {
        self.subst_with(&|x| map.get(x).map(|y| SimpleExpr::Var(y.clone())))
    }

    /// Integer literals occurring in the expression.
    pub fn constants(&self, out: &mut Vec<i64>) {
        match self {
            SimpleExpr::Var(_) => {}
            SimpleExpr::IntLit(i) => out.push(*i),
            SimpleExpr::Op(_, args) => args.iter().for_each(|a| a.constants(out)),
        }
    }
}

impl fmt::Display for SimpleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&expr::print_expr(self))
    }
}

/// Optional channel-type annotation written on `new`. Labels name regions:
/// annotations sharing a label are unified by type inference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeAnnot {
    pub label: Option<Name>,
    pub ints: usize,
    pub chans: Vec<TypeAnnot>,
}

impl fmt::Display for TypeAnnot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ch")?;
        if let Some(l) = &self.label {
            write!(f, "[{l}]")?;
        }
        f.write_str("(")?;
        match self.ints {
            0 => {}
            1 => f.write_str("int")?,
            n => write!(f, "int^{n}")?,
        }
        if !self.chans.is_empty() {
            f.write_str(";")?;
            for (i, c) in self.chans.iter().enumerate() {
                f.write_str(if i == 0 { " " } else { ", " })?;
                write!(f, "{c}")?;
            }
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutputPrefix {
    pub chan: Name,
    pub ints: Vec<SimpleExpr>,
    pub chans: Vec<Name>,
    pub cont: Box<Process>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputPrefix {
    pub chan: Name,
    pub ints: Vec<Name>,
    pub chans: Vec<Name>,
    pub cont: Box<Process>,
    pub span: Span,
}

impl InputPrefix {
    pub fn binders(&self) -> impl Iterator<Item = &Name> {
        self.ints.iter().chain(self.chans.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Nil,
    Output(OutputPrefix),
    Input(InputPrefix),
    RepInput(InputPrefix),
    Par(Box<Process>, Box<Process>),
    Nu {
        name: Name,
        annot: Option<TypeAnnot>,
        body: Box<Process>,
        span: Span,
    },
    If {
        cond: SimpleExpr,
        then: Box<Process>,
        els: Box<Process>,
        span: Span,
    },
    LetNd {
        names: Vec<Name>,
        body: Box<Process>,
        span: Span,
    },
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    /// Right-nested parallel composition of `items`; `Nil` when empty.
    pub fn par_all(items: Vec<Process>) -> Process {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Process::Nil,
            Some(last) => it.fold(last, |acc, p| Process::par(p, acc)),
        }
    }

    pub fn output(chan: &str, ints: Vec<SimpleExpr>, chans: &[&str], cont: Process) -> Process {
        Process::Output(OutputPrefix {
            chan: name(chan),
            ints,
            chans: chans.iter().map(|c| name(c)).collect(),
            cont: Box::new(cont),
            span: Span::default(),
        })
    }

    pub fn input(chan: &str, ints: &[&str], chans: &[&str], cont: Process) -> Process {
        Process::Input(InputPrefix {
            chan: name(chan),
            ints: ints.iter().map(|c| name(c)).collect(),
            chans: chans.iter().map(|c| name(c)).collect(),
            cont: Box::new(cont),
            span: Span::default(),
        })
    }

    pub fn rep_input(chan: &str, ints: &[&str], chans: &[&str], cont: Process) -> Process {
        match Process::input(chan, ints, chans, cont) {
            Process::Input(i) => Process::RepInput(i),
            _ => unreachable!(),
        }
    }

    pub fn nu(x: &str, body: Process) -> Process {
        Process::Nu { name: name(x), annot: None, body: Box::new(body), span: Span::default() }
    }

    pub fn if_(cond: SimpleExpr, then: Process, els: Process) -> Process {
        Process::If { cond, then: Box::new(then), els: Box::new(els), span: Span::default() }
    }

    pub fn let_nd(names: &[&str], body: Process) -> Process {
        Process::LetNd {
            names: names.iter().map(|c| name(c)).collect(),
            body: Box::new(body),
            span: Span::default(),
        }
    }

    /// Number of syntax nodes, used to bound generators and searches.
    pub fn size(&self) -> usize {
        match self {
            Process::Nil => 1,
            Process::Output(o) => 1 + o.cont.size(),
            Process::Input(i) | Process::RepInput(i) => 1 + i.cont.size(),
            Process::Par(a, b) => 1 + a.size() + b.size(),
            Process::Nu { body, .. } | Process::LetNd { body, .. } => 1 + body.size(),
            Process::If { then, els, .. } => 1 + then.size() + els.size(),
        }
    }

    /// All integer literals in the process.
    pub fn constants(&self) -> Vec<i64> {
        fn go(p: &Process, out: &mut Vec<i64>) {
            match p {
                Process::Nil => {}
                Process::Output(o) => {
                    o.ints.iter().for_each(|e| e.constants(out));
                    go(&o.cont, out)
                }
                Process::Input(i) | Process::RepInput(i) => go(&i.cont, out),
                Process::Par(a, b) => {
                    go(a, out);
                    go(b, out)
                }
                Process::Nu { body, .. } | Process::LetNd { body, .. } => go(body, out),
                Process::If { cond, then, els, .. } => {
                    cond.constants(out);
                    go(then, out);
                    go(els, out)
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_process(self))
    }
}

/// Reserved words of the concrete syntax.
pub const RESERVED: &[&str] = &[
    "new", "in", "if", "then", "else", "let", "true", "false", "and", "or", "not",
];

pub fn is_reserved(s: &str) -> bool {
    RESERVED.contains(&s)
}
