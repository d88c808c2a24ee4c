//! C rendering of sequential programs, for external termination provers.
//!
//! Every function becomes a `void` C function; nondeterminism reads
//! `__VERIFIER_nondet_int()`. A function with several definitions picks
//! one with a `switch` on a nondeterministic value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::logic::{CmpOp, Formula};
use crate::seq::{SeqDef, SeqExpr, SeqProgram};
use crate::syntax::{Name, Op, SimpleExpr};

#[derive(Debug, Clone, Copy, Default)]
pub struct CEmitOptions {
    /// Print every call as `F(args)` on its own line and stop after this
    /// many calls. Used to compare runs against the interpreter.
    pub trace_calls: Option<usize>,
}

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
    "float", "for", "goto", "if", "inline", "int", "long", "main", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
];

fn ident(x: &str) -> String {
    let clean: String = x.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if C_KEYWORDS.contains(&clean.as_str()) || clean.starts_with("__") || clean.starts_with(|c: char| c.is_ascii_digit()) {
        format!("v_{clean}")
    } else {
        clean
    }
}

fn expr(e: &SimpleExpr) -> String {
    match e {
        SimpleExpr::Var(x) => ident(x),
        SimpleExpr::IntLit(k) if *k < 0 => format!("({k})"),
        SimpleExpr::IntLit(k) => k.to_string(),
        SimpleExpr::Op(Op::Neg, args) => format!("(-{})", expr(&args[0])),
        SimpleExpr::Op(Op::Not, args) => format!("(!{})", expr(&args[0])),
        SimpleExpr::Op(op, args) => {
            let sym = match op {
                Op::Eq => "==",
                Op::And => "&&",
                Op::Or => "||",
                other => other.symbol(),
            };
            format!("({} {sym} {})", expr(&args[0]), expr(&args[1]))
        }
    }
}

fn formula(f: &Formula) -> String {
    let join = |fs: &[Formula], sym: &str, unit: &str| {
        if fs.is_empty() {
            unit.to_string()
        } else {
            format!("({})", fs.iter().map(formula).collect::<Vec<_>>().join(sym))
        }
    };
    match f {
        Formula::True => "1".into(),
        Formula::False => "0".into(),
        Formula::Cmp(op, a, b) => {
            let sym = match op {
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Eq => "==",
                CmpOp::Ne => "!=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            format!("({} {sym} {})", expr(a), expr(b))
        }
        Formula::Not(g) => format!("(!{})", formula(g)),
        Formula::And(fs) => join(fs, " && ", "1"),
        Formula::Or(fs) => join(fs, " || ", "0"),
        // Unsolved predicates carry no information.
        Formula::Pred(p) => format!("1 /* {p} */"),
    }
}

struct Emitter<'a> {
    out: String,
    ret: &'a str,
}

impl Emitter<'_> {
    fn line(&mut self, depth: usize, text: &str) {
        writeln!(self.out, "{}{text}", "    ".repeat(depth)).expect("writing to a string");
    }

    /// Emits `e` in tail position: every path ends in a return.
    fn stmt(&mut self, e: &SeqExpr, depth: usize) {
        match e {
            SeqExpr::Skip => self.line(depth, self.ret),
            SeqExpr::Call(f, args) => {
                let args: Vec<String> = args.iter().map(expr).collect();
                self.line(depth, &format!("{}({});", ident(f), args.join(", ")));
                self.line(depth, self.ret);
            }
            SeqExpr::Choice(a, b) => {
                self.line(depth, "if (__VERIFIER_nondet_int()) {");
                self.stmt(a, depth + 1);
                self.line(depth, "} else {");
                self.stmt(b, depth + 1);
                self.line(depth, "}");
            }
            SeqExpr::If(c, a, b) => {
                self.line(depth, &format!("if ({}) {{", expr(c)));
                self.stmt(a, depth + 1);
                self.line(depth, "} else {");
                self.stmt(b, depth + 1);
                self.line(depth, "}");
            }
            SeqExpr::LetNd(xs, body) => {
                self.line(depth, "{");
                for x in xs {
                    self.line(depth + 1, &format!("int {} = __VERIFIER_nondet_int();", ident(x)));
                }
                self.stmt(body, depth + 1);
                self.line(depth, "}");
            }
            SeqExpr::Assume(phi, body) => {
                self.line(depth, &format!("if (!{}) {}", formula(phi), self.ret));
                self.stmt(body, depth);
            }
        }
    }
}

fn signature(fname: &Name, params: &[Name]) -> String {
    let ps: Vec<String> = params.iter().map(|p| format!("int {}", ident(p))).collect();
    let ps = if ps.is_empty() { "void".to_string() } else { ps.join(", ") };
    format!("void {}({ps})", ident(fname))
}

/// The program as a C11 translation unit.
pub fn emit_c(prog: &SeqProgram) -> String {
    emit_c_with(prog, &CEmitOptions::default())
}

pub fn emit_c_with(prog: &SeqProgram, opts: &CEmitOptions) -> String {
    let mut groups: BTreeMap<Name, Vec<&SeqDef>> = BTreeMap::new();
    for d in &prog.defs {
        groups.entry(d.fname.clone()).or_default().push(d);
    }
    let mut em = Emitter { out: String::new(), ret: "return;" };
    if opts.trace_calls.is_some() {
        em.line(0, "#include <stdio.h>");
        em.line(0, "#include <stdlib.h>");
    }
    em.line(0, "extern int __VERIFIER_nondet_int(void);");
    if let Some(limit) = opts.trace_calls {
        em.line(0, &format!("static long trace_calls = 0;\nstatic void trace_tick(void) {{ if (++trace_calls > {limit}) exit(0); }}"));
    }
    em.line(0, "");
    for (f, defs) in &groups {
        em.line(0, &format!("{};", signature(f, &defs[0].params)));
    }
    for (f, defs) in &groups {
        let params = &defs[0].params;
        em.line(0, "");
        em.line(0, &format!("{} {{", signature(f, params)));
        if opts.trace_calls.is_some() {
            let fmt: Vec<&str> = params.iter().map(|_| "%d").collect();
            let args: String = params.iter().map(|p| format!(", {}", ident(p))).collect();
            em.line(1, &format!("trace_tick(); printf(\"{f}({})\\n\"{args});", fmt.join(", ")));
        }
        if defs.len() == 1 {
            em.stmt(&defs[0].body, 1);
        } else {
            em.line(1, "switch (__VERIFIER_nondet_int()) {");
            for (i, d) in defs.iter().enumerate() {
                let label = if i + 1 == defs.len() { "default:".to_string() } else { format!("case {i}:") };
                em.line(1, &format!("{label} {{"));
                // Later definitions may name their parameters differently.
                if d.params != *params {
                    for (i, first) in params.iter().enumerate() {
                        em.line(2, &format!("int arg_{i}_ = {};", ident(first)));
                    }
                    for (i, own) in d.params.iter().enumerate() {
                        em.line(2, &format!("int {} = arg_{i}_;", ident(own)));
                    }
                }
                em.stmt(&d.body, 2);
                em.line(1, "}");
            }
            em.line(1, "}");
        }
        em.line(0, "}");
    }
    em.line(0, "");
    em.line(0, "int main(void) {");
    em.ret = "return 0;";
    em.stmt(&prog.main, 1);
    em.line(0, "}");
    em.out
}
