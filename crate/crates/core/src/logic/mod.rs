//! Quantifier-free formulas of linear integer arithmetic with predicate
//! variables, and a validity checker for them.

pub mod lia;

use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::expr::{ExprParser, PExpr};
use crate::syntax::lexer::Cursor;
use crate::syntax::{Name, Op, ParseError, SimpleExpr};

pub use lia::{is_sat, is_valid, SatResult};

/// An unknown predicate, printed `P<id>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredVar(pub usize);

impl fmt::Display for PredVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredApp {
    pub pred: PredVar,
    pub args: Vec<SimpleExpr>,
}

impl fmt::Display for PredApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn to_op(self) -> Op {
        match self {
            CmpOp::Lt => Op::Lt,
            CmpOp::Le => Op::Le,
            CmpOp::Eq => Op::Eq,
            CmpOp::Ne => Op::Ne,
            CmpOp::Gt => Op::Gt,
            CmpOp::Ge => Op::Ge,
        }
    }

    pub fn from_op(op: Op) -> Option<CmpOp> {
        Some(match op {
            Op::Lt => CmpOp::Lt,
            Op::Le => CmpOp::Le,
            Op::Eq => CmpOp::Eq,
            Op::Ne => CmpOp::Ne,
            Op::Gt => CmpOp::Gt,
            Op::Ge => CmpOp::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Cmp(CmpOp, SimpleExpr, SimpleExpr),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Pred(PredApp),
}

impl Formula {
    pub fn cmp(op: CmpOp, a: SimpleExpr, b: SimpleExpr) -> Formula {
        Formula::Cmp(op, a, b)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::And(fs.into_iter().collect())
    }

    pub fn or(fs: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::Or(fs.into_iter().collect())
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([Formula::not(a), b])
    }

    pub fn pred(p: PredVar, args: Vec<SimpleExpr>) -> Formula {
        Formula::Pred(PredApp { pred: p, args })
    }

    /// Reads an integer expression as a condition: non-zero means true.
    pub fn from_expr(e: &SimpleExpr) -> Formula {
        match e {
            SimpleExpr::IntLit(0) => Formula::False,
            SimpleExpr::IntLit(_) => Formula::True,
            SimpleExpr::Op(op, args) => {
                if let (Some(c), [a, b]) = (CmpOp::from_op(*op), args.as_slice()) {
                    return Formula::Cmp(c, a.clone(), b.clone());
                }
                match (op, args.as_slice()) {
                    (Op::And, [a, b]) => Formula::And(vec![Formula::from_expr(a), Formula::from_expr(b)]),
                    (Op::Or, [a, b]) => Formula::Or(vec![Formula::from_expr(a), Formula::from_expr(b)]),
                    (Op::Not, [a]) => Formula::not(Formula::from_expr(a)),
                    _ => Formula::Cmp(CmpOp::Ne, e.clone(), SimpleExpr::IntLit(0)),
                }
            }
            SimpleExpr::Var(_) => Formula::Cmp(CmpOp::Ne, e.clone(), SimpleExpr::IntLit(0)),
        }
    }

    /// Equalities `a_i = b_i` for all positions.
    pub fn eqs(a: &[SimpleExpr], b: &[SimpleExpr]) -> Formula {
        Formula::And(a.iter().zip(b).map(|(x, y)| Formula::Cmp(CmpOp::Eq, x.clone(), y.clone())).collect())
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Integer variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.visit_exprs(&mut |e| {
            for v in e.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        });
        out
    }

    fn visit_exprs(&self, f: &mut dyn FnMut(&SimpleExpr)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Cmp(_, a, b) => {
                f(a);
                f(b)
            }
            Formula::Not(g) => g.visit_exprs(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit_exprs(f)),
            Formula::Pred(p) => p.args.iter().for_each(|a| f(a)),
        }
    }

    /// Predicate applications in order of occurrence.
    pub fn preds(&self) -> Vec<&PredApp> {
        let mut out = Vec::new();
        self.collect_preds(&mut out);
        out
    }

    fn collect_preds<'a>(&'a self, out: &mut Vec<&'a PredApp>) {
        match self {
            Formula::Pred(p) => out.push(p),
            Formula::Not(g) => g.collect_preds(out),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.collect_preds(out)),
            _ => {}
        }
    }

    pub fn has_preds(&self) -> bool {
        !self.preds().is_empty()
    }

    pub fn constants(&self, out: &mut Vec<i64>) {
        self.visit_exprs(&mut |e| e.constants(out));
    }

    /// Applies `f` to every expression (comparison operands and predicate
    /// arguments).
    pub fn map_exprs(&self, f: &dyn Fn(&SimpleExpr) -> SimpleExpr) -> Formula {
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Cmp(op, a, b) => Formula::Cmp(*op, f(a), f(b)),
            Formula::Not(g) => Formula::not(g.map_exprs(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.map_exprs(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.map_exprs(f)).collect()),
            Formula::Pred(p) => Formula::Pred(PredApp { pred: p.pred, args: p.args.iter().map(f).collect() }),
        }
    }

    pub fn subst(&self, map: &BTreeMap<Name, SimpleExpr>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        self.map_exprs(&|e| e.subst_vars(map))
    }

    pub fn rename(&self, map: &BTreeMap<Name, Name>) -> Formula {
        self.map_exprs(&|e| e.rename_vars(map))
    }

    /// Replaces predicate applications using `f`; applications mapped to
    /// `None` stay.
    pub fn replace_preds(&self, f: &dyn Fn(&PredApp) -> Option<Formula>) -> Formula {
        match self {
            Formula::Pred(p) => f(p).unwrap_or_else(|| self.clone()),
            Formula::Not(g) => Formula::not(g.replace_preds(f)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.replace_preds(f)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.replace_preds(f)).collect()),
            _ => self.clone(),
        }
    }

    /// Evaluates under an integer environment; `None` when a variable is
    /// unbound or a predicate application occurs.
    pub fn eval(&self, env: &BTreeMap<Name, i64>) -> Option<bool> {
        use crate::pisem::eval_simple_expr;
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Cmp(op, a, b) => {
                op.holds(eval_simple_expr(a, env).ok()?, eval_simple_expr(b, env).ok()?)
            }
            Formula::Not(g) => !g.eval(env)?,
            Formula::And(gs) => {
                let mut r = true;
                for g in gs {
                    r &= g.eval(env)?;
                }
                r
            }
            Formula::Or(gs) => {
                let mut r = false;
                for g in gs {
                    r |= g.eval(env)?;
                }
                r
            }
            Formula::Pred(_) => return None,
        })
    }

    /// Constant folding and flattening of connectives.
    pub fn simplify(&self) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Cmp(op, a, b) => {
                let (a, b) = (fold_expr(a), fold_expr(b));
                match (&a, &b) {
                    (SimpleExpr::IntLit(x), SimpleExpr::IntLit(y)) => Formula::bool(op.holds(*x, *y)),
                    _ if a == b => Formula::bool(matches!(op, CmpOp::Le | CmpOp::Ge | CmpOp::Eq)),
                    _ => Formula::Cmp(*op, a, b),
                }
            }
            Formula::Not(g) => match g.simplify() {
                Formula::True => Formula::False,
                Formula::False => Formula::True,
                Formula::Not(h) => *h,
                Formula::Cmp(op, a, b) => Formula::Cmp(op.negate(), a, b),
                h => Formula::not(h),
            },
            Formula::And(gs) => {
                let mut out: Vec<Formula> = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::True => {}
                        Formula::False => return Formula::False,
                        Formula::And(hs) => {
                            for h in hs {
                                if !out.contains(&h) {
                                    out.push(h)
                                }
                            }
                        }
                        h => {
                            if !out.contains(&h) {
                                out.push(h)
                            }
                        }
                    }
                }
                match out.len() {
                    0 => Formula::True,
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(gs) => {
                let mut out: Vec<Formula> = Vec::new();
                for g in gs {
                    match g.simplify() {
                        Formula::False => {}
                        Formula::True => return Formula::True,
                        Formula::Or(hs) => {
                            for h in hs {
                                if !out.contains(&h) {
                                    out.push(h)
                                }
                            }
                        }
                        h => {
                            if !out.contains(&h) {
                                out.push(h)
                            }
                        }
                    }
                }
                match out.len() {
                    0 => Formula::False,
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
            Formula::Pred(p) => Formula::Pred(PredApp { pred: p.pred, args: p.args.iter().map(fold_expr).collect() }),
        }
    }

    pub fn bool(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    /// The conjuncts of a conjunction (the formula itself otherwise).
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::True => vec![],
            Formula::And(gs) => gs.iter().flat_map(|g| g.conjuncts()).collect(),
            other => vec![other.clone()],
        }
    }
}

/// Folds constant subexpressions.
pub fn fold_expr(e: &SimpleExpr) -> SimpleExpr {
    match e {
        SimpleExpr::Op(op, args) => {
            let args: Vec<SimpleExpr> = args.iter().map(fold_expr).collect();
            let lits: Option<Vec<i64>> =
                args.iter().map(|a| if let SimpleExpr::IntLit(i) = a { Some(*i) } else { None }).collect();
            if let Some(v) = lits.and_then(|l| crate::pisem::apply_op(*op, &l)) {
                return SimpleExpr::IntLit(v);
            }
            match (op, args.as_slice()) {
                (Op::Add, [a, SimpleExpr::IntLit(0)]) | (Op::Add, [SimpleExpr::IntLit(0), a]) => a.clone(),
                (Op::Sub, [a, SimpleExpr::IntLit(0)]) => a.clone(),
                (Op::Mul, [a, SimpleExpr::IntLit(1)]) | (Op::Mul, [SimpleExpr::IntLit(1), a]) => a.clone(),
                _ => SimpleExpr::Op(*op, args),
            }
        }
        _ => e.clone(),
    }
}

fn level(f: &Formula) -> u8 {
    match f {
        Formula::Or(gs) if gs.len() > 1 => 1,
        Formula::And(gs) if gs.len() > 1 => 2,
        Formula::Not(_) => 3,
        Formula::Cmp(..) => 4,
        _ => 9,
    }
}

fn write_formula(out: &mut String, f: &Formula, ctx: u8) {
    let l = level(f);
    let paren = l < ctx;
    if paren {
        out.push('(');
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Cmp(op, a, b) => {
            let e = SimpleExpr::Op(op.to_op(), vec![a.clone(), b.clone()]);
            out.push_str(&e.to_string());
        }
        Formula::Not(g) => {
            out.push_str("not ");
            write_formula(out, g, 3);
        }
        Formula::And(gs) | Formula::Or(gs) => {
            let is_and = matches!(f, Formula::And(_));
            match gs.len() {
                0 => out.push_str(if is_and { "true" } else { "false" }),
                1 => write_formula(out, &gs[0], ctx),
                _ => {
                    for (i, g) in gs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(if is_and { " and " } else { " or " });
                        }
                        write_formula(out, g, l + 1);
                    }
                }
            }
        }
        Formula::Pred(p) => out.push_str(&p.to_string()),
    }
    if paren {
        out.push(')');
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_formula(&mut s, self, 0);
        f.write_str(&s)
    }
}

fn pred_var_of(name: &str) -> Option<PredVar> {
    let digits = name.strip_prefix('P')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(PredVar)
}

/// Converts a parsed expression in condition position into a formula.
pub fn pexpr_to_formula(e: PExpr) -> Result<Formula, String> {
    Ok(match e {
        PExpr::Bool(b) => Formula::bool(b),
        PExpr::App(f, args) => {
            let pred = pred_var_of(&f).ok_or_else(|| format!("unknown predicate `{f}`"))?;
            let args = args.into_iter().map(PExpr::into_simple).collect::<Result<_, _>>()?;
            Formula::Pred(PredApp { pred, args })
        }
        PExpr::Op(Op::And, args) => {
            Formula::And(args.into_iter().map(pexpr_to_formula).collect::<Result<_, _>>()?)
        }
        PExpr::Op(Op::Or, args) => {
            Formula::Or(args.into_iter().map(pexpr_to_formula).collect::<Result<_, _>>()?)
        }
        PExpr::Op(Op::Not, mut args) => Formula::not(pexpr_to_formula(args.remove(0))?),
        PExpr::Op(op, args) if CmpOp::from_op(op).is_some() => {
            let mut it = args.into_iter();
            let a = it.next().unwrap().into_simple()?;
            let b = it.next().unwrap().into_simple()?;
            Formula::Cmp(CmpOp::from_op(op).unwrap(), a, b)
        }
        other => {
            let e = other.into_simple()?;
            match e {
                SimpleExpr::IntLit(i) => Formula::bool(i != 0),
                e => Formula::Cmp(CmpOp::Ne, e, SimpleExpr::IntLit(0)),
            }
        }
    })
}

pub fn parse_formula_at(cur: &mut Cursor) -> Result<Formula, ParseError> {
    let (line, col) = cur.pos();
    let e = ExprParser::new(cur, true).parse()?;
    pexpr_to_formula(e).map_err(|found| ParseError { line, col, expected: vec!["formula".into()], found })
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut cur = Cursor::new(src)?;
    let f = parse_formula_at(&mut cur)?;
    cur.expect_eof()?;
    Ok(f)
}
