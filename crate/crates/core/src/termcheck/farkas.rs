//! Ranking function synthesis with unknown coefficients. By Farkas' lemma,
//! `A v + b <= 0  ⇒  t v + d <= 0` holds when some `λ >= 0` has
//! `λ A = t` and `λ b >= d`. With `t` and `d` linear in the unknown
//! coefficients this is a linear problem, solved by an external SMT solver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::rank::LinearRank;
use super::{Transition, TransitionSystem};
use crate::chc::{parse_sexps, run_smt_command, Sexp, SolverKind, SolverSpec};
use crate::logic::{is_sat, CmpOp, Formula, SatResult};
use crate::syntax::{Name, Op, SimpleExpr};

/// Cap on the number of disjuncts of a guard.
const MAX_DISJUNCTS: usize = 32;

/// `Σ coeffs[v] * v + constant` over integers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Lin {
    coeffs: BTreeMap<Name, i64>,
    constant: i64,
}

impl Lin {
    fn scale(&self, k: i64) -> Lin {
        Lin { coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(), constant: self.constant * k }
    }

    fn add(&self, o: &Lin) -> Lin {
        let mut out = self.clone();
        for (v, c) in &o.coeffs {
            *out.coeffs.entry(v.clone()).or_insert(0) += c;
        }
        out.constant += o.constant;
        out
    }

    fn sub(&self, o: &Lin) -> Lin {
        self.add(&o.scale(-1))
    }

    fn of(e: &SimpleExpr) -> Option<Lin> {
        match e {
            SimpleExpr::Var(x) => Some(Lin { coeffs: [(x.clone(), 1)].into_iter().collect(), constant: 0 }),
            SimpleExpr::IntLit(k) => Some(Lin { coeffs: BTreeMap::new(), constant: *k }),
            SimpleExpr::Op(op, args) => {
                let ls: Vec<Lin> = args.iter().map(Lin::of).collect::<Option<_>>()?;
                match (op, ls.as_slice()) {
                    (Op::Add, [a, b]) => Some(a.add(b)),
                    (Op::Sub, [a, b]) => Some(a.sub(b)),
                    (Op::Neg, [a]) => Some(a.scale(-1)),
                    (Op::Mul, [a, b]) if a.coeffs.is_empty() => Some(b.scale(a.constant)),
                    (Op::Mul, [a, b]) if b.coeffs.is_empty() => Some(a.scale(b.constant)),
                    _ => None,
                }
            }
        }
    }
}

/// A conjunction of `lin <= 0` atoms.
type Cube = Vec<Lin>;

fn atom(op: CmpOp, a: &SimpleExpr, b: &SimpleExpr) -> Option<Vec<Cube>> {
    let d = Lin::of(a)?.sub(&Lin::of(b)?);
    let one = Lin { coeffs: BTreeMap::new(), constant: 1 };
    Some(match op {
        CmpOp::Le => vec![vec![d]],
        CmpOp::Lt => vec![vec![d.add(&one)]],
        CmpOp::Ge => vec![vec![d.scale(-1)]],
        CmpOp::Gt => vec![vec![d.scale(-1).add(&one)]],
        CmpOp::Eq => vec![vec![d.clone(), d.scale(-1)]],
        CmpOp::Ne => vec![vec![d.add(&one)], vec![d.scale(-1).add(&one)]],
    })
}

/// Disjunctive normal form of a guard, or `None` when it is not linear or
/// too large.
fn dnf(f: &Formula, neg: bool) -> Option<Vec<Cube>> {
    let product = |parts: Vec<Vec<Cube>>| -> Option<Vec<Cube>> {
        let mut acc: Vec<Cube> = vec![vec![]];
        for p in parts {
            let mut next = Vec::new();
            for a in &acc {
                for b in &p {
                    let mut c = a.clone();
                    c.extend(b.iter().cloned());
                    next.push(c);
                }
            }
            if next.len() > MAX_DISJUNCTS {
                return None;
            }
            acc = next;
        }
        Some(acc)
    };
    let union = |parts: Vec<Vec<Cube>>| -> Option<Vec<Cube>> {
        let all: Vec<Cube> = parts.into_iter().flatten().collect();
        (all.len() <= MAX_DISJUNCTS).then_some(all)
    };
    match (f, neg) {
        (Formula::True, false) | (Formula::False, true) => Some(vec![vec![]]),
        (Formula::True, true) | (Formula::False, false) => Some(vec![]),
        (Formula::Cmp(op, a, b), n) => atom(if n { op.negate() } else { *op }, a, b),
        (Formula::Not(g), n) => dnf(g, !n),
        (Formula::And(fs), false) | (Formula::Or(fs), true) => {
            product(fs.iter().map(|g| dnf(g, neg)).collect::<Option<_>>()?)
        }
        (Formula::Or(fs), false) | (Formula::And(fs), true) => {
            union(fs.iter().map(|g| dnf(g, neg)).collect::<Option<_>>()?)
        }
        (Formula::Pred(_), _) => None,
    }
}

fn cube_formula(c: &Cube) -> Formula {
    let expr = |l: &Lin| {
        let mut e = SimpleExpr::IntLit(l.constant);
        for (v, k) in &l.coeffs {
            e = SimpleExpr::bin(Op::Add, e, SimpleExpr::bin(Op::Mul, SimpleExpr::IntLit(*k), SimpleExpr::Var(v.clone())));
        }
        e
    };
    Formula::and(c.iter().map(|l| Formula::cmp(CmpOp::Le, expr(l), SimpleExpr::IntLit(0))))
}

/// A linear term over the unknowns, as SMT text.
#[derive(Default)]
struct Sym {
    terms: Vec<String>,
}

impl Sym {
    fn add(&mut self, k: i64, unknown: &str) {
        if k != 0 {
            self.terms.push(format!("(* {} (to_real {unknown}))", num(k)));
        }
    }

    fn konst(&mut self, k: i64) {
        if k != 0 {
            self.terms.push(num(k));
        }
    }

    fn text(&self) -> String {
        match self.terms.len() {
            0 => "0.0".into(),
            1 => self.terms[0].clone(),
            _ => format!("(+ {})", self.terms.join(" ")),
        }
    }
}

fn num(k: i64) -> String {
    if k < 0 {
        format!("(- {}.0)", k.unsigned_abs())
    } else {
        format!("{k}.0")
    }
}

struct Encoder {
    decls: Vec<String>,
    asserts: Vec<String>,
    lambdas: usize,
}

impl Encoder {
    /// `cube ⇒ target(v) <= 0` where `target` gives, for every variable and
    /// for the constant (key `None`), a linear term over the unknowns.
    fn implication(&mut self, cube: &Cube, target: &BTreeMap<Option<Name>, Sym>) {
        let vars: BTreeSet<Option<Name>> =
            cube.iter().flat_map(|l| l.coeffs.keys().cloned().map(Some)).chain(target.keys().cloned()).collect();
        let mut lams = Vec::new();
        for _ in cube {
            let l = format!("lam{}", self.lambdas);
            self.lambdas += 1;
            self.decls.push(format!("(declare-const {l} Real)"));
            self.asserts.push(format!("(>= {l} 0.0)"));
            lams.push(l);
        }
        for v in vars {
            let mut combo = Vec::new();
            for (l, lin) in lams.iter().zip(cube) {
                let k = match &v {
                    Some(x) => lin.coeffs.get(x).copied().unwrap_or(0),
                    None => lin.constant,
                };
                if k != 0 {
                    combo.push(format!("(* {} {l})", num(k)));
                }
            }
            let combo = match combo.len() {
                0 => "0.0".to_string(),
                1 => combo.pop().expect("one term"),
                _ => format!("(+ {})", combo.join(" ")),
            };
            let t = target.get(&v).map(Sym::text).unwrap_or_else(|| "0.0".into());
            match v {
                Some(_) => self.asserts.push(format!("(= {combo} {t})")),
                None => self.asserts.push(format!("(>= {combo} {t})")),
            }
        }
    }
}

/// `f(params) - f(args)` or `-f(params)` as a symbolic linear form. The
/// unknown `c{i}` is the coefficient of position `i` and `c0` the offset.
fn rank_diff(params: &[Name], args: Option<&[Lin]>, k: usize, negate: bool) -> BTreeMap<Option<Name>, Sym> {
    let mut out: BTreeMap<Option<Name>, Sym> = BTreeMap::new();
    let sign = if negate { -1 } else { 1 };
    for (i, p) in params.iter().enumerate().take(k) {
        out.entry(Some(p.clone())).or_default().add(sign, &format!("c{}", i + 1));
    }
    match args {
        Some(args) => {
            for (i, a) in args.iter().enumerate().take(k) {
                for (v, c) in &a.coeffs {
                    out.entry(Some(v.clone())).or_default().add(-c * sign, &format!("c{}", i + 1));
                }
                out.entry(None).or_default().add(-a.constant * sign, &format!("c{}", i + 1));
            }
        }
        None => out.entry(None).or_default().add(sign, "c0"),
    }
    out
}

/// One ranking function for all of `edges`, with arbitrary integer
/// coefficients.
pub(super) fn single_ranking(ts: &TransitionSystem, edges: &[usize], k: usize, smt: &SolverSpec) -> Option<LinearRank> {
    let SolverKind::Command(cmd) = &smt.kind else {
        return None;
    };
    let mut enc = Encoder { decls: Vec::new(), asserts: Vec::new(), lambdas: 0 };
    for i in 0..=k {
        enc.decls.push(format!("(declare-const c{i} Int)"));
    }
    for &i in edges {
        let t: &Transition = &ts.edges[i];
        let params = &ts.params[&t.src];
        let args: Vec<Lin> = t.args.iter().map(Lin::of).collect::<Option<_>>()?;
        for cube in dnf(&t.guard, false)? {
            if is_sat(&cube_formula(&cube)) == SatResult::Unsat {
                continue;
            }
            // f(args) - f(params) + 1 <= 0
            let mut dec = rank_diff(params, Some(&args), k, true);
            dec.entry(None).or_default().konst(1);
            enc.implication(&cube, &dec);
            // -f(params) <= 0
            enc.implication(&cube, &rank_diff(params, None, k, true));
        }
    }
    let mut text = String::new();
    for d in &enc.decls {
        writeln!(text, "{d}").expect("writing to a string");
    }
    for a in &enc.asserts {
        writeln!(text, "(assert {a})").expect("writing to a string");
    }
    text.push_str("(check-sat)\n(get-value (");
    text.push_str(&(0..=k).map(|i| format!("c{i}")).collect::<Vec<_>>().join(" "));
    text.push_str("))\n");
    let out = run_smt_command(cmd, &text, smt.timeout).ok()?;
    let sexps = parse_sexps(&out).ok()?;
    if sexps.first() != Some(&Sexp::Atom("sat".into())) {
        return None;
    }
    let Some(Sexp::List(vals)) = sexps.get(1) else { return None };
    let mut coeffs = vec![0; k + 1];
    for v in vals {
        let Sexp::List(pair) = v else { return None };
        let [Sexp::Atom(n), val] = pair.as_slice() else { return None };
        let i: usize = n.strip_prefix('c')?.parse().ok()?;
        let value = match val {
            Sexp::Atom(a) => a.parse().ok()?,
            Sexp::List(neg) => match neg.as_slice() {
                [Sexp::Atom(m), Sexp::Atom(a)] if m == "-" => -a.parse::<i64>().ok()?,
                _ => return None,
            },
        };
        *coeffs.get_mut(i)? = value;
    }
    let constant = coeffs.remove(0);
    Some(LinearRank { coeffs, constant })
}
