//! Reading solver output: s-expressions and `define-fun` models.

use std::collections::BTreeMap;
use std::fmt;

use crate::logic::{fold_expr, CmpOp, Formula};
use crate::syntax::{name, Name, Op, SimpleExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a) => f.write_str(a),
            Sexp::List(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Sexp {
    fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }
}

/// Parses a sequence of s-expressions. `;` starts a comment and `|...|`
/// quotes a symbol.
pub fn parse_sexps(src: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        break;
                    }
                }
            }
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().filter(|_| !stack.is_empty()).ok_or("unbalanced `)`")?;
                stack.last_mut().expect("outer level").push(Sexp::List(done));
            }
            '|' => {
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(d) => s.push(d),
                        None => return Err("unterminated `|`".into()),
                    }
                }
                stack.last_mut().expect("a level").push(Sexp::Atom(s));
            }
            '"' => {
                let mut s = String::from("\"");
                for d in chars.by_ref() {
                    s.push(d);
                    if d == '"' {
                        break;
                    }
                }
                stack.last_mut().expect("a level").push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || "();|\"".contains(d) {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().expect("a level").push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("top level"))
}

/// A model term: boolean or integer.
#[derive(Debug, Clone)]
enum Term {
    Bool(Formula),
    Int(SimpleExpr),
}

type Env = BTreeMap<String, Term>;

fn as_bool(t: Term) -> Result<Formula, String> {
    match t {
        Term::Bool(f) => Ok(f),
        Term::Int(e) => Err(format!("expected a boolean, found integer term {e}")),
    }
}

fn as_int(t: Term) -> Result<SimpleExpr, String> {
    match t {
        Term::Int(e) => Ok(e),
        Term::Bool(f) => Err(format!("expected an integer, found formula {f}")),
    }
}

fn fold_int(op: Op, args: Vec<SimpleExpr>) -> SimpleExpr {
    let mut it = args.into_iter();
    let first = it.next().expect("at least one operand");
    it.fold(first, |acc, x| SimpleExpr::bin(op, acc, x))
}

fn term(s: &Sexp, env: &Env) -> Result<Term, String> {
    match s {
        Sexp::Atom(a) => {
            if let Some(t) = env.get(a) {
                return Ok(t.clone());
            }
            match a.as_str() {
                "true" => Ok(Term::Bool(Formula::True)),
                "false" => Ok(Term::Bool(Formula::False)),
                _ => a
                    .parse::<i64>()
                    .map(|k| Term::Int(SimpleExpr::IntLit(k)))
                    .map_err(|_| format!("unknown symbol `{a}`")),
            }
        }
        Sexp::List(items) => {
            let (head, args) = items.split_first().ok_or("empty application")?;
            let op = head.atom().ok_or("application of a compound term")?;
            if op == "!" {
                // An annotated term; the attributes do not matter.
                return term(args.first().ok_or("empty annotation")?, env);
            }
            if op == "exists" {
                let [Sexp::List(binds), body] = args else {
                    return Err("malformed exists".into());
                };
                let mut inner = env.clone();
                let mut bound = Vec::new();
                for b in binds {
                    let Sexp::List(pair) = b else { return Err("malformed binder".into()) };
                    let Some(Sexp::Atom(x)) = pair.first() else { return Err("malformed binder".into()) };
                    inner.insert(x.clone(), Term::Int(SimpleExpr::Var(name(x))));
                    bound.push(name(x));
                }
                let mut f = as_bool(term(body, &inner)?)?;
                for x in bound.iter().rev() {
                    f = eliminate(x, &f).ok_or_else(|| format!("cannot eliminate quantified `{x}`"))?;
                }
                return Ok(Term::Bool(f));
            }
            if op == "let" {
                let [Sexp::List(binds), body] = args else {
                    return Err("malformed let".into());
                };
                let mut inner = env.clone();
                for b in binds {
                    let Sexp::List(pair) = b else { return Err("malformed let binding".into()) };
                    let [Sexp::Atom(x), v] = pair.as_slice() else { return Err("malformed let binding".into()) };
                    inner.insert(x.clone(), term(v, env)?);
                }
                return term(body, &inner);
            }
            let ts: Vec<Term> = args.iter().map(|a| term(a, env)).collect::<Result<_, _>>()?;
            let bools = || ts.iter().cloned().map(as_bool).collect::<Result<Vec<_>, _>>();
            let ints = || ts.iter().cloned().map(as_int).collect::<Result<Vec<_>, _>>();
            let cmp = |c: CmpOp| -> Result<Term, String> {
                let xs = ints()?;
                if xs.len() < 2 {
                    return Err(format!("`{op}` needs two operands"));
                }
                Ok(Term::Bool(Formula::and(xs.windows(2).map(|w| Formula::Cmp(c, w[0].clone(), w[1].clone())))))
            };
            match op {
                "and" => Ok(Term::Bool(Formula::and(bools()?))),
                "or" => Ok(Term::Bool(Formula::or(bools()?))),
                "not" => match bools()?.as_slice() {
                    [x] => Ok(Term::Bool(Formula::not(x.clone()))),
                    _ => Err("`not` takes one operand".into()),
                },
                "=>" => {
                    let mut xs = bools()?;
                    let last = xs.pop().ok_or("`=>` needs operands")?;
                    Ok(Term::Bool(Formula::implies(Formula::and(xs), last)))
                }
                "=" if matches!(ts.first(), Some(Term::Bool(_))) => {
                    let xs = bools()?;
                    let [a, b] = xs.as_slice() else { return Err("boolean `=` takes two operands".into()) };
                    Ok(Term::Bool(Formula::or([
                        Formula::and([a.clone(), b.clone()]),
                        Formula::and([Formula::not(a.clone()), Formula::not(b.clone())]),
                    ])))
                }
                "=" => cmp(CmpOp::Eq),
                "distinct" => cmp(CmpOp::Ne),
                "<" => cmp(CmpOp::Lt),
                "<=" => cmp(CmpOp::Le),
                ">" => cmp(CmpOp::Gt),
                ">=" => cmp(CmpOp::Ge),
                "ite" => match ts.as_slice() {
                    [c, Term::Bool(a), Term::Bool(b)] => {
                        let c = as_bool(c.clone())?;
                        Ok(Term::Bool(Formula::or([
                            Formula::and([c.clone(), a.clone()]),
                            Formula::and([Formula::not(c), b.clone()]),
                        ])))
                    }
                    _ => Err("integer-valued `ite` is not supported".into()),
                },
                "+" => Ok(Term::Int(fold_int(Op::Add, ints()?))),
                "*" => Ok(Term::Int(fold_int(Op::Mul, ints()?))),
                "-" => {
                    let xs = ints()?;
                    match xs.as_slice() {
                        [] => Err("`-` needs operands".into()),
                        [SimpleExpr::IntLit(k)] => Ok(Term::Int(SimpleExpr::IntLit(-k))),
                        [x] => Ok(Term::Int(SimpleExpr::op(Op::Neg, vec![x.clone()]))),
                        _ => Ok(Term::Int(fold_int(Op::Sub, xs))),
                    }
                }
                other => Err(format!("unsupported operator `{other}`")),
            }
        }
    }
}

/// The coefficient of `x` in `e`, when `e` is linear in `x`.
fn coefficient(x: &Name, e: &SimpleExpr) -> Option<i64> {
    match e {
        SimpleExpr::Var(y) => Some(i64::from(y == x)),
        SimpleExpr::IntLit(_) => Some(0),
        SimpleExpr::Op(op, args) => match (op, args.as_slice()) {
            (Op::Add, [a, b]) => Some(coefficient(x, a)? + coefficient(x, b)?),
            (Op::Sub, [a, b]) => Some(coefficient(x, a)? - coefficient(x, b)?),
            (Op::Neg, [a]) => Some(-coefficient(x, a)?),
            (Op::Mul, [a, b]) => match (fold_expr(a), fold_expr(b)) {
                (SimpleExpr::IntLit(k), _) => Some(k * coefficient(x, b)?),
                (_, SimpleExpr::IntLit(k)) => Some(k * coefficient(x, a)?),
                _ if !a.mentions(x) && !b.mentions(x) => Some(0),
                _ => None,
            },
            _ if e.mentions(x) => None,
            _ => Some(0),
        },
    }
}

/// `x` as determined by `a = b`, when `x` occurs with coefficient ±1.
fn solve_for(x: &Name, a: &SimpleExpr, b: &SimpleExpr) -> Option<SimpleExpr> {
    let d = SimpleExpr::bin(Op::Sub, a.clone(), b.clone());
    let c = coefficient(x, &d)?;
    let map: BTreeMap<Name, SimpleExpr> = [(x.clone(), SimpleExpr::IntLit(0))].into_iter().collect();
    let rest = fold_expr(&d.subst_vars(&map));
    match c {
        1 => Some(fold_expr(&SimpleExpr::op(Op::Neg, vec![rest]))),
        -1 => Some(rest),
        _ => None,
    }
}

/// `∃x. f` without the quantifier, by distributing over disjunctions and
/// substituting an equality that fixes `x`.
fn eliminate(x: &Name, f: &Formula) -> Option<Formula> {
    if !f.vars().contains(x) {
        return Some(f.clone());
    }
    match f {
        Formula::Or(fs) => Some(Formula::or(fs.iter().map(|g| eliminate(x, g)).collect::<Option<Vec<_>>>()?)),
        _ => {
            let mut conj = f.conjuncts();
            let (at, def) = conj.iter().enumerate().find_map(|(i, c)| match c {
                Formula::Cmp(CmpOp::Eq, a, b) => solve_for(x, a, b).map(|d| (i, d)),
                _ => None,
            })?;
            // The defining equality itself becomes trivially true.
            conj.remove(at);
            let map: BTreeMap<Name, SimpleExpr> = [(x.clone(), def)].into_iter().collect();
            Some(Formula::and(conj).subst(&map).simplify())
        }
    }
}

/// One `(define-fun NAME ((p Int) ...) Bool BODY)` entry.
#[derive(Debug, Clone)]
pub struct ModelEntry {
    pub name: String,
    pub body: Formula,
    pub arity: usize,
}

/// Reads the definitions of a model, renaming the i-th parameter of every
/// definition to `param(i)`.
pub fn read_model(model: &Sexp, param: &dyn Fn(&str, usize) -> Option<Name>) -> Result<Vec<ModelEntry>, String> {
    let Sexp::List(items) = model else {
        return Err("model is not a list".into());
    };
    let items = match items.first().and_then(Sexp::atom) {
        Some("model") => &items[1..],
        _ => &items[..],
    };
    let mut out = Vec::new();
    for it in items {
        let Sexp::List(parts) = it else { return Err(format!("unexpected model item {it}")) };
        if parts.first().and_then(Sexp::atom) != Some("define-fun") {
            continue;
        }
        let [_, Sexp::Atom(fname), Sexp::List(params), _sort, body] = parts.as_slice() else {
            return Err(format!("malformed define-fun {it}"));
        };
        let mut env = Env::new();
        for (i, p) in params.iter().enumerate() {
            let Sexp::List(pv) = p else { return Err(format!("malformed parameter {p}")) };
            let Some(Sexp::Atom(pname)) = pv.first() else { return Err(format!("malformed parameter {p}")) };
            let target = param(fname, i).unwrap_or_else(|| name(&format!("_a{i}")));
            env.insert(pname.clone(), Term::Int(SimpleExpr::Var(target)));
        }
        let body = as_bool(term(body, &env)?)?.simplify();
        out.push(ModelEntry { name: fname.clone(), body, arity: params.len() });
    }
    Ok(out)
}
