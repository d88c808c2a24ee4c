//! Satisfiability of quantifier-free linear integer arithmetic.
//!
//! Formulas are put in negation normal form and split into cubes; each cube
//! is decided by equality elimination followed by Fourier–Motzkin with
//! integer tightening. `Unsat` answers are always exact; `Sat` is returned
//! only when an integer model has been reconstructed, otherwise `Unknown`.
//! Non-linear subterms are treated as opaque integers and predicate
//! applications as opaque propositions, which keeps `Unsat` sound.

use std::collections::{BTreeMap, HashMap};

use super::{CmpOp, Formula};
use crate::syntax::{Op, SimpleExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatResult {
    Sat,
    Unsat,
    Unknown,
}

/// Decides satisfiability of `f`.
pub fn is_sat(f: &Formula) -> SatResult {
    let mut atoms = Atoms::default();
    let Some(nnf) = to_nnf(f, false, &mut atoms) else {
        return SatResult::Unknown;
    };
    let mut root = vec![nnf];
    root.extend(atoms.side.drain(..));
    let top = Nnf::And(root);
    let mut budget = LEAF_BUDGET;
    search(vec![&top], Cube::default(), &mut budget)
}

/// True when `f` holds for every integer assignment. Never answers true
/// for a formula that has a counterexample.
pub fn is_valid(f: &Formula) -> bool {
    is_sat(&Formula::not(f.clone())) == SatResult::Unsat
}

/// True when `a` entails `b`.
pub fn implies(a: &Formula, b: &Formula) -> bool {
    is_valid(&Formula::implies(a.clone(), b.clone()))
}

/// True when `a` and `b` are equivalent.
pub fn equivalent(a: &Formula, b: &Formula) -> bool {
    implies(a, b) && implies(b, a)
}

const LEAF_BUDGET: usize = 20_000;
const MAX_CONSTRAINTS: usize = 4_000;

/// `Σ coeffs[v]·v + konst`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Lin {
    coeffs: BTreeMap<usize, i128>,
    konst: i128,
}

impl Lin {
    fn constant(k: i128) -> Lin {
        Lin { coeffs: BTreeMap::new(), konst: k }
    }

    fn var(v: usize) -> Lin {
        Lin { coeffs: BTreeMap::from([(v, 1)]), konst: 0 }
    }

    fn is_const(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn scale(&self, k: i128) -> Option<Lin> {
        let mut out = Lin { coeffs: BTreeMap::new(), konst: self.konst.checked_mul(k)? };
        if k != 0 {
            for (&v, &c) in &self.coeffs {
                out.coeffs.insert(v, c.checked_mul(k)?);
            }
        }
        Some(out)
    }

    fn add(&self, other: &Lin) -> Option<Lin> {
        let mut out = self.clone();
        out.konst = out.konst.checked_add(other.konst)?;
        for (&v, &c) in &other.coeffs {
            let e = out.coeffs.entry(v).or_insert(0);
            *e = e.checked_add(c)?;
            if *e == 0 {
                out.coeffs.remove(&v);
            }
        }
        Some(out)
    }

    fn sub(&self, other: &Lin) -> Option<Lin> {
        self.add(&other.scale(-1)?)
    }

    fn plus(&self, k: i128) -> Option<Lin> {
        self.add(&Lin::constant(k))
    }

    fn gcd(&self) -> i128 {
        self.coeffs.values().fold(0, |g, &c| gcd(g, c.abs()))
    }

    /// Replaces `v` by `def`.
    fn subst(&self, v: usize, def: &Lin) -> Option<Lin> {
        match self.coeffs.get(&v) {
            None => Some(self.clone()),
            Some(&c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(&v);
                rest.add(&def.scale(c)?)
            }
        }
    }

    fn eval(&self, model: &HashMap<usize, i128>) -> Option<i128> {
        let mut acc = self.konst;
        for (v, c) in &self.coeffs {
            acc = acc.checked_add(c.checked_mul(*model.get(v)?)?)?;
        }
        Some(acc)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone)]
enum Nnf {
    True,
    False,
    /// `lin <= 0`
    Le(Lin),
    /// `lin = 0`
    Eq(Lin),
    /// An opaque proposition with its polarity.
    Prop(usize, bool),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

#[derive(Default)]
struct Atoms {
    ids: HashMap<String, usize>,
    next: usize,
    props: HashMap<String, usize>,
    side: Vec<Nnf>,
}

impl Atoms {
    fn var(&mut self, key: String) -> (usize, bool) {
        if let Some(&id) = self.ids.get(&key) {
            return (id, false);
        }
        let id = self.next;
        self.next += 1;
        self.ids.insert(key, id);
        (id, true)
    }

    fn prop(&mut self, key: String) -> usize {
        let n = self.props.len();
        *self.props.entry(key).or_insert(n)
    }
}

fn linearize(e: &SimpleExpr, atoms: &mut Atoms) -> Option<Lin> {
    match e {
        SimpleExpr::Var(x) => Some(Lin::var(atoms.var(format!("v:{x}")).0)),
        SimpleExpr::IntLit(i) => Some(Lin::constant(*i as i128)),
        SimpleExpr::Op(op, args) => match (op, args.as_slice()) {
            (Op::Add, [a, b]) => linearize(a, atoms)?.add(&linearize(b, atoms)?),
            (Op::Sub, [a, b]) => linearize(a, atoms)?.sub(&linearize(b, atoms)?),
            (Op::Neg, [a]) => linearize(a, atoms)?.scale(-1),
            (Op::Mul, [a, b]) => {
                let (la, lb) = (linearize(a, atoms)?, linearize(b, atoms)?);
                if la.is_const() {
                    lb.scale(la.konst)
                } else if lb.is_const() {
                    la.scale(lb.konst)
                } else {
                    Some(Lin::var(atoms.var(format!("o:{e}")).0))
                }
            }
            _ => {
                // A boolean-valued subterm: an opaque integer in {0, 1}.
                let (id, fresh) = atoms.var(format!("o:{e}"));
                let v = Lin::var(id);
                if fresh {
                    atoms.side.push(Nnf::Le(v.scale(-1)?));
                    atoms.side.push(Nnf::Le(v.plus(-1)?));
                }
                Some(v)
            }
        },
    }
}

fn to_nnf(f: &Formula, neg: bool, atoms: &mut Atoms) -> Option<Nnf> {
    Some(match f {
        Formula::True => if neg { Nnf::False } else { Nnf::True },
        Formula::False => if neg { Nnf::True } else { Nnf::False },
        Formula::Not(g) => to_nnf(g, !neg, atoms)?,
        Formula::And(gs) | Formula::Or(gs) => {
            let parts = gs.iter().map(|g| to_nnf(g, neg, atoms)).collect::<Option<Vec<_>>>()?;
            if matches!(f, Formula::And(_)) != neg {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
        Formula::Pred(p) => Nnf::Prop(atoms.prop(p.to_string()), !neg),
        Formula::Cmp(op, a, b) => {
            let op = if neg { op.negate() } else { *op };
            let e = linearize(a, atoms)?.sub(&linearize(b, atoms)?)?;
            match op {
                CmpOp::Lt => Nnf::Le(e.plus(1)?),
                CmpOp::Le => Nnf::Le(e),
                CmpOp::Gt => Nnf::Le(e.scale(-1)?.plus(1)?),
                CmpOp::Ge => Nnf::Le(e.scale(-1)?),
                CmpOp::Eq => Nnf::Eq(e),
                CmpOp::Ne => Nnf::Or(vec![Nnf::Le(e.plus(1)?), Nnf::Le(e.scale(-1)?.plus(1)?)]),
            }
        }
    })
}

#[derive(Clone, Default)]
struct Cube {
    les: Vec<Lin>,
    eqs: Vec<Lin>,
    props: HashMap<usize, bool>,
}

fn search(mut todo: Vec<&Nnf>, mut cube: Cube, budget: &mut usize) -> SatResult {
    while let Some(n) = todo.pop() {
        match n {
            Nnf::True => {}
            Nnf::False => return SatResult::Unsat,
            Nnf::Le(l) => cube.les.push(l.clone()),
            Nnf::Eq(l) => cube.eqs.push(l.clone()),
            Nnf::Prop(p, pol) => {
                if cube.props.insert(*p, *pol) == Some(!*pol) {
                    return SatResult::Unsat;
                }
            }
            Nnf::And(xs) => todo.extend(xs.iter()),
            Nnf::Or(xs) => {
                if decide_cube(&cube) == SatResult::Unsat {
                    return SatResult::Unsat;
                }
                let mut unknown = false;
                for x in xs {
                    if *budget == 0 {
                        return SatResult::Unknown;
                    }
                    let mut t = todo.clone();
                    t.push(x);
                    match search(t, cube.clone(), budget) {
                        SatResult::Sat => return SatResult::Sat,
                        SatResult::Unknown => unknown = true,
                        SatResult::Unsat => {}
                    }
                }
                return if unknown { SatResult::Unknown } else { SatResult::Unsat };
            }
        }
    }
    *budget = budget.saturating_sub(1);
    decide_cube(&cube)
}

/// Normalizes `lin <= 0` by the gcd of its coefficients, rounding the
/// constant up. Returns `None` for a trivially true constraint and
/// `Some(Err)` for a trivially false one.
fn tighten(l: Lin) -> Option<Result<Lin, ()>> {
    if l.is_const() {
        return if l.konst <= 0 { None } else { Some(Err(())) };
    }
    let g = l.gcd();
    if g <= 1 {
        return Some(Ok(l));
    }
    let coeffs = l.coeffs.iter().map(|(&v, &c)| (v, c / g)).collect();
    let konst = -((-l.konst).div_euclid(g));
    Some(Ok(Lin { coeffs, konst }))
}

enum Step {
    /// `v = def` (def does not mention v)
    Define(usize, Lin),
    /// Constraints over the remaining variables before eliminating `v`.
    Eliminate(usize, Vec<Lin>),
}

fn decide_cube(cube: &Cube) -> SatResult {
    match solve(cube) {
        Ok(true) => SatResult::Sat,
        Ok(false) => SatResult::Unsat,
        Err(()) => SatResult::Unknown,
    }
}

/// `Ok(true)`: integer model found; `Ok(false)`: infeasible;
/// `Err`: overflow, blow-up, or no model reconstructed.
fn solve(cube: &Cube) -> Result<bool, ()> {
    let mut eqs = cube.eqs.clone();
    let mut les = cube.les.clone();
    let mut steps: Vec<Step> = Vec::new();

    // Equalities: exact elimination through unit coefficients.
    while let Some(e) = eqs.pop() {
        if e.is_const() {
            if e.konst != 0 {
                return Ok(false);
            }
            continue;
        }
        let g = e.gcd();
        if e.konst % g != 0 {
            return Ok(false);
        }
        let e = Lin { coeffs: e.coeffs.iter().map(|(&v, &c)| (v, c / g)).collect(), konst: e.konst / g };
        match e.coeffs.iter().find(|(_, c)| c.abs() == 1).map(|(&v, &c)| (v, c)) {
            Some((v, c)) => {
                // c·v + rest = 0  =>  v = -c·rest
                let mut rest = e.clone();
                rest.coeffs.remove(&v);
                let def = rest.scale(-c).ok_or(())?;
                for x in eqs.iter_mut().chain(les.iter_mut()) {
                    *x = x.subst(v, &def).ok_or(())?;
                }
                for s in steps.iter_mut() {
                    if let Step::Define(_, d) = s {
                        *d = d.subst(v, &def).ok_or(())?;
                    }
                }
                steps.push(Step::Define(v, def));
            }
            None => {
                les.push(e.clone());
                les.push(e.scale(-1).ok_or(())?);
            }
        }
    }

    let mut current = Vec::new();
    for l in les {
        match tighten(l) {
            None => {}
            Some(Err(())) => return Ok(false),
            Some(Ok(l)) => current.push(l),
        }
    }

    loop {
        let mut vars: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for l in &current {
            for (&v, &c) in &l.coeffs {
                let e = vars.entry(v).or_default();
                if c > 0 {
                    e.0 += 1
                } else {
                    e.1 += 1
                }
            }
        }
        let Some((&v, _)) = vars.iter().min_by_key(|(_, (p, n))| p * n) else {
            break;
        };
        steps.push(Step::Eliminate(v, current.clone()));
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for l in current {
            match l.coeffs.get(&v).copied() {
                Some(c) if c > 0 => pos.push((c, l)),
                Some(c) => neg.push((-c, l)),
                None => rest.push(l),
            }
        }
        for (a, lp) in &pos {
            for (b, ln) in &neg {
                // a·v + rp <= 0 and -b·v + rn <= 0  =>  b·rp + a·rn <= 0
                let combined = lp.scale(*b).ok_or(())?.add(&ln.scale(*a).ok_or(())?).ok_or(())?;
                match tighten(combined) {
                    None => {}
                    Some(Err(())) => return Ok(false),
                    Some(Ok(l)) => rest.push(l),
                }
            }
        }
        if rest.len() > MAX_CONSTRAINTS {
            return Err(());
        }
        current = rest;
    }

    // Reconstruct an integer model by back-substitution.
    let mut model: HashMap<usize, i128> = HashMap::new();
    for step in steps.iter().rev() {
        match step {
            Step::Eliminate(v, cons) => {
                let (mut lo, mut hi) = (i128::MIN, i128::MAX);
                for l in cons {
                    let Some(&c) = l.coeffs.get(v) else { continue };
                    let mut rest = l.clone();
                    rest.coeffs.remove(v);
                    let r = rest.eval(&model).ok_or(())?;
                    // c·v + r <= 0
                    if c > 0 {
                        hi = hi.min((-r).div_euclid(c));
                    } else {
                        lo = lo.max(-((-r).div_euclid(-c)));
                    }
                }
                let val = if lo <= 0 && 0 <= hi {
                    0
                } else if lo != i128::MIN {
                    lo
                } else {
                    hi
                };
                if val < lo || val > hi {
                    return Err(());
                }
                model.insert(*v, val);
            }
            Step::Define(..) => {}
        }
    }
    for step in &steps {
        if let Step::Define(_, def) = step {
            for u in def.coeffs.keys() {
                model.entry(*u).or_insert(0);
            }
        }
    }
    for step in steps.iter().rev() {
        if let Step::Define(v, def) = step {
            let val = def.eval(&model).ok_or(())?;
            model.insert(*v, val);
        }
    }
    let ok = cube.eqs.iter().all(|e| e.eval(&model).map_or(false, |x| x == 0))
        && cube.les.iter().all(|l| l.eval(&model).map_or(false, |x| x <= 0));
    if ok {
        Ok(true)
    } else {
        Err(())
    }
}
