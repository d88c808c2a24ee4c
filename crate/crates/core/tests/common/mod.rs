#![allow(dead_code)]

use piterm::logic::{CmpOp, Formula};
use piterm::seq::{SeqDef, SeqExpr, SeqProgram};
use piterm::syntax::{name, Name, Op, SimpleExpr};
use rand::rngs::StdRng;
use rand::Rng;

pub fn bench_dir() -> String {
    format!("{}/benchmarks", env!("CARGO_MANIFEST_DIR"))
}

pub fn bench(file: &str) -> String {
    std::fs::read_to_string(format!("{}/{file}", bench_dir())).unwrap()
}

/// All corpus files, sorted.
pub fn corpus() -> Vec<String> {
    let mut files: Vec<String> = std::fs::read_dir(bench_dir())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|f| f.ends_with(".pi"))
        .collect();
    files.sort();
    files
}

fn random_atom(rng: &mut StdRng, scope: &[Name]) -> SimpleExpr {
    let k = SimpleExpr::IntLit(rng.gen_range(-2..=2));
    if scope.is_empty() || rng.gen_bool(0.3) {
        return k;
    }
    let v = SimpleExpr::Var(scope[rng.gen_range(0..scope.len())].clone());
    match rng.gen_range(0..3) {
        0 => v,
        1 => SimpleExpr::bin(Op::Add, v, k),
        _ => SimpleExpr::bin(Op::Sub, v, k),
    }
}

fn random_cond(rng: &mut StdRng, scope: &[Name]) -> SimpleExpr {
    let op = [Op::Lt, Op::Le, Op::Eq, Op::Gt][rng.gen_range(0..4)];
    SimpleExpr::bin(op, random_atom(rng, scope), random_atom(rng, scope))
}

fn random_expr(rng: &mut StdRng, sigs: &[(Name, usize)], scope: &mut Vec<Name>, depth: usize) -> SeqExpr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    let pick = if leaf { rng.gen_range(0..2) } else { rng.gen_range(0..6) };
    match pick {
        0 => SeqExpr::Skip,
        1 => {
            let (f, n) = &sigs[rng.gen_range(0..sigs.len())];
            SeqExpr::Call(f.clone(), (0..*n).map(|_| random_atom(rng, scope)).collect())
        }
        2 => SeqExpr::choice(random_expr(rng, sigs, scope, depth - 1), random_expr(rng, sigs, scope, depth - 1)),
        3 => {
            let c = random_cond(rng, scope);
            SeqExpr::if_(c, random_expr(rng, sigs, scope, depth - 1), random_expr(rng, sigs, scope, depth - 1))
        }
        4 => {
            let x = name(&format!("v{}", scope.len()));
            scope.push(x.clone());
            let body = random_expr(rng, sigs, scope, depth - 1);
            scope.pop();
            SeqExpr::LetNd(vec![x], Box::new(body))
        }
        _ => {
            let a = random_atom(rng, scope);
            let b = random_atom(rng, scope);
            let f = Formula::Cmp([CmpOp::Lt, CmpOp::Ge, CmpOp::Ne][rng.gen_range(0..3)], a, b);
            SeqExpr::assume(f, random_expr(rng, sigs, scope, depth - 1))
        }
    }
}

/// A random closed program with at most three functions of at most two
/// parameters and constants in [-2, 2].
pub fn random_program(rng: &mut StdRng) -> SeqProgram {
    let nf = rng.gen_range(1..=3);
    let sigs: Vec<(Name, usize)> = (0..nf).map(|i| (name(&format!("F{i}")), rng.gen_range(0..=2))).collect();
    let defs = sigs
        .iter()
        .map(|(f, n)| {
            let mut scope: Vec<Name> = (0..*n).map(|i| name(&format!("p{i}"))).collect();
            let params = scope.clone();
            SeqDef { fname: f.clone(), params, body: random_expr(rng, &sigs, &mut scope, 3) }
        })
        .collect();
    let main = random_expr(rng, &sigs, &mut Vec::new(), 2);
    SeqProgram { defs, main }
}

/// Whether the call `to` is the next call after `from` under some standard
/// reduction sequence; `from = None` starts at the main expression.
pub fn reaches_call(
    p: &SeqProgram,
    from: Option<&piterm::termcheck::CallState>,
    to: &piterm::termcheck::CallState,
    dom: &piterm::explore::NondetDomain,
) -> bool {
    use piterm::seq::sem::standard_successors;
    use std::collections::{BTreeMap, BTreeSet, VecDeque};
    let start = match from {
        None => BTreeSet::from([p.main.clone()]),
        Some(s) => {
            let call = SeqExpr::Call(s.fname.clone(), s.args.iter().map(|a| SimpleExpr::IntLit(*a)).collect());
            standard_successors(&p.defs, &call, dom)
        }
    };
    let mut seen = BTreeSet::new();
    let mut todo: VecDeque<SeqExpr> = start.into_iter().collect();
    while let Some(e) = todo.pop_front() {
        if let SeqExpr::Call(f, args) = &e {
            let vals: Option<Vec<i64>> =
                args.iter().map(|a| piterm::pisem::eval_simple_expr(a, &BTreeMap::new()).ok()).collect();
            if *f == to.fname && vals.as_ref() == Some(&to.args) {
                return true;
            }
            continue;
        }
        if seen.insert(e.clone()) {
            todo.extend(standard_successors(&p.defs, &e, dom));
        }
    }
    false
}
