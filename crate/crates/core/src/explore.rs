//! Depth-first exploration of finite-branching state graphs with cycle
//! detection, shared by the process and sequential-program interpreters.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

/// Outcome of exploring every state reachable from an initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exploration<S> {
    /// The reachable graph is finite and acyclic.
    Terminates { states: usize },
    /// A reachable state can reach itself. `stem` leads from the initial
    /// state to the first state of `cycle`; the last state of `cycle` steps
    /// back to its first.
    Diverges { stem: Vec<S>, cycle: Vec<S> },
    /// More than the allowed number of distinct states were discovered.
    BudgetExhausted { states: usize },
}

impl<S> Exploration<S> {
    pub fn terminates(&self) -> bool {
        matches!(self, Exploration::Terminates { .. })
    }

    pub fn diverges(&self) -> bool {
        matches!(self, Exploration::Diverges { .. })
    }

    pub fn map<T>(self, f: impl Fn(S) -> T) -> Exploration<T> {
        match self {
            Exploration::Terminates { states } => Exploration::Terminates { states },
            Exploration::BudgetExhausted { states } => Exploration::BudgetExhausted { states },
            Exploration::Diverges { stem, cycle } => Exploration::Diverges {
                stem: stem.into_iter().map(&f).collect(),
                cycle: cycle.into_iter().map(&f).collect(),
            },
        }
    }
}

impl<S: fmt::Display> fmt::Display for Exploration<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exploration::Terminates { states } => write!(f, "TERMINATES ({states} states)"),
            Exploration::BudgetExhausted { states } => write!(f, "BUDGET EXHAUSTED ({states} states)"),
            Exploration::Diverges { stem, cycle } => {
                writeln!(f, "DIVERGES")?;
                for s in stem {
                    writeln!(f, "  {s}")?;
                }
                for (i, s) in cycle.iter().enumerate() {
                    writeln!(f, "{} {s}", if i == 0 { "=>" } else { " |" })?;
                }
                write!(f, "  (back to =>)")
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Color {
    Gray,
    Black,
}

/// Explores the graph generated by `succ` from `init`, visiting at most
/// `budget` distinct states.
pub fn explore<S, F>(init: S, mut succ: F, budget: usize) -> Exploration<S>
where
    S: Clone + Eq + Hash,
    F: FnMut(&S) -> Vec<S>,
{
    let mut ids: HashMap<S, usize> = HashMap::new();
    let mut states: Vec<S> = Vec::new();
    let mut color: Vec<Color> = Vec::new();
    // Frames: (state id, successor ids, next index).
    let mut stack: Vec<(usize, Vec<S>, usize)> = Vec::new();

    ids.insert(init.clone(), 0);
    states.push(init.clone());
    color.push(Color::Gray);
    let first = succ(&init);
    stack.push((0, first, 0));

    while let Some(frame) = stack.last_mut() {
        if frame.2 >= frame.1.len() {
            color[frame.0] = Color::Black;
            stack.pop();
            continue;
        }
        let next = frame.1[frame.2].clone();
        frame.2 += 1;
        match ids.get(&next) {
            Some(&id) => {
                if color[id] == Color::Gray {
                    let pos = stack.iter().position(|f| f.0 == id).expect("gray state on stack");
                    let stem = stack[..pos].iter().map(|f| states[f.0].clone()).collect();
                    let cycle = stack[pos..].iter().map(|f| states[f.0].clone()).collect();
                    return Exploration::Diverges { stem, cycle };
                }
            }
            None => {
                if states.len() >= budget {
                    return Exploration::BudgetExhausted { states: states.len() };
                }
                let id = states.len();
                ids.insert(next.clone(), id);
                states.push(next.clone());
                color.push(Color::Gray);
                let children = succ(&next);
                stack.push((id, children, 0));
            }
        }
    }
    Exploration::Terminates { states: states.len() }
}


/// Finite set of integers used to instantiate nondeterministic choices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NondetDomain {
    values: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid nondeterminism domain `{0}`: expected `a..b` with a <= b, or a comma-separated list")]
pub struct DomainError(pub String);

impl NondetDomain {
    /// Builds a domain from arbitrary values; duplicates are removed.
    /// Returns `None` for an empty set.
    pub fn new(values: impl IntoIterator<Item = i64>) -> Option<Self> {
        let mut values: Vec<i64> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        (!values.is_empty()).then_some(NondetDomain { values })
    }

    /// The inclusive range `lo..=hi`.
    pub fn range(lo: i64, hi: i64) -> Option<Self> {
        Self::new(lo..=hi)
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Every assignment of domain values to `k` variables, in lexicographic
    /// order.
    pub fn tuples(&self, k: usize) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|t| {
                    self.values.iter().map(move |&v| {
                        let mut t = t.clone();
                        t.push(v);
                        t
                    })
                })
                .collect();
        }
        out
    }

    pub fn union(&self, extra: impl IntoIterator<Item = i64>) -> Self {
        Self::new(self.values.iter().copied().chain(extra)).expect("non-empty")
    }
}

impl std::str::FromStr for NondetDomain {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || DomainError(s.to_string());
        if let Some((a, b)) = s.split_once("..") {
            let lo: i64 = a.trim().parse().map_err(|_| err())?;
            let hi: i64 = b.trim().parse().map_err(|_| err())?;
            return Self::range(lo, hi).ok_or_else(err);
        }
        let vals = s
            .split(',')
            .map(|v| v.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err())?;
        Self::new(vals).ok_or_else(err)
    }
}

impl fmt::Display for NondetDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.values;
        if v.len() > 1 && v.windows(2).all(|w| w[1] == w[0] + 1) {
            write!(f, "{}..{}", v[0], v[v.len() - 1])
        } else {
            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}
