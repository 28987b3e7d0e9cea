//! Brute-force ground truth for small populations.
//!
//! Every reachable size-based state of a procedure class gets a slot, and
//! every assignment of a group size to every slot is evaluated exactly by
//! weighting branches with their probabilities. The minimum over all
//! assignments is the optimum of the class. Nothing here shares code with the
//! engines; branch probabilities come straight from `q^k` by repeated
//! multiplication.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::Prevalence;

/// Largest population the enumerators accept.
pub const MAX_ORACLE_N: usize = 7;

/// Largest number of policy assignments one search may evaluate.
pub const ENUMERATION_LIMIT: u128 = 100_000_000;

/// Largest population for the unit-labelled search.
pub const MAX_LABELED_N: usize = 4;

/// Outcome of an exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    /// Minimum expected number of tests over the class.
    pub value: f64,
    /// Number of complete policy assignments evaluated.
    pub assignments: u128,
    /// Number of reachable states in the class's state graph.
    pub states: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Node {
    /// Binomial pool of n (both classes).
    Pool(usize),
    /// Defective set of m next to a pool of n (nested class).
    Nested(usize, usize),
    /// Isolated defective set of m (restricted class).
    Isolated(usize),
}

/// An action with successor nodes replaced by their post-order index.
type Resolved = (f64, Vec<(f64, usize)>);

/// One way to act in a state: a fixed cost plus probability-weighted successors.
#[derive(Debug, Clone)]
struct Action {
    cost: f64,
    terms: Vec<(f64, Node)>,
}

fn powq(q: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * q)
}

/// P(subtest of x from a defective set of m is negative) = (q^x - q^m) / (1 - q^m).
fn neg_prob(q: f64, m: usize, x: usize) -> f64 {
    (powq(q, x) - powq(q, m)) / (1.0 - powq(q, m))
}

fn pos_prob(q: f64, m: usize, x: usize) -> f64 {
    (1.0 - powq(q, x)) / (1.0 - powq(q, m))
}

fn nested_actions(q: f64, node: Node) -> Vec<Action> {
    match node {
        Node::Pool(0) => vec![Action {
            cost: 0.0,
            terms: vec![],
        }],
        Node::Pool(n) => (1..=n)
            .map(|x| Action {
                cost: 1.0,
                terms: vec![
                    (powq(q, x), Node::Pool(n - x)),
                    (1.0 - powq(q, x), Node::Nested(x, n - x)),
                ],
            })
            .collect(),
        Node::Nested(1, n) => vec![Action {
            cost: 0.0,
            terms: vec![(1.0, Node::Pool(n))],
        }],
        Node::Nested(m, n) => (1..m)
            .map(|x| Action {
                cost: 1.0,
                terms: vec![
                    (neg_prob(q, m, x), Node::Nested(m - x, n)),
                    // remainder m - x rejoins the pool
                    (pos_prob(q, m, x), Node::Nested(x, m - x + n)),
                ],
            })
            .collect(),
        Node::Isolated(_) => unreachable!("not part of the nested class"),
    }
}

fn restricted_actions(q: f64, node: Node) -> Vec<Action> {
    match node {
        Node::Pool(0) | Node::Isolated(1) => vec![Action {
            cost: 0.0,
            terms: vec![],
        }],
        // Positive: the tested group is an isolated defective set and the rest
        // of the pool is still a pool, whichever way the test went.
        Node::Pool(n) => (1..=n)
            .map(|x| Action {
                cost: 1.0,
                terms: vec![
                    (1.0, Node::Pool(n - x)),
                    (1.0 - powq(q, x), Node::Isolated(x)),
                ],
            })
            .collect(),
        Node::Isolated(m) => (1..m)
            .map(|x| {
                let pos = pos_prob(q, m, x);
                Action {
                    cost: 1.0,
                    terms: vec![
                        (neg_prob(q, m, x), Node::Isolated(m - x)),
                        (pos, Node::Isolated(x)),
                        // the remainder becomes its own pool
                        (pos, Node::Pool(m - x)),
                    ],
                }
            })
            .collect(),
        Node::Nested(..) => unreachable!("not part of the restricted class"),
    }
}

/// Minimum expected tests over all size-based policies of the class whose
/// actions are produced by `actions`, rooted at a pool of `n`.
fn exhaustive(n: usize, actions: impl Fn(Node) -> Vec<Action>) -> Result<OracleReport> {
    if n > MAX_ORACLE_N {
        return Err(Error::EnumerationBudget {
            n,
            assignments: u128::MAX,
            limit: ENUMERATION_LIMIT,
        });
    }

    // Post-order over the state graph: successors precede the states using them.
    let mut order: Vec<Node> = Vec::new();
    let mut index: BTreeMap<Node, usize> = BTreeMap::new();
    let mut acts: Vec<Vec<Action>> = Vec::new();
    let mut stack = vec![(Node::Pool(n), false)];
    let mut seen: BTreeMap<Node, ()> = BTreeMap::new();
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            if let alloc::collections::btree_map::Entry::Vacant(slot) = index.entry(node) {
                slot.insert(order.len());
                order.push(node);
                acts.push(actions(node));
            }
            continue;
        }
        if seen.insert(node, ()).is_some() {
            continue;
        }
        stack.push((node, true));
        for a in actions(node) {
            for &(_, child) in &a.terms {
                if !seen.contains_key(&child) {
                    stack.push((child, false));
                }
            }
        }
    }

    let assignments = acts
        .iter()
        .try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128))
        .unwrap_or(u128::MAX);
    if assignments > ENUMERATION_LIMIT {
        return Err(Error::EnumerationBudget {
            n,
            assignments,
            limit: ENUMERATION_LIMIT,
        });
    }

    // Resolve successor indices once.
    let resolved: Vec<Vec<Resolved>> = acts
        .iter()
        .map(|list| {
            list.iter()
                .map(|a| {
                    let terms = a.terms.iter().map(|&(w, c)| (w, index[&c])).collect();
                    (a.cost, terms)
                })
                .collect()
        })
        .collect();

    let states = order.len();
    let mut digit = vec![0usize; states];
    let mut value = vec![0.0f64; states];
    let eval = |value: &mut [f64], digit: &[usize], from: usize| {
        for i in from..states {
            let (cost, terms) = &resolved[i][digit[i]];
            let mut v = *cost;
            for &(w, c) in terms {
                v += w * value[c];
            }
            value[i] = v;
        }
    };
    eval(&mut value, &digit, 0);
    let root = states - 1;
    let mut best = value[root];
    let mut visited: u128 = 1;

    // Odometer with the fastest digit on the root side, so each step only
    // re-evaluates the states after the lowest digit that changed.
    loop {
        let mut i = states;
        loop {
            if i == 0 {
                debug_assert_eq!(visited, assignments);
                return Ok(OracleReport {
                    value: best,
                    assignments: visited,
                    states,
                });
            }
            i -= 1;
            digit[i] += 1;
            if digit[i] < resolved[i].len() {
                break;
            }
            digit[i] = 0;
        }
        eval(&mut value, &digit, i);
        visited += 1;
        if value[root] < best {
            best = value[root];
        }
    }
}

/// Optimum over all size-based nested policies for a pool of `n <= 7`.
///
/// The nested state graph grows quickly; `n = 7` already exceeds
/// [`ENUMERATION_LIMIT`] and is rejected with a budget error.
pub fn exhaustive_min_r1(prevalence: Prevalence, n: usize) -> Result<OracleReport> {
    let q = prevalence.q();
    exhaustive(n, |node| nested_actions(q, node))
}

/// Optimum over all size-based restricted policies for a pool of `n <= 7`.
pub fn exhaustive_min_r3(prevalence: Prevalence, n: usize) -> Result<OracleReport> {
    let q = prevalence.q();
    exhaustive(n, |node| restricted_actions(q, node))
}

/// Optimum over nested policies acting on labelled units, for `n <= 4`.
///
/// Any subset may be tested from the pool and any proper subset from the
/// defective set, rather than only "the first x". Used to check that the
/// size-based abstraction loses nothing.
pub fn labeled_min_r1(prevalence: Prevalence, n: usize) -> Result<f64> {
    if n > MAX_LABELED_N {
        return Err(Error::EnumerationBudget {
            n,
            assignments: u128::MAX,
            limit: ENUMERATION_LIMIT,
        });
    }
    let q = prevalence.q();
    let mut memo = BTreeMap::new();
    Ok(labeled_value(q, 0, (1u32 << n) - 1, &mut memo))
}

fn labeled_value(q: f64, defective: u32, pool: u32, memo: &mut BTreeMap<(u32, u32), f64>) -> f64 {
    if defective == 0 && pool == 0 {
        return 0.0;
    }
    if defective.count_ones() == 1 {
        return labeled_value(q, 0, pool, memo);
    }
    if let Some(&v) = memo.get(&(defective, pool)) {
        return v;
    }
    let mut best = f64::INFINITY;
    if defective == 0 {
        for s in subsets(pool) {
            let k = s.count_ones() as usize;
            let v = 1.0
                + powq(q, k) * labeled_value(q, 0, pool & !s, memo)
                + (1.0 - powq(q, k)) * labeled_value(q, s, pool & !s, memo);
            best = best.min(v);
        }
    } else {
        let m = defective.count_ones() as usize;
        for s in subsets(defective).filter(|&s| s != defective) {
            let x = s.count_ones() as usize;
            let rest = defective & !s;
            let v = 1.0
                + neg_prob(q, m, x) * labeled_value(q, rest, pool, memo)
                + pos_prob(q, m, x) * labeled_value(q, s, pool | rest, memo);
            best = best.min(v);
        }
    }
    memo.insert((defective, pool), best);
    best
}

/// Nonempty subsets of `mask`.
fn subsets(mask: u32) -> impl Iterator<Item = u32> {
    let mut s = mask;
    let mut done = mask == 0;
    core::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = s;
        s = (s - 1) & mask;
        if s == 0 {
            done = true;
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prev(q: f64) -> Prevalence {
        Prevalence::new(q).unwrap()
    }

    #[test]
    fn single_unit() {
        for q in [0.2, 0.5, 0.9] {
            let r1 = exhaustive_min_r1(prev(q), 1).unwrap();
            assert_eq!(r1.value, 1.0);
            assert_eq!(r1.assignments, 1);
            assert_eq!(exhaustive_min_r3(prev(q), 1).unwrap().value, 1.0);
        }
    }

    #[test]
    fn two_units_at_half() {
        let r = exhaustive_min_r1(prev(0.5), 2).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!((labeled_min_r1(prev(0.5), 2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn budgets() {
        assert!(matches!(
            exhaustive_min_r1(prev(0.9), 7),
            Err(Error::EnumerationBudget { n: 7, .. })
        ));
        assert!(exhaustive_min_r3(prev(0.9), 7).is_ok());
        assert!(exhaustive_min_r3(prev(0.9), 8).is_err());
        assert!(labeled_min_r1(prev(0.9), 5).is_err());
    }

    #[test]
    fn counts_grow_with_n() {
        let mut last = (0u128, 0u128);
        for n in 1..=6 {
            let a = exhaustive_min_r1(prev(0.9), n).unwrap().assignments;
            let b = exhaustive_min_r3(prev(0.9), n).unwrap().assignments;
            if n > 1 {
                assert!(a > last.0 && b > last.1, "n={n}");
            }
            last = (a, b);
        }
    }

    #[test]
    fn restricted_never_beats_nested() {
        for q in [0.5, 0.7, 0.9, 0.99] {
            for n in 1..=6 {
                let r1 = exhaustive_min_r1(prev(q), n).unwrap().value;
                let r3 = exhaustive_min_r3(prev(q), n).unwrap().value;
                assert!(r1 <= r3 + 1e-12, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn subset_iteration() {
        let v: Vec<u32> = subsets(0b101).collect();
        assert_eq!(v, vec![0b101, 0b100, 0b001]);
        assert_eq!(subsets(0).count(), 0);
    }
}
