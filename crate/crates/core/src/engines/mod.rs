//! The five evaluation modes. Each entry point takes the linear-time path
//! when the query has the required structure and otherwise materializes the
//! answers by brute force; the path taken is always reported.
//!
//! Step counters count logical operations (tuple scans, hash probes,
//! binary-search probes, emitted answers).

mod access;
mod connex;
mod dedup;
mod rel;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashSet;
use serde::Serialize;

pub use access::PrefixConstraint;
pub use dedup::{delay_bound, CheatersDedup};

use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::homomorphism::{brute_force_answers, is_answer};
use crate::model::query::{ConjunctiveQuery, Var};
use crate::structure::{join_tree, TreeMode};
use crate::symbol::Value;
use access::{order_positions, Layers};
use connex::{connex_projections, reduce, ConnexEnum, ConnexSets};
use rel::{load, semijoin};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Mode {
    SingleTest,
    AllTest,
    Count,
    DirectAccess,
    Enumerate,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::SingleTest,
        Mode::AllTest,
        Mode::Count,
        Mode::DirectAccess,
        Mode::Enumerate,
    ];
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        Ok(match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "single" | "single_test" | "boolean" | "eval" => Mode::SingleTest,
            "all" | "all_test" => Mode::AllTest,
            "count" => Mode::Count,
            "access" | "direct_access" => Mode::DirectAccess,
            "enum" | "enumerate" => Mode::Enumerate,
            _ => return Err(Error::Config(format!("unknown mode `{s}`"))),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SingleTest => "SINGLE_TEST",
            Mode::AllTest => "ALL_TEST",
            Mode::Count => "COUNT",
            Mode::DirectAccess => "DIRECT_ACCESS",
            Mode::Enumerate => "ENUMERATE",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnginePath {
    Tractable,
    Fallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub path: EnginePath,
    pub preprocessing_steps: u64,
}

fn check_arity(q: &ConjunctiveQuery, c: &[Value]) -> Result<()> {
    if c.len() != q.arity() {
        return Err(Error::InvalidQuery(format!(
            "expected a tuple of {} values, got {}",
            q.arity(),
            c.len()
        )));
    }
    Ok(())
}

/// Binds the answer variables to `c`; `None` if a repeated answer variable
/// gets two different values.
fn bind(q: &ConjunctiveQuery, c: &[Value]) -> Option<Vec<(Var, Value)>> {
    let mut out: Vec<(Var, Value)> = Vec::new();
    for (&x, &v) in q.answer_vars().iter().zip(c) {
        match out.iter().find(|(y, _)| *y == x) {
            Some(&(_, w)) if w != v => return None,
            Some(_) => {}
            None => out.push((x, v)),
        }
    }
    Some(out)
}

/// Whether `c ∈ q(D)`. Linear when `q` is weakly acyclic: the answer
/// variables are replaced by `c` and the rest is a semi-join pass.
pub fn single_test(q: &ConjunctiveQuery, db: &Database, c: &[Value]) -> Result<(bool, Stats)> {
    check_arity(q, c)?;
    let Some(jt) = join_tree(q, TreeMode::Weak) else {
        let steps = db.len() as u64;
        return Ok((
            is_answer(q, db, c),
            Stats {
                path: EnginePath::Fallback,
                preprocessing_steps: steps,
            },
        ));
    };
    let mut steps = 0;
    let tractable = |steps| Stats {
        path: EnginePath::Tractable,
        preprocessing_steps: steps,
    };
    let Some(fixed) = bind(q, c) else {
        return Ok((false, tractable(1)));
    };
    if q.atoms().is_empty() {
        return Ok((true, tractable(1)));
    }
    let mut rels: Vec<_> = q
        .atoms()
        .iter()
        .map(|a| load(a, db, &fixed, &mut steps))
        .collect();
    let (parent, order) = jt.rooted(0);
    for &n in order.iter().rev() {
        if let Some(p) = parent[n] {
            let child = std::mem::take(&mut rels[n]);
            semijoin(&mut rels[p], &child, &mut steps);
            rels[n] = child;
        }
    }
    Ok((!rels[0].is_empty(), tractable(steps)))
}

#[derive(Clone, Debug)]
enum TestIndex {
    Connex(ConnexSets),
    Materialized(FxHashSet<Vec<Value>>),
}

/// Preprocessed structure for repeated membership tests.
#[derive(Clone, Debug)]
pub struct AllTester {
    q: ConjunctiveQuery,
    index: TestIndex,
    pub stats: Stats,
}

/// Preprocessing for all-testing. Free-connex queries get one hash set per
/// projection below the guard; tests are then a fixed number of probes.
pub fn all_test(q: &ConjunctiveQuery, db: &Database) -> AllTester {
    let mut steps = 0;
    match connex_projections(q, db, &mut steps) {
        Some(nodes) => {
            let sets = ConnexSets::new(q, &nodes, &mut steps);
            AllTester {
                q: q.clone(),
                index: TestIndex::Connex(sets),
                stats: Stats {
                    path: EnginePath::Tractable,
                    preprocessing_steps: steps,
                },
            }
        }
        None => {
            let answers: FxHashSet<Vec<Value>> = brute_force_answers(q, db).into_iter().collect();
            AllTester {
                q: q.clone(),
                stats: Stats {
                    path: EnginePath::Fallback,
                    preprocessing_steps: (db.len() + answers.len()) as u64,
                },
                index: TestIndex::Materialized(answers),
            }
        }
    }
}

impl AllTester {
    pub fn test(&self, c: &[Value]) -> Result<bool> {
        self.test_counted(c).map(|(b, _)| b)
    }

    /// The answer and the number of steps the test took.
    pub fn test_counted(&self, c: &[Value]) -> Result<(bool, u64)> {
        check_arity(&self.q, c)?;
        let mut steps = 1;
        let ok = match &self.index {
            TestIndex::Connex(sets) => {
                bind(&self.q, c).is_some() && sets.contains(c, &mut steps)
            }
            TestIndex::Materialized(set) => set.contains(c),
        };
        Ok((ok, steps))
    }
}

/// `|q(D)|`. Linear when `q` is acyclic and free-connex.
pub fn count(q: &ConjunctiveQuery, db: &Database) -> Result<(u64, Stats)> {
    let mut steps = 0;
    match reduce(q, db, &mut steps) {
        Some(red) => {
            let n = connex::connex_count(&red, &mut steps)?;
            Ok((
                n,
                Stats {
                    path: EnginePath::Tractable,
                    preprocessing_steps: steps,
                },
            ))
        }
        None => {
            let n = brute_force_answers(q, db).len() as u64;
            Ok((
                n,
                Stats {
                    path: EnginePath::Fallback,
                    preprocessing_steps: db.len() as u64 + n,
                },
            ))
        }
    }
}

#[derive(Clone, Debug)]
enum AccessIndex {
    Layers(Layers),
    /// answers sorted by the order, as domain-position keys
    Sorted(Vec<(Vec<usize>, Vec<Value>)>),
}

/// Preprocessed structure for lexicographic direct access and prefix
/// counting.
#[derive(Clone, Debug)]
pub struct DirectAccess {
    /// for each answer position of `q`, its position in the order
    answer_pos: Vec<usize>,
    domain: indexmap::IndexSet<Value>,
    index: AccessIndex,
    total: u64,
    pub stats: Stats,
}

/// Preprocessing for direct access in lexicographic order of `order` (a
/// permutation of the answer variables) under the domain order of `db`.
/// Linear when `q` is acyclic, free-connex and has no disruptive trio.
pub fn direct_access(q: &ConjunctiveQuery, db: &Database, order: &[Var]) -> Result<DirectAccess> {
    let answer_pos = order_positions(q, order)?;
    let mut steps = 0;
    let layered = if crate::structure::find_disruptive_trio(q, order).is_none() {
        match reduce(q, db, &mut steps) {
            Some(red) => Layers::build(&red, order, db, &mut steps)?,
            None => None,
        }
    } else {
        None
    };
    let domain = db.domain().clone();
    match layered {
        Some(layers) => Ok(DirectAccess {
            answer_pos,
            domain,
            total: layers.total,
            index: AccessIndex::Layers(layers),
            stats: Stats {
                path: EnginePath::Tractable,
                preprocessing_steps: steps,
            },
        }),
        None => {
            let first: HashMap<usize, usize> = answer_pos
                .iter()
                .enumerate()
                .rev()
                .map(|(i, &p)| (p, i))
                .collect();
            let mut sorted: Vec<(Vec<usize>, Vec<Value>)> = brute_force_answers(q, db)
                .into_iter()
                .map(|a| {
                    let key = (0..order.len())
                        .map(|p| domain.get_index_of(&a[first[&p]]).unwrap())
                        .collect();
                    (key, a)
                })
                .collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(DirectAccess {
                answer_pos,
                domain,
                total: sorted.len() as u64,
                stats: Stats {
                    path: EnginePath::Fallback,
                    preprocessing_steps: db.len() as u64 + sorted.len() as u64,
                },
                index: AccessIndex::Sorted(sorted),
            })
        }
    }
}

impl DirectAccess {
    pub fn total(&self) -> u64 {
        self.total
    }

    /// The `i`-th answer (1-based) in lexicographic order.
    pub fn access(&self, i: u64) -> Result<Vec<Value>> {
        self.access_counted(i).map(|(a, _)| a)
    }

    pub fn access_counted(&self, i: u64) -> Result<(Vec<Value>, u64)> {
        if i == 0 {
            return Err(Error::InvalidConstraint("answer indices start at 1".into()));
        }
        if i > self.total {
            return Err(Error::OutOfBound {
                index: i,
                count: self.total,
            });
        }
        let mut steps = 0;
        let out = match &self.index {
            AccessIndex::Layers(l) => {
                let pos = l.access(i, &mut steps);
                self.answer_pos
                    .iter()
                    .map(|&p| self.domain[pos[p] as usize])
                    .collect()
            }
            AccessIndex::Sorted(s) => {
                steps += 1;
                s[i as usize - 1].1.clone()
            }
        };
        Ok((out, steps))
    }

    /// Number of answers matching a prefix constraint.
    pub fn count_prefix(&self, c: &PrefixConstraint) -> Result<u64> {
        self.count_prefix_counted(c).map(|(n, _)| n)
    }

    pub fn count_prefix_counted(&self, c: &PrefixConstraint) -> Result<(u64, u64)> {
        let k = self.answer_pos.iter().max().map_or(0, |m| m + 1);
        let m = c.values.len();
        if m > k || (m == k && c.interval.is_some()) {
            return Err(Error::InvalidConstraint(format!(
                "the order has {k} variables; {m} fixed values{} do not fit",
                if c.interval.is_some() { " and an interval" } else { "" }
            )));
        }
        let interval = match c.interval {
            None => None,
            Some((lo, hi)) => {
                let pos = |v: Value| {
                    self.domain.get_index_of(&v).ok_or_else(|| {
                        Error::InvalidConstraint(format!(
                            "interval endpoint {} is not in the domain",
                            v.render()
                        ))
                    })
                };
                let (lo, hi) = (pos(lo)?, pos(hi)?);
                if lo > hi {
                    return Err(Error::InvalidConstraint(format!(
                        "empty interval: {} comes after {} in the domain order",
                        c.interval.unwrap().0.render(),
                        c.interval.unwrap().1.render()
                    )));
                }
                Some((lo, hi))
            }
        };
        let Some(fixed) = c
            .values
            .iter()
            .map(|v| self.domain.get_index_of(v))
            .collect::<Option<Vec<usize>>>()
        else {
            return Ok((0, 1));
        };
        let mut steps = 0;
        let n = match &self.index {
            AccessIndex::Layers(l) => {
                let a: Vec<u32> = fixed.iter().map(|&p| p as u32).collect();
                l.count(&a, interval.map(|(x, y)| (x as u32, y as u32)), &mut steps)
            }
            AccessIndex::Sorted(s) => s
                .iter()
                .filter(|(key, _)| {
                    steps += 1;
                    key[..m] == fixed[..]
                        && interval.map_or(true, |(lo, hi)| (lo..=hi).contains(&key[m]))
                })
                .count() as u64,
        };
        Ok((n, steps))
    }
}

/// One-shot prefix counting.
pub fn count_prefix(
    q: &ConjunctiveQuery,
    db: &Database,
    order: &[Var],
    c: &PrefixConstraint,
) -> Result<u64> {
    direct_access(q, db, order)?.count_prefix(c)
}

/// A stream of answers with a step counter.
pub trait AnswerStream {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>>;
    fn steps(&self) -> u64;
}

#[derive(Clone, Debug)]
enum EnumInner {
    Connex(Box<ConnexEnum>),
    Materialized(std::vec::IntoIter<Vec<Value>>, u64),
}

/// Answer stream of [`enumerate`].
#[derive(Clone, Debug)]
pub struct Enumeration {
    inner: EnumInner,
    pub stats: Stats,
}

/// Enumeration without repetition. Constant delay after linear
/// preprocessing when `q` is acyclic and free-connex.
pub fn enumerate(q: &ConjunctiveQuery, db: &Database) -> Enumeration {
    let mut steps = 0;
    match reduce(q, db, &mut steps) {
        Some(red) => {
            let e = ConnexEnum::new(q, red, &mut steps);
            Enumeration {
                inner: EnumInner::Connex(Box::new(e)),
                stats: Stats {
                    path: EnginePath::Tractable,
                    preprocessing_steps: steps,
                },
            }
        }
        None => {
            let all: Vec<Vec<Value>> = brute_force_answers(q, db).into_iter().collect();
            Enumeration {
                stats: Stats {
                    path: EnginePath::Fallback,
                    preprocessing_steps: (db.len() + all.len()) as u64,
                },
                inner: EnumInner::Materialized(all.into_iter(), 0),
            }
        }
    }
}

impl AnswerStream for Enumeration {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>> {
        Ok(self.next())
    }

    fn steps(&self) -> u64 {
        match &self.inner {
            EnumInner::Connex(e) => e.steps,
            EnumInner::Materialized(_, s) => *s,
        }
    }
}

impl Iterator for Enumeration {
    type Item = Vec<Value>;

    fn next(&mut self) -> Option<Vec<Value>> {
        match &mut self.inner {
            EnumInner::Connex(e) => e.next(),
            EnumInner::Materialized(it, s) => {
                *s += 1;
                it.next()
            }
        }
    }
}

/// A materialized stream, counting one step per pulled answer.
#[derive(Clone, Debug)]
pub struct VecStream {
    items: std::vec::IntoIter<Vec<Value>>,
    steps: u64,
}

impl VecStream {
    pub fn new(items: Vec<Vec<Value>>) -> Self {
        VecStream {
            items: items.into_iter(),
            steps: 0,
        }
    }
}

impl AnswerStream for VecStream {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>> {
        self.steps += 1;
        Ok(self.items.next())
    }

    fn steps(&self) -> u64 {
        self.steps
    }
}

/// Drains a stream, returning the answers and the step delay before each
/// answer and before the end signal.
pub fn drain_with_delays(s: &mut dyn AnswerStream) -> Result<(Vec<Vec<Value>>, Vec<u64>)> {
    let mut out = Vec::new();
    let mut delays = Vec::new();
    let mut last = s.steps();
    loop {
        let a = s.next_answer()?;
        let now = s.steps();
        delays.push(now - last);
        last = now;
        match a {
            Some(a) => out.push(a),
            None => return Ok((out, delays)),
        }
    }
}

#[cfg(test)]
mod tests;
