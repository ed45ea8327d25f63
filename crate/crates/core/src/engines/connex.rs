//! Free-connex reduction: per-answer-variable projections that are globally
//! consistent, plus enumeration and counting on top of them.

use indexmap::IndexSet;
use rustc_hash::{FxHashMap, FxHashSet};

use super::rel::{load, project, semijoin, Key, VRel};
use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::query::{ConjunctiveQuery, Var};
use crate::structure::{gyo, guarded, join_tree, TreeMode};
use crate::symbol::Value;

/// Distinct answer variables in order of first occurrence.
pub(crate) fn distinct_answer_vars(q: &ConjunctiveQuery) -> Vec<Var> {
    let set: IndexSet<Var> = q.answer_vars().iter().copied().collect();
    set.into_iter().collect()
}

/// For each child `c` of the guard in a join tree of `q` plus guard, the
/// projection onto the answer variables of `c` of the tuples of `c` that
/// extend to the whole subtree below `c`. `None` unless free-connex.
pub(crate) fn connex_projections(
    q: &ConjunctiveQuery,
    db: &Database,
    steps: &mut u64,
) -> Option<Vec<VRel>> {
    let g = guarded(q);
    let jt = join_tree(&g, TreeMode::Full)?;
    let m = q.atoms().len();
    let (parent, order) = jt.rooted(m);
    let mut rels: Vec<VRel> = q
        .atoms()
        .iter()
        .map(|a| load(a, db, &[], steps))
        .collect();
    for &n in order.iter().rev() {
        match parent[n] {
            Some(p) if p != m => {
                let (child, par) = pair_mut(&mut rels, n, p);
                semijoin(par, child, steps);
            }
            _ => {}
        }
    }
    let answer = q.answer_vars();
    Some(
        order
            .iter()
            .filter(|&&n| parent[n] == Some(m))
            .map(|&c| {
                let free: Vec<Var> = rels[c]
                    .vars
                    .iter()
                    .copied()
                    .filter(|v| answer.contains(v))
                    .collect();
                project(&rels[c], &free, steps)
            })
            .collect(),
    )
}

/// `(&a[i], &mut a[j])` for `i != j`.
fn pair_mut<T>(a: &mut [T], i: usize, j: usize) -> (&T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (l, r) = a.split_at_mut(j);
        (&l[i], &mut r[0])
    } else {
        let (l, r) = a.split_at_mut(i);
        (&r[0], &mut l[j])
    }
}

/// Globally consistent relations over the answer variables whose natural
/// join is exactly `q(D)`, arranged in a join tree.
#[derive(Clone, Debug)]
pub(crate) struct Reduced {
    pub vars: Vec<Var>,
    pub nodes: Vec<VRel>,
    pub parent: Vec<Option<usize>>,
    /// top-down order
    pub order: Vec<usize>,
    pub empty: bool,
}

/// `None` unless `q` is acyclic and free-connex.
pub(crate) fn reduce(q: &ConjunctiveQuery, db: &Database, steps: &mut u64) -> Option<Reduced> {
    join_tree(q, TreeMode::Full)?;
    let mut nodes = connex_projections(q, db, steps)?;
    let edges: Vec<IndexSet<Var>> = nodes
        .iter()
        .map(|n| n.vars.iter().copied().collect())
        .collect();
    let tree = gyo(&edges)?;
    let k = nodes.len();
    let (parent, order) = if k == 0 {
        (Vec::new(), Vec::new())
    } else {
        let jt = crate::structure::JoinTree {
            mode: TreeMode::Full,
            nodes: k,
            edges: tree,
        };
        jt.rooted(0)
    };
    for &n in order.iter().rev() {
        if let Some(p) = parent[n] {
            let (c, par) = pair_mut(&mut nodes, n, p);
            semijoin(par, c, steps);
        }
    }
    for &n in &order {
        if let Some(p) = parent[n] {
            let (par, c) = pair_mut(&mut nodes, p, n);
            semijoin(c, par, steps);
        }
    }
    let empty = nodes.iter().any(|n| n.is_empty());
    Some(Reduced {
        vars: distinct_answer_vars(q),
        nodes,
        parent,
        order,
        empty,
    })
}

/// Rows of a relation grouped by a key, laid out contiguously.
#[derive(Clone, Debug, Default)]
pub(crate) struct Grouped {
    pub perm: Vec<u32>,
    pub ranges: FxHashMap<Key, (u32, u32)>,
}

impl Grouped {
    pub fn build(rel: &VRel, key_pos: Vec<usize>, steps: &mut u64) -> Grouped {
        let mut ranges: FxHashMap<Key, (u32, u32)> = FxHashMap::default();
        for i in 0..rel.rows {
            *steps += 1;
            ranges.entry(rel.key(i, &key_pos)).or_insert((0, 0)).1 += 1;
        }
        let mut off = 0u32;
        for r in ranges.values_mut() {
            let len = r.1;
            *r = (off, off);
            off += len;
        }
        let mut perm = vec![0u32; rel.rows];
        for i in 0..rel.rows {
            *steps += 1;
            let r = ranges.get_mut(&rel.key(i, &key_pos)).unwrap();
            perm[r.1 as usize] = i as u32;
            r.1 += 1;
        }
        Grouped {
            perm,
            ranges,
        }
    }
}

/// Nested-loop traversal of the reduced join tree. Every descent lands on a
/// nonempty group, so the work between two answers is bounded by the
/// number of nodes.
#[derive(Clone, Debug)]
pub(crate) struct ConnexEnum {
    nodes: Vec<VRel>,
    /// nodes in top-down order
    seq: Vec<usize>,
    /// per level: positions (in `assign`) of the parent-shared key
    key_slots: Vec<Vec<usize>>,
    /// per level: positions (in `assign`) written by the node's columns
    col_slots: Vec<Vec<usize>>,
    groups: Vec<Grouped>,
    /// for each answer position, slot in `assign`
    out: Vec<usize>,
    assign: Vec<Value>,
    cursor: Vec<(u32, u32, u32)>,
    started: bool,
    done: bool,
    pub steps: u64,
}

impl ConnexEnum {
    pub fn new(q: &ConjunctiveQuery, red: Reduced, steps: &mut u64) -> ConnexEnum {
        let slot = |v: &Var| red.vars.iter().position(|w| w == v).unwrap();
        let mut key_slots = Vec::new();
        let mut col_slots = Vec::new();
        let mut groups = Vec::new();
        for &n in &red.order {
            let node = &red.nodes[n];
            col_slots.push(node.vars.iter().map(slot).collect());
            let shared = match red.parent[n] {
                Some(p) => node.shared(&red.nodes[p]),
                None => Vec::new(),
            };
            key_slots.push(shared.iter().map(slot).collect());
            groups.push(Grouped::build(node, node.positions(&shared), steps));
        }
        let out = q.answer_vars().iter().map(slot).collect();
        let k = red.order.len();
        ConnexEnum {
            seq: red.order.clone(),
            done: red.empty,
            nodes: red.nodes,
            key_slots,
            col_slots,
            groups,
            out,
            assign: vec![Value::int(0); red.vars.len()],
            cursor: vec![(0, 0, 0); k],
            started: false,
            steps: 0,
        }
    }

    fn open(&mut self, level: usize) -> bool {
        let key: Key = self.key_slots[level].iter().map(|&s| self.assign[s]).collect();
        self.steps += 1;
        match self.groups[level].ranges.get(&key) {
            Some(&(s, e)) => {
                self.cursor[level] = (s, e, s);
                true
            }
            None => false,
        }
    }

    pub fn next(&mut self) -> Option<Vec<Value>> {
        if self.done {
            return None;
        }
        let k = self.seq.len();
        if k == 0 {
            self.done = true;
            return Some(self.out.iter().map(|&s| self.assign[s]).collect());
        }
        let mut level;
        if !self.started {
            self.started = true;
            level = 0;
            if !self.open(0) {
                self.done = true;
                return None;
            }
        } else {
            level = k - 1;
            self.cursor[level].2 += 1;
        }
        loop {
            self.steps += 1;
            let (_, e, pos) = self.cursor[level];
            if pos < e {
                let node = &self.nodes[self.seq[level]];
                let row = node.row(self.groups[level].perm[pos as usize] as usize);
                for (c, &s) in self.col_slots[level].iter().enumerate() {
                    self.assign[s] = row[c];
                }
                if level + 1 == k {
                    return Some(self.out.iter().map(|&s| self.assign[s]).collect());
                }
                level += 1;
                if !self.open(level) {
                    // unreachable after full reduction
                    level -= 1;
                    self.cursor[level].2 += 1;
                }
            } else {
                if level == 0 {
                    self.done = true;
                    return None;
                }
                level -= 1;
                self.cursor[level].2 += 1;
            }
        }
    }
}

/// Bottom-up sum-product over the reduced join tree.
pub(crate) fn connex_count(red: &Reduced, steps: &mut u64) -> Result<u64> {
    if red.empty {
        return Ok(0);
    }
    if red.nodes.is_empty() {
        return Ok(1);
    }
    let k = red.nodes.len();
    let mut weights: Vec<Vec<u64>> = red.nodes.iter().map(|n| vec![1u64; n.rows]).collect();
    for &n in red.order.iter().rev() {
        let Some(p) = red.parent[n] else { continue };
        let node = &red.nodes[n];
        let shared = node.shared(&red.nodes[p]);
        let np = node.positions(&shared);
        let pp = red.nodes[p].positions(&shared);
        let mut sums: FxHashMap<Key, u64> = FxHashMap::default();
        for i in 0..node.rows {
            *steps += 1;
            let s = sums.entry(node.key(i, &np)).or_insert(0);
            *s = s.checked_add(weights[n][i]).ok_or(Error::Overflow)?;
        }
        let parent_rel = &red.nodes[p];
        for i in 0..parent_rel.rows {
            *steps += 1;
            let f = sums.get(&parent_rel.key(i, &pp)).copied().unwrap_or(0);
            weights[p][i] = weights[p][i].checked_mul(f).ok_or(Error::Overflow)?;
        }
    }
    let root = red.order[0];
    debug_assert!(k > 0);
    weights[root]
        .iter()
        .try_fold(0u64, |acc, &w| acc.checked_add(w))
        .ok_or(Error::Overflow)
}

/// Membership sets of the projections, for constant-time testing.
#[derive(Clone, Debug)]
pub(crate) struct ConnexSets {
    /// per projection: answer positions of its columns, and its rows
    pub sets: Vec<(Vec<usize>, FxHashSet<Key>)>,
}

impl ConnexSets {
    pub fn new(q: &ConjunctiveQuery, nodes: &[VRel], steps: &mut u64) -> ConnexSets {
        let answer = q.answer_vars();
        let sets = nodes
            .iter()
            .map(|n| {
                let pos: Vec<usize> = n
                    .vars
                    .iter()
                    .map(|v| answer.iter().position(|w| w == v).unwrap())
                    .collect();
                let all: Vec<usize> = (0..n.width()).collect();
                let rows = (0..n.rows)
                    .map(|i| {
                        *steps += 1;
                        n.key(i, &all)
                    })
                    .collect();
                (pos, rows)
            })
            .collect();
        ConnexSets { sets }
    }

    pub fn contains(&self, c: &[Value], steps: &mut u64) -> bool {
        self.sets.iter().all(|(pos, rows)| {
            *steps += 1;
            if pos.is_empty() {
                return !rows.is_empty();
            }
            rows.contains(&pos.iter().map(|&p| c[p]).collect::<Key>())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::homomorphism::brute_force_answers;
    use crate::parse::{parse_database, parse_query};

    fn run(q: &str, db: &str) -> (Vec<Vec<Value>>, u64) {
        let q = parse_query(q).unwrap();
        let db = parse_database(db).unwrap();
        let mut s = 0;
        let red = reduce(&q, &db, &mut s).expect("free-connex");
        let n = connex_count(&red, &mut s).unwrap();
        let mut e = ConnexEnum::new(&q, red, &mut s);
        let mut out = Vec::new();
        while let Some(a) = e.next() {
            out.push(a);
        }
        let brute = brute_force_answers(&q, &db);
        assert_eq!(out.len(), brute.len());
        assert!(out.iter().all(|a| brute.contains(a)));
        (out, n)
    }

    #[test]
    fn path_projection() {
        let (out, n) = run(
            "q(x,y) :- R(x,y), S(y,z).",
            "R(a,b). R(a,c). R(d,e). S(b,1). S(b,2). S(c,3).",
        );
        assert_eq!(out.len(), 2);
        assert_eq!(n, 2);
    }

    #[test]
    fn disconnected_product_and_boolean() {
        let (out, n) = run("q(x,y) :- R(x), S(y).", "R(a). R(b). S(c). S(d). S(e).");
        assert_eq!((out.len(), n), (6, 6));
        let (out, n) = run("q() :- R(x,y), S(y).", "R(a,b). S(b).");
        assert_eq!((out, n), (vec![vec![]], 1));
        let (out, n) = run("q() :- R(x,y), S(y).", "R(a,b). S(c).");
        assert_eq!((out.len(), n), (0, 0));
    }

    #[test]
    fn repeated_answer_variable() {
        let (out, _) = run("q(x,x,y) :- R(x,y).", "R(a,b). R(c,d).");
        assert!(out.contains(&vec![Value::name("a"), Value::name("a"), Value::name("b")]));
    }

    #[test]
    fn not_free_connex_is_refused() {
        let q = parse_query("q(x,z) :- R(x,y), S(y,z).").unwrap();
        let mut s = 0;
        assert!(reduce(&q, &Database::new(), &mut s).is_none());
        // cyclic but guarded-acyclic: projections exist, reduction does not
        let t = parse_query("q(x,y,z) :- R(x,y), S(y,z), T(z,x).").unwrap();
        assert!(connex_projections(&t, &Database::new(), &mut s).is_some());
        assert!(reduce(&t, &Database::new(), &mut s).is_none());
    }
}
