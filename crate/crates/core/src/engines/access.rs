//! Lexicographic direct access and counting under prefix constraints.
//!
//! Variables of the order `L = x_1..x_k` are arranged in layers. Layer `i`
//! holds the projection of the reduced relations onto `B_i`, which is `x_i`
//! plus its earlier neighbours. Without a disruptive trio `B_i` lies inside
//! one relation, and `B_i \ {x_i}` lies inside `B_p` for `p` the latest of
//! those neighbours, so the layers form a forest. Each tuple of a layer
//! carries the number of ways to complete the layers below it, and each
//! group (same earlier values) is sorted by the domain position of `x_i`
//! with running sums. Interval counts are then two binary searches.

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use super::connex::Reduced;
use super::rel::{project, Key, VRel};
use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::query::{ConjunctiveQuery, Var};
use crate::symbol::Value;

/// Fixed values for the first `r-1` variables of the order and an optional
/// inclusive interval, under the domain order, for variable `r`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrefixConstraint {
    pub values: Vec<Value>,
    pub interval: Option<(Value, Value)>,
}

impl PrefixConstraint {
    pub fn fixed(values: Vec<Value>) -> Self {
        PrefixConstraint {
            values,
            interval: None,
        }
    }
}

#[derive(Clone, Debug)]
struct Layer {
    /// indices into the order; the last one is this layer's variable
    bvars: Vec<usize>,
    parent: Option<usize>,
    members: FxHashSet<Key>,
    /// earlier values → range into `vals`/`cum`
    groups: FxHashMap<Key, (u32, u32)>,
    /// domain position of the layer variable, ascending within a group
    vals: Vec<u32>,
    /// running weight sum within the group, inclusive
    cum: Vec<u64>,
}

impl Layer {
    fn key_len(&self) -> usize {
        self.bvars.len() - 1
    }

    fn group(&self, a: &[u32]) -> Option<(usize, usize)> {
        let key: Key = self.bvars[..self.key_len()]
            .iter()
            .map(|&j| enc(a[j]))
            .collect();
        self.groups.get(&key).map(|&(s, e)| (s as usize, e as usize))
    }

    fn total(&self, a: &[u32]) -> u64 {
        match self.group(a) {
            Some((s, e)) if e > s => self.cum[e - 1],
            _ => 0,
        }
    }

    /// Weight of the tuples of the group with layer value in `[lo, hi]`.
    fn interval(&self, a: &[u32], lo: u32, hi: u32, steps: &mut u64) -> u64 {
        let Some((s, e)) = self.group(a) else { return 0 };
        let vals = &self.vals[s..e];
        *steps += 2 * (usize::BITS - vals.len().leading_zeros()) as u64 + 1;
        let i = vals.partition_point(|&v| v < lo);
        let j = vals.partition_point(|&v| v <= hi);
        if j <= i {
            return 0;
        }
        let below = if i == 0 { 0 } else { self.cum[s + i - 1] };
        self.cum[s + j - 1] - below
    }
}

/// The layered index; values are handled as domain positions.
#[derive(Clone, Debug)]
pub(crate) struct Layers {
    layers: Vec<Layer>,
    pub total: u64,
}

/// Layers store domain positions in place of values.
fn enc(p: u32) -> Value {
    Value::int(p as i64)
}

impl Layers {
    /// `None` when some `B_i` is not inside a single relation, which cannot
    /// happen without a disruptive trio.
    pub fn build(
        red: &Reduced,
        order: &[Var],
        db: &Database,
        steps: &mut u64,
    ) -> Result<Option<Layers>> {
        let k = order.len();
        let adj = |a: Var, b: Var| {
            red.nodes
                .iter()
                .any(|n| n.vars.contains(&a) && n.vars.contains(&b))
        };
        let dom = db.domain();
        let mut layers: Vec<Layer> = Vec::with_capacity(k);
        let mut raw: Vec<VRel> = Vec::with_capacity(k);
        for i in 0..k {
            let mut bvars: Vec<usize> = (0..i).filter(|&j| adj(order[j], order[i])).collect();
            let parent = bvars.last().copied();
            bvars.push(i);
            let bv: Vec<Var> = bvars.iter().map(|&j| order[j]).collect();
            let Some(host) = red
                .nodes
                .iter()
                .find(|n| bv.iter().all(|v| n.vars.contains(v)))
            else {
                return Ok(None);
            };
            let mut proj = project(host, &bv, steps);
            // re-encode as domain positions
            for v in proj.data.iter_mut() {
                *v = enc(dom.get_index_of(v).expect("value in domain") as u32);
            }
            if red.empty {
                proj.rows = 0;
                proj.data.clear();
            }
            raw.push(proj);
            layers.push(Layer {
                bvars,
                parent,
                members: FxHashSet::default(),
                groups: FxHashMap::default(),
                vals: Vec::new(),
                cum: Vec::new(),
            });
        }
        let children: Vec<Vec<usize>> = (0..k)
            .map(|i| (0..k).filter(|&j| layers[j].parent == Some(i)).collect())
            .collect();
        // sums[j]: group key of layer j → total weight
        let mut sums: Vec<FxHashMap<Key, u64>> = vec![FxHashMap::default(); k];
        let buckets = dom.len() + 1;
        for i in (0..k).rev() {
            let rel = &raw[i];
            let w = rel.width();
            let kl = w - 1;
            // weight of each tuple
            let child_pos: Vec<(usize, Vec<usize>)> = children[i]
                .iter()
                .map(|&j| {
                    let pos = layers[j].bvars[..layers[j].key_len()]
                        .iter()
                        .map(|b| layers[i].bvars.iter().position(|x| x == b).unwrap())
                        .collect();
                    (j, pos)
                })
                .collect();
            let mut weight = vec![1u64; rel.rows];
            for (r, wt) in weight.iter_mut().enumerate() {
                *steps += 1;
                for (j, pos) in &child_pos {
                    let f = sums[*j].get(&rel.key(r, pos)).copied().unwrap_or(0);
                    *wt = wt.checked_mul(f).ok_or(Error::Overflow)?;
                }
            }
            // counting sort by the layer variable, then stable placement
            // into contiguous groups
            let mut count = vec![0u32; buckets + 1];
            for r in 0..rel.rows {
                *steps += 1;
                count[pos_of(rel.row(r)[kl]) + 1] += 1;
            }
            for b in 0..buckets {
                count[b + 1] += count[b];
            }
            let mut by_val = vec![0u32; rel.rows];
            for r in 0..rel.rows {
                let b = pos_of(rel.row(r)[kl]);
                by_val[count[b] as usize] = r as u32;
                count[b] += 1;
            }
            let key_pos: Vec<usize> = (0..kl).collect();
            let all: Vec<usize> = (0..w).collect();
            let mut groups: FxHashMap<Key, (u32, u32)> = FxHashMap::default();
            let mut members = FxHashSet::default();
            for r in 0..rel.rows {
                *steps += 1;
                groups.entry(rel.key(r, &key_pos)).or_insert((0, 0)).1 += 1;
                members.insert(rel.key(r, &all));
            }
            let mut off = 0u32;
            for g in groups.values_mut() {
                let len = g.1;
                *g = (off, off);
                off += len;
            }
            let mut vals = vec![0u32; rel.rows];
            let mut cum = vec![0u64; rel.rows];
            for &r in &by_val {
                *steps += 1;
                let r = r as usize;
                let g = groups.get_mut(&rel.key(r, &key_pos)).unwrap();
                let at = g.1 as usize;
                let prev = if at > g.0 as usize { cum[at - 1] } else { 0 };
                vals[at] = pos_of(rel.row(r)[kl]) as u32;
                cum[at] = prev.checked_add(weight[r]).ok_or(Error::Overflow)?;
                g.1 += 1;
            }
            for (key, &(s, e)) in &groups {
                sums[i].insert(key.clone(), if e > s { cum[e as usize - 1] } else { 0 });
            }
            let l = &mut layers[i];
            l.members = members;
            l.groups = groups;
            l.vals = vals;
            l.cum = cum;
        }
        let mut total = 1u64;
        for (i, l) in layers.iter().enumerate() {
            if l.parent.is_none() {
                let t = sums[i].get(&Key::new()).copied().unwrap_or(0);
                total = total.checked_mul(t).ok_or(Error::Overflow)?;
            }
        }
        if red.empty {
            total = 0;
        }
        Ok(Some(Layers { layers, total }))
    }

    fn member(&self, i: usize, a: &[u32]) -> bool {
        let l = &self.layers[i];
        let key: Key = l.bvars.iter().map(|&j| enc(a[j])).collect();
        l.members.contains(&key)
    }

    /// Product of the weights of layers `j >= from`, `j != skip`, hanging off
    /// the fixed prefix `a` (length `m`).
    fn hanging(&self, a: &[u32], m: usize, from: usize, skip: Option<usize>, steps: &mut u64) -> u64 {
        let mut f = 1u64;
        for j in from..self.layers.len() {
            if Some(j) == skip {
                continue;
            }
            let l = &self.layers[j];
            if l.parent.map_or(true, |p| p < m) {
                *steps += 1;
                f = f.saturating_mul(l.total(a));
                if f == 0 {
                    return 0;
                }
            }
        }
        f
    }

    /// Number of answers with `x_1..x_m = a` and, if given, the domain
    /// position of `x_{m+1}` in `[lo, hi]`.
    pub fn count(&self, a: &[u32], interval: Option<(u32, u32)>, steps: &mut u64) -> u64 {
        let m = a.len();
        if m == 0 && interval.is_none() {
            return self.total;
        }
        for i in 0..m {
            *steps += 1;
            if !self.member(i, a) {
                return 0;
            }
        }
        match interval {
            None => self.hanging(a, m, m, None, steps),
            Some((lo, hi)) => {
                let f = self.hanging(a, m, m + 1, None, steps);
                if f == 0 {
                    return 0;
                }
                f.saturating_mul(self.layers[m].interval(a, lo, hi, steps))
            }
        }
    }

    /// Domain positions of the `i`-th answer (1-based, `i <= total`), found
    /// variable by variable: at level `r` the smallest value `v` such that
    /// the answers with the current prefix and `x_r <= v` reach `i`.
    pub fn access(&self, mut i: u64, steps: &mut u64) -> Vec<u32> {
        let k = self.layers.len();
        let mut a: Vec<u32> = Vec::with_capacity(k);
        for r in 0..k {
            let f = self.hanging(&a, r, r + 1, None, steps);
            let l = &self.layers[r];
            let (s, e) = l.group(&a).expect("prefix extends to an answer");
            let cum = &l.cum[s..e];
            *steps += (usize::BITS - cum.len().leading_zeros()) as u64 + 1;
            let idx = cum.partition_point(|&c| c.saturating_mul(f) < i);
            let below = if idx == 0 { 0 } else { cum[idx - 1] };
            i -= below * f;
            a.push(l.vals[s + idx]);
        }
        a
    }
}

fn pos_of(v: Value) -> usize {
    v.as_int().expect("domain position") as usize
}

/// Maps an answer tuple given in order-`L` positions back to `q`'s answer
/// order, and back.
pub(crate) fn order_positions(q: &ConjunctiveQuery, order: &[Var]) -> Result<Vec<usize>> {
    let distinct = super::connex::distinct_answer_vars(q);
    let mut seen = Vec::new();
    for v in order {
        if !distinct.contains(v) {
            return Err(Error::InvalidConstraint(format!("`{v}` is not an answer variable")));
        }
        if seen.contains(v) {
            return Err(Error::InvalidConstraint(format!("`{v}` occurs twice in the order")));
        }
        seen.push(*v);
    }
    if seen.len() != distinct.len() {
        return Err(Error::InvalidConstraint(
            "the order must list every answer variable".into(),
        ));
    }
    Ok(q.answer_vars()
        .iter()
        .map(|v| order.iter().position(|w| w == v).unwrap())
        .collect())
}
