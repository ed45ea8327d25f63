//! Isomorphism of (query, TGD set) pairs up to renaming of relations,
//! variables (per rule) and reordering of atoms and TGDs. Answer variables
//! correspond positionally.

use std::collections::HashMap;

use crate::model::query::{Atom, ConjunctiveQuery, TgdSet, Var};
use crate::symbol::Sym;

#[derive(Clone, Debug)]
struct Group {
    /// (is_head, atom)
    atoms: Vec<(bool, Atom)>,
}

impl Group {
    fn signature(&self) -> Vec<(bool, usize)> {
        let mut s: Vec<(bool, usize)> = self.atoms.iter().map(|(h, a)| (*h, a.args.len())).collect();
        s.sort_unstable();
        s
    }

    /// Atoms reordered so that each one shares as many variables as possible
    /// with the earlier ones.
    fn connected_order(&self) -> Group {
        let mut left = self.atoms.clone();
        let mut seen: Vec<Var> = Vec::new();
        let mut out = Vec::new();
        while !left.is_empty() {
            let best = (0..left.len())
                .max_by_key(|&i| {
                    let a = &left[i].1;
                    (a.args.iter().filter(|v| seen.contains(v)).count(), usize::MAX - i)
                })
                .unwrap();
            let (h, a) = left.remove(best);
            seen.extend(a.args.iter().copied());
            out.push((h, a));
        }
        Group { atoms: out }
    }
}

fn groups(q: &ConjunctiveQuery, t: &TgdSet) -> Vec<Group> {
    let mut out = vec![Group {
        atoms: q.atoms().iter().map(|a| (false, a.clone())).collect(),
    }];
    for tgd in t.tgds() {
        out.push(Group {
            atoms: tgd
                .body
                .iter()
                .map(|a| (false, a.clone()))
                .chain(tgd.head.iter().map(|a| (true, a.clone())))
                .collect(),
        });
    }
    out
}

#[derive(Clone, Default)]
struct State {
    rel: HashMap<Sym, Sym>,
    rel_inv: HashMap<Sym, Sym>,
    var: HashMap<Var, Var>,
    var_inv: HashMap<Var, Var>,
    used_groups: Vec<bool>,
    used_atoms: Vec<bool>,
    target: usize,
}

impl State {
    fn map_var(&mut self, a: Var, b: Var) -> bool {
        match (self.var.get(&a), self.var_inv.get(&b)) {
            (Some(&x), _) if x != b => false,
            (_, Some(&y)) if y != a => false,
            _ => {
                self.var.insert(a, b);
                self.var_inv.insert(b, a);
                true
            }
        }
    }

    fn map_rel(&mut self, a: Sym, b: Sym) -> bool {
        match (self.rel.get(&a), self.rel_inv.get(&b)) {
            (Some(&x), _) if x != b => false,
            (_, Some(&y)) if y != a => false,
            _ => {
                self.rel.insert(a, b);
                self.rel_inv.insert(b, a);
                true
            }
        }
    }
}

struct Matcher<'a> {
    left: &'a [Group],
    right: &'a [Group],
    fixed: Vec<(Var, Var)>,
}

impl Matcher<'_> {
    fn start_group(&self, st: &State, g: usize) -> bool {
        if g == self.left.len() {
            return true;
        }
        let candidates: Vec<usize> = if g == 0 {
            vec![0]
        } else {
            (1..self.right.len())
                .filter(|&j| !st.used_groups[j] && self.right[j].signature() == self.left[g].signature())
                .collect()
        };
        for j in candidates {
            let mut s = st.clone();
            s.used_groups[j] = true;
            s.target = j;
            s.used_atoms = vec![false; self.right[j].atoms.len()];
            s.var.clear();
            s.var_inv.clear();
            if g == 0 && !self.fixed.iter().all(|&(a, b)| s.map_var(a, b)) {
                continue;
            }
            if self.atom(&s, g, 0) {
                return true;
            }
        }
        false
    }

    fn atom(&self, st: &State, g: usize, i: usize) -> bool {
        let group = &self.left[g];
        if i == group.atoms.len() {
            return self.start_group(st, g + 1);
        }
        let (head, a) = &group.atoms[i];
        let target = &self.right[st.target];
        for (k, (h2, b)) in target.atoms.iter().enumerate() {
            if st.used_atoms[k] || h2 != head || b.args.len() != a.args.len() {
                continue;
            }
            let mut s = st.clone();
            s.used_atoms[k] = true;
            if s.map_rel(a.rel, b.rel)
                && a.args.iter().zip(&b.args).all(|(&x, &y)| s.map_var(x, y))
                && self.atom(&s, g, i + 1)
            {
                return true;
            }
        }
        false
    }
}

/// Whether `(q1, t1)` and `(q2, t2)` are the same up to renaming.
pub fn isomorphic(q1: &ConjunctiveQuery, t1: &TgdSet, q2: &ConjunctiveQuery, t2: &TgdSet) -> bool {
    if q1.arity() != q2.arity() || q1.atoms().len() != q2.atoms().len() || t1.len() != t2.len() {
        return false;
    }
    let left: Vec<Group> = groups(q1, t1).iter().map(Group::connected_order).collect();
    let right = groups(q2, t2);
    let mut ls: Vec<_> = left.iter().map(Group::signature).collect();
    let mut rs: Vec<_> = right.iter().map(Group::signature).collect();
    if ls[0] != rs[0] {
        return false;
    }
    ls.sort();
    rs.sort();
    if ls != rs {
        return false;
    }
    let m = Matcher {
        left: &left,
        right: &right,
        fixed: q1
            .answer_vars()
            .iter()
            .copied()
            .zip(q2.answer_vars().iter().copied())
            .collect(),
    };
    let st = State {
        used_groups: vec![false; right.len()],
        ..State::default()
    };
    m.start_group(&st, 0)
}
