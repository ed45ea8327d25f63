//! Materialized relations over query variables and the semi-join toolkit.

use rustc_hash::FxHashSet;
use smallvec::SmallVec;

use crate::model::database::Database;
use crate::model::query::{Atom, Var};
use crate::symbol::Value;

pub(crate) type Key = SmallVec<[Value; 4]>;

/// Rows over distinct variables, stored row-major.
#[derive(Clone, Debug, Default)]
pub(crate) struct VRel {
    pub vars: Vec<Var>,
    pub data: Vec<Value>,
    pub rows: usize,
}

impl VRel {
    pub fn width(&self) -> usize {
        self.vars.len()
    }

    pub fn row(&self, i: usize) -> &[Value] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    /// Positions of `vars` within this relation. Panics if one is missing.
    pub fn positions(&self, vars: &[Var]) -> Vec<usize> {
        vars.iter()
            .map(|v| self.vars.iter().position(|w| w == v).expect("variable present"))
            .collect()
    }

    pub fn key(&self, i: usize, pos: &[usize]) -> Key {
        let r = self.row(i);
        pos.iter().map(|&p| r[p]).collect()
    }

    /// Variables shared with `other`, in this relation's order.
    pub fn shared(&self, other: &VRel) -> Vec<Var> {
        self.vars
            .iter()
            .copied()
            .filter(|v| other.vars.contains(v))
            .collect()
    }

    fn retain(&mut self, mut keep: impl FnMut(&[Value]) -> bool) {
        let w = self.width();
        if w == 0 {
            if self.rows > 0 && !keep(&[]) {
                self.rows = 0;
            }
            return;
        }
        let mut out = 0;
        for i in 0..self.rows {
            if keep(&self.data[i * w..(i + 1) * w]) {
                if out != i {
                    self.data.copy_within(i * w..(i + 1) * w, out * w);
                }
                out += 1;
            }
        }
        self.rows = out;
        self.data.truncate(out * w);
    }
}

/// Loads the tuples of `atom` that agree with `fixed` and with repeated
/// variables; the result ranges over the remaining distinct variables.
pub(crate) fn load(atom: &Atom, db: &Database, fixed: &[(Var, Value)], steps: &mut u64) -> VRel {
    enum Slot {
        Fixed(Value),
        Out,
        Same(usize),
    }
    let mut vars: Vec<Var> = Vec::new();
    let mut first: Vec<usize> = Vec::new();
    let slots: Vec<Slot> = atom
        .args
        .iter()
        .enumerate()
        .map(|(p, v)| {
            if let Some(&(_, c)) = fixed.iter().find(|(w, _)| w == v) {
                Slot::Fixed(c)
            } else if let Some(i) = vars.iter().position(|w| w == v) {
                Slot::Same(first[i])
            } else {
                vars.push(*v);
                first.push(p);
                Slot::Out
            }
        })
        .collect();
    let mut out = VRel {
        vars,
        data: Vec::new(),
        rows: 0,
    };
    let Some(r) = db.relation(atom.rel) else {
        return out;
    };
    for t in r.iter() {
        *steps += 1;
        let ok = slots.iter().enumerate().all(|(p, s)| match *s {
            Slot::Fixed(c) => t[p] == c,
            Slot::Same(q) => t[p] == t[q],
            Slot::Out => true,
        });
        if !ok {
            continue;
        }
        if out.vars.is_empty() {
            out.rows = 1;
            break;
        }
        out.data.extend(first.iter().map(|&p| t[p]));
        out.rows += 1;
    }
    out
}

/// Keeps the rows of `target` that join with some row of `source`.
pub(crate) fn semijoin(target: &mut VRel, source: &VRel, steps: &mut u64) {
    let shared = target.shared(source);
    if shared.is_empty() {
        *steps += 1;
        if source.is_empty() {
            target.rows = 0;
            target.data.clear();
        }
        return;
    }
    let sp = source.positions(&shared);
    let tp = target.positions(&shared);
    let mut keys: FxHashSet<Key> = FxHashSet::default();
    for i in 0..source.rows {
        *steps += 1;
        keys.insert(source.key(i, &sp));
    }
    *steps += target.rows as u64;
    target.retain(|r| keys.contains(&tp.iter().map(|&p| r[p]).collect::<Key>()));
}

/// Duplicate-free projection onto `vars` (a subset of `rel.vars`).
pub(crate) fn project(rel: &VRel, vars: &[Var], steps: &mut u64) -> VRel {
    let pos = rel.positions(vars);
    let mut out = VRel {
        vars: vars.to_vec(),
        data: Vec::new(),
        rows: 0,
    };
    if vars.is_empty() {
        *steps += 1;
        out.rows = usize::from(!rel.is_empty());
        return out;
    }
    let mut seen: FxHashSet<Key> = FxHashSet::default();
    for i in 0..rel.rows {
        *steps += 1;
        let k = rel.key(i, &pos);
        if seen.insert(k.clone()) {
            out.data.extend_from_slice(&k);
            out.rows += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_database;

    #[test]
    fn load_respects_repeats_and_fixed() {
        let db = parse_database("R(a,a,b). R(a,b,b). R(c,c,b).").unwrap();
        let at = Atom::new("R", &["x", "x", "y"]);
        let mut s = 0;
        let r = load(&at, &db, &[], &mut s);
        assert_eq!(r.rows, 2);
        assert_eq!(s, 3);
        let r = load(&at, &db, &[(Var::new("x"), Value::name("c"))], &mut s);
        assert_eq!(r.vars, vec![Var::new("y")]);
        assert_eq!(r.row(0), &[Value::name("b")]);
        let nullary = load(
            &at,
            &db,
            &[(Var::new("x"), Value::name("a")), (Var::new("y"), Value::name("b"))],
            &mut s,
        );
        assert_eq!((nullary.width(), nullary.rows), (0, 1));
    }

    #[test]
    fn semijoin_and_project() {
        let db = parse_database("R(a,b). R(c,d). S(b,e). S(b,f).").unwrap();
        let mut s = 0;
        let mut r = load(&Atom::new("R", &["x", "y"]), &db, &[], &mut s);
        let t = load(&Atom::new("S", &["y", "z"]), &db, &[], &mut s);
        semijoin(&mut r, &t, &mut s);
        assert_eq!(r.rows, 1);
        let p = project(&t, &[Var::new("y")], &mut s);
        assert_eq!(p.rows, 1);
        let empty = VRel::default();
        semijoin(&mut r, &empty, &mut s);
        assert!(r.is_empty());
    }
}
