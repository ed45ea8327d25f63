//! Backtracking homomorphism search and the brute-force oracles built on it.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};

use crate::model::database::{Database, Index, Relation};
use crate::model::query::{Atom, ConjunctiveQuery, Tgd, TgdSet, Var};
use crate::symbol::{Sym, Value};

/// Atoms over numbered slots. Slot `i` is a variable (or a domain value, when
/// the source is itself a database).
#[derive(Clone, Debug)]
pub struct Pattern {
    pub atoms: Vec<(Sym, Vec<usize>)>,
    pub slots: usize,
}

impl Pattern {
    /// Pattern for `atoms`, numbering variables by their position in `vars`.
    pub fn from_atoms(atoms: &[Atom], vars: &[Var]) -> Pattern {
        let pos: HashMap<Var, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Pattern {
            atoms: atoms
                .iter()
                .map(|a| (a.rel, a.args.iter().map(|v| pos[v]).collect()))
                .collect(),
            slots: vars.len(),
        }
    }

    /// Pattern whose slots are the domain values of `db`.
    pub fn from_database(db: &Database) -> (Pattern, Vec<Value>) {
        let dom: Vec<Value> = db.domain().iter().copied().collect();
        let atoms = db
            .facts()
            .map(|(r, t)| (r, t.iter().map(|v| db.domain_pos(*v).unwrap()).collect()))
            .collect();
        (
            Pattern {
                atoms,
                slots: dom.len(),
            },
            dom,
        )
    }
}

struct Step<'a> {
    rel: &'a Relation,
    index: Arc<Index>,
    key_slots: Vec<usize>,
    bind: Vec<(usize, usize)>,
    check: Vec<(usize, usize)>,
}

fn plan<'a>(p: &Pattern, fixed: &[Option<Value>], db: &'a Database) -> Option<Vec<Step<'a>>> {
    let mut bound: Vec<bool> = (0..p.slots).map(|i| fixed[i].is_some()).collect();
    let mut remaining: Vec<usize> = (0..p.atoms.len()).collect();
    let mut steps = Vec::with_capacity(p.atoms.len());
    while !remaining.is_empty() {
        // most bound slots first, then smaller relation, then lower index
        let (ri, &ai) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(_, &ai)| {
                let (rel, args) = &p.atoms[ai];
                let nb = args.iter().filter(|&&s| bound[s]).count();
                let size = db.relation(*rel).map_or(0, |r| r.len());
                (nb, std::cmp::Reverse(size), std::cmp::Reverse(ai))
            })
            .unwrap();
        remaining.remove(ri);
        let (rel, args) = &p.atoms[ai];
        let relation = db.relation(*rel)?;
        if relation.arity() != args.len() {
            return None;
        }
        let mut key_pos = Vec::new();
        let mut key_slots = Vec::new();
        let mut bind = Vec::new();
        let mut check = Vec::new();
        let mut first_in_atom: HashMap<usize, usize> = HashMap::new();
        for (pos, &s) in args.iter().enumerate() {
            if bound[s] {
                key_pos.push(pos);
                key_slots.push(s);
            } else if let Some(&p0) = first_in_atom.get(&s) {
                check.push((pos, p0));
            } else {
                first_in_atom.insert(s, pos);
                bind.push((pos, s));
            }
        }
        for &(_, s) in &bind {
            bound[s] = true;
        }
        steps.push(Step {
            rel: relation,
            index: db.index(*rel, &key_pos),
            key_slots,
            bind,
            check,
        });
    }
    Some(steps)
}

fn go(steps: &[Step], depth: usize, assign: &mut [Value], f: &mut dyn FnMut(&[Value]) -> bool) -> bool {
    if depth == steps.len() {
        return f(assign);
    }
    let st = &steps[depth];
    let key: Vec<Value> = st.key_slots.iter().map(|&s| assign[s]).collect();
    'next: for &id in st.index.get(&key) {
        let t = st.rel.get(id as usize);
        for &(p, p0) in &st.check {
            if t[p] != t[p0] {
                continue 'next;
            }
        }
        for &(p, s) in &st.bind {
            assign[s] = t[p];
        }
        if !go(steps, depth + 1, assign, f) {
            return false;
        }
    }
    true
}

/// Calls `f` with every homomorphism from `p` into `db` extending `fixed`,
/// until `f` returns false. Slots that occur in no atom and are not fixed hold
/// an arbitrary placeholder.
pub fn search(p: &Pattern, fixed: &[Option<Value>], db: &Database, mut f: impl FnMut(&[Value]) -> bool) {
    assert_eq!(fixed.len(), p.slots);
    let Some(steps) = plan(p, fixed, db) else {
        return;
    };
    let mut assign: Vec<Value> = fixed.iter().map(|v| v.unwrap_or(Value::int(0))).collect();
    go(&steps, 0, &mut assign, &mut f);
}

/// Whether some homomorphism from `p` to `db` extends `fixed`.
pub fn exists(p: &Pattern, fixed: &[Option<Value>], db: &Database) -> bool {
    let mut found = false;
    search(p, fixed, db, |_| {
        found = true;
        false
    });
    found
}

pub type Homomorphism = IndexMap<Var, Value>;

/// Homomorphisms from the atoms of `q` into `db` that agree with `fixed`.
pub fn find_homomorphisms(
    q: &ConjunctiveQuery,
    db: &Database,
    fixed: &[(Var, Value)],
    limit: Option<usize>,
) -> Vec<Homomorphism> {
    let vars = q.vars();
    let Some(slots) = fix_slots(&vars, fixed) else {
        return Vec::new();
    };
    let p = Pattern::from_atoms(q.atoms(), &vars);
    let mut out = Vec::new();
    search(&p, &slots, db, |a| {
        out.push(vars.iter().copied().zip(a.iter().copied()).collect());
        limit.map_or(true, |l| out.len() < l)
    });
    out
}

fn fix_slots(vars: &[Var], fixed: &[(Var, Value)]) -> Option<Vec<Option<Value>>> {
    let mut slots = vec![None; vars.len()];
    for (v, val) in fixed {
        let i = vars.iter().position(|x| x == v)?;
        match slots[i] {
            Some(old) if old != *val => return None,
            _ => slots[i] = Some(*val),
        }
    }
    Some(slots)
}

/// q(D) by exhaustive homomorphism search, in discovery order.
pub fn brute_force_answers(q: &ConjunctiveQuery, db: &Database) -> IndexSet<Vec<Value>> {
    let vars = q.vars();
    let p = Pattern::from_atoms(q.atoms(), &vars);
    let proj: Vec<usize> = q
        .answer_vars()
        .iter()
        .map(|x| vars.iter().position(|v| v == x).unwrap())
        .collect();
    let mut out = IndexSet::new();
    search(&p, &vec![None; vars.len()], db, |a| {
        out.insert(proj.iter().map(|&i| a[i]).collect());
        true
    });
    out
}

/// Whether `c` is an answer of `q` over `db`, by direct search.
pub fn is_answer(q: &ConjunctiveQuery, db: &Database, c: &[Value]) -> bool {
    if c.len() != q.arity() {
        return false;
    }
    let vars = q.vars();
    let fixed: Vec<(Var, Value)> = q.answer_vars().iter().copied().zip(c.iter().copied()).collect();
    let Some(slots) = fix_slots(&vars, &fixed) else {
        return false;
    };
    exists(&Pattern::from_atoms(q.atoms(), &vars), &slots, db)
}

/// Homomorphism between databases that acts as `fixed` on the given values.
pub fn database_homomorphism(
    src: &Database,
    dst: &Database,
    fixed: &HashMap<Value, Value>,
) -> Option<HashMap<Value, Value>> {
    let (p, dom) = Pattern::from_database(src);
    let slots: Vec<Option<Value>> = dom.iter().map(|v| fixed.get(v).copied()).collect();
    let mut found = None;
    search(&p, &slots, dst, |a| {
        found = Some(dom.iter().copied().zip(a.iter().copied()).collect());
        false
    });
    found
}

/// A body match whose frontier image has no head witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub tgd: usize,
    pub frontier: Vec<(Var, Value)>,
}

/// Frontier images of body matches of `t` in `db`, deduplicated.
pub(crate) fn frontier_matches(t: &Tgd, db: &Database) -> IndexSet<Vec<Value>> {
    let vars: Vec<Var> = t.body_vars().into_iter().collect();
    let frontier = t.frontier();
    let proj: Vec<usize> = frontier
        .iter()
        .map(|x| vars.iter().position(|v| v == x).unwrap())
        .collect();
    let p = Pattern::from_atoms(&t.body, &vars);
    let mut out = IndexSet::new();
    search(&p, &vec![None; vars.len()], db, |a| {
        out.insert(proj.iter().map(|&i| a[i]).collect());
        true
    });
    out
}

/// Whether the head of `t` has a match in `db` extending the frontier image.
pub(crate) fn head_satisfied(t: &Tgd, frontier_image: &[Value], db: &Database) -> bool {
    let vars: Vec<Var> = t.head_vars().into_iter().collect();
    let frontier = t.frontier();
    let mut slots = vec![None; vars.len()];
    for (x, v) in frontier.iter().zip(frontier_image) {
        slots[vars.iter().position(|y| y == x).unwrap()] = Some(*v);
    }
    exists(&Pattern::from_atoms(&t.head, &vars), &slots, db)
}

/// `Ok` when `db` satisfies every TGD, otherwise the first violation found.
pub fn satisfies_tgds(db: &Database, tgds: &TgdSet) -> Result<(), Violation> {
    for (i, t) in tgds.tgds().iter().enumerate() {
        let frontier = t.frontier();
        for img in frontier_matches(t, db) {
            if !head_satisfied(t, &img, db) {
                return Err(Violation {
                    tgd: i,
                    frontier: frontier.iter().copied().zip(img).collect(),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_database, parse_query, parse_tgds};

    #[test]
    fn path_answers() {
        let q = parse_query("q(x,z) :- R(x,y), R(y,z).").unwrap();
        let db = parse_database("R(1,2). R(2,3). R(3,3).").unwrap();
        let ans = brute_force_answers(&q, &db);
        let want: IndexSet<Vec<Value>> = [[1, 3], [2, 3], [3, 3]]
            .iter()
            .map(|r| r.iter().map(|&i| Value::int(i)).collect())
            .collect();
        assert_eq!(ans.len(), 3);
        assert!(ans.iter().all(|a| want.contains(a)));
    }

    #[test]
    fn repeated_variable_filters() {
        let q = parse_query("q(x) :- R(x,x).").unwrap();
        let db = parse_database("R(1,2). R(3,3).").unwrap();
        let ans: Vec<_> = brute_force_answers(&q, &db).into_iter().collect();
        assert_eq!(ans, vec![vec![Value::int(3)]]);
    }

    #[test]
    fn fixed_assignment_and_limit() {
        let q = parse_query("q(x) :- R(x,y).").unwrap();
        let db = parse_database("R(1,2). R(1,3). R(2,3).").unwrap();
        let hs = find_homomorphisms(&q, &db, &[(Var::new("x"), Value::int(1))], None);
        assert_eq!(hs.len(), 2);
        let hs = find_homomorphisms(&q, &db, &[], Some(1));
        assert_eq!(hs.len(), 1);
    }

    #[test]
    fn violation_witness() {
        let db = parse_database("R(a,b).").unwrap();
        let t = parse_tgds("R(x,y) -> S(y,z).").unwrap();
        let v = satisfies_tgds(&db, &t).unwrap_err();
        assert_eq!(v.tgd, 0);
        assert_eq!(v.frontier, vec![(Var::new("y"), Value::name("b"))]);
        let db = parse_database("R(a,b). S(b,c).").unwrap();
        assert!(satisfies_tgds(&db, &t).is_ok());
    }

    #[test]
    fn database_hom_respects_fixed() {
        let a = parse_database("E(1,2). E(2,3).").unwrap();
        let b = parse_database("E(1,1).").unwrap();
        assert!(database_homomorphism(&a, &b, &HashMap::new()).is_some());
        let fixed = HashMap::from([(Value::int(1), Value::int(2))]);
        assert!(database_homomorphism(&a, &b, &fixed).is_none());
    }
}
