//! Skolem chase, cores, equivalence and minimization under TGDs.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::homomorphism::{database_homomorphism, exists, frontier_matches, search, Pattern};
use crate::model::query::{Atom, ConjunctiveQuery, TgdSet, Var};
use crate::structure::profile_tgds;
use crate::symbol::{SkolemId, Sym, Value, ValueKind};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// Outcome of a chase run. `terminated` is false when the step budget ran out
/// with applicable TGDs left.
#[derive(Clone, Debug)]
pub struct ChaseResult {
    pub instance: Database,
    pub steps: u64,
    pub terminated: bool,
    /// Applied triggers, in order: TGD index and frontier image.
    pub log: Vec<(usize, Vec<Value>)>,
}

enum HeadArg {
    Frontier(usize),
    Exist(Sym),
}

struct Compiled {
    body: Pattern,
    body_vars: Vec<Var>,
    frontier_slots: Vec<usize>,
    head: Vec<(Sym, Vec<HeadArg>)>,
}

fn compile(tgds: &TgdSet) -> Vec<Compiled> {
    tgds.tgds()
        .iter()
        .map(|t| {
            let body_vars: Vec<Var> = t.body_vars().into_iter().collect();
            let frontier = t.frontier();
            Compiled {
                body: Pattern::from_atoms(&t.body, &body_vars),
                frontier_slots: frontier
                    .iter()
                    .map(|x| body_vars.iter().position(|v| v == x).unwrap())
                    .collect(),
                head: t
                    .head
                    .iter()
                    .map(|a| {
                        let args = a
                            .args
                            .iter()
                            .map(|v| match frontier.iter().position(|f| f == v) {
                                Some(i) => HeadArg::Frontier(i),
                                None => HeadArg::Exist(v.0),
                            })
                            .collect();
                        (a.rel, args)
                    })
                    .collect(),
                body_vars,
            }
        })
        .collect()
}

fn head_facts(ti: usize, c: &Compiled, frontier: &[Value]) -> Vec<(Sym, Vec<Value>)> {
    let mut nulls: HashMap<Sym, Value> = HashMap::new();
    c.head
        .iter()
        .map(|(rel, args)| {
            let t = args
                .iter()
                .map(|a| match a {
                    HeadArg::Frontier(i) => frontier[*i],
                    HeadArg::Exist(z) => *nulls.entry(*z).or_insert_with(|| {
                        Value::null(SkolemId {
                            tgd: ti as u32,
                            var: *z,
                            frontier: frontier.into(),
                        })
                    }),
                })
                .collect();
            (*rel, t)
        })
        .collect()
}

/// Runs the Skolem chase with a FIFO queue of triggers. A trigger is a TGD
/// and a frontier image; it applies when one of its Skolem head facts is
/// missing. Each application counts as one step.
pub fn skolem_chase(db: &Database, tgds: &TgdSet, budget: u64) -> ChaseResult {
    let compiled = compile(tgds);
    let mut inst = db.clone();
    for (r, a) in tgds.schema().expect("TGD schema is consistent") {
        // a conflict here surfaces when facts are inserted
        let _ = inst.declare(r, a);
    }
    let mut queue: VecDeque<(usize, Vec<Value>)> = VecDeque::new();
    let mut seen: HashSet<(usize, Vec<Value>)> = HashSet::new();
    for (ti, t) in tgds.tgds().iter().enumerate() {
        for f in frontier_matches(t, &inst) {
            if seen.insert((ti, f.clone())) {
                queue.push_back((ti, f));
            }
        }
    }
    let mut steps = 0;
    let mut log = Vec::new();
    while let Some((ti, f)) = queue.pop_front() {
        let facts = head_facts(ti, &compiled[ti], &f);
        if facts.iter().all(|(r, t)| inst.contains(*r, t)) {
            continue;
        }
        if steps == budget {
            queue.push_front((ti, f));
            return ChaseResult {
                instance: inst,
                steps,
                terminated: false,
                log,
            };
        }
        steps += 1;
        let mut added = Vec::new();
        for (r, t) in facts {
            if inst.insert(r, &t).expect("head arity matches schema") {
                added.push((r, t));
            }
        }
        log.push((ti, f));
        for (rel, t) in added {
            for (tj, c) in compiled.iter().enumerate() {
                for (rel_b, args) in &c.body.atoms {
                    if *rel_b != rel {
                        continue;
                    }
                    let mut fixed: Vec<Option<Value>> = vec![None; c.body_vars.len()];
                    let ok = args.iter().zip(&t).all(|(&s, &v)| match fixed[s] {
                        Some(old) => old == v,
                        None => {
                            fixed[s] = Some(v);
                            true
                        }
                    });
                    if !ok {
                        continue;
                    }
                    let mut found = Vec::new();
                    search(&c.body, &fixed, &inst, |a| {
                        found.push(c.frontier_slots.iter().map(|&s| a[s]).collect::<Vec<_>>());
                        true
                    });
                    for g in found {
                        if seen.insert((tj, g.clone())) {
                            queue.push_back((tj, g));
                        }
                    }
                }
            }
        }
    }
    ChaseResult {
        instance: inst,
        steps,
        terminated: true,
        log,
    }
}

/// Chase that must terminate: fails on non-terminating sets or an exhausted
/// budget.
pub fn chase_to_fixpoint(db: &Database, tgds: &TgdSet, budget: u64) -> Result<Database> {
    if !profile_tgds(tgds).chase_terminates() {
        return Err(Error::NonTerminating);
    }
    let r = skolem_chase(db, tgds, budget);
    if !r.terminated {
        return Err(Error::BudgetExhausted(budget));
    }
    Ok(r.instance)
}

/// ch_T(q) as a query. Atoms of q come first, in order; nulls become fresh
/// existential variables.
pub fn chase_query(q: &ConjunctiveQuery, tgds: &TgdSet, budget: u64) -> Result<ConjunctiveQuery> {
    let inst = chase_to_fixpoint(&q.canonical_database(), tgds, budget)?;
    let used: HashSet<&str> = q.vars().iter().map(|v| v.name()).collect();
    let mut names: HashMap<Value, Var> = HashMap::new();
    let mut fresh = 0;
    let mut atoms: Vec<Atom> = q.atoms().to_vec();
    let mut have: HashSet<Atom> = atoms.iter().cloned().collect();
    for (rel, t) in inst.facts() {
        let args = t
            .iter()
            .map(|&v| match v.kind() {
                ValueKind::Null(_) => *names.entry(v).or_insert_with(|| loop {
                    fresh += 1;
                    let n = format!("_n{fresh}");
                    if !used.contains(n.as_str()) {
                        break Var::new(&n);
                    }
                }),
                ValueKind::Name(s) => Var(s),
                _ => unreachable!("canonical databases hold only variable names"),
            })
            .collect();
        let a = Atom { rel, args };
        if have.insert(a.clone()) {
            atoms.push(a);
        }
    }
    q.with_atoms(atoms)
}

/// An idempotent endomorphism of `db`, fixing `fixed`, whose image is a core.
fn retraction(db: &Database, fixed: &[Value]) -> HashMap<Value, Value> {
    let fixed_set: HashSet<Value> = fixed.iter().copied().collect();
    let identity: HashMap<Value, Value> = fixed.iter().map(|&v| (v, v)).collect();
    let mut total: HashMap<Value, Value> = db.domain().iter().map(|&v| (v, v)).collect();
    let mut cur = db.clone();
    'outer: loop {
        // cheap wins: fold one value onto another
        let dom: Vec<Value> = cur.domain().iter().copied().collect();
        for &u in &dom {
            if fixed_set.contains(&u) {
                continue;
            }
            for &w in &dom {
                if w == u {
                    continue;
                }
                let img = cur.map_values(|x| if x == u { w } else { x });
                if img.is_subset_of(&cur) {
                    for v in total.values_mut() {
                        if *v == u {
                            *v = w;
                        }
                    }
                    cur = img;
                    continue 'outer;
                }
            }
        }
        let facts: Vec<(Sym, Vec<Value>)> = cur.facts().map(|(r, t)| (r, t.to_vec())).collect();
        for (r, t) in facts {
            let target = cur.without(r, &t);
            if let Some(h) = database_homomorphism(&cur, &target, &identity) {
                for v in total.values_mut() {
                    *v = h[v];
                }
                cur = cur.map_values(|x| h[&x]);
                continue 'outer;
            }
        }
        return total;
    }
}

/// The core of `db`, keeping `fixed` values pointwise.
pub fn core_of_database(db: &Database, fixed: &[Value]) -> Database {
    let h = retraction(db, fixed);
    db.map_values(|v| h[&v])
}

/// The core of `q` with answer variables fixed. Surviving atoms keep their
/// original relative order.
pub fn core_of_query(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let fixed: Vec<Value> = q.answer_vars().iter().map(|v| v.frozen()).collect();
    let h = retraction(&q.canonical_database(), &fixed);
    let mut seen = HashSet::new();
    let atoms: Vec<Atom> = q
        .atoms()
        .iter()
        .map(|a| Atom {
            rel: a.rel,
            args: a
                .args
                .iter()
                .map(|v| match h[&v.frozen()].kind() {
                    ValueKind::Name(s) => Var(s),
                    _ => unreachable!(),
                })
                .collect(),
        })
        .filter(|a| seen.insert(a.clone()))
        .collect();
    q.with_atoms(atoms).expect("the core keeps answer variables")
}

/// `sub ⊆_T sup`: sup maps into ch_T(sub) sending answer variables
/// positionally.
pub fn contained_wrt(
    sub: &ConjunctiveQuery,
    sup: &ConjunctiveQuery,
    tgds: &TgdSet,
    budget: u64,
) -> Result<bool> {
    if sub.arity() != sup.arity() {
        return Ok(false);
    }
    let inst = chase_to_fixpoint(&sub.canonical_database(), tgds, budget)?;
    let vars = sup.vars();
    let mut fixed: Vec<Option<Value>> = vec![None; vars.len()];
    for (x, y) in sup.answer_vars().iter().zip(sub.answer_vars()) {
        let i = vars.iter().position(|v| v == x).unwrap();
        match fixed[i] {
            Some(old) if old != y.frozen() => return Ok(false),
            _ => fixed[i] = Some(y.frozen()),
        }
    }
    Ok(exists(&Pattern::from_atoms(sup.atoms(), &vars), &fixed, &inst))
}

/// q1 ≡_T q2. Requires a chase-terminating TGD set.
pub fn equiv_wrt(q1: &ConjunctiveQuery, q2: &ConjunctiveQuery, tgds: &TgdSet) -> Result<bool> {
    Ok(contained_wrt(q1, q2, tgds, DEFAULT_BUDGET)? && contained_wrt(q2, q1, tgds, DEFAULT_BUDGET)?)
}

/// Removes atoms one at a time in index order while the query stays
/// equivalent under `tgds`, restarting after each removal.
pub fn minimize_wrt(q: &ConjunctiveQuery, tgds: &TgdSet) -> Result<ConjunctiveQuery> {
    if !profile_tgds(tgds).chase_terminates() {
        return Err(Error::NonTerminating);
    }
    let mut cur = q.clone();
    'restart: loop {
        for i in 0..cur.atoms().len() {
            let mut atoms = cur.atoms().to_vec();
            atoms.remove(i);
            let Ok(cand) = cur.with_atoms(atoms) else {
                continue;
            };
            // cand ⊇ cur holds trivially; check the other direction
            if contained_wrt(&cand, &cur, tgds, DEFAULT_BUDGET)? {
                cur = cand;
                continue 'restart;
            }
        }
        return Ok(cur);
    }
}

/// Adds a unary atom `A_x(x)` for every variable `x`, with relation names
/// chosen to avoid the existing schema.
pub fn colored_query(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let rels: HashSet<Sym> = q.relations().into_iter().collect();
    let mut atoms = q.atoms().to_vec();
    for v in q.vars() {
        let mut name = format!("A_{v}");
        while rels.contains(&Sym::new(&name)) {
            name.insert(0, '_');
        }
        atoms.push(Atom {
            rel: Sym::new(&name),
            args: vec![v],
        });
    }
    q.with_atoms(atoms).expect("coloring keeps the query valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::homomorphism::satisfies_tgds;
    use crate::parse::{parse_database, parse_query, parse_tgds};

    #[test]
    fn existential_chase_adds_skolem_fact() {
        let db = parse_database("R(a,b).").unwrap();
        let t = parse_tgds("R(x,y) -> S(y,z).").unwrap();
        let r = skolem_chase(&db, &t, DEFAULT_BUDGET);
        assert!(r.terminated);
        assert_eq!(r.steps, 1);
        let s = r.instance.relation(Sym::new("S")).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(0)[0], Value::name("b"));
        assert!(s.get(0)[1].is_null());
        assert!(satisfies_tgds(&r.instance, &t).is_ok());
    }

    #[test]
    fn full_chase_on_satisfied_db_is_identity() {
        let db = parse_database("R(a,b). S(a,b).").unwrap();
        let t = parse_tgds("R(x,y) -> S(x,y).").unwrap();
        let r = skolem_chase(&db, &t, DEFAULT_BUDGET);
        assert_eq!(r.steps, 0);
        assert_eq!(r.instance, db);
    }

    #[test]
    fn budget_exhaustion() {
        let db = parse_database("R(a,b).").unwrap();
        let t = parse_tgds("R(x,y) -> R(y,z).").unwrap();
        let r = skolem_chase(&db, &t, 10);
        assert!(!r.terminated);
        assert_eq!(r.steps, 10);
        assert!(matches!(
            chase_to_fixpoint(&db, &t, 10),
            Err(Error::NonTerminating)
        ));
    }

    #[test]
    fn triangle_minimizes_under_completion() {
        let q = parse_query("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).").unwrap();
        let t = parse_tgds("R1(x1,x2), R2(x2,x3) -> R3(x3,x1).").unwrap();
        let m = minimize_wrt(&q, &t).unwrap();
        assert_eq!(m.to_string(), "q() :- R1(x1,x2), R2(x2,x3).");
        assert!(equiv_wrt(&m, &q, &t).unwrap());
    }

    #[test]
    fn core_folds_redundant_path() {
        let q = parse_query("q(x) :- R(x,y), R(x,z), S(z).").unwrap();
        assert_eq!(core_of_query(&q).to_string(), "q(x) :- R(x,z), S(z).");
        let q = parse_query("q(x,y) :- R(x,y), R(x,z).").unwrap();
        assert_eq!(core_of_query(&q).to_string(), "q(x,y) :- R(x,y).");
    }

    #[test]
    fn core_of_database_keeps_fixed() {
        let db = parse_database("E(1,2). E(2,1). E(3,3).").unwrap();
        let c = core_of_database(&db, &[]);
        assert_eq!(c.len(), 1);
        let c = core_of_database(&db, &[Value::int(1)]);
        assert!(c.len() >= 2);
    }

    #[test]
    fn chase_query_names_nulls() {
        let q = parse_query("q(x) :- R(x,y).").unwrap();
        let t = parse_tgds("R(x,y) -> S(y,z).").unwrap();
        let c = chase_query(&q, &t, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.to_string(), "q(x) :- R(x,y), S(y,_n1).");
    }

    #[test]
    fn equiv_refuses_recursive_existential() {
        let q = parse_query("q() :- R(x,y).").unwrap();
        let t = parse_tgds("R(x,y) -> R(y,z).").unwrap();
        assert!(matches!(equiv_wrt(&q, &q, &t), Err(Error::NonTerminating)));
    }

    #[test]
    fn coloring_adds_unary_atoms() {
        let q = parse_query("q(x) :- R(x,y).").unwrap();
        let c = colored_query(&q);
        assert_eq!(c.to_string(), "q(x) :- R(x,y), A_x(x), A_y(y).");
    }
}
