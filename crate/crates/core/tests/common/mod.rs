#![allow(dead_code)]

use cqlin::model::query::{Atom, ConjunctiveQuery, Tgd, TgdSet, Var};
use cqlin::{Database, Sym, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const SCHEMA: [(&str, usize); 4] = [("R0", 1), ("R1", 2), ("R2", 2), ("R3", 3)];

pub fn schema() -> Vec<(Sym, usize)> {
    SCHEMA.iter().map(|&(r, a)| (Sym::new(r), a)).collect()
}

fn var(i: usize) -> Var {
    Var::new(&format!("v{i}"))
}

fn atom(rng: &mut ChaCha8Rng, rel: usize, vars: usize) -> Atom {
    let (name, arity) = SCHEMA[rel];
    Atom {
        rel: Sym::new(name),
        args: (0..arity).map(|_| var(rng.gen_range(0..vars))).collect(),
    }
}

/// Random query with `1..=max_atoms` atoms over [`SCHEMA`] and a random
/// answer tuple (possibly with repeats).
pub fn random_query(rng: &mut ChaCha8Rng, max_atoms: usize) -> ConjunctiveQuery {
    let n = rng.gen_range(1..=max_atoms);
    let vars = rng.gen_range(1..=5);
    let atoms: Vec<Atom> = (0..n)
        .map(|_| {
            let r = rng.gen_range(0..SCHEMA.len());
            atom(rng, r, vars)
        })
        .collect();
    let mut present: Vec<Var> = Vec::new();
    for a in &atoms {
        for &v in &a.args {
            if !present.contains(&v) {
                present.push(v);
            }
        }
    }
    let k = rng.gen_range(0..=present.len().min(3));
    let mut answer: Vec<Var> = present.choose_multiple(rng, k).copied().collect();
    if k > 0 && rng.gen_bool(0.1) {
        answer.push(answer[0]);
    }
    ConjunctiveQuery::new(answer, atoms).unwrap()
}

pub fn random_db(rng: &mut ChaCha8Rng, facts: usize, dom: i64) -> Database {
    let mut db = Database::new();
    for (r, a) in schema() {
        db.declare(r, a).unwrap();
    }
    for _ in 0..facts {
        let (r, a) = SCHEMA[rng.gen_range(0..SCHEMA.len())];
        let t: Vec<Value> = (0..a).map(|_| Value::int(rng.gen_range(0..dom))).collect();
        db.insert(Sym::new(r), &t).unwrap();
    }
    db
}

/// Random full frontier-guarded TGDs (possibly recursive).
pub fn random_full_guarded(rng: &mut ChaCha8Rng, n: usize) -> TgdSet {
    let mut tgds = Vec::new();
    while tgds.len() < n {
        let guard_rel = rng.gen_range(1..SCHEMA.len());
        let guard = atom(rng, guard_rel, 4);
        let mut body = vec![guard.clone()];
        if rng.gen_bool(0.4) {
            let r = rng.gen_range(0..SCHEMA.len());
            body.push(atom(rng, r, 4));
        }
        let gv: Vec<Var> = guard.args.clone();
        let (name, arity) = SCHEMA[rng.gen_range(0..SCHEMA.len())];
        let head = Atom {
            rel: Sym::new(name),
            args: (0..arity).map(|_| *gv.choose(rng).unwrap()).collect(),
        };
        if let Ok(t) = Tgd::new(body, vec![head]) {
            tgds.push(t);
        }
    }
    TgdSet::new(tgds).unwrap()
}

/// Random non-recursive TGDs: a body relation always precedes the head
/// relation in [`SCHEMA`] order. Heads may carry existential variables.
pub fn random_nonrecursive(rng: &mut ChaCha8Rng, n: usize) -> TgdSet {
    let mut tgds = Vec::new();
    while tgds.len() < n {
        let head_rel = rng.gen_range(1..SCHEMA.len());
        let body: Vec<Atom> = (0..rng.gen_range(1..=2))
            .map(|_| {
                let r = rng.gen_range(0..head_rel);
                atom(rng, r, 3)
            })
            .collect();
        let mut bv: Vec<Var> = Vec::new();
        for a in &body {
            for &v in &a.args {
                if !bv.contains(&v) {
                    bv.push(v);
                }
            }
        }
        let (name, arity) = SCHEMA[head_rel];
        let head = Atom {
            rel: Sym::new(name),
            args: (0..arity)
                .map(|_| {
                    if rng.gen_bool(0.25) {
                        Var::new("w")
                    } else {
                        *bv.choose(rng).unwrap()
                    }
                })
                .collect(),
        };
        if let Ok(t) = Tgd::new(body, vec![head]) {
            tgds.push(t);
        }
    }
    TgdSet::new(tgds).unwrap()
}

/// Either kind, with 1..=2 rules.
pub fn random_tgds(rng: &mut ChaCha8Rng) -> TgdSet {
    let n = rng.gen_range(1..=2);
    if rng.gen_bool(0.5) {
        random_full_guarded(rng, n)
    } else {
        random_nonrecursive(rng, n)
    }
}
