use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::query::Atom;
use crate::parse::{parse_database, parse_query, parse_var_list};
use crate::structure::{is_acyclic, is_free_connex};

fn names(t: &[&str]) -> Vec<Value> {
    t.iter().map(|s| Value::name(s)).collect()
}

#[test]
fn single_test_examples() {
    let q = parse_query("q(x1,x2) :- R1(x1,y), R2(y,x2).").unwrap();
    let db = parse_database("R1(a,b). R2(b,c).").unwrap();
    let (yes, st) = single_test(&q, &db, &names(&["a", "c"])).unwrap();
    assert!(yes);
    assert_eq!(st.path, EnginePath::Tractable);
    assert!(!single_test(&q, &db, &names(&["a", "b"])).unwrap().0);
    assert!(single_test(&q, &db, &names(&["a"])).is_err());
    let tri = parse_query("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).").unwrap();
    assert_eq!(single_test(&tri, &db, &[]).unwrap().1.path, EnginePath::Fallback);
}

#[test]
fn direct_access_example() {
    let q = parse_query("q(x1,x2) :- R(x1,x2).").unwrap();
    let db = parse_database("R(1,2). R(1,1). R(2,1).").unwrap();
    let order = parse_var_list("x1,x2").unwrap();
    let da = direct_access(&q, &db, &order).unwrap();
    assert_eq!(da.stats.path, EnginePath::Tractable);
    // domain order is first appearance: 1 then 2
    assert_eq!(da.access(1).unwrap(), vec![Value::int(1), Value::int(1)]);
    assert_eq!(da.access(2).unwrap(), vec![Value::int(1), Value::int(2)]);
    assert_eq!(da.access(3).unwrap(), vec![Value::int(2), Value::int(1)]);
    assert!(matches!(da.access(4), Err(Error::OutOfBound { index: 4, count: 3 })));
    assert!(da.access(0).is_err());
    assert_eq!(da.count_prefix(&PrefixConstraint::default()).unwrap(), 3);
    let c = PrefixConstraint {
        values: vec![Value::int(1)],
        interval: Some((Value::int(2), Value::int(2))),
    };
    assert_eq!(da.count_prefix(&c).unwrap(), 1);
    let bad = PrefixConstraint {
        values: vec![],
        interval: Some((Value::int(2), Value::int(1))),
    };
    assert!(da.count_prefix(&bad).is_err());
}

#[test]
fn trio_forces_fallback() {
    let q = parse_query("q(x1,x2,x3) :- R(x1,x3), S(x2,x3).").unwrap();
    let db = parse_database("R(a,c). S(b,c). R(d,c).").unwrap();
    let bad = parse_var_list("x1,x2,x3").unwrap();
    let da = direct_access(&q, &db, &bad).unwrap();
    assert_eq!(da.stats.path, EnginePath::Fallback);
    let good = parse_var_list("x3,x1,x2").unwrap();
    let da2 = direct_access(&q, &db, &good).unwrap();
    assert_eq!(da2.stats.path, EnginePath::Tractable);
    assert_eq!(da.total(), 2);
    assert_eq!(da2.total(), 2);
}

#[test]
fn order_must_be_a_permutation() {
    let q = parse_query("q(x,y) :- R(x,y).").unwrap();
    let db = Database::new();
    assert!(direct_access(&q, &db, &[Var::new("x")]).is_err());
    assert!(direct_access(&q, &db, &[Var::new("x"), Var::new("x")]).is_err());
    assert!(direct_access(&q, &db, &[Var::new("x"), Var::new("z")]).is_err());
}

/// Random query with `n` atoms over relations `R0..R3` (arity by name) and
/// variables `v0..v4`.
pub(crate) fn random_query(rng: &mut ChaCha8Rng, atoms: usize) -> ConjunctiveQuery {
    loop {
        let mut at = Vec::new();
        for _ in 0..atoms {
            let r = rng.gen_range(0..4usize);
            let arity = [1, 2, 2, 3][r];
            let args: Vec<String> = (0..arity).map(|_| format!("v{}", rng.gen_range(0..5))).collect();
            let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
            at.push(Atom::new(&format!("R{r}"), &args));
        }
        let mut vars: Vec<Var> = Vec::new();
        for a in &at {
            for v in a.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let answer: Vec<Var> = vars.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
        if let Ok(q) = ConjunctiveQuery::new(answer, at) {
            return q;
        }
    }
}

pub(crate) fn random_db(rng: &mut ChaCha8Rng, facts: usize, dom: usize) -> Database {
    let mut db = Database::new();
    for (r, arity) in [(0, 1), (1, 2), (2, 2), (3, 3)] {
        db.declare(crate::symbol::Sym::new(&format!("R{r}")), arity).unwrap();
    }
    for _ in 0..facts {
        let r = rng.gen_range(0..4usize);
        let arity = [1, 2, 2, 3][r];
        let t: Vec<Value> = (0..arity).map(|_| Value::int(rng.gen_range(0..dom as i64))).collect();
        db.insert(crate::symbol::Sym::new(&format!("R{r}")), &t).unwrap();
    }
    db
}

#[test]
fn all_modes_agree_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let n = rng.gen_range(1..5);
        let q = random_query(&mut rng, n);
        let facts = rng.gen_range(0..40);
        let db = random_db(&mut rng, facts, 5);
        let brute = brute_force_answers(&q, &db);

        let (cnt, cs) = count(&q, &db).unwrap();
        assert_eq!(cnt, brute.len() as u64, "{q}");
        assert_eq!(cs.path == EnginePath::Tractable, is_acyclic(&q) && is_free_connex(&q));

        let listed: Vec<Vec<Value>> = enumerate(&q, &db).collect();
        assert_eq!(listed.len(), brute.len(), "{q}\n{db}");
        assert!(listed.iter().all(|a| brute.contains(a)));

        let tester = all_test(&q, &db);
        assert_eq!(tester.stats.path == EnginePath::Tractable, is_free_connex(&q));
        let dom: Vec<Value> = db.domain().iter().copied().collect();
        for _ in 0..10 {
            let c: Vec<Value> = if !brute.is_empty() && rng.gen_bool(0.5) {
                brute[rng.gen_range(0..brute.len())].clone()
            } else {
                (0..q.arity())
                    .map(|_| dom.get(rng.gen_range(0..dom.len().max(1))).copied().unwrap_or(Value::int(0)))
                    .collect()
            };
            let truth = brute.contains(&c);
            assert_eq!(tester.test(&c).unwrap(), truth, "{q} {c:?}");
            assert_eq!(single_test(&q, &db, &c).unwrap().0, truth, "{q} {c:?}");
        }

        let mut order = connex::distinct_answer_vars(&q);
        // random permutation
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let da = direct_access(&q, &db, &order).unwrap();
        assert_eq!(da.total(), brute.len() as u64);
        let key = |a: &Vec<Value>| -> Vec<usize> {
            order
                .iter()
                .map(|v| {
                    let i = q.answer_vars().iter().position(|w| w == v).unwrap();
                    db.domain_pos(a[i]).unwrap()
                })
                .collect()
        };
        let mut sorted: Vec<Vec<Value>> = brute.iter().cloned().collect();
        sorted.sort_by_key(key);
        for (i, a) in sorted.iter().enumerate() {
            assert_eq!(&da.access(i as u64 + 1).unwrap(), a, "{q} order {order:?} i={i}");
        }
        // prefix constraints
        for _ in 0..5 {
            if order.is_empty() || dom.is_empty() {
                break;
            }
            let m = rng.gen_range(0..order.len());
            let base = if sorted.is_empty() || rng.gen_bool(0.2) {
                None
            } else {
                Some(key(&sorted[rng.gen_range(0..sorted.len())]))
            };
            let values: Vec<Value> = (0..m)
                .map(|i| match &base {
                    Some(b) => dom[b[i]],
                    None => dom[rng.gen_range(0..dom.len())],
                })
                .collect();
            let lo = rng.gen_range(0..dom.len());
            let hi = rng.gen_range(lo..dom.len());
            let c = PrefixConstraint {
                values: values.clone(),
                interval: Some((dom[lo], dom[hi])),
            };
            let expect = sorted
                .iter()
                .filter(|a| {
                    let k = key(a);
                    (0..m).all(|i| dom[k[i]] == values[i]) && (lo..=hi).contains(&k[m])
                })
                .count() as u64;
            assert_eq!(da.count_prefix(&c).unwrap(), expect, "{q} {order:?} {c:?}");
        }
    }
}

#[test]
fn enumeration_delay_is_flat() {
    // star query with a projection: constant delay regardless of size
    let q = parse_query("q(x,y,z) :- R1(x,y), R2(x,z), R0(x).").unwrap();
    let mut maxes = Vec::new();
    for n in [200i64, 2000, 20000] {
        let mut db = Database::new();
        for i in 0..n {
            db.insert(crate::symbol::Sym::new("R1"), &[Value::int(i % 50), Value::int(i)]).unwrap();
            db.insert(crate::symbol::Sym::new("R2"), &[Value::int(i % 50), Value::int(-i)]).unwrap();
            db.insert(crate::symbol::Sym::new("R0"), &[Value::int(i % 100)]).unwrap();
        }
        let mut e = enumerate(&q, &db);
        assert_eq!(e.stats.path, EnginePath::Tractable);
        let (_, delays) = drain_with_delays(&mut e).unwrap();
        maxes.push(*delays.iter().max().unwrap());
    }
    assert!(maxes.windows(2).all(|w| w[0] == w[1]), "{maxes:?}");
}
