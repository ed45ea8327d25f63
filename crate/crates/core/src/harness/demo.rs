//! Dedicated algorithms for registered pairs that the generic engines do
//! not cover. Each checks its TGDs first and refuses databases violating
//! them.

use std::sync::Arc;

use indexmap::IndexSet;

use crate::catalog;
use crate::engines::{enumerate, AnswerStream, CheatersDedup, Enumeration};
use crate::error::{Error, Result};
use crate::model::database::{Database, Index};
use crate::model::homomorphism::satisfies_tgds;
use crate::model::query::TgdSet;
use crate::parse::parse_query;
use crate::symbol::{Sym, Value};

fn require(db: &Database, t: &TgdSet) -> Result<()> {
    satisfies_tgds(db, t).map_err(|v| Error::TgdViolation {
        tgd: v.tgd,
        frontier: v.frontier.into_iter().map(|(_, c)| c).collect(),
    })
}

fn rel_len(db: &Database, r: Sym) -> u64 {
    db.relation(r).map_or(0, |r| r.len() as u64)
}

/// Decides the Boolean square-with-diagonal query in linear time: keep the
/// `S(a,c)` facts with some `L(a,_)` and some `R(c,_)`, then test `T(c,d)`
/// for one `L(a,d)` each. Returns the answer and the step count.
pub fn demo_qsquare(db: &Database) -> Result<(bool, u64)> {
    require(db, &catalog::square_angle().1)?;
    let (s, l, r, t) = (Sym::new("S"), Sym::new("L"), Sym::new("R"), Sym::new("T"));
    let Some(srel) = db.relation(s) else {
        return Ok((false, 1));
    };
    // building each index scans its relation once
    let mut steps = rel_len(db, l) + rel_len(db, r) + rel_len(db, t);
    let l_by_first = db.index(l, &[0]);
    let r_by_first = db.index(r, &[0]);
    let lrel = db.relation(l);
    for fact in srel.iter() {
        steps += 3;
        let (a, c) = (fact[0], fact[1]);
        let ls = l_by_first.get(&[a]);
        if ls.is_empty() || r_by_first.get(&[c]).is_empty() {
            continue;
        }
        let d = lrel.unwrap().get(ls[0] as usize)[1];
        if db.contains(t, &[c, d]) {
            return Ok((true, steps));
        }
    }
    Ok((false, steps.max(1)))
}

/// Inner stream of [`demo_ex83`]: every answer at most twice.
pub struct Ex83Stream {
    sub: Enumeration,
    db: Database,
    r1: Sym,
    p_by_second: Arc<Index>,
    /// current sub-answer `(a,b,c,d)` and the next `P` row to use
    pending: Option<([Value; 4], usize)>,
    steps: u64,
}

impl AnswerStream for Ex83Stream {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>> {
        self.steps += 1;
        if let Some(([a, b, c, d], k)) = self.pending {
            let rows = self.p_by_second.get(&[c]);
            if k < rows.len() {
                let e = self.db.relation(Sym::new("P")).unwrap().get(rows[k] as usize)[0];
                self.pending = Some(([a, b, c, d], k + 1));
                return Ok(Some(vec![a, b, c, d, e]));
            }
            self.pending = None;
        }
        let Some(t) = self.sub.next() else {
            return Ok(None);
        };
        let (a, b, c, d) = (t[0], t[1], t[2], t[3]);
        self.steps += 1;
        if self.db.contains(self.r1, &[a, b]) {
            self.pending = Some(([a, b, c, d], 0));
        }
        Ok(Some(vec![d, b, c, d, a]))
    }

    fn steps(&self) -> u64 {
        self.sub.steps() + self.steps
    }
}

/// Enumerates the 4-cycle query with a `P` tail under `S1⊆R1, S2⊆R2,
/// R2⊆P`. For each answer `(a,b,c,d)` of the acyclic free-connex subquery
/// `R2(x1,x3), S1(x4,x2), S2(x4,x3)` it emits `(d,b,c,d,a)`, and if
/// `R1(a,b)` also every `(a,b,c,d,e)` with `P(e,c)`.
pub fn demo_ex83(db: &Database) -> Result<(CheatersDedup<Ex83Stream>, u64)> {
    require(db, &catalog::cycle_with_tail().1)?;
    let sub_q = parse_query("q(x1,x2,x3,x4) :- R2(x1,x3), S1(x4,x2), S2(x4,x3).").unwrap();
    let sub = enumerate(&sub_q, db);
    let p = Sym::new("P");
    let pre = sub.stats.preprocessing_steps + rel_len(db, p);
    let stream = Ex83Stream {
        sub,
        db: db.clone(),
        r1: Sym::new("R1"),
        p_by_second: db.index(p, &[1]),
        pending: None,
        steps: 0,
    };
    Ok((CheatersDedup::new(stream, 2), pre))
}

/// Inner stream of [`demo_unary`]: every answer at most twice.
pub struct UnaryStream {
    sub: Enumeration,
    pairs: IndexSet<(Value, Value)>,
    s: Vec<Value>,
    /// position in `pairs × s` once the subquery is exhausted
    phase_two: Option<(usize, usize)>,
    steps: u64,
}

impl AnswerStream for UnaryStream {
    fn next_answer(&mut self) -> Result<Option<Vec<Value>>> {
        self.steps += 1;
        if self.phase_two.is_none() {
            if let Some(t) = self.sub.next() {
                let (a, c, b) = (t[0], t[1], t[2]);
                self.pairs.insert((a, c));
                return Ok(Some(vec![a, c, b]));
            }
            self.phase_two = Some((0, 0));
        }
        let (i, j) = self.phase_two.unwrap();
        if i >= self.pairs.len() || self.s.is_empty() {
            return Ok(None);
        }
        let (a, c) = self.pairs[i];
        let e = self.s[j];
        self.phase_two = Some(if j + 1 < self.s.len() { (i, j + 1) } else { (i + 1, 0) });
        Ok(Some(vec![a, c, e]))
    }

    fn steps(&self) -> u64 {
        self.sub.steps() + self.steps
    }
}

/// Enumerates `R1(x1,z), R2(z,x2), S(x3)` under `R1(v1,v2) -> S(v2)`: first
/// `(a,c,b)` for each answer `(a,c,b)` of `R1(y1,y3), R2(y3,y2)`, storing
/// `(a,c)`, then `(a,c,e)` for each stored pair and each `S(e)`.
pub fn demo_unary(db: &Database) -> Result<(CheatersDedup<UnaryStream>, u64)> {
    require(db, &catalog::path_and_unary().1)?;
    let sub_q = parse_query("q(y1,y2,y3) :- R1(y1,y3), R2(y3,y2).").unwrap();
    let sub = enumerate(&sub_q, db);
    let s: Vec<Value> = db
        .relation(Sym::new("S"))
        .map(|r| r.iter().map(|t| t[0]).collect())
        .unwrap_or_default();
    let pre = sub.stats.preprocessing_steps + s.len() as u64;
    let stream = UnaryStream {
        sub,
        pairs: IndexSet::new(),
        s,
        phase_two: None,
        steps: 0,
    };
    Ok((CheatersDedup::new(stream, 2), pre))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::{chase_to_fixpoint, DEFAULT_BUDGET};
    use crate::engines::{drain_with_delays, EnginePath};
    use crate::harness::gen::{gen_random_satisfying, joint_schema};
    use crate::model::homomorphism::brute_force_answers;
    use crate::parse::parse_database;
    use std::collections::HashSet;

    fn as_set(v: Vec<Vec<Value>>) -> HashSet<Vec<Value>> {
        let n = v.len();
        let s: HashSet<_> = v.into_iter().collect();
        assert_eq!(s.len(), n, "duplicate output");
        s
    }

    #[test]
    fn qsquare_matches_oracle() {
        let (q, t) = catalog::square_angle();
        let canon = q.canonical_database();
        let chased = chase_to_fixpoint(&canon, &t, DEFAULT_BUDGET).unwrap();
        assert!(demo_qsquare(&chased).unwrap().0);
        assert!(!demo_qsquare(&Database::new()).unwrap().0);
        let schema = joint_schema(&q, &t).unwrap();
        for seed in 0..40 {
            let db = gen_random_satisfying(seed, &schema, 30, 6, &t, DEFAULT_BUDGET).unwrap();
            let expect = !brute_force_answers(&q, &db).is_empty();
            assert_eq!(demo_qsquare(&db).unwrap().0, expect, "seed {seed}");
        }
        // L(1,2), S(1,3), R(3,4), B(1,4) without T(3,2)
        let bad = parse_database("L(1,2). S(1,3). R(3,4). B(1,4).").unwrap();
        assert!(matches!(demo_qsquare(&bad), Err(Error::TgdViolation { .. })));
    }

    #[test]
    fn ex83_matches_oracle() {
        let (q, t) = catalog::cycle_with_tail();
        let canon = chase_to_fixpoint(&q.canonical_database(), &t, DEFAULT_BUDGET).unwrap();
        let schema = joint_schema(&q, &t).unwrap();
        let mut dbs = vec![canon];
        for seed in 0..30 {
            dbs.push(gen_random_satisfying(seed, &schema, 40, 5, &t, DEFAULT_BUDGET).unwrap());
        }
        for db in dbs {
            let (mut s, _) = demo_ex83(&db).unwrap();
            let (out, _) = drain_with_delays(&mut s).unwrap();
            let expect: HashSet<_> = brute_force_answers(&q, &db).into_iter().collect();
            assert_eq!(as_set(out), expect);
        }
        // step 2 only repeats step-1 outputs here
        let db = parse_database("S1(4,2). S2(4,3). R1(4,2). R2(4,3). R2(1,3). P(4,3). P(1,3).").unwrap();
        let (mut s, _) = demo_ex83(&db).unwrap();
        let out = as_set(drain_with_delays(&mut s).unwrap().0);
        assert_eq!(out.len(), 2);
        assert_eq!(out, brute_force_answers(&q, &db).into_iter().collect());
        let bad = parse_database("S1(1,2).").unwrap();
        assert!(demo_ex83(&bad).is_err());
    }

    #[test]
    fn unary_matches_oracle() {
        let (q, t) = catalog::path_and_unary();
        let db = parse_database("R1(a,b). R2(b,c). S(b).").unwrap();
        let (mut s, _) = demo_unary(&db).unwrap();
        let out = drain_with_delays(&mut s).unwrap().0;
        assert_eq!(out, vec![vec![Value::name("a"), Value::name("c"), Value::name("b")]]);
        let db = parse_database("R2(b,c). S(b).").unwrap();
        assert!(drain_with_delays(&mut demo_unary(&db).unwrap().0).unwrap().0.is_empty());
        let schema = joint_schema(&q, &t).unwrap();
        for seed in 0..30 {
            let db = gen_random_satisfying(seed, &schema, 40, 6, &t, DEFAULT_BUDGET).unwrap();
            let (mut s, _) = demo_unary(&db).unwrap();
            let out = as_set(drain_with_delays(&mut s).unwrap().0);
            assert_eq!(out, brute_force_answers(&q, &db).into_iter().collect());
        }
        assert!(demo_unary(&parse_database("R1(a,b).").unwrap()).is_err());
    }

    #[test]
    fn sub_enumerations_take_the_tractable_path() {
        let db = parse_database("S1(4,2). S2(4,3). R1(4,2). R2(4,3). P(4,3).").unwrap();
        let (s, _) = demo_ex83(&db).unwrap();
        assert_eq!(s.into_inner().sub.stats.path, EnginePath::Tractable);
    }
}
