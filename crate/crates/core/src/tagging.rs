//! Self-join-free versions, tagged databases and companion queries.
//!
//! A companion of `(q, T)` is a query `q'` equivalent to `q` under `T`
//! together with a construction that turns any database `D` over the schema
//! of the self-join-free version of `q'` into a tagged database `D_tag` that
//! satisfies `T`, such that `c̄ ∈ q'_sjf(D)` iff `x̄⊗c̄ ∈ q(D_tag)`.

use serde::Serialize;

use crate::chase::{chase_query, core_of_query, minimize_wrt, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::query::{Atom, ConjunctiveQuery, TgdSet, Var};
use crate::structure::profile_tgds;
use crate::symbol::{Sym, Value};

/// Name of the relation for atom `i` in the self-join-free version.
pub fn sjf_relation(rel: Sym, i: usize) -> Sym {
    Sym::new(&format!("{rel}__{i}"))
}

/// Renames the relation of every atom `i` to `R__i`.
pub fn sjf_version(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let atoms = q
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| Atom {
            rel: sjf_relation(a.rel, i),
            args: a.args.clone(),
        })
        .collect();
    q.with_atoms(atoms).expect("renaming keeps the query valid")
}

fn tag_tuple(args: &[Var], t: &[Value]) -> Vec<Value> {
    args.iter()
        .zip(t)
        .map(|(y, &c)| Value::tagged(y.frozen(), c))
        .collect()
}

/// `D_tag`: for every atom `R(ȳ)` of `q` and fact `R__i(c̄)`, the fact
/// `R(ȳ⊗c̄)`.
pub fn tag_database(db: &Database, q: &ConjunctiveQuery) -> Database {
    let mut out = Database::new();
    for (i, a) in q.atoms().iter().enumerate() {
        out.declare(a.rel, a.args.len()).expect("query schema is consistent");
        if let Some(r) = db.relation(sjf_relation(a.rel, i)) {
            for t in r.iter() {
                out.insert(a.rel, &tag_tuple(&a.args, t)).unwrap();
            }
        }
    }
    out
}

/// Keeps the tuples whose tags are `x̄` positionally and strips the tags.
pub fn untag_answers<'a>(
    answers: impl IntoIterator<Item = &'a Vec<Value>>,
    answer_vars: &[Var],
) -> Vec<Vec<Value>> {
    answers
        .into_iter()
        .filter_map(|t| {
            t.iter()
                .zip(answer_vars)
                .map(|(v, x)| match v.as_tagged() {
                    Some((tag, c)) if tag == x.frozen() => Some(c),
                    _ => None,
                })
                .collect::<Option<Vec<Value>>>()
        })
        .collect()
}

/// `D'`: every fact `R(c̄)` copied into `R__i` for each atom `i` over `R`.
pub fn expand_for_selfjoins(db: &Database, q: &ConjunctiveQuery) -> Database {
    let mut out = Database::new();
    for (i, a) in q.atoms().iter().enumerate() {
        let ri = sjf_relation(a.rel, i);
        out.declare(ri, a.args.len()).unwrap();
        if let Some(r) = db.relation(a.rel) {
            for t in r.iter() {
                out.insert(ri, t).unwrap();
            }
        }
    }
    out
}

/// Inverse of [`expand_for_selfjoins`]: `R(c̄)` iff `c̄` is in every `R__i`.
pub fn contract_from_selfjoins(db: &Database, q: &ConjunctiveQuery) -> Database {
    let mut out = Database::new();
    for rel in q.relations() {
        let idx: Vec<usize> = (0..q.atoms().len())
            .filter(|&i| q.atoms()[i].rel == rel)
            .collect();
        let arity = q.atoms()[idx[0]].args.len();
        out.declare(rel, arity).unwrap();
        let Some(first) = db.relation(sjf_relation(rel, idx[0])) else {
            continue;
        };
        for t in first.iter() {
            if idx[1..].iter().all(|&i| db.contains(sjf_relation(rel, i), t)) {
                out.insert(rel, t).unwrap();
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CostClass {
    /// O(|D|)
    Linear,
    /// O(|D| + |dom(D)|²)
    LinearPlusDomSquared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FloodCondition {
    /// Every head relation has arity at most k.
    HeadArity,
    /// Every TGD has at most k frontier variables.
    Frontier,
}

#[derive(Clone, Debug)]
enum Construction {
    Flood {
        k: usize,
        condition: FloodCondition,
        /// atoms(ch_T(q')) \ atoms(q'), with nulls as fresh variables
        extra: Vec<Atom>,
    },
    Filter {
        /// per atom: pairs of positions that must hold equal values
        equal: Vec<Vec<(usize, usize)>>,
        /// per atom: (relation of another atom, positions of the fact that
        /// project onto it)
        implied: Vec<Vec<(Sym, Vec<usize>)>>,
    },
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CompanionKind {
    Flood,
    Filter,
}

/// A companion query together with its tagging construction.
#[derive(Clone, Debug)]
pub struct Companion {
    pub query: ConjunctiveQuery,
    pub cost: CostClass,
    construction: Construction,
}

impl Companion {
    pub fn kind(&self) -> CompanionKind {
        match self.construction {
            Construction::Flood { .. } => CompanionKind::Flood,
            Construction::Filter { .. } => CompanionKind::Filter,
        }
    }

    /// The self-join-free version of the companion query.
    pub fn sjf(&self) -> ConjunctiveQuery {
        sjf_version(&self.query)
    }

    /// Builds `D_tag` from a database over the schema of [`Self::sjf`].
    pub fn build(&self, db: &Database) -> Database {
        match &self.construction {
            Construction::Flood {
                k,
                condition,
                extra,
            } => {
                let mut out = tag_database(db, &self.query);
                let dom: Vec<Value> = db.domain().iter().copied().collect();
                for a in extra {
                    let limit = match condition {
                        FloodCondition::HeadArity => a.args.len(),
                        FloodCondition::Frontier => *k,
                    };
                    out.declare(a.rel, a.args.len()).unwrap();
                    let mut cur = Vec::with_capacity(a.args.len());
                    flood(&dom, a.args.len(), limit, &mut cur, &mut |c| {
                        out.insert(a.rel, &tag_tuple(&a.args, c)).unwrap();
                    });
                }
                out
            }
            Construction::Filter { equal, implied } => {
                let mut kept = Database::new();
                for (i, a) in self.query.atoms().iter().enumerate() {
                    let ri = sjf_relation(a.rel, i);
                    kept.declare(ri, a.args.len()).unwrap();
                    let Some(r) = db.relation(ri) else { continue };
                    for t in r.iter() {
                        let ok = equal[i].iter().all(|&(p, p2)| t[p] == t[p2])
                            && implied[i].iter().all(|(s, pos)| {
                                let img: Vec<Value> = pos.iter().map(|&p| t[p]).collect();
                                db.contains(*s, &img)
                            });
                        if ok {
                            kept.insert(ri, t).unwrap();
                        }
                    }
                }
                tag_database(&kept, &self.query)
            }
        }
    }
}

/// Tuples over `dom` of length `len` using at most `limit` distinct values,
/// in lexicographic order of domain positions.
fn flood(dom: &[Value], len: usize, limit: usize, cur: &mut Vec<Value>, f: &mut dyn FnMut(&[Value])) {
    if cur.len() == len {
        f(cur);
        return;
    }
    let distinct = (0..cur.len()).filter(|&i| !cur[..i].contains(&cur[i])).count();
    for &v in dom {
        if distinct >= limit && !cur.contains(&v) {
            continue;
        }
        cur.push(v);
        flood(dom, len, limit, cur, f);
        cur.pop();
    }
}

/// Companion for non-recursive TGD sets: `q' = minimize_wrt(q, T)`, with
/// `D_tag` flooded by the chase atoms of `q'`.
pub fn companion_nonrecursive(
    q: &ConjunctiveQuery,
    tgds: &TgdSet,
    k: usize,
    condition: FloodCondition,
) -> Result<Companion> {
    let p = profile_tgds(tgds);
    if !p.non_recursive {
        return Err(Error::Precondition("the TGD set is recursive".into()));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Precondition(format!("k must be 1 or 2, got {k}")));
    }
    let bound = match condition {
        FloodCondition::HeadArity => p.max_head_arity,
        FloodCondition::Frontier => p.max_frontier,
    };
    if bound > k {
        return Err(Error::Precondition(format!(
            "{condition:?} bound {bound} exceeds k = {k}"
        )));
    }
    let query = minimize_wrt(q, tgds)?;
    let chased = chase_query(&query, tgds, DEFAULT_BUDGET)?;
    let extra = chased.atoms()[query.atoms().len()..].to_vec();
    Ok(Companion {
        query,
        cost: if k == 1 {
            CostClass::Linear
        } else {
            CostClass::LinearPlusDomSquared
        },
        construction: Construction::Flood {
            k,
            condition,
            extra,
        },
    })
}

/// Companion for full frontier-guarded TGD sets: `q' = core(ch_T(q))`, with
/// `D_tag` obtained by filtering and tagging.
pub fn companion_fg_full(q: &ConjunctiveQuery, tgds: &TgdSet) -> Result<Companion> {
    let p = profile_tgds(tgds);
    if !(p.full && p.frontier_guarded) {
        return Err(Error::Precondition(
            "the TGD set is not full and frontier-guarded".into(),
        ));
    }
    let query = core_of_query(&chase_query(q, tgds, DEFAULT_BUDGET)?);
    let atoms = query.atoms();
    let equal = atoms
        .iter()
        .map(|a| {
            let mut e = Vec::new();
            for p in 0..a.args.len() {
                if let Some(p0) = a.args[..p].iter().position(|v| *v == a.args[p]) {
                    e.push((p0, p));
                }
            }
            e
        })
        .collect();
    let implied = atoms
        .iter()
        .map(|a| {
            atoms
                .iter()
                .enumerate()
                .filter(|(_, b)| b.vars().all(|v| a.contains(v)))
                .map(|(j, b)| {
                    let pos = b
                        .args
                        .iter()
                        .map(|v| a.args.iter().position(|w| w == v).unwrap())
                        .collect();
                    (sjf_relation(b.rel, j), pos)
                })
                .collect()
        })
        .collect();
    Ok(Companion {
        query,
        cost: CostClass::Linear,
        construction: Construction::Filter { equal, implied },
    })
}

/// Whichever construction applies, preferring filtering.
pub fn companion(q: &ConjunctiveQuery, tgds: &TgdSet) -> Option<Result<Companion>> {
    let p = profile_tgds(tgds);
    if p.full && p.frontier_guarded {
        return Some(companion_fg_full(q, tgds));
    }
    if p.non_recursive {
        for k in 1..=2 {
            if p.max_head_arity <= k {
                return Some(companion_nonrecursive(q, tgds, k, FloodCondition::HeadArity));
            }
            if p.max_frontier <= k {
                return Some(companion_nonrecursive(q, tgds, k, FloodCondition::Frontier));
            }
        }
    }
    None
}
