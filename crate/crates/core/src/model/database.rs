use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::symbol::{Sym, Value};

pub type Tuple = Box<[Value]>;

/// A set of tuples of a fixed arity, kept in insertion order.
#[derive(Clone, Debug)]
pub struct Relation {
    arity: usize,
    tuples: IndexSet<Tuple>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[Value]) -> bool {
        self.tuples.contains(t)
    }

    pub fn get(&self, i: usize) -> &[Value] {
        &self.tuples[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Value]> + '_ {
        self.tuples.iter().map(|t| &t[..])
    }
}

/// Hash index of a relation on a set of key positions: key → tuple ids.
#[derive(Debug, Default, Clone)]
pub struct Index {
    map: HashMap<Box<[Value]>, Vec<u32>>,
}

impl Index {
    pub fn get(&self, key: &[Value]) -> &[u32] {
        self.map.get(key).map(|v| &v[..]).unwrap_or(&[])
    }
}

type IndexKey = (Sym, Box<[usize]>);

/// A finite relational instance.
///
/// The active domain keeps the order in which values first appear; that
/// order is the base order used for lexicographic answer ordering.
#[derive(Default)]
pub struct Database {
    relations: IndexMap<Sym, Relation>,
    domain: IndexSet<Value>,
    indexes: RwLock<HashMap<IndexKey, Arc<Index>>>,
}

impl Clone for Database {
    fn clone(&self) -> Self {
        Database {
            relations: self.relations.clone(),
            domain: self.domain.clone(),
            indexes: RwLock::new(HashMap::new()),
        }
    }
}

impl fmt::Debug for Database {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.relations.iter().map(|(k, r)| (k, &r.tuples)))
            .finish()
    }
}

impl PartialEq for Database {
    /// Same facts, ignoring insertion order and empty relations.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.facts().all(|(r, t)| other.contains(r, t))
    }
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a relation without facts. Fails on an arity conflict.
    pub fn declare(&mut self, rel: Sym, arity: usize) -> Result<()> {
        match self.relations.get(&rel) {
            Some(r) if r.arity != arity => Err(Error::Arity {
                rel,
                expected: r.arity,
                found: arity,
            }),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(
                    rel,
                    Relation {
                        arity,
                        tuples: IndexSet::new(),
                    },
                );
                Ok(())
            }
        }
    }

    /// Inserts a fact; returns whether it was new.
    pub fn insert(&mut self, rel: Sym, tuple: &[Value]) -> Result<bool> {
        self.declare(rel, tuple.len())?;
        let r = self.relations.get_mut(&rel).unwrap();
        if r.tuples.contains(tuple) {
            return Ok(false);
        }
        let id = r.tuples.len() as u32;
        r.tuples.insert(tuple.into());
        for &v in tuple {
            self.domain.insert(v);
        }
        // keep cached indexes current instead of rebuilding them
        for ((r, positions), ix) in self.indexes.get_mut().unwrap().iter_mut() {
            if *r == rel {
                let k: Box<[Value]> = positions.iter().map(|&p| tuple[p]).collect();
                Arc::make_mut(ix).map.entry(k).or_default().push(id);
            }
        }
        Ok(true)
    }

    pub fn contains(&self, rel: Sym, tuple: &[Value]) -> bool {
        self.relations.get(&rel).is_some_and(|r| r.contains(tuple))
    }

    pub fn relation(&self, rel: Sym) -> Option<&Relation> {
        self.relations.get(&rel)
    }

    pub fn arity(&self, rel: Sym) -> Option<usize> {
        self.relations.get(&rel).map(|r| r.arity)
    }

    pub fn schema(&self) -> impl Iterator<Item = (Sym, usize)> + '_ {
        self.relations.iter().map(|(k, r)| (*k, r.arity))
    }

    /// Number of facts.
    pub fn len(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn facts(&self) -> impl Iterator<Item = (Sym, &[Value])> + '_ {
        self.relations
            .iter()
            .flat_map(|(k, r)| r.iter().map(move |t| (*k, t)))
    }

    /// Active domain in first-appearance order.
    pub fn domain(&self) -> &IndexSet<Value> {
        &self.domain
    }

    /// Position of a value in the domain order.
    pub fn domain_pos(&self, v: Value) -> Option<usize> {
        self.domain.get_index_of(&v)
    }

    /// Cached hash index of `rel` on `positions`. Empty if the relation is
    /// unknown.
    pub fn index(&self, rel: Sym, positions: &[usize]) -> Arc<Index> {
        let key: IndexKey = (rel, positions.into());
        if let Some(ix) = self.indexes.read().unwrap().get(&key) {
            return ix.clone();
        }
        let mut map: HashMap<Box<[Value]>, Vec<u32>> = HashMap::new();
        if let Some(r) = self.relations.get(&rel) {
            for (i, t) in r.tuples.iter().enumerate() {
                let k: Box<[Value]> = positions.iter().map(|&p| t[p]).collect();
                map.entry(k).or_default().push(i as u32);
            }
        }
        let ix = Arc::new(Index { map });
        self.indexes
            .write()
            .unwrap()
            .entry(key)
            .or_insert(ix)
            .clone()
    }

    /// Copy of this database without the given fact.
    pub fn without(&self, rel: Sym, tuple: &[Value]) -> Database {
        let mut out = Database::new();
        for (r, a) in self.schema() {
            out.declare(r, a).unwrap();
        }
        for (r, t) in self.facts() {
            if r != rel || t != tuple {
                out.insert(r, t).unwrap();
            }
        }
        out
    }

    /// Image of this database under a value mapping.
    pub fn map_values(&self, f: impl Fn(Value) -> Value) -> Database {
        let mut out = Database::new();
        for (r, a) in self.schema() {
            out.declare(r, a).unwrap();
        }
        for (r, t) in self.facts() {
            let img: Vec<Value> = t.iter().map(|&v| f(v)).collect();
            out.insert(r, &img).unwrap();
        }
        out
    }

    /// Whether every fact of `self` is a fact of `other`.
    pub fn is_subset_of(&self, other: &Database) -> bool {
        self.facts().all(|(r, t)| other.contains(r, t))
    }
}

impl fmt::Display for Database {
    /// Fact-file format, one fact per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, t) in self.facts() {
            write!(f, "{r}(")?;
            for (i, v) in t.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(&v.render())?;
            }
            writeln!(f, ").")?;
        }
        Ok(())
    }
}
