use std::fmt;

use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::symbol::{Sym, Value};

/// Relation name reserved for the guard atom of the free-connex test.
pub const GUARD_RELATION: &str = "__guard";

/// A variable. Variables never appear in databases, so their namespace is
/// disjoint from constants and nulls.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub Sym);

impl Var {
    pub fn new(name: &str) -> Var {
        Var(Sym::new(name))
    }

    pub fn name(self) -> &'static str {
        self.0.as_str()
    }

    /// The constant standing for this variable in a canonical database.
    pub fn frozen(self) -> Value {
        Value::sym(self.0)
    }
}

impl serde::Serialize for Var {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Atom {
    pub rel: Sym,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(rel: &str, args: &[&str]) -> Atom {
        Atom {
            rel: Sym::new(rel),
            args: args.iter().map(|a| Var::new(a)).collect(),
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.args.iter().copied()
    }

    pub fn contains(&self, v: Var) -> bool {
        self.args.contains(&v)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// Collects relation arities, failing when one symbol is used with two arities.
pub(crate) fn collect_schema<'a>(
    atoms: impl IntoIterator<Item = &'a Atom>,
    schema: &mut IndexMap<Sym, usize>,
) -> Result<()> {
    for a in atoms {
        match schema.get(&a.rel) {
            Some(&k) if k != a.args.len() => {
                return Err(Error::Arity {
                    rel: a.rel,
                    expected: k,
                    found: a.args.len(),
                })
            }
            Some(_) => {}
            None => {
                schema.insert(a.rel, a.args.len());
            }
        }
    }
    Ok(())
}

/// A conjunctive query `q(x̄) :- atoms`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConjunctiveQuery {
    name: Sym,
    answer: Vec<Var>,
    atoms: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(answer: Vec<Var>, atoms: Vec<Atom>) -> Result<Self> {
        Self::named("q", answer, atoms)
    }

    pub fn named(name: &str, answer: Vec<Var>, atoms: Vec<Atom>) -> Result<Self> {
        let q = ConjunctiveQuery {
            name: Sym::new(name),
            answer,
            atoms,
        };
        for x in &q.answer {
            if !q.atoms.iter().any(|a| a.contains(*x)) {
                return Err(Error::InvalidQuery(format!(
                    "answer variable {x} does not occur in any atom"
                )));
            }
        }
        if q.atoms.iter().any(|a| a.rel.as_str() == GUARD_RELATION) {
            return Err(Error::InvalidQuery(format!(
                "relation name {GUARD_RELATION} is reserved"
            )));
        }
        q.schema()?;
        Ok(q)
    }

    /// Builds a query without validation; used for internal constructions
    /// such as guard-augmented queries.
    pub(crate) fn raw(answer: Vec<Var>, atoms: Vec<Atom>) -> Self {
        ConjunctiveQuery {
            name: Sym::new("q"),
            answer,
            atoms,
        }
    }

    pub fn name(&self) -> Sym {
        self.name
    }

    pub fn answer_vars(&self) -> &[Var] {
        &self.answer
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn arity(&self) -> usize {
        self.answer.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.answer.is_empty()
    }

    /// All variables: answer variables first, then in order of appearance.
    pub fn vars(&self) -> Vec<Var> {
        let mut s: IndexSet<Var> = self.answer.iter().copied().collect();
        for a in &self.atoms {
            s.extend(a.vars());
        }
        s.into_iter().collect()
    }

    pub fn existential_vars(&self) -> Vec<Var> {
        self.vars()
            .into_iter()
            .filter(|v| !self.answer.contains(v))
            .collect()
    }

    /// Whether every variable is an answer variable.
    pub fn is_full(&self) -> bool {
        self.existential_vars().is_empty()
    }

    pub fn schema(&self) -> Result<IndexMap<Sym, usize>> {
        let mut s = IndexMap::new();
        collect_schema(&self.atoms, &mut s)?;
        Ok(s)
    }

    pub fn relations(&self) -> IndexSet<Sym> {
        self.atoms.iter().map(|a| a.rel).collect()
    }

    /// The canonical database: every variable becomes a constant of the same
    /// name.
    pub fn canonical_database(&self) -> Database {
        let mut db = Database::new();
        for a in &self.atoms {
            let t: Vec<Value> = a.args.iter().map(|v| v.frozen()).collect();
            db.insert(a.rel, &t).expect("query schema is consistent");
        }
        db
    }

    pub fn with_atoms(&self, atoms: Vec<Atom>) -> Result<Self> {
        Self::named(self.name.as_str(), self.answer.clone(), atoms)
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = Sym::new(name);
        self
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, x) in self.answer.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(") :- ")?;
        write_atoms(f, &self.atoms)?;
        f.write_str(".")
    }
}

/// A tuple-generating dependency `body -> head`. An empty body means `true`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Tgd {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
}

impl Tgd {
    pub fn new(body: Vec<Atom>, head: Vec<Atom>) -> Result<Self> {
        if head.is_empty() {
            return Err(Error::InvalidQuery("TGD with an empty head".into()));
        }
        if body.iter().chain(&head).any(|a| a.rel.as_str() == GUARD_RELATION) {
            return Err(Error::InvalidQuery(format!(
                "relation name {GUARD_RELATION} is reserved"
            )));
        }
        let t = Tgd { body, head };
        let mut s = IndexMap::new();
        collect_schema(t.body.iter().chain(&t.head), &mut s)?;
        Ok(t)
    }

    pub fn body_vars(&self) -> IndexSet<Var> {
        self.body.iter().flat_map(|a| a.vars()).collect()
    }

    pub fn head_vars(&self) -> IndexSet<Var> {
        self.head.iter().flat_map(|a| a.vars()).collect()
    }

    /// Variables shared by body and head, in head order.
    pub fn frontier(&self) -> Vec<Var> {
        let b = self.body_vars();
        self.head_vars().into_iter().filter(|v| b.contains(v)).collect()
    }

    /// Head variables not in the body.
    pub fn existentials(&self) -> Vec<Var> {
        let b = self.body_vars();
        self.head_vars().into_iter().filter(|v| !b.contains(v)).collect()
    }

    pub fn is_full(&self) -> bool {
        self.existentials().is_empty()
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            write_atoms(f, &self.body)?;
        }
        f.write_str(" -> ")?;
        write_atoms(f, &self.head)?;
        f.write_str(".")
    }
}

/// An ordered set of TGDs; the position of a TGD is its identity in Skolem
/// terms.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TgdSet {
    tgds: Vec<Tgd>,
}

impl TgdSet {
    pub fn new(tgds: Vec<Tgd>) -> Result<Self> {
        let s = TgdSet { tgds };
        s.schema()?;
        Ok(s)
    }

    pub fn empty() -> Self {
        TgdSet::default()
    }

    pub fn tgds(&self) -> &[Tgd] {
        &self.tgds
    }

    pub fn len(&self) -> usize {
        self.tgds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tgds.is_empty()
    }

    pub fn schema(&self) -> Result<IndexMap<Sym, usize>> {
        let mut s = IndexMap::new();
        for t in &self.tgds {
            collect_schema(t.body.iter().chain(&t.head), &mut s)?;
        }
        Ok(s)
    }

    pub fn is_full(&self) -> bool {
        self.tgds.iter().all(|t| t.is_full())
    }
}

impl fmt::Display for TgdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.tgds {
            writeln!(f, "{t}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_var_must_occur() {
        let err = ConjunctiveQuery::new(vec![Var::new("x")], vec![Atom::new("R", &["y"])]);
        assert!(matches!(err, Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn guard_name_is_reserved() {
        let err = ConjunctiveQuery::new(vec![], vec![Atom::new(GUARD_RELATION, &["y"])]);
        assert!(err.is_err());
    }

    #[test]
    fn frontier_and_existentials() {
        let t = Tgd::new(
            vec![Atom::new("R", &["x", "y"])],
            vec![Atom::new("S", &["y", "z"])],
        )
        .unwrap();
        assert_eq!(t.frontier(), vec![Var::new("y")]);
        assert_eq!(t.existentials(), vec![Var::new("z")]);
        assert!(!t.is_full());
    }

    #[test]
    fn display_forms() {
        let q = ConjunctiveQuery::new(
            vec![Var::new("x")],
            vec![Atom::new("R", &["x", "y"]), Atom::new("S", &["y"])],
        )
        .unwrap();
        assert_eq!(q.to_string(), "q(x) :- R(x,y), S(y).");
        let t = Tgd::new(vec![], vec![Atom::new("S", &["z"])]).unwrap();
        assert_eq!(t.to_string(), "true -> S(z).");
    }
}
