//! Terms, databases, queries, TGDs and homomorphism search.

pub mod database;
pub mod homomorphism;
pub mod query;

pub use database::{Database, Relation, Tuple};
pub use homomorphism::{
    brute_force_answers, database_homomorphism, find_homomorphisms, is_answer, satisfies_tgds,
    Homomorphism, Pattern, Violation,
};
pub use query::{Atom, ConjunctiveQuery, Tgd, TgdSet, Var, GUARD_RELATION};
