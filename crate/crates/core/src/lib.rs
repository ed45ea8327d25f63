//! Evaluation and classification of conjunctive queries over databases that
//! satisfy a set of tuple-generating dependencies.

pub mod catalog;
pub mod chase;
pub mod classifier;
pub mod engines;
pub mod error;
pub mod harness;
pub mod model;
pub mod parse;
pub mod structure;
pub mod symbol;
pub mod tagging;

pub use error::{Error, ParseError, Result};
pub use model::{Atom, ConjunctiveQuery, Database, Tgd, TgdSet, Var};
pub use symbol::{SkolemId, Sym, Value, ValueKind};
