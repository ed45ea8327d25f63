//! Known (query, TGD) pairs whose status is not derived from the generic
//! rules, matched up to isomorphism.

use super::iso::isomorphic;
use super::{Hypothesis, Status};
use crate::catalog;
use crate::engines::Mode;
use crate::model::query::{ConjunctiveQuery, TgdSet};

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: String,
    pub status: Status,
    pub theorem: &'static str,
    pub hypothesis: Option<Hypothesis>,
    /// Name of the dedicated algorithm, for tractable entries.
    pub demo: Option<&'static str>,
    /// `None` applies to every mode.
    pub mode: Option<Mode>,
    pub notes: &'static str,
}

fn entries() -> Vec<(ConjunctiveQuery, TgdSet, Entry)> {
    let mut out = Vec::new();
    let mut push = |(q, t): (ConjunctiveQuery, TgdSet), e: Entry| out.push((q, t, e));

    push(
        catalog::square_angle(),
        Entry {
            name: "square_angle".into(),
            status: Status::Tractable,
            theorem: "PROP_3_1_ADHOC",
            hypothesis: None,
            demo: Some("demo_qsquare"),
            mode: None,
            notes: "filter S by L and R, then one L probe per S fact decides the query",
        },
    );
    for l in 3..=8 {
        let (status, theorem, hypothesis, notes) = match l {
            3 => (
                Status::ConditionallyHard,
                "CLIQUE_FLOODING",
                Some(Hypothesis::Triangle),
                "flooding S over all pairs keeps the reduction within the triangle bound",
            ),
            4 => (
                Status::ConditionallyHard,
                "CLIQUE_FLOODING",
                Some(Hypothesis::Hyperclique),
                "flooding S over all triples keeps the reduction within the 4-clique bound",
            ),
            _ => (
                Status::Open,
                "REGISTERED_OPEN",
                None,
                "flooding S costs as much as detecting the clique directly",
            ),
        };
        push(
            catalog::clique(l),
            Entry {
                name: format!("clique_{l}"),
                status,
                theorem,
                hypothesis,
                demo: None,
                mode: None,
                notes,
            },
        );
    }
    let enumerate = Some(Mode::Enumerate);
    push(
        catalog::cycle_with_tail(),
        Entry {
            name: "cycle_with_tail".into(),
            status: Status::Tractable,
            theorem: "ADHOC_ENUMERATION",
            hypothesis: None,
            demo: Some("demo_ex83"),
            mode: enumerate,
            notes: "endomorphic answers of the cycle plus R1 probes, deduplicated with multiplicity 2",
        },
    );
    push(
        catalog::cycle_inclusions(),
        Entry {
            name: "cycle_inclusions".into(),
            status: Status::ConditionallyHard,
            theorem: "REGISTERED_HARD",
            hypothesis: Some(Hypothesis::Triangle),
            demo: None,
            mode: enumerate,
            notes: "edge-type answers can be listed before a triangle-type answer appears",
        },
    );
    push(
        catalog::cycle_two_tails(),
        Entry {
            name: "cycle_two_tails".into(),
            status: Status::ConditionallyHard,
            theorem: "REGISTERED_HARD",
            hypothesis: Some(Hypothesis::Vutd),
            demo: None,
            mode: enumerate,
            notes: "reduction from unbalanced tripartite triangle detection",
        },
    );
    push(
        catalog::cycle_five_tails(),
        Entry {
            name: "cycle_five_tails".into(),
            status: Status::Open,
            theorem: "REGISTERED_OPEN",
            hypothesis: None,
            demo: None,
            mode: enumerate,
            notes: "combines an easy and a hard variation; no known reduction or algorithm",
        },
    );
    push(
        catalog::path_and_unary(),
        Entry {
            name: "path_and_unary".into(),
            status: Status::Tractable,
            theorem: "ADHOC_ENUMERATION",
            hypothesis: None,
            demo: Some("demo_unary"),
            mode: enumerate,
            notes: "path answers first, then the product with S, deduplicated with multiplicity 2",
        },
    );
    push(
        catalog::long_path_and_unary(),
        Entry {
            name: "long_path_and_unary".into(),
            status: Status::Open,
            theorem: "REGISTERED_OPEN",
            hypothesis: None,
            demo: None,
            mode: enumerate,
            notes: "two quantified path variables but only one unary answer variable to pay for them",
        },
    );
    out
}

/// The registered entry matching `(q, t)` in `mode`, if any.
pub fn lookup(q: &ConjunctiveQuery, t: &TgdSet, mode: Mode) -> Option<Entry> {
    entries()
        .into_iter()
        .filter(|(_, _, e)| e.mode.map_or(true, |m| m == mode))
        .find(|(rq, rt, _)| isomorphic(q, t, rq, rt))
        .map(|(_, _, e)| e)
}
