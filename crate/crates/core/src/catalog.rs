//! Named query/TGD pairs used by the classifier registry, the demos and the
//! generators.

use crate::model::query::{ConjunctiveQuery, TgdSet};
use crate::parse::{parse_query, parse_tgds};

fn pair(q: &str, t: &str) -> (ConjunctiveQuery, TgdSet) {
    (
        parse_query(q).expect("catalog query parses"),
        parse_tgds(t).expect("catalog TGDs parse"),
    )
}

/// Boolean triangle `R1(x1,x2), R2(x2,x3), R3(x3,x1)`.
pub fn triangle() -> ConjunctiveQuery {
    parse_query("q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).").unwrap()
}

/// Two triangle edges imply the closing one.
pub fn triangle_closing() -> TgdSet {
    parse_tgds("R1(x1,x2), R2(x2,x3) -> R3(x3,x1).").unwrap()
}

/// Every triangle has a ternary guard `S`.
pub fn triangle_guard() -> TgdSet {
    parse_tgds("R1(x1,x2), R2(x2,x3), R3(x3,x1) -> S(x1,x2,x3).").unwrap()
}

/// Name of the edge relation between clique positions `i < j`.
pub fn clique_relation(i: usize, j: usize) -> String {
    format!("R_{i}_{j}")
}

/// Boolean `l`-clique query over `R_i_j(y_i,y_j)` and the TGD giving every
/// `(l-1)`-clique a guard `S(x_1..x_{l-1})`.
pub fn clique(l: usize) -> (ConjunctiveQuery, TgdSet) {
    assert!(l >= 3);
    let mut atoms = Vec::new();
    for i in 1..=l {
        for j in i + 1..=l {
            atoms.push(format!("{}(y{i},y{j})", clique_relation(i, j)));
        }
    }
    let mut body = Vec::new();
    for i in 1..l {
        for j in i + 1..l {
            body.push(format!("{}(x{i},x{j})", clique_relation(i, j)));
        }
    }
    let head: Vec<String> = (1..l).map(|i| format!("x{i}")).collect();
    pair(
        &format!("q() :- {}.", atoms.join(", ")),
        &format!("{} -> S({}).", body.join(", "), head.join(",")),
    )
}

/// Boolean square with a diagonal `S` and two TGDs that make `T(x3,x4)` and
/// `B(x1,x2)` imply each other in the presence of the rest.
pub fn square_angle() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q() :- B(x1,x2), R(x3,x2), T(x3,x4), L(x1,x4), S(x1,x3).",
        "L(x1,x4), S(x1,x3), R(x3,x2), B(x1,x2) -> T(x3,x4).\n\
         L(x1,x4), S(x1,x3), R(x3,x2), T(x3,x4) -> B(x1,x2).",
    )
}

/// Full 4-cycle `x1-x2-x4-x3` with a dangling `P` edge on `x3` and role
/// inclusions `S1⊆R1, S2⊆R2, R2⊆P`.
pub fn cycle_with_tail() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3,x4,x5) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), P(x5,x3).",
        "S1(x,y) -> R1(x,y).\nS2(x,y) -> R2(x,y).\nR2(x,y) -> P(x,y).",
    )
}

/// [`cycle_with_tail`] without the tail: `S1⊆R1, S2⊆R2`.
pub fn cycle_inclusions() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3,x4) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3).",
        "S1(x,y) -> R1(x,y).\nS2(x,y) -> R2(x,y).",
    )
}

/// The 4-cycle with tails `P1` on `x2` and `P2` on `x3`, included from
/// `S1` and `S2`.
pub fn cycle_two_tails() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3,x4,x5,x6) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), P2(x5,x3), P1(x6,x2).",
        "S1(x,y) -> R1(x,y).\nS2(x,y) -> R2(x,y).\nS2(x,y) -> P2(x,y).\nS1(x,y) -> P1(x,y).",
    )
}

/// The 4-cycle with five tails and two families of inclusions combined.
pub fn cycle_five_tails() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3,x4,x5,x6,x7,x8,x9) :- R1(x1,x2), R2(x1,x3), S1(x4,x2), S2(x4,x3), \
         P1(x6,x2), T1(x8,x2), T2(x9,x3), T3(x5,x3), P2(x7,x3).",
        "S1(x,y) -> R1(x,y).\nS2(x,y) -> R2(x,y).\nS1(x,y) -> P1(x,y).\nS2(x,y) -> P2(x,y).\n\
         R1(x,y) -> T3(x,y).\nR1(x,y) -> T2(x,y).\nT1(x,y) -> S1(x,y).\nT1(x,y) -> S2(x,y).",
    )
}

/// A two-edge path and a disconnected unary atom fed by the path's middle.
pub fn path_and_unary() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3) :- R1(x1,z), R2(z,x2), S(x3).",
        "R1(v1,v2) -> S(v2).",
    )
}

/// A three-edge path and a disconnected unary atom fed by both inner
/// vertices.
pub fn long_path_and_unary() -> (ConjunctiveQuery, TgdSet) {
    pair(
        "q(x1,x2,x3) :- R1(x1,z1), R2(z1,z2), R3(z2,x2), S(x3).",
        "R1(v1,v2) -> S(v2).\nR2(v1,v2) -> S(v2).",
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::profile_tgds;

    #[test]
    fn catalog_parses_and_is_chase_terminating() {
        for (q, t) in [
            square_angle(),
            cycle_with_tail(),
            cycle_inclusions(),
            cycle_two_tails(),
            cycle_five_tails(),
            path_and_unary(),
            long_path_and_unary(),
            clique(3),
            clique(5),
        ] {
            assert!(q.atoms().len() >= 3);
            assert!(profile_tgds(&t).chase_terminates(), "{t}");
        }
        let (q4, t4) = clique(4);
        assert_eq!(q4.atoms().len(), 6);
        assert_eq!(t4.tgds()[0].head[0].args.len(), 3);
    }
}
