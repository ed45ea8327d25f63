//! Structural properties of queries and TGD sets.

use indexmap::{IndexMap, IndexSet};
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::model::query::{Atom, ConjunctiveQuery, TgdSet, Var, GUARD_RELATION};
use crate::symbol::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeMode {
    /// Every variable's occurrences are connected.
    Full,
    /// Answer variables are treated as constants.
    Weak,
}

/// An undirected tree over the atom indices of a query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JoinTree {
    pub mode: TreeMode,
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl JoinTree {
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Parent pointers and a top-down (BFS) order when rooted at `root`.
    pub fn rooted(&self, root: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let adj = self.neighbors();
        let mut parent = vec![None; self.nodes];
        let mut seen = vec![false; self.nodes];
        let mut order = vec![root];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let n = order[i];
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    parent[m] = Some(n);
                    order.push(m);
                }
            }
            i += 1;
        }
        (parent, order)
    }

    /// Checks that this is a spanning tree of the atoms of `q` and that the
    /// occurrences of every in-scope variable are connected.
    pub fn validate(&self, q: &ConjunctiveQuery) -> bool {
        let n = q.atoms().len();
        if self.nodes != n || self.edges.len() + 1 != n.max(1) {
            return false;
        }
        if self.edges.iter().any(|&(a, b)| a >= n || b >= n || a == b) {
            return false;
        }
        if n == 0 {
            return true;
        }
        let (_, order) = self.rooted(0);
        if order.len() != n {
            return false;
        }
        let adj = self.neighbors();
        let scope: Vec<Var> = match self.mode {
            TreeMode::Full => q.vars(),
            TreeMode::Weak => q.existential_vars(),
        };
        scope.iter().all(|&v| {
            let holders: Vec<usize> = (0..n).filter(|&i| q.atoms()[i].contains(v)).collect();
            let mut seen = vec![false; n];
            let mut stack = vec![holders[0]];
            seen[holders[0]] = true;
            let mut count = 1;
            while let Some(x) = stack.pop() {
                for &y in &adj[x] {
                    if !seen[y] && q.atoms()[y].contains(v) {
                        seen[y] = true;
                        count += 1;
                        stack.push(y);
                    }
                }
            }
            count == holders.len()
        })
    }
}

/// GYO ear removal on hyperedges, always removing the lowest-indexed ear and
/// attaching it to the lowest-indexed witness. Returns tree edges
/// `(ear, witness)`, or `None` when the hypergraph is cyclic.
pub fn gyo(edges: &[IndexSet<Var>]) -> Option<Vec<(usize, usize)>> {
    let mut alive: Vec<usize> = (0..edges.len()).collect();
    let mut tree = Vec::new();
    while alive.len() > 1 {
        let mut removed = None;
        'ears: for (ai, &e) in alive.iter().enumerate() {
            let shared: Vec<Var> = edges[e]
                .iter()
                .copied()
                .filter(|v| alive.iter().any(|&g| g != e && edges[g].contains(v)))
                .collect();
            for &f in &alive {
                if f != e && shared.iter().all(|v| edges[f].contains(v)) {
                    removed = Some((ai, e, f));
                    break 'ears;
                }
            }
        }
        let (ai, e, f) = removed?;
        tree.push((e, f));
        alive.remove(ai);
    }
    Some(tree)
}

fn atom_edges(atoms: &[Atom], drop: &[Var]) -> Vec<IndexSet<Var>> {
    atoms
        .iter()
        .map(|a| a.vars().filter(|v| !drop.contains(v)).collect())
        .collect()
}

/// A join tree for `q`, if one exists in the given mode.
pub fn join_tree(q: &ConjunctiveQuery, mode: TreeMode) -> Option<JoinTree> {
    let drop: &[Var] = match mode {
        TreeMode::Full => &[],
        TreeMode::Weak => q.answer_vars(),
    };
    let edges = gyo(&atom_edges(q.atoms(), drop))?;
    Some(JoinTree {
        mode,
        nodes: q.atoms().len(),
        edges,
    })
}

pub fn is_acyclic(q: &ConjunctiveQuery) -> bool {
    join_tree(q, TreeMode::Full).is_some()
}

pub fn is_weakly_acyclic(q: &ConjunctiveQuery) -> bool {
    join_tree(q, TreeMode::Weak).is_some()
}

/// `q` plus a guard atom over its answer variables, which is the last atom.
pub fn guarded(q: &ConjunctiveQuery) -> ConjunctiveQuery {
    let mut atoms = q.atoms().to_vec();
    atoms.push(Atom {
        rel: Sym::new(GUARD_RELATION),
        args: q.answer_vars().to_vec(),
    });
    ConjunctiveQuery::raw(q.answer_vars().to_vec(), atoms)
}

/// Acyclic with the guard atom added.
pub fn is_free_connex(q: &ConjunctiveQuery) -> bool {
    is_acyclic(&guarded(q))
}

/// First `(v1, v2, v3)` with `v1, v2` before `v3` in `order`, no atom holding
/// both `v1` and `v2`, and `v3` sharing an atom with each.
pub fn find_disruptive_trio(q: &ConjunctiveQuery, order: &[Var]) -> Option<(Var, Var, Var)> {
    let adjacent = |a: Var, b: Var| q.atoms().iter().any(|at| at.contains(a) && at.contains(b));
    for k in 0..order.len() {
        for i in 0..k {
            for j in i + 1..k {
                let (v1, v2, v3) = (order[i], order[j], order[k]);
                if !adjacent(v1, v2) && adjacent(v1, v3) && adjacent(v2, v3) {
                    return Some((v1, v2, v3));
                }
            }
        }
    }
    None
}

pub fn is_self_join_free(q: &ConjunctiveQuery) -> bool {
    q.relations().len() == q.atoms().len()
}

/// Whether the atoms form one component under variable sharing.
pub fn is_connected(q: &ConjunctiveQuery) -> bool {
    components(q).len() <= 1
}

/// Atom indices of each connected component, in order of first atom.
pub fn components(q: &ConjunctiveQuery) -> Vec<Vec<usize>> {
    let n = q.atoms().len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let c = out.len();
        let mut members = vec![s];
        comp[s] = c;
        let mut i = 0;
        while i < members.len() {
            let a = &q.atoms()[members[i]];
            for t in 0..n {
                if comp[t] == usize::MAX && q.atoms()[t].vars().any(|v| a.contains(v)) {
                    comp[t] = c;
                    members.push(t);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub acyclic: bool,
    pub weakly_acyclic: bool,
    pub free_connex: bool,
    pub self_join_free: bool,
    pub connected: bool,
    pub full: bool,
    pub boolean: bool,
    pub disruptive_trio: Option<[Var; 3]>,
}

pub fn analyze(q: &ConjunctiveQuery, order: Option<&[Var]>) -> StructureReport {
    StructureReport {
        acyclic: is_acyclic(q),
        weakly_acyclic: is_weakly_acyclic(q),
        free_connex: is_free_connex(q),
        self_join_free: is_self_join_free(q),
        connected: is_connected(q),
        full: q.is_full(),
        boolean: q.is_boolean(),
        disruptive_trio: order
            .and_then(|l| find_disruptive_trio(q, l))
            .map(|(a, b, c)| [a, b, c]),
    }
}

/// Syntactic classification of a TGD set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TgdSetProfile {
    pub non_recursive: bool,
    pub full: bool,
    pub frontier_guarded: bool,
    pub max_head_arity: usize,
    pub max_frontier: usize,
    pub role_inclusions_only: bool,
    pub unary_heads_only: bool,
    /// Direct body-to-head relation dependencies.
    pub order: Vec<(Sym, Sym)>,
}

impl TgdSetProfile {
    /// Full or non-recursive: the Skolem chase terminates.
    pub fn chase_terminates(&self) -> bool {
        self.full || self.non_recursive
    }
}

pub fn profile_tgds(tgds: &TgdSet) -> TgdSetProfile {
    let mut order: IndexSet<(Sym, Sym)> = IndexSet::new();
    for t in tgds.tgds() {
        for b in &t.body {
            for h in &t.head {
                order.insert((b.rel, h.rel));
            }
        }
    }
    let mut nodes: IndexMap<Sym, petgraph::graph::NodeIndex> = IndexMap::new();
    let mut g: DiGraph<Sym, ()> = DiGraph::new();
    for &(a, b) in &order {
        for s in [a, b] {
            if !nodes.contains_key(&s) {
                nodes.insert(s, g.add_node(s));
            }
        }
        g.add_edge(nodes[&a], nodes[&b], ());
    }
    // a relation feeding itself also makes the chase loop
    let recursive = order.iter().any(|(a, b)| a == b)
        || petgraph::algo::tarjan_scc(&g).iter().any(|c| c.len() > 1);

    let frontier_guarded = tgds.tgds().iter().all(|t| {
        let fr = t.frontier();
        t.body.is_empty() || t.body.iter().any(|a| fr.iter().all(|v| a.contains(*v)))
    });
    let role_inclusions_only = tgds.tgds().iter().all(|t| {
        matches!((t.body.as_slice(), t.head.as_slice()),
            ([b], [h]) if b.args.len() == 2 && b.args == h.args && b.args[0] != b.args[1])
    });
    TgdSetProfile {
        non_recursive: !recursive,
        full: tgds.is_full(),
        frontier_guarded,
        max_head_arity: tgds
            .tgds()
            .iter()
            .flat_map(|t| t.head.iter().map(|a| a.args.len()))
            .max()
            .unwrap_or(0),
        max_frontier: tgds.tgds().iter().map(|t| t.frontier().len()).max().unwrap_or(0),
        role_inclusions_only,
        unary_heads_only: tgds
            .tgds()
            .iter()
            .all(|t| t.head.iter().all(|a| a.args.len() == 1)),
        order: order.into_iter().collect(),
    }
}
