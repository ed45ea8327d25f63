//! Database generators: reduction instances over graphs and random
//! databases repaired by the chase.

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::chase::{chase_to_fixpoint, DEFAULT_BUDGET};
use crate::error::{Error, ParseError, Result};
use crate::model::database::Database;
use crate::model::query::{ConjunctiveQuery, TgdSet};
use crate::parse::parse_tgds;
use crate::symbol::{Sym, Value};

/// Simple undirected graph; edges are stored once with `a < b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    pub edges: IndexSet<(u64, u64)>,
}

impl Graph {
    pub fn from_edges(edges: impl IntoIterator<Item = (u64, u64)>) -> Graph {
        let mut g = Graph::default();
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    /// Adds `{a, b}`; self-loops are dropped.
    pub fn add_edge(&mut self, a: u64, b: u64) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    pub fn complete(n: u64) -> Graph {
        Graph::from_edges((0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    /// Erdős–Rényi graph on vertices `0..n`.
    pub fn random(n: u64, p: f64, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::default();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    /// Random graph with about `m` edges on `n` vertices, in time O(m).
    pub fn random_sparse(n: u64, m: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = Graph::default();
        if n < 2 {
            return g;
        }
        let max = (n * (n - 1) / 2) as usize;
        let m = m.min(max);
        while g.edges.len() < m {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            g.add_edge(a, b);
        }
        g
    }

    /// Parses `u v` per line; `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut g = Graph::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<u64>().map_err(|_| {
                    Error::Parse(ParseError {
                        line: i + 1,
                        column: 1,
                        message: format!("`{s}` is not a vertex number"),
                    })
                })
            };
            if nums.len() != 2 {
                return Err(Error::Parse(ParseError {
                    line: i + 1,
                    column: 1,
                    message: "expected two vertices".into(),
                }));
            }
            g.add_edge(parse(nums[0])?, parse(nums[1])?);
        }
        Ok(g)
    }

    pub fn has_edge(&self, a: u64, b: u64) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn vertices(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Triple-loop triangle check.
    pub fn has_triangle(&self) -> bool {
        let v = self.vertices();
        for (i, &a) in v.iter().enumerate() {
            for (j, &b) in v.iter().enumerate().skip(i + 1) {
                if !self.has_edge(a, b) {
                    continue;
                }
                if v[j + 1..].iter().any(|&c| self.has_edge(a, c) && self.has_edge(b, c)) {
                    return true;
                }
            }
        }
        false
    }
}

fn int(v: u64) -> Value {
    Value::int(v as i64)
}

fn insert(db: &mut Database, rel: &str, t: &[u64]) {
    let t: Vec<Value> = t.iter().map(|&v| int(v)).collect();
    db.insert(Sym::new(rel), &t).expect("generator arities are fixed");
}

/// `R1 = R2 = R3 =` both orientations of every edge.
pub fn gen_triangle_db(g: &Graph) -> Database {
    let mut db = Database::new();
    for &(a, b) in &g.edges {
        for rel in ["R1", "R2", "R3"] {
            insert(&mut db, rel, &[a, b]);
            insert(&mut db, rel, &[b, a]);
        }
    }
    db
}

/// Instance of the `l`-clique query: every `R_i_j` holds both orientations
/// of every edge. `S` is either the chase closure of the clique TGD or, when
/// `flood_s`, every `(l-1)`-tuple over the domain.
pub fn gen_clique_instance(l: usize, g: &Graph, flood_s: bool) -> Result<Database> {
    if l < 3 {
        return Err(Error::Precondition(format!("clique size must be at least 3, got {l}")));
    }
    let mut db = Database::new();
    for i in 1..=l {
        for j in i + 1..=l {
            let rel = catalog::clique_relation(i, j);
            for &(a, b) in &g.edges {
                insert(&mut db, &rel, &[a, b]);
                insert(&mut db, &rel, &[b, a]);
            }
        }
    }
    let (_, t) = catalog::clique(l);
    if flood_s {
        let dom: Vec<Value> = db.domain().iter().copied().collect();
        let s = Sym::new("S");
        let mut cur = vec![0usize; l - 1];
        if !dom.is_empty() {
            loop {
                let t: Vec<Value> = cur.iter().map(|&i| dom[i]).collect();
                db.insert(s, &t)?;
                let mut k = 0;
                while k < cur.len() {
                    cur[k] += 1;
                    if cur[k] < dom.len() {
                        break;
                    }
                    cur[k] = 0;
                    k += 1;
                }
                if k == cur.len() {
                    break;
                }
            }
        }
        Ok(db)
    } else {
        chase_to_fixpoint(&db, &t, DEFAULT_BUDGET)
    }
}

/// Triangle encoding for the cycle query with role inclusions: for every
/// edge `a < b` the facts `R1(a,b), R2(a,b), S2(a,b), R1(a,a), S1(a,a)`.
pub fn gen_ex84_db(g: &Graph) -> Database {
    let mut db = Database::new();
    for &(a, b) in &g.edges {
        insert(&mut db, "R1", &[a, b]);
        insert(&mut db, "R2", &[a, b]);
        insert(&mut db, "S2", &[a, b]);
        insert(&mut db, "R1", &[a, a]);
        insert(&mut db, "S1", &[a, a]);
    }
    db
}

/// Tripartite graph with vertex classes `v1`, `v2`, `v3` and edge sets
/// between them. Edge pairs are stored as (class-i vertex, class-j vertex).
#[derive(Clone, Debug, Default)]
pub struct Tripartite {
    pub v1: Vec<u64>,
    pub v2: Vec<u64>,
    pub v3: Vec<u64>,
    pub e12: IndexSet<(u64, u64)>,
    pub e32: IndexSet<(u64, u64)>,
    pub e13: IndexSet<(u64, u64)>,
}

impl Tripartite {
    /// `|V1| = n`, `|V2| = |V3| = ceil(n^alpha)`, each possible edge present
    /// with probability `p`.
    pub fn random(n: usize, alpha: f64, p: f64, seed: u64) -> Result<Tripartite> {
        if !(alpha > 0.0 && alpha <= 1.0 / 3.0 + 1e-12) {
            return Err(Error::Precondition(format!("alpha must lie in (0, 1/3], got {alpha}")));
        }
        let small = ((n as f64).powf(alpha).ceil() as usize).max(1);
        let n = n as u64;
        let s = small as u64;
        let mut t = Tripartite {
            v1: (0..n).collect(),
            v2: (n..n + s).collect(),
            v3: (n + s..n + 2 * s).collect(),
            ..Tripartite::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &a in &t.v1 {
            for &b in &t.v2 {
                if rng.gen_bool(p) {
                    t.e12.insert((a, b));
                }
            }
            for &c in &t.v3 {
                if rng.gen_bool(p) {
                    t.e13.insert((a, c));
                }
            }
        }
        for &c in &t.v3 {
            for &b in &t.v2 {
                if rng.gen_bool(p) {
                    t.e32.insert((c, b));
                }
            }
        }
        Ok(t)
    }

    /// Adds a triangle on the first vertex of each class.
    pub fn plant_triangle(&mut self) {
        let (a, b, c) = (self.v1[0], self.v2[0], self.v3[0]);
        self.e12.insert((a, b));
        self.e32.insert((c, b));
        self.e13.insert((a, c));
    }

    pub fn has_triangle(&self) -> bool {
        self.e13.iter().any(|&(a, c)| {
            self.v2
                .iter()
                .any(|&b| self.e12.contains(&(a, b)) && self.e32.contains(&(c, b)))
        })
    }
}

/// Unbalanced-triangle encoding for the cycle query with two tails:
/// `S1 = P1 = E32`, `R1 = E32 ∪ E12`, `S2 = P2 = {(v,v) | v ∈ V3}`,
/// `R2 = S2 ∪ E13`.
pub fn gen_vutd_db(t: &Tripartite) -> Database {
    let mut db = Database::new();
    for &(c, b) in &t.e32 {
        insert(&mut db, "S1", &[c, b]);
        insert(&mut db, "P1", &[c, b]);
        insert(&mut db, "R1", &[c, b]);
    }
    for &(a, b) in &t.e12 {
        insert(&mut db, "R1", &[a, b]);
    }
    for &v in &t.v3 {
        insert(&mut db, "S2", &[v, v]);
        insert(&mut db, "P2", &[v, v]);
        insert(&mut db, "R2", &[v, v]);
    }
    for &(a, c) in &t.e13 {
        insert(&mut db, "R2", &[a, c]);
    }
    db
}

/// `size` random facts over `schema` with values in `0..domain`, closed
/// under `tgds` by the chase; nulls become fresh integer constants.
pub fn gen_random_satisfying(
    seed: u64,
    schema: &[(Sym, usize)],
    size: usize,
    domain: usize,
    tgds: &TgdSet,
    budget: u64,
) -> Result<Database> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut db = Database::new();
    for &(r, a) in schema {
        db.declare(r, a)?;
    }
    if !schema.is_empty() && domain > 0 {
        let capacity: f64 = schema
            .iter()
            .map(|&(_, a)| (domain as f64).powi(a as i32))
            .sum();
        let target = size.min(capacity as usize);
        let mut attempts = 0usize;
        while db.len() < target && attempts < 20 * size + 100 {
            attempts += 1;
            let (r, a) = schema[rng.gen_range(0..schema.len())];
            let t: Vec<Value> = (0..a).map(|_| Value::int(rng.gen_range(0..domain) as i64)).collect();
            db.insert(r, &t)?;
        }
    }
    if tgds.is_empty() {
        return Ok(db);
    }
    let chased = chase_to_fixpoint(&db, tgds, budget)?;
    let mut fresh = std::collections::HashMap::new();
    let mut next = domain as i64;
    let nulls: Vec<Value> = chased.domain().iter().copied().filter(|v| v.is_null()).collect();
    for v in nulls {
        fresh.insert(v, Value::int(next));
        next += 1;
    }
    Ok(chased.map_values(|v| fresh.get(&v).copied().unwrap_or(v)))
}

/// Relation symbols and arities used by a query and a TGD set.
pub fn joint_schema(q: &ConjunctiveQuery, t: &TgdSet) -> Result<Vec<(Sym, usize)>> {
    let mut s = q.schema()?;
    for (r, a) in t.schema()? {
        match s.get(&r) {
            Some(&b) if a != b => {
                return Err(Error::Arity {
                    rel: r,
                    expected: b,
                    found: a,
                })
            }
            _ => {
                s.insert(r, a);
            }
        }
    }
    Ok(s.into_iter().collect())
}

/// Declarative generator description, used by `gen` and `bench`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Triangle query database over a random graph with `edges` edges.
    Triangle { vertices: u64, edges: usize, seed: u64 },
    KClique { l: usize, vertices: u64, edges: usize, seed: u64 },
    SFloodedClique { l: usize, vertices: u64, edges: usize, seed: u64 },
    Ex84TriangleEnc { vertices: u64, edges: usize, seed: u64 },
    Vutd {
        n: usize,
        alpha: f64,
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default)]
        planted: bool,
        seed: u64,
    },
    Random {
        seed: u64,
        size: usize,
        /// `[["R", 2], ...]`
        schema: Vec<(String, usize)>,
        /// defaults to `size / 2`
        #[serde(default)]
        domain: Option<usize>,
        /// TGDs in rule syntax the output must satisfy
        #[serde(default)]
        tgds: Option<String>,
    },
}

fn default_p() -> f64 {
    0.5
}

impl GeneratorSpec {
    /// TGD set the generated databases satisfy.
    pub fn tgds(&self) -> Result<TgdSet> {
        Ok(match self {
            GeneratorSpec::Triangle { .. } => TgdSet::empty(),
            GeneratorSpec::KClique { l, .. } | GeneratorSpec::SFloodedClique { l, .. } => {
                catalog::clique(*l).1
            }
            GeneratorSpec::Ex84TriangleEnc { .. } => catalog::cycle_inclusions().1,
            GeneratorSpec::Vutd { .. } => catalog::cycle_two_tails().1,
            GeneratorSpec::Random { tgds, .. } => match tgds {
                Some(t) => parse_tgds(t)?,
                None => TgdSet::empty(),
            },
        })
    }

    pub fn generate(&self, budget: u64) -> Result<Database> {
        let graph = |v: u64, e: usize, seed: u64| Graph::random_sparse(v, e, seed);
        Ok(match self {
            GeneratorSpec::Triangle { vertices, edges, seed } => {
                gen_triangle_db(&graph(*vertices, *edges, *seed))
            }
            GeneratorSpec::KClique { l, vertices, edges, seed } => {
                gen_clique_instance(*l, &graph(*vertices, *edges, *seed), false)?
            }
            GeneratorSpec::SFloodedClique { l, vertices, edges, seed } => {
                gen_clique_instance(*l, &graph(*vertices, *edges, *seed), true)?
            }
            GeneratorSpec::Ex84TriangleEnc { vertices, edges, seed } => {
                gen_ex84_db(&graph(*vertices, *edges, *seed))
            }
            GeneratorSpec::Vutd { n, alpha, p, planted, seed } => {
                let mut t = Tripartite::random(*n, *alpha, *p, *seed)?;
                if *planted {
                    t.plant_triangle();
                }
                gen_vutd_db(&t)
            }
            GeneratorSpec::Random { seed, size, schema, domain, .. } => {
                let schema: Vec<(Sym, usize)> =
                    schema.iter().map(|(r, a)| (Sym::new(r), *a)).collect();
                gen_random_satisfying(
                    *seed,
                    &schema,
                    *size,
                    domain.unwrap_or((*size / 2).max(1)),
                    &self.tgds()?,
                    budget,
                )?
            }
        })
    }

    /// The same generator scaled to roughly `size` facts.
    pub fn with_size(&self, size: usize) -> GeneratorSpec {
        let mut s = self.clone();
        match &mut s {
            GeneratorSpec::Triangle { vertices, edges, .. }
            | GeneratorSpec::KClique { vertices, edges, .. }
            | GeneratorSpec::SFloodedClique { vertices, edges, .. }
            | GeneratorSpec::Ex84TriangleEnc { vertices, edges, .. } => {
                let ratio = (*vertices as f64 / (*edges).max(1) as f64).max(1e-9);
                *edges = (size / 6).max(1);
                *vertices = ((*edges as f64 * ratio).ceil() as u64).max(2);
            }
            GeneratorSpec::Vutd { n, .. } => *n = size.max(1),
            GeneratorSpec::Random { size: s, domain, .. } => {
                if let Some(d) = domain {
                    *d = (*d as f64 * size as f64 / (*s).max(1) as f64).ceil() as usize;
                }
                *s = size;
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::homomorphism::{brute_force_answers, satisfies_tgds};

    #[test]
    fn triangle_db_detects_triangles() {
        let q = catalog::triangle();
        assert!(!brute_force_answers(&q, &gen_triangle_db(&Graph::complete(3))).is_empty());
        // complete bipartite K_{3,3}
        let bip = Graph::from_edges((0..3).flat_map(|a| (3..6).map(move |b| (a, b))));
        assert!(brute_force_answers(&q, &gen_triangle_db(&bip)).is_empty());
        for seed in 0..20 {
            let g = Graph::random(20, 0.3, seed);
            let found = !brute_force_answers(&q, &gen_triangle_db(&g)).is_empty();
            assert_eq!(found, g.has_triangle(), "seed {seed}");
        }
    }

    #[test]
    fn clique_instances() {
        let db = gen_clique_instance(3, &Graph::complete(3), true).unwrap();
        assert_eq!(db.relation(Sym::new("S")).unwrap().len(), 9);
        let (q3, t3) = catalog::clique(3);
        assert!(satisfies_tgds(&db, &t3).is_ok());
        let path = Graph::from_edges([(0, 1), (1, 2), (2, 3)]);
        let db = gen_clique_instance(3, &path, false).unwrap();
        assert!(brute_force_answers(&q3, &db).is_empty());
        let (q4, t4) = catalog::clique(4);
        let db = gen_clique_instance(4, &Graph::complete(4), false).unwrap();
        assert!(satisfies_tgds(&db, &t4).is_ok());
        assert!(!brute_force_answers(&q4, &db).is_empty());
        assert!(gen_clique_instance(2, &path, false).is_err());
    }

    #[test]
    fn ex84_answer_types() {
        let (q, t) = catalog::cycle_inclusions();
        let db = gen_ex84_db(&Graph::from_edges([(1, 2)]));
        assert_eq!(db.len(), 5);
        let ans: Vec<Vec<Value>> = brute_force_answers(&q, &db).into_iter().collect();
        assert_eq!(ans, vec![[1, 1, 2, 1].map(Value::int).to_vec()]);
        let k4 = Graph::from_edges(Graph::complete(4).edges.iter().map(|&(a, b)| (a + 1, b + 1)));
        let db = gen_ex84_db(&k4);
        assert!(satisfies_tgds(&db, &t).is_ok());
        let ans = brute_force_answers(&q, &db);
        assert!(ans.contains(&[1, 2, 3, 2].map(Value::int).to_vec()));
        for a in &ans {
            let v: Vec<i64> = a.iter().map(|x| x.as_int().unwrap()).collect();
            let triangle = v[0] < v[1] && v[1] < v[2] && v[3] == v[1];
            let edge = v[0] == v[1] && v[3] == v[0] && v[0] < v[2];
            assert!(triangle || edge, "{v:?}");
        }
        assert!(gen_ex84_db(&Graph::default()).is_empty());
    }

    #[test]
    fn vutd_instances() {
        let (q, t) = catalog::cycle_two_tails();
        let mut g = Tripartite::random(30, 0.3, 0.2, 7).unwrap();
        g.plant_triangle();
        let db = gen_vutd_db(&g);
        assert!(satisfies_tgds(&db, &t).is_ok());
        let ans = brute_force_answers(&q, &db);
        let triangle_type = |a: &Vec<Value>| a[0] != a[3];
        assert!(ans.iter().any(triangle_type));
        g.e13.clear();
        let ans = brute_force_answers(&q, &gen_vutd_db(&g));
        assert!(!ans.is_empty());
        assert!(!ans.iter().any(triangle_type));
        assert!(Tripartite::random(10, 0.5, 0.1, 0).is_err());
    }

    #[test]
    fn random_satisfying_is_closed_and_deterministic() {
        let (q, t) = catalog::square_angle();
        let schema = joint_schema(&q, &t).unwrap();
        let a = gen_random_satisfying(3, &schema, 60, 8, &t, DEFAULT_BUDGET).unwrap();
        let b = gen_random_satisfying(3, &schema, 60, 8, &t, DEFAULT_BUDGET).unwrap();
        assert!(satisfies_tgds(&a, &t).is_ok());
        assert_eq!(a.to_string(), b.to_string());
        let raw = gen_random_satisfying(3, &schema, 60, 8, &TgdSet::empty(), DEFAULT_BUDGET).unwrap();
        assert_eq!(raw.len(), 60);
        // existential heads are re-grounded
        let t = parse_tgds("R(x,y) -> U(y,z).").unwrap();
        let s = [(Sym::new("R"), 2)];
        let db = gen_random_satisfying(1, &s, 10, 5, &t, DEFAULT_BUDGET).unwrap();
        assert!(db.domain().iter().all(|v| !v.is_null()));
        assert!(satisfies_tgds(&db, &t).is_ok());
    }

    #[test]
    fn edge_list_parsing() {
        let g = Graph::parse_edge_list("1 2\n# c\n2 3\n\n3 1\n").unwrap();
        assert!(g.has_triangle());
        assert!(Graph::parse_edge_list("1 x\n").is_err());
        assert!(Graph::parse_edge_list("1 2 3\n").is_err());
    }
}
