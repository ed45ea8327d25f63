//! Scaling benchmarks over step counters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::demo::{demo_ex83, demo_qsquare, demo_unary};
use super::gen::GeneratorSpec;
use crate::chase::DEFAULT_BUDGET;
use crate::engines::{
    all_test, count, direct_access, enumerate, single_test, AnswerStream,
    EnginePath,
};
use crate::error::{Error, Result};
use crate::model::database::Database;
use crate::model::query::ConjunctiveQuery;
use crate::parse::{parse_query, parse_var_list};
use crate::symbol::Value;

pub const DEFAULT_SIZES: [usize; 3] = [10_000, 100_000, 1_000_000];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchEngine {
    SingleTest,
    AllTest,
    Count,
    DirectAccess,
    Enumerate,
    DemoQsquare,
    DemoEx83,
    DemoUnary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchSpec {
    pub engine: BenchEngine,
    /// required by the generic engines
    #[serde(default)]
    pub query: Option<String>,
    /// comma-separated order for direct access
    #[serde(default)]
    pub order: Option<String>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    /// random probes per size for testing and access
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// cap on enumerated answers per size
    #[serde(default = "default_max_outputs")]
    pub max_outputs: usize,
    #[serde(default)]
    pub seed: u64,
    pub generator: GeneratorSpec,
}

fn default_probes() -> usize {
    100
}

fn default_max_outputs() -> usize {
    1_000_000
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRow {
    pub size: usize,
    pub facts: usize,
    pub domain: usize,
    pub path: EnginePath,
    pub preprocessing_steps: u64,
    pub answers: u64,
    /// largest step count between consecutive outputs, or per test/access
    pub max_delay: u64,
    pub mean_delay: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub engine: BenchEngine,
    pub query: Option<String>,
    pub rows: Vec<BenchRow>,
    /// least-squares slope of log(preprocessing steps) over log(facts)
    pub slope: Option<f64>,
}

/// Least-squares slope of `ln y` over `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

fn stream_row(
    size: usize,
    db: &Database,
    pre: u64,
    path: EnginePath,
    s: &mut dyn AnswerStream,
    cap: usize,
) -> Result<BenchRow> {
    let mut last = s.steps();
    let (mut answers, mut max, mut total) = (0u64, 0u64, 0u64);
    loop {
        let a = s.next_answer()?;
        let now = s.steps();
        max = max.max(now - last);
        total += now - last;
        last = now;
        if a.is_none() || answers as usize >= cap {
            break;
        }
        answers += 1;
    }
    Ok(BenchRow {
        size,
        facts: db.len(),
        domain: db.domain().len(),
        path,
        preprocessing_steps: pre,
        answers,
        max_delay: max,
        mean_delay: total as f64 / (answers + 1) as f64,
    })
}

fn random_candidate(rng: &mut ChaCha8Rng, db: &Database, arity: usize) -> Vec<Value> {
    let dom = db.domain();
    (0..arity)
        .map(|_| {
            if dom.is_empty() {
                Value::int(0)
            } else {
                dom[rng.gen_range(0..dom.len())]
            }
        })
        .collect()
}

/// Runs one engine on one database.
pub fn bench_one(spec: &BenchSpec, q: Option<&ConjunctiveQuery>, size: usize, db: &Database) -> Result<BenchRow> {
    let need_q = || {
        q.ok_or_else(|| Error::Config(format!("engine {:?} needs a query", spec.engine)))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ size as u64);
    let row = |path, pre, answers, delays: &[u64]| BenchRow {
        size,
        facts: db.len(),
        domain: db.domain().len(),
        path,
        preprocessing_steps: pre,
        answers,
        max_delay: delays.iter().copied().max().unwrap_or(0),
        mean_delay: if delays.is_empty() {
            0.0
        } else {
            delays.iter().sum::<u64>() as f64 / delays.len() as f64
        },
    };
    match spec.engine {
        BenchEngine::SingleTest => {
            let q = need_q()?;
            let c = random_candidate(&mut rng, db, q.arity());
            let (ok, st) = single_test(q, db, &c)?;
            Ok(row(st.path, st.preprocessing_steps, ok as u64, &[]))
        }
        BenchEngine::AllTest => {
            let q = need_q()?;
            let t = all_test(q, db);
            let mut delays = Vec::new();
            let mut hits = 0;
            for _ in 0..spec.probes {
                let c = random_candidate(&mut rng, db, q.arity());
                let (ok, s) = t.test_counted(&c)?;
                hits += ok as u64;
                delays.push(s);
            }
            Ok(row(t.stats.path, t.stats.preprocessing_steps, hits, &delays))
        }
        BenchEngine::Count => {
            let q = need_q()?;
            let (n, st) = count(q, db)?;
            Ok(row(st.path, st.preprocessing_steps, n, &[]))
        }
        BenchEngine::DirectAccess => {
            let q = need_q()?;
            let order = match &spec.order {
                Some(o) => parse_var_list(o)?,
                None => q.answer_vars().to_vec(),
            };
            let da = direct_access(q, db, &order)?;
            let mut delays = Vec::new();
            if da.total() > 0 {
                for _ in 0..spec.probes {
                    let i = rng.gen_range(1..=da.total());
                    delays.push(da.access_counted(i)?.1);
                }
            }
            Ok(row(da.stats.path, da.stats.preprocessing_steps, da.total(), &delays))
        }
        BenchEngine::Enumerate => {
            let q = need_q()?;
            let mut e = enumerate(q, db);
            let (path, pre) = (e.stats.path, e.stats.preprocessing_steps);
            stream_row(size, db, pre, path, &mut e, spec.max_outputs)
        }
        BenchEngine::DemoQsquare => {
            let (ok, steps) = demo_qsquare(db)?;
            Ok(row(EnginePath::Tractable, steps, ok as u64, &[]))
        }
        BenchEngine::DemoEx83 => {
            let (mut s, pre) = demo_ex83(db)?;
            stream_row(size, db, pre, EnginePath::Tractable, &mut s, spec.max_outputs)
        }
        BenchEngine::DemoUnary => {
            let (mut s, pre) = demo_unary(db)?;
            stream_row(size, db, pre, EnginePath::Tractable, &mut s, spec.max_outputs)
        }
    }
}

/// Runs the spec over all sizes in parallel, one database per size.
pub fn bench(spec: &BenchSpec, default_sizes: &[usize], budget: u64) -> Result<BenchReport> {
    let q = spec.query.as_deref().map(parse_query).transpose()?;
    let sizes = spec.sizes.clone().unwrap_or_else(|| default_sizes.to_vec());
    let rows: Vec<BenchRow> = sizes
        .par_iter()
        .map(|&size| {
            let db = spec.generator.with_size(size).generate(budget)?;
            bench_one(spec, q.as_ref(), size, &db)
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.facts as f64, r.preprocessing_steps as f64))
        .collect();
    Ok(BenchReport {
        engine: spec.engine,
        query: spec.query.clone(),
        slope: loglog_slope(&pts),
        rows,
    })
}

pub fn bench_default(spec: &BenchSpec) -> Result<BenchReport> {
    bench(spec, &DEFAULT_SIZES, DEFAULT_BUDGET)
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(engine: BenchEngine, query: Option<&str>, generator: GeneratorSpec) -> BenchSpec {
        BenchSpec {
            engine,
            query: query.map(str::to_string),
            order: None,
            sizes: Some(vec![2_000, 8_000, 32_000]),
            probes: 20,
            max_outputs: 100_000,
            seed: 1,
            generator,
        }
    }

    fn random(schema: &[(&str, usize)]) -> GeneratorSpec {
        GeneratorSpec::Random {
            seed: 5,
            size: 1000,
            schema: schema.iter().map(|(r, a)| (r.to_string(), *a)).collect(),
            domain: None,
            tgds: None,
        }
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(loglog_slope(&[(1.0, 1.0)]), None);
    }

    #[test]
    fn enumerate_scales_linearly() {
        let s = spec(
            BenchEngine::Enumerate,
            Some("q(x,y,z) :- R(x,y), S(y,z)."),
            random(&[("R", 2), ("S", 2)]),
        );
        let r = bench(&s, &[], DEFAULT_BUDGET).unwrap();
        assert!(r.rows.iter().all(|r| r.path == EnginePath::Tractable));
        let slope = r.slope.unwrap();
        assert!((slope - 1.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn cyclic_count_is_flagged() {
        let s = spec(
            BenchEngine::Count,
            Some("q() :- R1(x,y), R2(y,z), R3(z,x)."),
            GeneratorSpec::Triangle { vertices: 100, edges: 300, seed: 2 },
        );
        let mut s = s;
        s.sizes = Some(vec![600]);
        let r = bench(&s, &[], DEFAULT_BUDGET).unwrap();
        assert_eq!(r.rows[0].path, EnginePath::Fallback);
        assert!(r.to_csv().unwrap().contains("fallback"));
    }

    #[test]
    fn direct_access_steps_are_logarithmic() {
        let mut s = spec(
            BenchEngine::DirectAccess,
            Some("q(x,y,z) :- R(x,y), S(y,z)."),
            random(&[("R", 2), ("S", 2)]),
        );
        s.order = Some("x,y,z".into());
        let r = bench(&s, &[], DEFAULT_BUDGET).unwrap();
        for row in &r.rows {
            assert_eq!(row.path, EnginePath::Tractable);
            let log = (row.facts as f64).log2();
            assert!((row.max_delay as f64) <= 20.0 * log, "{row:?}");
        }
    }

    #[test]
    fn spec_from_toml() {
        let text = r#"
            engine = "demo_qsquare"
            sizes = [100]
            [generator]
            kind = "random"
            seed = 1
            size = 100
            schema = [["B", 2], ["R", 2], ["T", 2], ["L", 2], ["S", 2]]
            tgds = "L(x1,x4), S(x1,x3), R(x3,x2), B(x1,x2) -> T(x3,x4).\nL(x1,x4), S(x1,x3), R(x3,x2), T(x3,x4) -> B(x1,x2)."
        "#;
        let s: BenchSpec = toml::from_str(text).unwrap();
        let r = bench(&s, &DEFAULT_SIZES, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.rows.len(), 1);
    }
}
