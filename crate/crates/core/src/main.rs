use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value as Json};

use cqlin::chase::{skolem_chase, DEFAULT_BUDGET};
use cqlin::classifier::{classify, explain, Status};
use cqlin::engines::{
    all_test, count, direct_access, drain_with_delays, enumerate, single_test, AnswerStream,
    EnginePath, Mode,
};
use cqlin::harness::{self, BenchSpec, GeneratorSpec, Graph, Tripartite};
use cqlin::model::homomorphism::satisfies_tgds;
use cqlin::parse::{parse_tuple, parse_var_list, read_database, read_query, read_tgds};
use cqlin::structure::{analyze, profile_tgds};
use cqlin::tagging::{companion, sjf_version};
use cqlin::{ConjunctiveQuery, Database, Error, Result, Sym, TgdSet, Value, ValueKind, Var};

#[derive(Parser, Debug)]
#[command(name = "cqlin", version, about = "Conjunctive queries under tuple-generating dependencies")]
struct Cli {
    /// configuration file (default: ./cqlin.toml if present)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// seed for every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// chase step budget
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// output format
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Structural report of a query and, optionally, a TGD set
    Analyze {
        query: PathBuf,
        tgds: Option<PathBuf>,
        #[arg(long)]
        order: Option<String>,
    },
    /// Skolem chase of a database
    Chase {
        db: PathBuf,
        tgds: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the tagged database of the tagging companion
    Tag {
        query: PathBuf,
        tgds: PathBuf,
        /// database over the self-join-free companion schema
        db: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a query in one of the five modes
    Eval(EvalArgs),
    /// Tractability verdict
    Classify {
        query: PathBuf,
        tgds: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        order: Option<String>,
    },
    /// Generate a database
    Gen(GenArgs),
    /// Run a benchmark spec
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// also write the rows as CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a dedicated algorithm
    Demo {
        #[arg(value_enum)]
        which: DemoKind,
        db: PathBuf,
        #[arg(long)]
        steps: bool,
    },
}

#[derive(Args, Debug)]
struct EvalArgs {
    query: PathBuf,
    tgds: PathBuf,
    db: PathBuf,
    #[arg(long)]
    mode: String,
    #[arg(long)]
    order: Option<String>,
    /// candidate tuple for single/all testing
    #[arg(long)]
    test: Option<String>,
    /// 1-based answer index for direct access
    #[arg(long)]
    index: Option<u64>,
    /// print step counters
    #[arg(long)]
    steps: bool,
    /// skip the TGD check on the database
    #[arg(long)]
    unchecked: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    Triangle,
    KClique,
    SFloodedClique,
    Ex84,
    Vutd,
    Random,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// edge list (`u v` per line) instead of a random graph
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    vertices: u64,
    #[arg(long, default_value_t = 300)]
    edges: usize,
    /// clique size
    #[arg(long, default_value_t = 3)]
    l: usize,
    /// size of the large vertex class, or number of random facts
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    planted: bool,
    /// `R/2,S/1`
    #[arg(long)]
    schema: Option<String>,
    #[arg(long)]
    domain: Option<usize>,
    /// TGD file the random database must satisfy
    #[arg(long)]
    tgds: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DemoKind {
    Qsquare,
    Ex83,
    Unary,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    chase_budget: Option<u64>,
    bench_sizes: Option<Vec<usize>>,
    output_format: Option<Format>,
    seed: Option<u64>,
}

struct Config {
    chase_budget: u64,
    bench_sizes: Vec<usize>,
    output_format: Format,
    seed: u64,
}

impl Config {
    /// Defaults, then the config file, then the environment, then flags.
    fn load(cli: &Cli) -> Result<Config> {
        let path = cli.config.clone().or_else(|| {
            let p = PathBuf::from("cqlin.toml");
            p.exists().then_some(p)
        });
        let file: FileConfig = match path {
            Some(p) => toml::from_str(&std::fs::read_to_string(&p)?)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => FileConfig::default(),
        };
        let mut c = Config {
            chase_budget: file.chase_budget.unwrap_or(DEFAULT_BUDGET),
            bench_sizes: file.bench_sizes.unwrap_or(harness::DEFAULT_SIZES.to_vec()),
            output_format: file.output_format.unwrap_or(Format::Json),
            seed: file.seed.unwrap_or(0),
        };
        if let Ok(v) = std::env::var("CQLIN_CHASE_BUDGET") {
            c.chase_budget = v
                .parse()
                .map_err(|_| Error::Config(format!("CQLIN_CHASE_BUDGET=`{v}` is not a number")))?;
        }
        if let Some(b) = cli.budget {
            c.chase_budget = b;
        }
        if let Some(s) = cli.seed {
            c.seed = s;
        }
        if let Some(f) = cli.format {
            c.output_format = f;
        }
        Ok(c)
    }
}

fn value_json(v: Value) -> Json {
    match v.kind() {
        ValueKind::Int(i) => json!(i),
        _ => json!(v.render()),
    }
}

fn tuple_json(t: &[Value]) -> Json {
    Json::Array(t.iter().map(|&v| value_json(v)).collect())
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_json(j: &Json) {
    println!("{}", serde_json::to_string_pretty(j).unwrap());
}

fn order_arg(q: &ConjunctiveQuery, order: Option<&str>) -> Result<Vec<Var>> {
    match order {
        Some(o) => parse_var_list(o),
        None => {
            let mut v: Vec<Var> = Vec::new();
            for &x in q.answer_vars() {
                if !v.contains(&x) {
                    v.push(x);
                }
            }
            Ok(v)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(&cli)?;
    match cli.cmd {
        Cmd::Analyze { query, tgds, order } => {
            let q = read_query(&query)?;
            let order = order.map(|o| parse_var_list(&o)).transpose()?;
            let mut out = json!({
                "query": q.to_string(),
                "structure": analyze(&q, order.as_deref()),
            });
            if let Some(t) = tgds {
                let t = read_tgds(&t)?;
                let p = profile_tgds(&t);
                out["tgds"] = json!({
                    "non_recursive": p.non_recursive,
                    "full": p.full,
                    "frontier_guarded": p.frontier_guarded,
                    "max_head_arity": p.max_head_arity,
                    "max_frontier": p.max_frontier,
                    "role_inclusions_only": p.role_inclusions_only,
                    "unary_heads_only": p.unary_heads_only,
                    "chase_terminates": p.chase_terminates(),
                });
            }
            match cfg.output_format {
                Format::Json => print_json(&out),
                Format::Text => println!("{out}"),
            }
        }
        Cmd::Chase { db, tgds, output } => {
            let db = read_database(&db)?;
            let t = read_tgds(&tgds)?;
            if !profile_tgds(&t).chase_terminates() {
                return Err(Error::NonTerminating);
            }
            let r = skolem_chase(&db, &t, cfg.chase_budget);
            if !r.terminated {
                return Err(Error::BudgetExhausted(cfg.chase_budget));
            }
            write_out(output.as_deref(), &r.instance.to_string())?;
            eprintln!("{}", json!({"steps": r.steps, "facts": r.instance.len()}));
        }
        Cmd::Tag { query, tgds, db, output } => {
            let q = read_query(&query)?;
            let t = read_tgds(&tgds)?;
            let db = read_database(&db)?;
            let c = companion(&q, &t).ok_or_else(|| {
                Error::Precondition("the TGD set admits no tagging companion".into())
            })??;
            let tagged = c.build(&db);
            write_out(output.as_deref(), &tagged.to_string())?;
            eprintln!(
                "{}",
                json!({
                    "companion": c.query.to_string(),
                    "sjf": sjf_version(&c.query).to_string(),
                    "kind": c.kind(),
                    "cost": c.cost,
                    "facts": tagged.len(),
                })
            );
        }
        Cmd::Eval(a) => eval(a)?,
        Cmd::Classify { query, tgds, mode, order } => {
            let q = read_query(&query)?;
            let t = read_tgds(&tgds)?;
            let mode: Mode = mode.parse()?;
            let order = order.map(|o| parse_var_list(&o)).transpose()?;
            let v = classify(&q, &t, mode, order.as_deref())?;
            match cfg.output_format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&v).unwrap()),
                Format::Text => print!("{}", explain(&v)),
            }
        }
        Cmd::Gen(g) => {
            let db = generate(&g, &cfg)?;
            write_out(g.output.as_deref(), &db.to_string())?;
        }
        Cmd::Bench { spec, output, csv } => {
            let text = std::fs::read_to_string(&spec)?;
            let mut spec: BenchSpec = toml::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", spec.display())))?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let report = harness::bench(&spec, &cfg.bench_sizes, cfg.chase_budget)?;
            let j = serde_json::to_string_pretty(&report).unwrap();
            write_out(output.as_deref(), &(j + "\n"))?;
            if let Some(p) = csv {
                std::fs::write(p, report.to_csv()?)?;
            }
        }
        Cmd::Demo { which, db, steps } => {
            let db = read_database(&db)?;
            let out = match which {
                DemoKind::Qsquare => {
                    let (ok, s) = harness::demo_qsquare(&db)?;
                    let mut j = json!({"answer": ok});
                    if steps {
                        j["steps"] = json!({"path": EnginePath::Tractable, "preprocessing_steps": s});
                    }
                    j
                }
                DemoKind::Ex83 => {
                    let (mut s, pre) = harness::demo_ex83(&db)?;
                    stream_json(&mut s, pre, EnginePath::Tractable, steps)?
                }
                DemoKind::Unary => {
                    let (mut s, pre) = harness::demo_unary(&db)?;
                    stream_json(&mut s, pre, EnginePath::Tractable, steps)?
                }
            };
            print_json(&out);
        }
    }
    Ok(())
}

fn stream_json(s: &mut dyn AnswerStream, pre: u64, path: EnginePath, steps: bool) -> Result<Json> {
    let (answers, delays) = drain_with_delays(s)?;
    let mut j = json!({
        "count": answers.len(),
        "answers": answers.iter().map(|a| tuple_json(a)).collect::<Vec<_>>(),
    });
    if steps {
        j["steps"] = json!({
            "path": path,
            "preprocessing_steps": pre,
            "max_delay": delays.iter().copied().max().unwrap_or(0),
        });
    }
    Ok(j)
}

fn eval(a: EvalArgs) -> Result<()> {
    let q = read_query(&a.query)?;
    let t = read_tgds(&a.tgds)?;
    let db = read_database(&a.db)?;
    let mode: Mode = a.mode.parse()?;
    if !a.unchecked {
        if let Err(v) = satisfies_tgds(&db, &t) {
            let witness: Vec<String> = v
                .frontier
                .iter()
                .map(|(x, c)| format!("{}={}", x.name(), c.render()))
                .collect();
            eprintln!(
                "database violates `{}` at {}",
                t.tgds()[v.tgd].to_string().trim_end_matches('.'),
                witness.join(", ")
            );
            return Err(Error::TgdViolation {
                tgd: v.tgd,
                frontier: v.frontier.into_iter().map(|(_, c)| c).collect(),
            });
        }
    }
    let order = order_arg(&q, a.order.as_deref())?;
    // run on an equivalent query with the required structure when there is one
    let plan_q = if t.is_empty() {
        q.clone()
    } else {
        let v = classify(&q, &t, mode, (mode == Mode::DirectAccess).then_some(&order[..]))?;
        match (&v.status, v.plan_query) {
            (Status::Tractable, Some(p)) if v.engine_plan.path == EnginePath::Tractable
                && ["single_test", "all_test", "count", "direct_access", "enumerate"]
                    .contains(&v.engine_plan.engine.as_str()) =>
            {
                p
            }
            _ => q.clone(),
        }
    };
    let candidate = || -> Result<Vec<Value>> {
        match &a.test {
            Some(s) => Ok(parse_tuple(s)),
            None if q.arity() == 0 => Ok(Vec::new()),
            None => Err(Error::Config("--test is required for this mode".into())),
        }
    };
    let mut out = json!({"mode": mode.to_string()});
    let stats;
    match mode {
        Mode::SingleTest => {
            let (ok, st) = single_test(&plan_q, &db, &candidate()?)?;
            out["answer"] = json!(ok);
            stats = json!({"path": st.path, "preprocessing_steps": st.preprocessing_steps});
        }
        Mode::AllTest => {
            let tester = all_test(&plan_q, &db);
            let (ok, s) = tester.test_counted(&candidate()?)?;
            out["answer"] = json!(ok);
            stats = json!({
                "path": tester.stats.path,
                "preprocessing_steps": tester.stats.preprocessing_steps,
                "test_steps": s,
            });
        }
        Mode::Count => {
            let (n, st) = count(&plan_q, &db)?;
            out["count"] = json!(n);
            stats = json!({"path": st.path, "preprocessing_steps": st.preprocessing_steps});
        }
        Mode::DirectAccess => {
            let da = direct_access(&plan_q, &db, &order)?;
            out["count"] = json!(da.total());
            let mut access_steps = 0;
            match a.index {
                Some(i) => {
                    let (ans, s) = da.access_counted(i)?;
                    out["answer"] = tuple_json(&ans);
                    access_steps = s;
                }
                None => {
                    let mut all = Vec::new();
                    for i in 1..=da.total() {
                        let (ans, s) = da.access_counted(i)?;
                        access_steps = access_steps.max(s);
                        all.push(tuple_json(&ans));
                    }
                    out["answers"] = Json::Array(all);
                }
            }
            stats = json!({
                "path": da.stats.path,
                "preprocessing_steps": da.stats.preprocessing_steps,
                "access_steps": access_steps,
            });
        }
        Mode::Enumerate => {
            let mut e = enumerate(&plan_q, &db);
            let (path, pre) = (e.stats.path, e.stats.preprocessing_steps);
            let j = stream_json(&mut e, pre, path, true)?;
            out["count"] = j["count"].clone();
            out["answers"] = j["answers"].clone();
            stats = j["steps"].clone();
        }
    }
    if a.steps {
        out["steps"] = stats;
    }
    print_json(&out);
    Ok(())
}

fn parse_schema(s: &str) -> Result<Vec<(Sym, usize)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (r, a) = p
                .split_once('/')
                .ok_or_else(|| Error::Config(format!("schema entry `{p}` is not `R/arity`")))?;
            let a = a
                .parse()
                .map_err(|_| Error::Config(format!("bad arity in `{p}`")))?;
            Ok((Sym::new(r.trim()), a))
        })
        .collect()
}

fn generate(g: &GenArgs, cfg: &Config) -> Result<Database> {
    let graph = || -> Result<Graph> {
        match &g.graph {
            Some(p) => Graph::parse_edge_list(&std::fs::read_to_string(p)?),
            None => Ok(Graph::random_sparse(g.vertices, g.edges, cfg.seed)),
        }
    };
    match g.kind {
        GenKind::Triangle => Ok(harness::gen_triangle_db(&graph()?)),
        GenKind::KClique => harness::gen_clique_instance(g.l, &graph()?, false),
        GenKind::SFloodedClique => harness::gen_clique_instance(g.l, &graph()?, true),
        GenKind::Ex84 => Ok(harness::gen_ex84_db(&graph()?)),
        GenKind::Vutd => {
            let mut t = Tripartite::random(g.n, g.alpha, g.p, cfg.seed)?;
            if g.planted {
                t.plant_triangle();
            }
            Ok(harness::gen_vutd_db(&t))
        }
        GenKind::Random => {
            let t = match &g.tgds {
                Some(p) => read_tgds(p)?,
                None => TgdSet::empty(),
            };
            let schema = match &g.schema {
                Some(s) => parse_schema(s)?,
                None => {
                    let s: Vec<(Sym, usize)> = t.schema()?.into_iter().collect();
                    if s.is_empty() {
                        return Err(Error::Config("random generation needs --schema or --tgds".into()));
                    }
                    s
                }
            };
            let spec = GeneratorSpec::Random {
                seed: cfg.seed,
                size: g.n,
                schema: schema.iter().map(|(r, a)| (r.as_str().to_string(), *a)).collect(),
                domain: g.domain,
                tgds: (!t.is_empty()).then(|| t.to_string()),
            };
            spec.generate(cfg.chase_budget)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
