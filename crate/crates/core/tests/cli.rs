use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value as Json;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cqlin"));
    c.env_remove("CQLIN_CHASE_BUDGET");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn validate(schema: &str, out: &Output) -> Json {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema: Json = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let j: Json = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    if let Err(errs) = compiled.validate(&j) {
        let msgs: Vec<String> = errs.map(|e| e.to_string()).collect();
        panic!("{j} does not match {schema}: {msgs:?}");
    }
    j
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Fixture {
        let dir = TempDir::new().unwrap();
        let d = dir.path();
        write(d, "tri.q", "q() :- R1(x1,x2), R2(x2,x3), R3(x3,x1).\n");
        write(d, "close.t", "R1(x1,x2), R2(x2,x3) -> R3(x3,x1).\n");
        write(d, "empty.t", "");
        write(d, "path.q", "q(x,y,z) :- R(x,y), S(y,z).\n");
        write(d, "path.db", "R(1,2).\nR(3,2).\nS(2,5).\nS(2,6).\nS(4,4).\n");
        write(d, "good.db", "R1(1,2).\nR2(2,3).\nR3(3,1).\n");
        write(d, "bad.db", "R1(1,2).\nR2(2,3).\n");
        write(d, "chain.t", "A(x) -> B(x).\nB(x) -> C(x).\nC(x) -> D(x).\n");
        write(d, "chain.db", "A(1).\nA(2).\nA(3).\n");
        Fixture { dir }
    }

    fn run(&self, args: &[&str]) -> Output {
        run(self.dir.path(), args)
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn classify_output_matches_schema() {
    let f = Fixture::new();
    let o = f.run(&["classify", "tri.q", "close.t", "--mode", "SINGLE_TEST"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = validate("verdict.schema.json", &o);
    assert_eq!(j["status"], "TRACTABLE");
    assert_eq!(j["theorem"], "COR_5_2");
    let text = String::from_utf8_lossy(&o.stdout);
    let at = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(at("status") < at("theorem") && at("theorem") < at("companion") && at("engine_plan") < at("notes"));

    let o = f.run(&["classify", "tri.q", "empty.t", "--mode", "single_test"]);
    let j = validate("verdict.schema.json", &o);
    assert_eq!(j["status"], "CONDITIONALLY_HARD");
    assert_eq!(j["hypothesis"], "HYPERCLIQUE");

    let o = f.run(&["--format", "text", "classify", "tri.q", "empty.t", "--mode", "COUNT"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("hypothesis"));
}

#[test]
fn eval_modes_match_schema() {
    let f = Fixture::new();
    let count = f.run(&["eval", "path.q", "empty.t", "path.db", "--mode", "COUNT", "--steps"]);
    let j = validate("eval.schema.json", &count);
    assert_eq!(j["count"], 4);
    assert_eq!(j["steps"]["path"], "tractable");

    let e = f.run(&["eval", "path.q", "empty.t", "path.db", "--mode", "ENUMERATE"]);
    let j = validate("eval.schema.json", &e);
    assert_eq!(j["answers"].as_array().unwrap().len(), 4);

    let a = f.run(&[
        "eval", "path.q", "empty.t", "path.db", "--mode", "DIRECT_ACCESS", "--order", "z,x,y", "--index", "1",
    ]);
    let j = validate("eval.schema.json", &a);
    assert_eq!(j["answer"], serde_json::json!([1, 2, 5]));

    let a = f.run(&[
        "eval", "path.q", "empty.t", "path.db", "--mode", "DIRECT_ACCESS", "--order", "x,y,z", "--index", "9",
    ]);
    assert_eq!(code(&a), 2);

    for (mode, tuple, want) in [("SINGLE_TEST", "3,2,6", true), ("ALL_TEST", "4,4,4", false)] {
        let o = f.run(&["eval", "path.q", "empty.t", "path.db", "--mode", mode, "--test", tuple, "--steps"]);
        let j = validate("eval.schema.json", &o);
        assert_eq!(j["answer"], want, "{mode}");
    }

    let b = f.run(&["eval", "tri.q", "close.t", "good.db", "--mode", "SINGLE_TEST"]);
    assert_eq!(validate("eval.schema.json", &b)["answer"], true);
}

#[test]
fn analyze_and_demo_match_schema() {
    let f = Fixture::new();
    let o = f.run(&["analyze", "path.q", "close.t", "--order", "x,y,z"]);
    let j = validate("analyze.schema.json", &o);
    assert_eq!(j["structure"]["free_connex"], true);

    let d = f.dir.path();
    write(d, "sq.db", "B(1,2).\nR(3,2).\nT(3,4).\nL(1,4).\nS(1,3).\n");
    let o = f.run(&["demo", "qsquare", "sq.db", "--steps"]);
    assert_eq!(validate("demo.schema.json", &o)["answer"], true);
    write(d, "u.db", "R1(1,2).\nR2(2,3).\nS(2).\nS(7).\n");
    let o = f.run(&["demo", "unary", "u.db", "--steps"]);
    let j = validate("demo.schema.json", &o);
    assert_eq!(j["count"], 2);
}

#[test]
fn exit_codes() {
    let f = Fixture::new();
    // TGD violation with a witness
    let o = f.run(&["eval", "tri.q", "close.t", "bad.db", "--mode", "SINGLE_TEST"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("x1=1") && err.contains("x3=3"), "{err}");
    assert_eq!(
        code(&f.run(&["eval", "tri.q", "close.t", "bad.db", "--mode", "SINGLE_TEST", "--unchecked"])),
        0
    );

    // parse error, unknown subcommand, bad mode
    write(f.dir.path(), "broken.q", "q(x :- R(x).");
    assert_eq!(code(&f.run(&["classify", "broken.q", "empty.t", "--mode", "COUNT"])), 1);
    assert_eq!(code(&f.run(&["frobnicate"])), 1);
    assert_eq!(code(&f.run(&["classify", "tri.q", "empty.t", "--mode", "SOMETIMES"])), 1);
    assert_eq!(code(&f.run(&["classify", "missing.q", "empty.t", "--mode", "COUNT"])), 1);
    assert_eq!(code(&f.run(&["--help"])), 0);

    // chase budget from the flag and from the environment
    assert_eq!(code(&f.run(&["chase", "chain.db", "chain.t"])), 0);
    assert_eq!(code(&f.run(&["--budget", "2", "chase", "chain.db", "chain.t"])), 3);
    let o = bin()
        .current_dir(f.dir.path())
        .env("CQLIN_CHASE_BUDGET", "2")
        .args(["chase", "chain.db", "chain.t"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    // the flag wins over the environment
    let o = bin()
        .current_dir(f.dir.path())
        .env("CQLIN_CHASE_BUDGET", "2")
        .args(["--budget", "1000", "chase", "chain.db", "chain.t"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);

    // a recursive existential rule is rejected before chasing
    write(f.dir.path(), "rec.t", "E(x,y) -> E(y,z).\n");
    write(f.dir.path(), "e.db", "E(1,2).\n");
    assert_eq!(code(&f.run(&["chase", "e.db", "rec.t"])), 2);
}

#[test]
fn chase_writes_instance() {
    let f = Fixture::new();
    let o = f.run(&["chase", "chain.db", "chain.t", "-o", "out.db"]);
    assert_eq!(code(&o), 0);
    let out = std::fs::read_to_string(f.dir.path().join("out.db")).unwrap();
    assert_eq!(out.lines().count(), 12);
    let stats: Json = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(stats["facts"], 12);
}

#[test]
fn gen_is_seed_deterministic() {
    let f = Fixture::new();
    let args = |seed: &'static str| {
        vec!["--seed", seed, "gen", "random", "--schema", "R/2,S/1", "--n", "200", "--domain", "30"]
    };
    let a = f.run(&args("7"));
    let b = f.run(&args("7"));
    let c = f.run(&args("8"));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);

    let t1 = f.run(&["--seed", "3", "gen", "vutd", "--n", "40", "--planted"]);
    let t2 = f.run(&["--seed", "3", "gen", "vutd", "--n", "40", "--planted"]);
    assert_eq!(code(&t1), 0);
    assert_eq!(t1.stdout, t2.stdout);

    // a random database generated against TGDs satisfies them
    let o = f.run(&["--seed", "1", "gen", "random", "--tgds", "close.t", "--n", "60", "--domain", "8", "-o", "r.db"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&f.run(&["eval", "tri.q", "close.t", "r.db", "--mode", "SINGLE_TEST"])), 0);
}

#[test]
fn config_file_is_honoured() {
    let f = Fixture::new();
    write(f.dir.path(), "cqlin.toml", "chase_budget = 2\noutput_format = \"text\"\n");
    // picked up from the working directory
    assert_eq!(code(&f.run(&["chase", "chain.db", "chain.t"])), 3);
    let o = f.run(&["classify", "tri.q", "empty.t", "--mode", "COUNT"]);
    assert!(serde_json::from_slice::<Json>(&o.stdout).is_err());
    let o = f.run(&["--format", "json", "classify", "tri.q", "empty.t", "--mode", "COUNT"]);
    validate("verdict.schema.json", &o);

    write(f.dir.path(), "other.toml", "chase_budget = 100\n");
    assert_eq!(code(&f.run(&["--config", "other.toml", "chase", "chain.db", "chain.t"])), 0);
    write(f.dir.path(), "typo.toml", "chase_budgett = 100\n");
    assert_eq!(code(&f.run(&["--config", "typo.toml", "chase", "chain.db", "chain.t"])), 1);
}

#[test]
fn bench_spec_runs() {
    let f = Fixture::new();
    write(
        f.dir.path(),
        "b.toml",
        "engine = \"enumerate\"\nquery = \"q(x,y,z) :- R(x,y), S(y,z).\"\nsizes = [500, 2000]\nseed = 1\n\
         [generator]\nkind = \"random\"\nseed = 1\nsize = 500\nschema = [[\"R\", 2], [\"S\", 2]]\n",
    );
    let o = f.run(&["bench", "--spec", "b.toml", "--csv", "b.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = validate("bench.schema.json", &o);
    assert_eq!(j["rows"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(f.dir.path().join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
