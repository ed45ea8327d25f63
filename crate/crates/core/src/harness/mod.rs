//! Reduction-instance generators, dedicated algorithms for registered
//! examples, and step-count benchmarks.

pub mod bench;
pub mod demo;
pub mod gen;

pub use bench::{bench, loglog_slope, BenchEngine, BenchReport, BenchRow, BenchSpec, DEFAULT_SIZES};
pub use demo::{demo_ex83, demo_qsquare, demo_unary};
pub use gen::{
    gen_clique_instance, gen_ex84_db, gen_random_satisfying, gen_triangle_db, gen_vutd_db,
    joint_schema, GeneratorSpec, Graph, Tripartite,
};
