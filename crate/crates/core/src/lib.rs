//! In-memory join execution over named relations.
//!
//! The pipeline: parse or build a [`query::Query`], check acyclicity and
//! derive a join tree via [`query::gyo_reduce`], compile a left-deep plan
//! with [`planner::compile_plan`] (or [`convolution::plan_from_rooted`]
//! for cyclic queries), then run one of the executors in [`exec`]:
//!
//! * `run_hj`: pipelined binary hash join.
//! * `run_ttj`: the same pipeline plus probe-failure backjumping and
//!   dangling-tuple deletion, with optional key memoization (`ng`) and
//!   empty-bucket propagation (`dp`).
//! * `run_ya`: semijoin reduction followed by a join pass that never
//!   fails a probe on elimination-ordered plans.
//!
//! Every run produces an [`exec::ExecStats`] counter block; deterministic
//! workload generators live in [`workloads`].

pub mod catalog;
pub mod convolution;
pub mod exec;
pub mod planner;
pub mod query;
pub mod workloads;

pub use catalog::{Database, Relation, Schema, Tuple, Value};
pub use exec::{ExecStats, OutputSink};
pub use query::Query;
