//! Batch front end for `homogopt`: landscape analysis, theorem
//! verification, single solves and the method benchmark.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run_analyze, run_bench, run_solve, run_verify};
pub use config::{FunctionSource, RunConfig};
