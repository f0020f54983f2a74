//! Configuration-driven experiments behind the `lsred` binary.

mod commands;
mod config;
mod verify;

pub use commands::{print_table, read_solution, run, Outcome, Status};
pub use config::{
    CoefficientConfig, ExperimentConfig, LandscapeConfig, LiftConfig, ManifoldConfig, ManifoldKind, MeshConfig, OutputConfig,
    ProblemConfig, Schedule, SolveConfig, Tolerances, VerifyConfig,
};
pub use verify::{run_suite, CheckOutcome, Fault, VerifyOptions};

use crate::error::Error;

/// 2 for configuration errors, 1 for everything else.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}
