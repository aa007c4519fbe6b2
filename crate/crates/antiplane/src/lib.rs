//! File formats, run configuration, verification suites and the command-line
//! front end around `antiplane-core`.

pub mod config;
pub mod error;
pub mod mesh_io;
pub mod output;
pub mod solve;
pub mod suites;
pub mod threads;

pub use config::RunConfig;
pub use error::CliError;
pub use mesh_io::{format_mesh, load_mesh, parse_tagging, save_mesh};
pub use solve::{build_model, run_solve, SolveSummary};
pub use suites::{run_suite, Suite, SuiteReport};
