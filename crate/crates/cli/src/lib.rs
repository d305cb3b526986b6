//! File formats, test corpus and command implementations for the `circlemap`
//! tool.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod io;

pub use commands::{
    run_density, run_export, run_extend, run_loop, run_path, run_verify, CommandOutcome, DensityOptions,
    ExportFormat, ExtendMethod, ExtendOptions, PathCommandOptions,
};
pub use error::{CliError, Result};
