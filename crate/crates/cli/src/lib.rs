//! Library side of the `homqst` command: run configuration, subcommands and
//! the exit-code contract (2 config, 3 I/O, 4 numerical).

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_dip_scan, cmd_reconstruct, cmd_run_all, cmd_simulate, cmd_visibility, DepthTable, Format, Globals,
    ReconstructArgs, VisibilityArgs,
};
pub use config::{Experiment, RunConfig};
pub use error::{CliError, CliResult};
