//! Configuration, artifact output and subcommands behind the `giantbic` binary.

pub mod commands;
pub mod config;
pub mod output;
mod selfcheck;
mod sweep;

pub use commands::{run, CliError, RunOptions, EXIT_INTERNAL, EXIT_MODEL, EXIT_OK, EXIT_VALIDATION};
pub use config::{load, Command, Format, RunConfig, ValidationReport};
pub use output::{verify_manifest, ResultManifest};
pub use selfcheck::MODEL_RMS_TARGET;
