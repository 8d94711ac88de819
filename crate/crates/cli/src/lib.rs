//! Command-line experiment runner for `stripcs`: configuration, dispatch,
//! and CSV/JSON/gnuplot output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Format, Kind, McFunction, Settings};
pub use output::{write_outcome, Outcome, Table};
pub use run::{run, RunError};

/// Exit status for a finished run: 0 when every check held, 1 otherwise.
/// Configuration and runtime errors exit with 2.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

/// Runs and writes outputs. Nothing is left on disk when this returns an error.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Outcome, Vec<std::path::PathBuf>), RunError> {
    let outcome = run(cfg)?;
    let files = write_outcome(&outcome, cfg, &cfg.hash())?;
    Ok((outcome, files))
}
