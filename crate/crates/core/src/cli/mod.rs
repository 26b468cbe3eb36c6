//! Experiment runner behind the `dtn-lab` binary: JSON configs in, CSV
//! tables, a JSON summary and optional SVG plots out.

mod config;
mod experiments;
mod report;

use std::path::Path;
use std::time::Instant;

pub use config::{validate_config, ConfigError, Experiment, ExperimentConfig};
pub use report::{num, CheckRecord, Plot, Relation, RunOutput, RunReport, Table};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for a run whose checks all pass.
pub const EXIT_PASS: i32 = 0;
/// Exit code for a run with at least one failed check.
pub const EXIT_CHECK_FAILURE: i32 = 1;
/// Exit code for an invalid config or command line.
pub const EXIT_CONFIG_ERROR: i32 = 2;

/// Runs an experiment in memory. Failures inside a check become failed
/// records rather than errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunOutput {
    let start = Instant::now();
    let collected = experiments::dispatch(cfg);
    let pass = !collected.records.is_empty() && collected.records.iter().all(|r| r.pass);
    RunOutput {
        report: RunReport {
            experiment: cfg.experiment.name().to_string(),
            version: VERSION.to_string(),
            config: cfg.to_json(),
            records: collected.records,
            wall_time_s: start.elapsed().as_secs_f64(),
            pass,
        },
        tables: collected.tables,
        plots: collected.plots,
    }
}

/// Runs an experiment and writes its files into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, plots: bool) -> Result<RunOutput> {
    let out = run_experiment(cfg);
    out.write(dir, plots)?;
    Ok(out)
}
