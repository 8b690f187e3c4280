//! Experiment runner for stochastic lattice systems driven by fBm.
//!
//! Every subcommand reads a JSON [`config::ExperimentConfig`], writes its
//! data as CSV and finishes with a JSON [`run::RunManifest`] listing each
//! check with its value, threshold and verdict.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use output::{emit_plot_series, CsvTable, PlotSeries};
pub use run::{run, Check, Command, RunManifest};

/// Environment variable that overrides the output directory of the config.
pub const OUT_DIR_ENV: &str = "SLDS_OUT_DIR";
