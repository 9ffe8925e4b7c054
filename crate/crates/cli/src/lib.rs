//! Experiment front end for the D2D spectrum-sharing simulator: flat
//! key/value configuration, parameter sweeps over (strategy, W, xi),
//! figure-reproduction recipes, and CSV emission.

pub mod config;
pub mod output;
pub mod recipes;
pub mod runner;

pub use config::{apply_config, parse_config, ConfigError, ExperimentSpec, Scale};
pub use output::emit_csv;
pub use recipes::recipe;
pub use runner::{run_experiment, SweepRow};
