//! Config-driven experiments: parse a JSON config, run the requested
//! computation over a grid of `n`, and write plot-ready CSV or JSON.
//!
//! Every output row ends with a `config_digest` column (SHA-256 of the
//! canonical config). Tables are written to
//! `<output_dir>/<experiment>[-<table>]-<digest8>.<ext>`; wall-clock and
//! thread metadata go to a separate `.meta.json` file so table bytes depend
//! only on the config.

mod config;
mod run;
mod table;

pub use config::{
    parse_config, ExperimentConfig, ExperimentKind, KRule, OutputFormat, Overrides, DEFAULT_EPSILONS,
    DEFAULT_REPLICAS,
};
pub use run::{compute, preflight, run, table_file_name, RunOutput, ARTIFACT_VERSION};
pub use table::{Cell, Table};
