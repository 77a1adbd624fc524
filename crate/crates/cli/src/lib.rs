//! Experiment runner: config files, presets and batch execution with
//! averaged output.

pub mod batch;
pub mod experiment;
pub mod presets;
pub mod settings;

use std::path::PathBuf;

use oppsim_core::{ConfigError, MetricsError};

pub use batch::{run_batch, summary_table, write_outputs, BatchResult, PointResult};
pub use experiment::{build_spec, ExperimentSpec, ResolvedPoint, SweepPoint};
pub use presets::{preset, PRESETS};
pub use settings::{parse_config, ConfigFile, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {why}")]
    InvalidValue { key: String, value: String, why: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
