//! Operator command surface: a single JSON run config with command-line
//! overrides, dataset presets, and the `prepare`/`train`/`evaluate`/
//! `ablate`/`hops`/`probe-order`/`extract`/`gradcheck` commands.

mod commands;
mod config;

pub use commands::{
    cmd_ablate, cmd_evaluate, cmd_extract, cmd_gradcheck, cmd_hops, cmd_prepare, cmd_probe_order,
    cmd_train, jitter_biases, ExtractArgs, ProbeOrderArgs,
};
pub use config::{
    load_run_config, preset, preset_names, DatasetConfig, Overrides, RunConfig, RUN_DIR_ENV,
};

use thiserror::Error;

/// Errors grouped by exit code: validation problems exit 1, numeric
/// failures (non-finite loss, failed gradient check) exit 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<crate::kg::KgError> for CliError {
    fn from(e: crate::kg::KgError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<crate::model::ModelError> for CliError {
    fn from(e: crate::model::ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<crate::eval::EvalError> for CliError {
    fn from(e: crate::eval::EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<crate::training::TrainError> for CliError {
    fn from(e: crate::training::TrainError) -> Self {
        match &e {
            crate::training::TrainError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
