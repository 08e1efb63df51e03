use std::path::Path;

use energaize_core::envsim::EnvError;
use energaize_core::kpi::KpiError;
use energaize_core::maddpg::MaddpgError;
use energaize_core::scenario::ScenarioError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid scenario:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    InvalidScenario(Vec<energaize_core::scenario::Violation>),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("numeric divergence: {0}")]
    Divergence(String),
    #[error("artifact mismatch: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Divergence(_) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Other(_) => 1,
            _ => 2,
        }
    }

    pub fn input(path: &Path, message: impl std::fmt::Display) -> Self {
        CliError::Input {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::InvalidScenario(v) => CliError::InvalidScenario(v),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<MaddpgError> for CliError {
    fn from(e: MaddpgError) -> Self {
        match e {
            MaddpgError::Divergence { .. } => CliError::Divergence(e.to_string()),
            MaddpgError::Env(env) => env.into(),
            MaddpgError::InvalidHyperparams(m) => CliError::Config(m),
            MaddpgError::Io { path, source } => CliError::Input {
                path,
                message: source.to_string(),
            },
            MaddpgError::Checkpoint(m) => CliError::Mismatch(m),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<KpiError> for CliError {
    fn from(e: KpiError) -> Self {
        CliError::Input {
            path: "trace".into(),
            message: e.to_string(),
        }
    }
}
