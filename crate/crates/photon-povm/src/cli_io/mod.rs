//! Config parsing, experiment orchestration, and CSV emission for the
//! `photon-povm` binary.
//!
//! Configs are flat `section.key = value` text (diff-friendly, no external
//! format); unknown keys are errors so typos cannot silently fall back to
//! defaults. Every output file starts with a comment header carrying the
//! hash of the fully resolved config and the seed, and all emission paths
//! are deterministic, so re-running a config reproduces files byte for byte.
//!
//! Exit-code contract of the runners: `Ok(report)` with `report.passed`
//! false means an acceptance threshold failed (exit 1);
//! [`CliError::Config`] means a bad config (exit 2); other errors are
//! runtime failures (exit 1).

mod config;
mod runners;

pub use config::{ExperimentConfig, PulseFamily};
pub use runners::{
    run_coincidence, run_kernel_compare, run_povm_check, run_simulate, run_wavefunction, RunReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", line_suffix(.line))]
    Config {
        line: Option<usize>,
        message: String,
    },
    #[error("{0}")]
    Run(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: &Option<usize>) -> String {
    match line {
        Some(l) => format!(" (line {l})"),
        None => String::new(),
    }
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config {
            line: None,
            message: message.into(),
        }
    }

    pub fn run(message: impl Into<String>) -> Self {
        CliError::Run(message.into())
    }

    /// Process exit code for this error: 2 for config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

impl From<crate::mode_space::ModeSpaceError> for CliError {
    fn from(e: crate::mode_space::ModeSpaceError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<crate::photon_states::StateError> for CliError {
    fn from(e: crate::photon_states::StateError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::detector_kernel::KernelError> for CliError {
    fn from(e: crate::detector_kernel::KernelError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::povm::PovmError> for CliError {
    fn from(e: crate::povm::PovmError) -> Self {
        CliError::Run(e.to_string())
    }
}

impl From<crate::measurement_sim::SimError> for CliError {
    fn from(e: crate::measurement_sim::SimError) -> Self {
        CliError::Run(e.to_string())
    }
}
