//! Running plans: tool cache, environment preparation, workspaces and backends.

pub mod cache;
pub mod container;
mod prepare;
mod report;
mod run;
pub mod workspace;

use std::fmt;
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::repository::RepositoryError;

pub use cache::{CacheKey, EntryState, ToolCache};
pub use container::{render_container_invocation, render_local_invocation, CONTAINER_STAGING};
pub use prepare::{prepare_environment, CacheStatus, ContextState, EnvironmentState, ToolState};
pub use report::{ResourceLimits, RunReport, RunStatus, StepRecord, StepStatus, ToolRecord};
pub use run::{run, run_concurrent};
pub use workspace::Workspace;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("setup of '{tool}' failed running `{line}` (exit {}){}", fmt_code(*.exit_code), fmt_stderr(.stderr))]
    SetupFailure {
        tool: String,
        line: String,
        exit_code: Option<i32>,
        stderr: String,
    },
    #[error("cache entry for {tool} {version} is corrupt: {reason}")]
    CacheCorruption {
        tool: String,
        version: String,
        reason: String,
    },
    #[error("unknown builder '{0}'")]
    UnknownBuilder(String),
    #[error("workspace violation: {0}")]
    WorkspaceViolation(String),
    #[error("workspace error: {0}")]
    Workspace(String),
    #[error("workspaces overlap: {0}")]
    WorkspaceOverlap(String),
    #[error("environment not prepared: {0}")]
    EnvironmentNotPrepared(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

fn fmt_code(code: Option<i32>) -> String {
    code.map_or_else(|| "signal".to_string(), |c| c.to_string())
}

fn fmt_stderr(stderr: &str) -> String {
    if stderr.is_empty() {
        String::new()
    } else {
        format!(": {stderr}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    DryRun,
    LocalProcess,
    ContainerCommand,
}

impl BackendKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DryRun => "dry-run",
            Self::LocalProcess => "local-process",
            Self::ContainerCommand => "container-command",
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How steps are executed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Reports what would run; spawns nothing and writes nothing.
    DryRun,
    /// Runs each step as a host process, tool binaries from the cache on `PATH`.
    LocalProcess,
    /// Runs each step through a container runtime program.
    ContainerCommand { runtime: PathBuf },
}

impl Backend {
    pub fn kind(&self) -> BackendKind {
        match self {
            Self::DryRun => BackendKind::DryRun,
            Self::LocalProcess => BackendKind::LocalProcess,
            Self::ContainerCommand { .. } => BackendKind::ContainerCommand,
        }
    }

    /// Container backend using `docker` from `PATH`.
    pub fn container_from_path() -> Result<Self, ExecError> {
        container::find_on_path("docker")
            .map(|runtime| Self::ContainerCommand { runtime })
            .ok_or_else(|| ExecError::BackendUnavailable("no `docker` found on PATH".into()))
    }
}
