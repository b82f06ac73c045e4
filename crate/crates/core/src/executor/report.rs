use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::prepare::CacheStatus;
use super::BackendKind;
use crate::planner::ExecutionPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    /// Position in the plan, from 0.
    pub position: usize,
    pub instance_index: usize,
    pub tool: String,
    pub command: String,
    pub status: StepStatus,
    pub exit_code: Option<i32>,
    /// Command line as launched (or as it would be launched, for a dry run).
    pub command_line: Vec<String>,
    pub work_dir: String,
    /// Milliseconds since the run started.
    pub started_ms: u64,
    pub wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToolRecord {
    pub tool: String,
    pub version: String,
    pub cache: CacheStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceLimits {
    pub memory_mib: u64,
    pub cpu_cores: u32,
    /// Only container runs enforce limits; elsewhere they are advisory.
    pub enforced: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub backend: BackendKind,
    pub status: RunStatus,
    pub steps: Vec<StepRecord>,
    pub tools: Vec<ToolRecord>,
    pub limits: ResourceLimits,
    /// Terminal outputs copied to the output directory, relative to it.
    pub copied_outputs: Vec<String>,
    /// Why the run stopped before any step started.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl RunReport {
    /// Report for a run that never got to its steps, e.g. because tool setup failed.
    pub fn aborted(plan: &ExecutionPlan, backend: BackendKind, error: impl Into<String>) -> Self {
        Self {
            backend,
            status: RunStatus::Failed,
            steps: plan
                .steps
                .iter()
                .enumerate()
                .map(|(position, step)| StepRecord {
                    position,
                    instance_index: step.instance_index,
                    tool: step.tool_name.clone(),
                    command: step.command_name.clone(),
                    status: StepStatus::Skipped,
                    exit_code: None,
                    command_line: Vec::new(),
                    work_dir: step.work_dir.clone(),
                    started_ms: 0,
                    wall_time_ms: 0,
                    message: None,
                })
                .collect(),
            tools: Vec::new(),
            limits: ResourceLimits {
                memory_mib: plan.config.memory_mib,
                cpu_cores: plan.config.cpu_cores,
                enforced: backend == BackendKind::ContainerCommand,
            },
            copied_outputs: Vec::new(),
            error: Some(error.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn failed_step(&self) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.status == StepStatus::Failed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn summary(&self) -> String {
        let count = |st| self.steps.iter().filter(|s| s.status == st).count();
        let mut out = format!(
            "run {} ({}): {} steps, {} ok, {} failed, {} skipped\n",
            match self.status {
                RunStatus::Ok => "ok",
                RunStatus::Failed => "FAILED",
            },
            self.backend,
            self.steps.len(),
            count(StepStatus::Ok),
            count(StepStatus::Failed),
            count(StepStatus::Skipped),
        );
        for s in &self.steps {
            let status = match s.status {
                StepStatus::Ok => "ok",
                StepStatus::Failed => "failed",
                StepStatus::Skipped => "skipped",
            };
            let _ = write!(
                out,
                "  [{}] {:<7} {}/{} ({} ms)",
                s.position + 1,
                status,
                s.tool,
                s.command,
                s.wall_time_ms
            );
            if let Some(code) = s.exit_code.filter(|c| *c != 0) {
                let _ = write!(out, " exit {code}");
            }
            if let Some(m) = &s.message {
                let _ = write!(out, ": {m}");
            }
            out.push('\n');
            if self.backend == BackendKind::DryRun {
                let _ = writeln!(out, "      $ {}", s.command_line.join(" "));
            }
        }
        if !self.tools.is_empty() {
            let tools: Vec<String> = self
                .tools
                .iter()
                .map(|t| {
                    let c = match t.cache {
                        CacheStatus::Cold => "cold",
                        CacheStatus::Warm => "warm",
                    };
                    format!("{} {} {c}", t.tool, t.version)
                })
                .collect();
            let _ = writeln!(out, "tools: {}", tools.join(", "));
        }
        let _ = writeln!(
            out,
            "limits: {} MiB, {} cpu(s){}",
            self.limits.memory_mib,
            self.limits.cpu_cores,
            if self.limits.enforced {
                ""
            } else {
                " (advisory)"
            }
        );
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        for o in &self.copied_outputs {
            let _ = writeln!(out, "output: {o}");
        }
        out
    }
}
