use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::cache::{CacheKey, EntryState, ToolCache};
use super::{Backend, BackendKind, ExecError};
use crate::planner::{ExecutionPlan, PlanStep};
use crate::repository::RepositoryHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheStatus {
    /// Installed by this preparation (or would be, under a dry run).
    Cold,
    /// Already installed; nothing fetched or executed.
    Warm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToolState {
    pub tool: String,
    pub version: String,
    pub uri: String,
    pub configurator: String,
    pub status: CacheStatus,
    pub setup_lines: Vec<String>,
    pub setup_executed: bool,
    /// A corrupt entry was evicted before reinstalling.
    pub evicted: bool,
    pub bin_dir: PathBuf,
}

impl ToolState {
    pub fn key(&self) -> CacheKey {
        CacheKey {
            tool: self.tool.clone(),
            version: self.version.clone(),
            uri: self.uri.clone(),
        }
    }
}

/// Execution-context setup taken from a configurator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ContextState {
    pub tool: String,
    pub configurator: String,
    pub builder: String,
    pub setup_lines: Vec<String>,
    pub status: CacheStatus,
    pub setup_executed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvironmentState {
    pub backend: BackendKind,
    pub cache_dir: PathBuf,
    pub contexts: Vec<ContextState>,
    pub tools: Vec<ToolState>,
    /// Setup lines actually executed (context and tool).
    pub setup_executions: usize,
    pub artifact_fetches: usize,
}

impl EnvironmentState {
    pub fn tool_for(&self, step: &PlanStep) -> Option<&ToolState> {
        self.tools.iter().find(|t| {
            t.tool == step.tool_name
                && t.version == step.tool_version
                && t.uri == step.configurator.uri
        })
    }

    /// Combines states prepared separately against the same cache.
    pub fn merge(mut self, other: EnvironmentState) -> Self {
        for t in other.tools {
            if self.tool_for_key(&t.key()).is_none() {
                self.tools.push(t);
            }
        }
        for c in other.contexts {
            if !self
                .contexts
                .iter()
                .any(|x| x.builder == c.builder && x.setup_lines == c.setup_lines)
            {
                self.contexts.push(c);
            }
        }
        self.setup_executions += other.setup_executions;
        self.artifact_fetches += other.artifact_fetches;
        self
    }

    fn tool_for_key(&self, key: &CacheKey) -> Option<&ToolState> {
        self.tools.iter().find(|t| &t.key() == key)
    }
}

fn run_setup_line(line: &str, cwd: &Path) -> Result<(), (Option<i32>, String)> {
    let out = Command::new("sh")
        .arg("-c")
        .arg(line)
        .current_dir(cwd)
        .output()
        .map_err(|e| (None, e.to_string()))?;
    if out.status.success() {
        Ok(())
    } else {
        Err((
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim().to_string(),
        ))
    }
}

fn io_err(context: String) -> impl FnOnce(std::io::Error) -> ExecError {
    move |source| ExecError::Io { context, source }
}

/// Makes every tool of the plan ready to run.
///
/// Each distinct configurator setup runs once per backend environment and
/// each tool's own setup once per cache entry. Tools found installed are
/// warm and cost no fetch and no setup. A dry run only reports what would
/// happen and touches nothing.
pub fn prepare_environment(
    plan: &ExecutionPlan,
    repo: &RepositoryHandle,
    cache: &ToolCache,
    backend: &Backend,
) -> Result<EnvironmentState, ExecError> {
    let live = backend.kind() != BackendKind::DryRun;
    let mut state = EnvironmentState {
        backend: backend.kind(),
        cache_dir: cache.dir().to_path_buf(),
        contexts: Vec::new(),
        tools: Vec::new(),
        setup_executions: 0,
        artifact_fetches: 0,
    };
    if live {
        fs::create_dir_all(cache.dir())
            .map_err(io_err(format!("creating cache {}", cache.dir().display())))?;
    }

    // Context setup, once per distinct (builder, setup) pair.
    let mut seen_contexts = BTreeSet::new();
    for step in &plan.steps {
        let cfg = &step.configurator;
        if !seen_contexts.insert((cfg.builder.clone(), cfg.setup.clone())) {
            continue;
        }
        let marker = cache.context_marker(backend.kind().as_str(), &cfg.builder, &cfg.setup);
        let done = marker.is_file();
        let mut ctx = ContextState {
            tool: step.tool_name.clone(),
            configurator: cfg.name.clone(),
            builder: cfg.builder.clone(),
            setup_lines: cfg.setup.clone(),
            status: if done {
                CacheStatus::Warm
            } else {
                CacheStatus::Cold
            },
            setup_executed: false,
        };
        if live && !done {
            for line in &cfg.setup {
                run_setup_line(line, cache.dir()).map_err(|(code, stderr)| {
                    ExecError::SetupFailure {
                        tool: step.tool_name.clone(),
                        line: line.clone(),
                        exit_code: code,
                        stderr,
                    }
                })?;
                state.setup_executions += 1;
            }
            let parent = marker.parent().expect("marker has a parent");
            fs::create_dir_all(parent).map_err(io_err(format!("creating {}", parent.display())))?;
            super::cache::write_atomic(&marker, b"ok\n")
                .map_err(io_err(format!("writing {}", marker.display())))?;
            ctx.setup_executed = true;
        }
        state.contexts.push(ctx);
    }

    // Tool installation, once per cache entry.
    let mut seen_tools = BTreeSet::new();
    for step in &plan.steps {
        let key = CacheKey {
            tool: step.tool_name.clone(),
            version: step.tool_version.clone(),
            uri: step.configurator.uri.clone(),
        };
        if !seen_tools.insert(key.clone()) {
            continue;
        }
        let commands: Vec<String> = plan
            .steps
            .iter()
            .filter(|s| s.tool_name == key.tool)
            .map(|s| s.composed_argv[0].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut tool = ToolState {
            tool: key.tool.clone(),
            version: key.version.clone(),
            uri: key.uri.clone(),
            configurator: step.configurator.name.clone(),
            status: CacheStatus::Warm,
            setup_lines: step.tool_setup.clone(),
            setup_executed: false,
            evicted: false,
            bin_dir: cache.bin_dir(&key),
        };

        if !live {
            if cache.state(&key) != EntryState::Installed {
                tool.status = CacheStatus::Cold;
            }
            state.tools.push(tool);
            continue;
        }

        let lock = cache.entry_lock(&key);
        let _guard = lock.lock().expect("cache entry lock poisoned");
        let mut entry = cache.state(&key);
        if entry == EntryState::Corrupt {
            tracing::warn!(
                "cache entry for {} {} is corrupt; reinstalling",
                key.tool,
                key.version
            );
            cache.evict(&key)?;
            tool.evicted = true;
            entry = EntryState::Missing;
        }
        if entry == EntryState::Missing {
            tool.status = CacheStatus::Cold;
            let artifact = repo.fetch_artifact(&key.tool, &commands, &step.configurator)?;
            state.artifact_fetches += 1;
            let entry_dir = cache.stage_artifact(&key, &artifact)?;
            for line in &step.tool_setup {
                run_setup_line(line, &entry_dir).map_err(|(code, stderr)| {
                    ExecError::SetupFailure {
                        tool: key.tool.clone(),
                        line: line.clone(),
                        exit_code: code,
                        stderr,
                    }
                })?;
                state.setup_executions += 1;
            }
            tool.setup_executed = true;
            cache.mark_installed(&key)?;
            if cache.state(&key) != EntryState::Installed {
                return Err(ExecError::CacheCorruption {
                    tool: key.tool.clone(),
                    version: key.version.clone(),
                    reason: "entry still incomplete after reinstalling".into(),
                });
            }
        }
        state.tools.push(tool);
    }
    Ok(state)
}
