//! Rendering plan steps into concrete command lines.

use std::path::{Path, PathBuf};

use super::workspace::Workspace;
use super::ExecError;
use crate::planner::{PlanStep, ResourceConfig};

/// Where the staging directory is mounted inside a container.
pub const CONTAINER_STAGING: &str = "/pipes/staging";

/// Builder kinds with a known container runtime, and that runtime's program name.
pub const BUILDERS: [(&str, &str); 1] = [("Docker", "docker")];

pub fn runtime_for_builder(builder: &str) -> Option<&'static str> {
    BUILDERS
        .iter()
        .find(|(b, _)| *b == builder)
        .map(|(_, runtime)| *runtime)
}

/// Rewrites the step's workspace-relative path tokens to live under `root`.
/// Absolute values are left alone.
pub fn materialize_argv(step: &PlanStep, root: &str) -> Vec<String> {
    let mut argv = step.composed_argv.clone();
    for span in &step.path_spans {
        let Some(token) = argv.get_mut(span.token) else {
            continue;
        };
        if span.offset > token.len() || !token.is_char_boundary(span.offset) {
            continue;
        }
        let (head, rel) = token.split_at(span.offset);
        if rel.is_empty() || Path::new(rel).is_absolute() {
            continue;
        }
        *token = format!("{head}{}/{rel}", root.trim_end_matches('/'));
    }
    argv
}

/// Command line as a local process would run it, paths under the staging directory.
pub fn render_local_invocation(step: &PlanStep, ws: &Workspace) -> Vec<String> {
    materialize_argv(step, &ws.staging_dir.to_string_lossy())
}

/// `docker run` invocation for a step:
///
/// ```text
/// docker run --rm --memory=<M>m --cpus=<C>
///     --volume=<staging>:/pipes/staging --workdir=/pipes/staging/<step dir>
///     <uri> <argv...>
/// ```
pub fn render_container_invocation(
    step: &PlanStep,
    ws: &Workspace,
    config: &ResourceConfig,
) -> Result<Vec<String>, ExecError> {
    let builder = &step.configurator.builder;
    let runtime =
        runtime_for_builder(builder).ok_or_else(|| ExecError::UnknownBuilder(builder.clone()))?;
    let mut tokens = vec![
        runtime.to_string(),
        "run".to_string(),
        "--rm".to_string(),
        format!("--memory={}m", config.memory_mib),
        format!("--cpus={}", config.cpu_cores),
        format!("--volume={}:{CONTAINER_STAGING}", ws.staging_dir.display()),
        format!("--workdir={CONTAINER_STAGING}/{}", step.work_dir),
        step.configurator.uri.clone(),
    ];
    tokens.extend(materialize_argv(step, CONTAINER_STAGING));
    Ok(tokens)
}

/// Looks a program up on `PATH`.
pub fn find_on_path(program: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(program))
        .find(|candidate| candidate.is_file())
}
