use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use super::container::{render_container_invocation, render_local_invocation};
use super::prepare::EnvironmentState;
use super::report::{ResourceLimits, RunReport, RunStatus, StepRecord, StepStatus, ToolRecord};
use super::workspace::{overlaps, stays_inside, Workspace};
use super::{Backend, BackendKind, ExecError};
use crate::planner::{ExecutionPlan, PlanStep};
use crate::repository::OutputKind;

fn io_err(context: String) -> impl FnOnce(io::Error) -> ExecError {
    move |source| ExecError::Io { context, source }
}

/// Copies a file or a directory tree.
fn copy_tree(src: &Path, dst: &Path) -> io::Result<()> {
    if src.is_dir() {
        fs::create_dir_all(dst)?;
        for entry in fs::read_dir(src)? {
            let entry = entry?;
            copy_tree(&entry.path(), &dst.join(entry.file_name()))?;
        }
        Ok(())
    } else {
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::copy(src, dst).map(|_| ())
    }
}

/// Declared outputs must land inside staging and never in the input directory.
fn check_outputs(plan: &ExecutionPlan, ws: &Workspace) -> Result<(), ExecError> {
    for step in &plan.steps {
        for out in &step.declared_outputs {
            let p = Path::new(&out.path);
            let bad = if p.is_absolute() {
                overlaps(p, &ws.input_dir)
                    || !super::workspace::normalize(p).starts_with(&ws.staging_dir)
            } else {
                !stays_inside(&out.path)
            };
            if bad {
                return Err(ExecError::WorkspaceViolation(format!(
                    "output '{}' of step {} ({}/{}) resolves to '{}', outside the staging directory",
                    out.name, step.instance_index, step.tool_name, step.command_name, out.path
                )));
            }
        }
    }
    Ok(())
}

fn check_environment(
    plan: &ExecutionPlan,
    env: &EnvironmentState,
    backend: &Backend,
) -> Result<(), ExecError> {
    if backend.kind() == BackendKind::DryRun {
        return Ok(());
    }
    if env.backend == BackendKind::DryRun {
        return Err(ExecError::EnvironmentNotPrepared(
            "the environment was only dry-run prepared".into(),
        ));
    }
    for step in &plan.steps {
        if env.tool_for(step).is_none() {
            return Err(ExecError::EnvironmentNotPrepared(format!(
                "tool '{}' {} was not prepared",
                step.tool_name, step.tool_version
            )));
        }
    }
    Ok(())
}

fn relative_to_staging(ws: &Workspace, path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() {
        super::workspace::normalize(p)
            .strip_prefix(&ws.staging_dir)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| p.to_path_buf())
    } else {
        super::workspace::normalize(p)
    }
}

struct StepOutcome {
    status: StepStatus,
    exit_code: Option<i32>,
    message: Option<String>,
}

fn execute_step(
    step: &PlanStep,
    argv: &[String],
    ws: &Workspace,
    env: &EnvironmentState,
) -> Result<StepOutcome, ExecError> {
    let work_dir = ws.staging_dir.join(&step.work_dir);
    fs::create_dir_all(&work_dir).map_err(io_err(format!("creating {}", work_dir.display())))?;
    let stdout = fs::File::create(work_dir.join("stdout.log"))
        .map_err(io_err(format!("creating logs in {}", work_dir.display())))?;
    let stderr = fs::File::create(work_dir.join("stderr.log"))
        .map_err(io_err(format!("creating logs in {}", work_dir.display())))?;

    let mut path = OsString::new();
    if let Some(tool) = env.tool_for(step) {
        path.push(tool.bin_dir.as_os_str());
    }
    if let Some(existing) = std::env::var_os("PATH") {
        path.push(":");
        path.push(existing);
    }
    // Resolve the program against the augmented PATH ourselves; Command looks
    // programs up in the parent's PATH.
    let program = std::env::split_paths(&path)
        .map(|d| d.join(&argv[0]))
        .find(|p| p.is_file())
        .unwrap_or_else(|| PathBuf::from(&argv[0]));

    let status = Command::new(&program)
        .args(&argv[1..])
        .current_dir(&work_dir)
        .env("PATH", &path)
        .env("PIPES_STAGING", &ws.staging_dir)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .status();
    let status = match status {
        Ok(s) => s,
        Err(e) => {
            return Ok(StepOutcome {
                status: StepStatus::Failed,
                exit_code: None,
                message: Some(format!("could not launch '{}': {e}", argv[0])),
            })
        }
    };
    if !status.success() {
        return Ok(StepOutcome {
            status: StepStatus::Failed,
            exit_code: status.code(),
            message: Some(match status.code() {
                Some(c) => format!("exited with status {c}"),
                None => "terminated by a signal".to_string(),
            }),
        });
    }
    for out in &step.declared_outputs {
        let p = ws.staged(&out.path);
        let present = match out.kind {
            OutputKind::File => p.is_file(),
            OutputKind::Directory => p.is_dir(),
        };
        if !present {
            return Ok(StepOutcome {
                status: StepStatus::Failed,
                exit_code: status.code(),
                message: Some(format!(
                    "declared output '{}' missing at {}",
                    out.name, out.path
                )),
            });
        }
    }
    Ok(StepOutcome {
        status: StepStatus::Ok,
        exit_code: status.code(),
        message: None,
    })
}

/// Runs every step of `plan` in order.
///
/// The input directory's contents are copied into staging first, so relative
/// paths in the pipeline find them there and the input directory is only
/// read. Each step runs in its own directory under staging with its output
/// streams logged there. The first failing step stops the run; the rest are
/// recorded as skipped. After a fully successful run the terminal outputs are
/// copied to the output directory.
pub fn run(
    plan: &ExecutionPlan,
    ws: &Workspace,
    env: &EnvironmentState,
    backend: &Backend,
) -> Result<RunReport, ExecError> {
    let ws = ws
        .absolute()
        .map_err(io_err("resolving workspace paths".to_string()))?;
    ws.check()?;
    check_outputs(plan, &ws)?;
    check_environment(plan, env, backend)?;

    let live = backend.kind() != BackendKind::DryRun;
    let mut argvs = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let argv = match backend {
            Backend::ContainerCommand { runtime } => {
                let mut tokens = render_container_invocation(step, &ws, &plan.config)?;
                tokens[0] = runtime.to_string_lossy().into_owned();
                tokens
            }
            Backend::DryRun | Backend::LocalProcess => render_local_invocation(step, &ws),
        };
        argvs.push(argv);
    }

    if live {
        for dir in [&ws.output_dir, &ws.staging_dir] {
            fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
        }
        for entry in fs::read_dir(&ws.input_dir)
            .map_err(io_err(format!("reading {}", ws.input_dir.display())))?
        {
            let entry = entry.map_err(io_err(format!("reading {}", ws.input_dir.display())))?;
            let dst = ws.staging_dir.join(entry.file_name());
            if overlaps(&entry.path(), &ws.staging_dir) {
                continue;
            }
            copy_tree(&entry.path(), &dst)
                .map_err(io_err(format!("staging {}", entry.path().display())))?;
        }
    }

    let start = Instant::now();
    let mut failed = false;
    let mut steps = Vec::with_capacity(plan.steps.len());
    for (position, (step, argv)) in plan.steps.iter().zip(argvs).enumerate() {
        // a dry run has no meaningful timings; keep its report reproducible
        let started_ms = if live {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        let outcome = if failed {
            StepOutcome {
                status: StepStatus::Skipped,
                exit_code: None,
                message: None,
            }
        } else if live {
            tracing::info!(
                "step {}: {}/{}",
                position + 1,
                step.tool_name,
                step.command_name
            );
            execute_step(step, &argv, &ws, env)?
        } else {
            StepOutcome {
                status: StepStatus::Ok,
                exit_code: None,
                message: None,
            }
        };
        if outcome.status == StepStatus::Failed {
            failed = true;
        }
        let wall_time_ms = if !live || outcome.status == StepStatus::Skipped {
            0
        } else {
            start.elapsed().as_millis() as u64 - started_ms
        };
        steps.push(StepRecord {
            position,
            instance_index: step.instance_index,
            tool: step.tool_name.clone(),
            command: step.command_name.clone(),
            status: outcome.status,
            exit_code: outcome.exit_code,
            command_line: argv,
            work_dir: step.work_dir.clone(),
            started_ms,
            wall_time_ms,
            message: outcome.message,
        });
    }

    let mut copied_outputs = Vec::new();
    if live && !failed {
        for step in &plan.steps {
            for out in step.declared_outputs.iter().filter(|o| o.terminal) {
                let rel = relative_to_staging(&ws, &out.path);
                let src = ws.staging_dir.join(&rel);
                let dst = ws.output_dir.join(&rel);
                copy_tree(&src, &dst).map_err(io_err(format!(
                    "copying {} to {}",
                    src.display(),
                    dst.display()
                )))?;
                copied_outputs.push(rel.to_string_lossy().into_owned());
            }
        }
    }

    let tools = env
        .tools
        .iter()
        .map(|t| ToolRecord {
            tool: t.tool.clone(),
            version: t.version.clone(),
            cache: t.status,
        })
        .collect();
    Ok(RunReport {
        backend: backend.kind(),
        status: if failed {
            RunStatus::Failed
        } else {
            RunStatus::Ok
        },
        steps,
        tools,
        limits: ResourceLimits {
            memory_mib: plan.config.memory_mib,
            cpu_cores: plan.config.cpu_cores,
            enforced: backend.kind() == BackendKind::ContainerCommand,
        },
        copied_outputs,
        error: None,
    })
}

/// Runs several pipelines at once, one thread each. Workspaces must not share
/// an output or staging directory.
pub fn run_concurrent(
    pipelines: &[(ExecutionPlan, Workspace)],
    env: &EnvironmentState,
    backend: &Backend,
) -> Result<Vec<RunReport>, ExecError> {
    let mut abs = Vec::with_capacity(pipelines.len());
    for (_, ws) in pipelines {
        abs.push(
            ws.absolute()
                .map_err(io_err("resolving workspace paths".to_string()))?,
        );
    }
    for i in 0..abs.len() {
        for j in i + 1..abs.len() {
            for a in [&abs[i].output_dir, &abs[i].staging_dir] {
                for b in [&abs[j].output_dir, &abs[j].staging_dir] {
                    if overlaps(a, b) {
                        return Err(ExecError::WorkspaceOverlap(format!(
                            "pipelines {} and {} share {} / {}",
                            i + 1,
                            j + 1,
                            a.display(),
                            b.display()
                        )));
                    }
                }
            }
        }
    }
    if let [(plan, ws)] = pipelines {
        return run(plan, ws, env, backend).map(|r| vec![r]);
    }
    let results: Vec<Result<RunReport, ExecError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = pipelines
            .iter()
            .map(|(plan, ws)| scope.spawn(move || run(plan, ws, env, backend)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}
