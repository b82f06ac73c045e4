//! The `pipekit` command line: `check`, `plan`, `graph` and `run`.
//!
//! Every subcommand is a thin wrapper over the library; [`run_cli`] takes the
//! argument list and output streams so the whole front end can be driven
//! in-process.

use std::fmt::Display;
use std::io::Write;
use std::num::{NonZeroU32, NonZeroU64};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pipekit::executor::{
    prepare_environment, run, Backend, CacheStatus, EnvironmentState, ExecError, RunReport,
    ToolCache, Workspace,
};
use pipekit::pipeline::{load_pipeline, LoadError, LoadedPipeline};
use pipekit::planner::{
    build_graph, plan_pipeline, topological_order, PlanError, Planned, ResourceOverrides,
};
use pipekit::repository::RepositoryRef;
use pipekit::Warning;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Syntax errors and unreadable files.
    pub const SYNTAX_OR_IO: i32 = 2;
    /// Validation and planning errors.
    pub const VALIDATION: i32 = 3;
    pub const REPOSITORY: i32 = 4;
    /// A step or a setup action failed.
    pub const EXECUTION: i32 = 5;
    pub const WORKSPACE: i32 = 6;
    pub const USAGE: i32 = 64;
}

/// Name of the report `run` writes into the output directory.
pub const REPORT_FILE: &str = "run-report.json";

#[derive(Debug, Parser)]
#[command(
    name = "pipekit",
    version,
    about = "Validate, plan and run .pipes pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and validate a pipeline against its tool repository.
    Check(SourceArgs),
    /// Print the execution plan as JSON.
    Plan {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Print the dependency graph in DOT format.
    Graph(SourceArgs),
    /// Install the pipeline's tools and run it.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        resources: ResourceArgs,
        #[command(flatten)]
        exec: ExecArgs,
    },
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// The .pipes file.
    #[arg(long, value_name = "FILE")]
    pipes: PathBuf,
    /// Use this repository instead of the one named in the file
    /// (`local:<dir>`, `remote:<url>`, a URL or a directory).
    #[arg(long, value_name = "REPO", value_parser = parse_repo)]
    repo: Option<RepositoryRef>,
}

#[derive(Debug, Args)]
struct ResourceArgs {
    /// Input directory; only ever read.
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    /// Output directory; created if absent.
    #[arg(long = "out", value_name = "DIR")]
    output: PathBuf,
    /// Memory in GiB (also `-mem`). Defaults to the largest tool requirement.
    #[arg(long, value_name = "GIB")]
    mem: Option<NonZeroU64>,
    /// CPU cores (also `-cpus`). Defaults to 1.
    #[arg(long, value_name = "N")]
    cpus: Option<NonZeroU32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    /// Report what would run without running anything.
    DryRun,
    /// Run tools as local processes.
    Local,
    /// Run each step through a container runtime.
    Container,
}

#[derive(Debug, Args)]
struct ExecArgs {
    #[arg(long, value_enum, default_value = "local")]
    backend: BackendChoice,
    /// Tool cache directory. Defaults to `$PIPEKIT_CACHE_DIR`, then
    /// `$XDG_CACHE_HOME/pipekit`, then `~/.cache/pipekit`.
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Container runtime program. Defaults to `docker` on PATH.
    #[arg(long, value_name = "PROGRAM")]
    container_runtime: Option<PathBuf>,
    /// Staging directory for intermediate files. Defaults to `<out>/.staging`.
    #[arg(long, value_name = "DIR")]
    staging: Option<PathBuf>,
}

/// A fully parsed command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub subcommand: SubcommandKind,
    pub pipes_file: PathBuf,
    pub repo_override: Option<RepositoryRef>,
    pub input_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub mem_gib: Option<NonZeroU64>,
    pub cpus: Option<NonZeroU32>,
    pub backend: BackendChoice,
    pub cache_dir: Option<PathBuf>,
    pub container_runtime: Option<PathBuf>,
    pub staging_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Check,
    Plan,
    Graph,
    Run,
}

fn parse_repo(s: &str) -> Result<RepositoryRef, String> {
    if let Some(rest) = s.strip_prefix("local:") {
        Ok(RepositoryRef::local(rest))
    } else if let Some(rest) = s.strip_prefix("remote:") {
        Ok(RepositoryRef::remote(rest))
    } else if s.starts_with("http://") || s.starts_with("https://") {
        Ok(RepositoryRef::remote(s))
    } else if s.is_empty() {
        Err("empty repository".into())
    } else {
        Ok(RepositoryRef::local(s))
    }
}

/// Accepts the single-dash `-mem` and `-cpus` spellings.
fn normalize_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    args.into_iter()
        .map(|a| {
            for flag in ["mem", "cpus"] {
                let single = format!("-{flag}");
                if a == single || a.starts_with(&format!("{single}=")) {
                    return format!("-{a}");
                }
            }
            a
        })
        .collect()
}

impl Invocation {
    /// Parses a full argument list, program name first.
    pub fn parse(args: impl IntoIterator<Item = String>) -> Result<Self, clap::Error> {
        let cli = Cli::try_parse_from(normalize_args(args))?;
        let mut inv = Invocation {
            subcommand: SubcommandKind::Check,
            pipes_file: PathBuf::new(),
            repo_override: None,
            input_dir: None,
            output_dir: None,
            mem_gib: None,
            cpus: None,
            backend: BackendChoice::Local,
            cache_dir: None,
            container_runtime: None,
            staging_dir: None,
        };
        let (source, resources, exec) = match cli.command {
            Command::Check(s) => (s, None, None),
            Command::Graph(s) => {
                inv.subcommand = SubcommandKind::Graph;
                (s, None, None)
            }
            Command::Plan { source, resources } => {
                inv.subcommand = SubcommandKind::Plan;
                (source, Some(resources), None)
            }
            Command::Run {
                source,
                resources,
                exec,
            } => {
                inv.subcommand = SubcommandKind::Run;
                (source, Some(resources), Some(exec))
            }
        };
        inv.pipes_file = source.pipes;
        inv.repo_override = source.repo;
        if let Some(r) = resources {
            inv.input_dir = Some(r.input);
            inv.output_dir = Some(r.output);
            inv.mem_gib = r.mem;
            inv.cpus = r.cpus;
        }
        if let Some(e) = exec {
            inv.backend = e.backend;
            inv.cache_dir = e.cache_dir;
            inv.container_runtime = e.container_runtime;
            inv.staging_dir = e.staging;
        }
        Ok(inv)
    }

    fn overrides(&self) -> ResourceOverrides {
        ResourceOverrides::from_gib(self.mem_gib, self.cpus)
    }

    fn dirs(&self) -> (&Path, &Path) {
        (
            self.input_dir.as_deref().unwrap_or(Path::new(".")),
            self.output_dir.as_deref().unwrap_or(Path::new(".")),
        )
    }
}

/// Entry point: parses `args` (program name first), dispatches, and returns the exit code.
pub fn run_cli(
    args: impl IntoIterator<Item = String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let inv = match Invocation::parse(args) {
        Ok(inv) => inv,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    exit::OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    exit::USAGE
                }
            };
        }
    };
    match inv.subcommand {
        SubcommandKind::Check => cmd_check(&inv, out, err),
        SubcommandKind::Plan => cmd_plan(&inv, out, err),
        SubcommandKind::Graph => cmd_graph(&inv, out, err),
        SubcommandKind::Run => cmd_run(&inv, out, err),
    }
}

fn fail(err: &mut dyn Write, code: i32, message: impl Display) -> i32 {
    let _ = writeln!(err, "error: {message}");
    code
}

fn warn_all(err: &mut dyn Write, warnings: &[Warning]) {
    for w in warnings {
        let _ = writeln!(err, "{w}");
    }
}

pub fn load_exit_code(e: &LoadError) -> i32 {
    match e {
        LoadError::Io { .. } | LoadError::Syntax { .. } => exit::SYNTAX_OR_IO,
        LoadError::Repository(_) => exit::REPOSITORY,
        LoadError::Validation { .. } => exit::VALIDATION,
    }
}

pub fn exec_exit_code(e: &ExecError) -> i32 {
    match e {
        ExecError::Workspace(_)
        | ExecError::WorkspaceViolation(_)
        | ExecError::WorkspaceOverlap(_) => exit::WORKSPACE,
        ExecError::Repository(_) => exit::REPOSITORY,
        ExecError::Io { .. } => exit::SYNTAX_OR_IO,
        ExecError::UnknownBuilder(_) => exit::VALIDATION,
        ExecError::SetupFailure { .. }
        | ExecError::CacheCorruption { .. }
        | ExecError::EnvironmentNotPrepared(_)
        | ExecError::BackendUnavailable(_) => exit::EXECUTION,
    }
}

fn load(inv: &Invocation, err: &mut dyn Write) -> Result<LoadedPipeline, i32> {
    load_pipeline(&inv.pipes_file, inv.repo_override.as_ref()).map_err(|e| {
        let code = load_exit_code(&e);
        fail(err, code, e)
    })
}

fn plan(inv: &Invocation, loaded: &LoadedPipeline, err: &mut dyn Write) -> Result<Planned, i32> {
    let (input, output) = inv.dirs();
    let planned = plan_pipeline(&loaded.validated, inv.overrides(), input, output)
        .map_err(|e| fail(err, exit::VALIDATION, plan_message(&inv.pipes_file, &e)))?;
    warn_all(err, &planned.warnings);
    Ok(planned)
}

fn plan_message(path: &Path, e: &PlanError) -> String {
    format!("{}: {e}", path.display())
}

/// Parses and validates; exit 0 iff the pipeline is well formed and acyclic.
pub fn cmd_check(inv: &Invocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = match load(inv, err) {
        Ok(l) => l,
        Err(code) => return code,
    };
    warn_all(err, &loaded.validated.warnings);
    if let Err(e) = build_graph(&loaded.validated).and_then(|g| topological_order(&g)) {
        return fail(err, exit::VALIDATION, plan_message(&inv.pipes_file, &e));
    }
    let ast = loaded.ast();
    let _ = writeln!(
        out,
        "ok: {}: {} tools, {} commands, {} chains",
        inv.pipes_file.display(),
        ast.tools.len(),
        ast.command_count(),
        ast.chain_count()
    );
    exit::OK
}

pub fn cmd_plan(inv: &Invocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let planned = match load(inv, err).and_then(|l| plan(inv, &l, err)) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let _ = write!(out, "{}", planned.plan.to_json());
    exit::OK
}

pub fn cmd_graph(inv: &Invocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = match load(inv, err) {
        Ok(l) => l,
        Err(code) => return code,
    };
    match build_graph(&loaded.validated) {
        Ok(g) => {
            let _ = write!(out, "{}", g.to_dot());
            exit::OK
        }
        Err(e) => fail(err, exit::VALIDATION, plan_message(&inv.pipes_file, &e)),
    }
}

pub fn default_cache_dir() -> PathBuf {
    let var = |name| {
        std::env::var_os(name)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
    };
    var("PIPEKIT_CACHE_DIR")
        .or_else(|| var("XDG_CACHE_HOME").map(|d| d.join("pipekit")))
        .or_else(|| var("HOME").map(|d| d.join(".cache").join("pipekit")))
        .unwrap_or_else(|| PathBuf::from(".pipekit-cache"))
}

fn backend(inv: &Invocation) -> Result<Backend, ExecError> {
    Ok(match inv.backend {
        BackendChoice::DryRun => Backend::DryRun,
        BackendChoice::Local => Backend::LocalProcess,
        BackendChoice::Container => match &inv.container_runtime {
            Some(runtime) => Backend::ContainerCommand {
                runtime: runtime.clone(),
            },
            None => Backend::container_from_path()?,
        },
    })
}

fn describe_environment(env: &EnvironmentState, out: &mut dyn Write) {
    for c in &env.contexts {
        let state = match c.status {
            CacheStatus::Cold => "cold",
            CacheStatus::Warm => "warm",
        };
        let _ = writeln!(
            out,
            "context {} ({}) via {}: {state}",
            c.builder, c.configurator, c.tool
        );
        if c.status == CacheStatus::Cold && !c.setup_executed {
            for line in &c.setup_lines {
                let _ = writeln!(out, "  would run: {line}");
            }
        }
    }
    for t in &env.tools {
        let state = match t.status {
            CacheStatus::Cold => "cold",
            CacheStatus::Warm => "warm",
        };
        let _ = writeln!(out, "tool {} {} [{}]: {state}", t.tool, t.version, t.uri);
        if t.status == CacheStatus::Cold && !t.setup_executed {
            for line in &t.setup_lines {
                let _ = writeln!(out, "  would run: {line}");
            }
        }
    }
}

fn write_report(report: &RunReport, output_dir: &Path, err: &mut dyn Write) -> Result<(), i32> {
    let path = output_dir.join(REPORT_FILE);
    std::fs::create_dir_all(output_dir)
        .and_then(|_| std::fs::write(&path, report.to_json()))
        .map_err(|e| {
            fail(
                err,
                exit::WORKSPACE,
                format!("cannot write {}: {e}", path.display()),
            )
        })
}

/// Prepares the environment, runs every step and writes the report to the output directory.
pub fn cmd_run(inv: &Invocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let planned = match load(inv, err).and_then(|l| plan(inv, &l, err).map(|p| (l, p))) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let (loaded, planned) = planned;
    let plan = &planned.plan;
    let (input, output) = inv.dirs();
    let mut ws = Workspace::new(input, output);
    if let Some(staging) = &inv.staging_dir {
        ws = ws.with_staging(staging);
    }

    let backend = match backend(inv) {
        Ok(b) => b,
        Err(e) => return fail(err, exec_exit_code(&e), e),
    };
    let abort = |e: ExecError, err: &mut dyn Write| {
        let code = exec_exit_code(&e);
        // a workspace problem may be the output directory itself
        if code != exit::WORKSPACE {
            let report = RunReport::aborted(plan, backend.kind(), e.to_string());
            let _ = write_report(&report, output, err);
        }
        fail(err, code, e)
    };
    if let Err(e) = ws.check() {
        return abort(e, err);
    }

    let cache = ToolCache::new(inv.cache_dir.clone().unwrap_or_else(default_cache_dir));
    let env = match prepare_environment(plan, &loaded.repository, &cache, &backend) {
        Ok(env) => env,
        Err(e) => return abort(e, err),
    };
    if backend == Backend::DryRun {
        describe_environment(&env, out);
    }
    let report = match run(plan, &ws, &env, &backend) {
        Ok(r) => r,
        Err(e) => return abort(e, err),
    };
    let _ = write!(out, "{}", report.summary());
    if let Err(code) = write_report(&report, output, err) {
        return code;
    }
    if report.is_ok() {
        exit::OK
    } else {
        let step = report
            .failed_step()
            .expect("a failed run has a failed step");
        fail(
            err,
            exit::EXECUTION,
            format!(
                "step {} ({}/{}) failed: {}",
                step.position + 1,
                step.tool,
                step.command,
                step.message.as_deref().unwrap_or("unknown error")
            ),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("pipekit")
            .chain(s.split_whitespace())
            .map(String::from)
            .collect()
    }

    #[test]
    fn single_dash_resource_flags() {
        let inv = Invocation::parse(args("plan --pipes p --in i --out o -mem 4 -cpus 2")).unwrap();
        assert_eq!(inv.mem_gib.map(NonZeroU64::get), Some(4));
        assert_eq!(inv.cpus.map(NonZeroU32::get), Some(2));
        let inv = Invocation::parse(args("plan --pipes p --in i --out o -mem=8")).unwrap();
        assert_eq!(inv.mem_gib.map(NonZeroU64::get), Some(8));
    }

    #[test]
    fn run_and_plan_need_directories() {
        assert!(Invocation::parse(args("plan --pipes p")).is_err());
        assert!(Invocation::parse(args("run --pipes p --in i")).is_err());
        assert!(Invocation::parse(args("check --pipes p")).is_ok());
        assert!(Invocation::parse(args("check --pipes p --in i")).is_err());
    }

    #[test]
    fn repo_override_forms() {
        assert_eq!(parse_repo("local:/r").unwrap(), RepositoryRef::local("/r"));
        assert_eq!(
            parse_repo("remote:https://x/y").unwrap(),
            RepositoryRef::remote("https://x/y")
        );
        assert_eq!(
            parse_repo("https://x/y").unwrap(),
            RepositoryRef::remote("https://x/y")
        );
        assert_eq!(
            parse_repo("some/dir").unwrap(),
            RepositoryRef::local("some/dir")
        );
    }

    #[test]
    fn zero_resources_are_usage_errors() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(
            args("plan --pipes p --in i --out o --mem 0"),
            &mut out,
            &mut err,
        );
        assert_eq!(code, exit::USAGE);
    }

    #[test]
    fn unknown_flag_prints_usage() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli(args("check --pipes p --frobnicate"), &mut out, &mut err);
        assert_eq!(code, exit::USAGE);
        assert!(String::from_utf8(err).unwrap().contains("Usage:"));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit::OK,
            exit::SYNTAX_OR_IO,
            exit::VALIDATION,
            exit::REPOSITORY,
            exit::EXECUTION,
            exit::WORKSPACE,
            exit::USAGE,
        ];
        let mut sorted = codes.to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
    }
}
