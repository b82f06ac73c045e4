//! From a validated pipeline to an executable plan: dependency graph,
//! execution order, argv composition and resource configuration.

pub mod composer;
mod graph;
mod outputs;
mod plan;
mod resources;

use std::path::PathBuf;

use thiserror::Error;

use crate::dsl::{Span, ValidatedPipeline};
use crate::Warning;

pub use composer::{compose_arguments, ComposedArgs, PathSpan, BUILTIN_COMPOSERS};
pub use graph::{
    build_graph, resolve_chain_producer, topological_order, EdgeOrigin, ExecutionGraph,
    ExecutionOrder, GraphEdge, GraphNode,
};
pub use outputs::{resolve_outputs, step_work_dir, ResolvedOutput};
pub use plan::{make_plan, DeclaredOutput, ExecutionPlan, PlanStep, StagedInput};
pub use resources::{compute_resources, required_memory, ResourceConfig, ResourceOverrides};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(
        "{at}: chain on argument '{argument}' of '{tool}/{command}' cannot be resolved: {reason}"
    )]
    UnresolvedChain {
        tool: String,
        command: String,
        argument: String,
        reason: String,
        at: Span,
    },
    #[error("dependency cycle among command instances {0:?}")]
    CycleDetected(Vec<usize>),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("execution order is not a topological order of the graph")]
    OrderNotTopological,
    #[error("command '{command}' uses unknown argument composer '{composer}'")]
    UnknownComposer { command: String, composer: String },
    #[error("output '{output}' of command '{command}' references unbound argument '{argument}'")]
    UnboundTemplateArgument {
        command: String,
        output: String,
        argument: String,
    },
    #[error("output '{output}' of command '{command}' has a malformed template: {reason}")]
    MalformedTemplate {
        command: String,
        output: String,
        reason: String,
    },
}

/// Everything the planner produces for one pipeline.
#[derive(Debug, Clone)]
pub struct Planned {
    pub graph: ExecutionGraph,
    pub order: ExecutionOrder,
    pub plan: ExecutionPlan,
    pub warnings: Vec<Warning>,
}

/// Runs graph construction, ordering, resource computation and plan assembly.
pub fn plan_pipeline(
    vp: &ValidatedPipeline,
    overrides: ResourceOverrides,
    input_path: impl Into<PathBuf>,
    output_path: impl Into<PathBuf>,
) -> Result<Planned, PlanError> {
    let graph = build_graph(vp)?;
    let order = topological_order(&graph)?;
    let (config, mut warnings) = compute_resources(vp, overrides, input_path, output_path);
    let plan = make_plan(vp, &graph, &order, config)?;
    warnings.splice(0..0, vp.warnings.iter().cloned());
    Ok(Planned {
        graph,
        order,
        plan,
        warnings,
    })
}
