use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::composer::{compose_arguments, PathSpan};
use super::graph::{EdgeOrigin, ExecutionGraph, ExecutionOrder};
use super::outputs::{resolve_outputs, step_work_dir, ResolvedOutput};
use super::resources::ResourceConfig;
use super::PlanError;
use crate::dsl::ValidatedPipeline;
use crate::repository::{OutputKind, RepositoryRef, ToolConfigurator};

/// A producer output a step reads through a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StagedInput {
    pub argument: String,
    pub producer: usize,
    pub output: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeclaredOutput {
    pub name: String,
    pub kind: OutputKind,
    pub path: String,
    /// Not consumed by any chain; copied to the output directory after a successful run.
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanStep {
    pub instance_index: usize,
    pub tool_name: String,
    pub tool_version: String,
    pub command_name: String,
    /// `composed_argv[0]` is the descriptor's command token.
    pub composed_argv: Vec<String>,
    /// Workspace-relative paths inside `composed_argv`.
    pub path_spans: Vec<PathSpan>,
    /// Working directory relative to staging.
    pub work_dir: String,
    pub configurator: ToolConfigurator,
    pub tool_setup: Vec<String>,
    pub staged_inputs: Vec<StagedInput>,
    pub declared_outputs: Vec<DeclaredOutput>,
}

/// The compiled pipeline: steps in execution order plus the resource configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionPlan {
    pub repository: RepositoryRef,
    pub config: ResourceConfig,
    pub steps: Vec<PlanStep>,
}

impl ExecutionPlan {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn make_plan(
    vp: &ValidatedPipeline,
    graph: &ExecutionGraph,
    order: &ExecutionOrder,
    config: ResourceConfig,
) -> Result<ExecutionPlan, PlanError> {
    if graph.nodes.len() != vp.instances.len() || !order.is_topological_for(graph) {
        return Err(PlanError::OrderNotTopological);
    }

    // consumer -> [(argument, producer, output)]
    let mut chains_into: BTreeMap<usize, Vec<(&str, usize, &str)>> = BTreeMap::new();
    let mut consumed: BTreeSet<(usize, &str)> = BTreeSet::new();
    for e in &graph.edges {
        if let EdgeOrigin::Chain { argument, output } = &e.origin {
            chains_into
                .entry(e.consumer)
                .or_default()
                .push((argument, e.producer, output));
            consumed.insert((e.producer, output));
        }
    }

    let mut resolved: Vec<Option<Vec<ResolvedOutput>>> = vec![None; vp.instances.len()];
    let mut steps = Vec::with_capacity(order.0.len());
    for &idx in &order.0 {
        let inst = &vp.instances[idx];
        let tool = vp.tool_for(inst);
        let mut bindings = inst.arguments.clone();
        let mut staged_inputs = Vec::new();
        for &(argument, producer, output) in chains_into.get(&idx).into_iter().flatten() {
            let path = resolved[producer]
                .as_ref()
                .and_then(|outs| outs.iter().find(|o| o.name == output))
                .map(|o| o.path.clone())
                .ok_or(PlanError::OrderNotTopological)?;
            bindings.insert(argument.to_string(), path.clone());
            staged_inputs.push(StagedInput {
                argument: argument.to_string(),
                producer,
                output: output.to_string(),
                path,
            });
        }

        let composed =
            compose_arguments(&bindings, &inst.command, &inst.command.argument_composer)?;
        let mut composed_argv = Vec::with_capacity(composed.tokens.len() + 1);
        composed_argv.push(inst.command.command.clone());
        composed_argv.extend(composed.tokens);
        let path_spans = composed
            .path_spans
            .into_iter()
            .map(|s| PathSpan {
                token: s.token + 1,
                offset: s.offset,
            })
            .collect();

        let outputs = resolve_outputs(idx, &inst.command, &bindings)?;
        resolved[idx] = Some(outputs);

        steps.push(PlanStep {
            instance_index: idx,
            tool_name: inst.tool_name.clone(),
            tool_version: tool.descriptor.version.clone(),
            command_name: inst.command.name.clone(),
            composed_argv,
            path_spans,
            work_dir: step_work_dir(idx, &inst.command.name),
            configurator: tool.configurator.clone(),
            tool_setup: tool.descriptor.setup.clone(),
            staged_inputs,
            declared_outputs: Vec::new(),
        });
    }

    for step in &mut steps {
        let outs = resolved[step.instance_index].take().unwrap_or_default();
        step.declared_outputs = outs
            .into_iter()
            .map(|o| DeclaredOutput {
                terminal: !consumed.contains(&(step.instance_index, o.name.as_str())),
                name: o.name,
                kind: o.kind,
                path: o.path,
            })
            .collect();
    }

    Ok(ExecutionPlan {
        repository: vp.ast.repository.clone(),
        config,
        steps,
    })
}
