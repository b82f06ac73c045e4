use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::dsl::{ChainBinding, ChainSource, CommandInstance, ValidatedPipeline};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphNode {
    pub instance_index: usize,
    pub tool_name: String,
    pub command_name: String,
    pub priority: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum EdgeOrigin {
    /// A chain binding on the consumer's `argument` reading the producer's `output`.
    Chain { argument: String, output: String },
    /// Consecutive command blocks of the same tool block.
    SameToolOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphEdge {
    pub producer: usize,
    pub consumer: usize,
    pub origin: EdgeOrigin,
}

/// Command instances and their ordering constraints. Node `i` has instance index `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// A sequence of instance indexes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOrder(pub Vec<usize>);

impl ExecutionOrder {
    pub fn is_topological_for(&self, graph: &ExecutionGraph) -> bool {
        let n = graph.nodes.len();
        if self.0.len() != n {
            return false;
        }
        let mut position = vec![usize::MAX; n];
        for (pos, &node) in self.0.iter().enumerate() {
            if node >= n || position[node] != usize::MAX {
                return false;
            }
            position[node] = pos;
        }
        graph
            .edges
            .iter()
            .all(|e| position[e.producer] < position[e.consumer])
    }
}

/// Finds the command block a chain reads from. Only earlier blocks are
/// candidates, so chain edges always point forward in the text.
pub fn resolve_chain_producer<'a>(
    instances: &'a [CommandInstance],
    consumer: &CommandInstance,
    chain: &ChainBinding,
) -> Option<&'a CommandInstance> {
    let earlier = &instances[..consumer.instance_index];
    match &chain.source {
        ChainSource::Previous => earlier.last(),
        ChainSource::Command(cmd) => earlier.iter().rev().find(|i| &i.command.name == cmd),
        ChainSource::ToolCommand { tool, command } => earlier
            .iter()
            .rev()
            .find(|i| &i.tool_name == tool && &i.command.name == command),
    }
}

pub fn build_graph(vp: &ValidatedPipeline) -> Result<ExecutionGraph, PlanError> {
    let instances = &vp.instances;
    debug_assert!(instances
        .iter()
        .enumerate()
        .all(|(i, n)| n.instance_index == i));

    let nodes = instances
        .iter()
        .map(|i| GraphNode {
            instance_index: i.instance_index,
            tool_name: i.tool_name.clone(),
            command_name: i.command.name.clone(),
            priority: i.command.priority,
        })
        .collect();

    let mut edges = Vec::new();
    for consumer in instances {
        for chain in &consumer.chains {
            let unresolved = |reason: String| PlanError::UnresolvedChain {
                tool: consumer.tool_name.clone(),
                command: consumer.command.name.clone(),
                argument: chain.argument_name.clone(),
                reason,
                at: chain.span,
            };
            let producer = resolve_chain_producer(instances, consumer, chain).ok_or_else(|| {
                unresolved(match &chain.source {
                    ChainSource::Previous => "there is no previous command".to_string(),
                    ChainSource::Command(c) => format!("no earlier command '{c}'"),
                    ChainSource::ToolCommand { tool, command } => {
                        format!("no earlier command '{tool}/{command}'")
                    }
                })
            })?;
            if producer.command.output(&chain.output_name).is_none() {
                return Err(unresolved(format!(
                    "command '{}/{}' has no output '{}'",
                    producer.tool_name, producer.command.name, chain.output_name
                )));
            }
            edges.push(GraphEdge {
                producer: producer.instance_index,
                consumer: consumer.instance_index,
                origin: EdgeOrigin::Chain {
                    argument: chain.argument_name.clone(),
                    output: chain.output_name.clone(),
                },
            });
        }
    }
    for block in &vp.ast.tools {
        for pair in block.commands.windows(2) {
            edges.push(GraphEdge {
                producer: pair[0].instance_index,
                consumer: pair[1].instance_index,
                origin: EdgeOrigin::SameToolOrder,
            });
        }
    }
    Ok(ExecutionGraph { nodes, edges })
}

/// Kahn's algorithm. Among ready nodes the highest `priority` runs first,
/// then the lowest instance index.
pub fn topological_order(graph: &ExecutionGraph) -> Result<ExecutionOrder, PlanError> {
    let n = graph.nodes.len();
    let mut indegree = vec![0usize; n];
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        if e.producer >= n || e.consumer >= n {
            return Err(PlanError::InvalidGraph(format!(
                "edge {} -> {} references a missing node",
                e.producer, e.consumer
            )));
        }
        successors[e.producer].push(e.consumer);
        indegree[e.consumer] += 1;
    }

    let key = |i: usize| (graph.nodes[i].priority, Reverse(i));
    let mut ready: BinaryHeap<_> = (0..n).filter(|&i| indegree[i] == 0).map(key).collect();
    let mut order = Vec::with_capacity(n);
    while let Some((_, Reverse(node))) = ready.pop() {
        order.push(node);
        for &next in &successors[node] {
            indegree[next] -= 1;
            if indegree[next] == 0 {
                ready.push(key(next));
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).filter(|&i| indegree[i] > 0).collect();
        return Err(PlanError::CycleDetected(stuck));
    }
    Ok(ExecutionOrder(order))
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl ExecutionGraph {
    /// Graphviz DOT text: one node per command instance, edges labelled by origin.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph pipeline {\n  rankdir=LR;\n  node [shape=box];\n");
        for node in &self.nodes {
            let _ = writeln!(
                out,
                "  n{} [label=\"{}: {}/{}\"];",
                node.instance_index,
                node.instance_index,
                dot_escape(&node.tool_name),
                dot_escape(&node.command_name)
            );
        }
        for e in &self.edges {
            let label = match &e.origin {
                EdgeOrigin::Chain { argument, output } => {
                    format!("chain {} <- {}", dot_escape(argument), dot_escape(output))
                }
                EdgeOrigin::SameToolOrder => "sameToolOrder".to_string(),
            };
            let style = match e.origin {
                EdgeOrigin::Chain { .. } => "solid",
                EdgeOrigin::SameToolOrder => "dashed",
            };
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{label}\", style={style}];",
                e.producer, e.consumer
            );
        }
        out.push_str("}\n");
        out
    }
}
