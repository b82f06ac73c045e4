//! Semantic checks of a parsed pipeline against a tool repository.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use super::ast::{ChainBinding, Item, PipelineAst, Span};
use crate::planner::composer;
use crate::repository::{
    CommandDescriptor, RepositoryError, RepositoryHandle, ToolConfigurator, ToolDescriptor,
    ValueType,
};
use crate::Warning;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("{at}: unknown tool '{tool}'")]
    UnknownTool { tool: String, at: Span },
    #[error("{at}: unknown configurator '{config}' for tool '{tool}'")]
    UnknownConfigurator {
        tool: String,
        config: String,
        at: Span,
    },
    #[error("{at}: tool '{tool}' has no command '{command}'")]
    UnknownCommand {
        tool: String,
        command: String,
        at: Span,
    },
    #[error("{at}: command '{tool}/{command}' has no argument '{argument}'")]
    UnknownArgument {
        tool: String,
        command: String,
        argument: String,
        at: Span,
    },
    #[error("{at}: command '{tool}/{command}' is missing required argument '{argument}'")]
    MissingRequiredArgument {
        tool: String,
        command: String,
        argument: String,
        at: Span,
    },
    #[error(
        "{at}: argument '{argument}' of '{tool}/{command}' is bound more than once by a chain"
    )]
    ConflictingBinding {
        tool: String,
        command: String,
        argument: String,
        at: Span,
    },
    #[error("{at}: command '{tool}/{command}' uses unknown argument composer '{composer}'")]
    UnknownComposer {
        tool: String,
        command: String,
        composer: String,
        at: Span,
    },
    #[error("{at}: argument '{argument}' of '{tool}/{command}' expects {expected}, got {value:?}")]
    InvalidArgumentValue {
        tool: String,
        command: String,
        argument: String,
        expected: ValueType,
        value: String,
        at: Span,
    },
    #[error("{at}: {source}")]
    Repository {
        #[source]
        source: RepositoryError,
        at: Span,
    },
}

/// A tool block resolved against the repository.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedTool {
    pub descriptor: Arc<ToolDescriptor>,
    pub configurator: ToolConfigurator,
}

/// One command block with its effective bindings.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandInstance {
    pub instance_index: usize,
    /// Index into [`ValidatedPipeline::tools`] (and `ast.tools`).
    pub tool_block: usize,
    pub tool_name: String,
    pub command: CommandDescriptor,
    /// Literal argument values after last-wins deduplication, keyed by name.
    pub arguments: BTreeMap<String, String>,
    pub chains: Vec<ChainBinding>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPipeline {
    pub ast: PipelineAst,
    pub tools: Vec<ResolvedTool>,
    /// Ordered by `instance_index`.
    pub instances: Vec<CommandInstance>,
    pub warnings: Vec<Warning>,
}

impl ValidatedPipeline {
    pub fn tool_for(&self, instance: &CommandInstance) -> &ResolvedTool {
        &self.tools[instance.tool_block]
    }
}

fn is_valid_value(ty: ValueType, value: &str) -> bool {
    match ty {
        ValueType::Int => value.trim().parse::<i64>().is_ok(),
        ValueType::Float => value.trim().parse::<f64>().is_ok(),
        ValueType::Flag => matches!(value, "true" | "false"),
        ValueType::String | ValueType::File | ValueType::Directory => true,
    }
}

pub fn validate(
    ast: &PipelineAst,
    repo: &RepositoryHandle,
) -> Result<ValidatedPipeline, ValidationError> {
    let mut descriptors: HashMap<&str, Arc<ToolDescriptor>> = HashMap::new();
    let mut tools = Vec::with_capacity(ast.tools.len());
    let mut instances = Vec::new();
    let mut warnings = Vec::new();

    for (block_idx, block) in ast.tools.iter().enumerate() {
        let tool = block.tool_name.as_str();
        let at = block.span;
        let descriptor = match descriptors.get(tool) {
            Some(d) => Arc::clone(d),
            None => {
                let d = Arc::new(repo.get_descriptor(tool).map_err(|e| match e {
                    RepositoryError::ToolNotFound(_) => ValidationError::UnknownTool {
                        tool: tool.to_string(),
                        at,
                    },
                    source => ValidationError::Repository { source, at },
                })?);
                descriptors.insert(tool, Arc::clone(&d));
                d
            }
        };
        let configurator = repo
            .get_configurator(tool, &block.configuration_name)
            .map_err(|e| match e {
                RepositoryError::ConfiguratorNotFound { .. } => {
                    ValidationError::UnknownConfigurator {
                        tool: tool.to_string(),
                        config: block.configuration_name.clone(),
                        at,
                    }
                }
                source => ValidationError::Repository { source, at },
            })?;

        for cmd in &block.commands {
            let at = cmd.span;
            let command = descriptor.command(&cmd.command_name).ok_or_else(|| {
                ValidationError::UnknownCommand {
                    tool: tool.to_string(),
                    command: cmd.command_name.clone(),
                    at,
                }
            })?;
            if !composer::is_registered(&command.argument_composer) {
                return Err(ValidationError::UnknownComposer {
                    tool: tool.to_string(),
                    command: command.name.clone(),
                    composer: command.argument_composer.clone(),
                    at,
                });
            }

            let mut arguments: BTreeMap<String, String> = BTreeMap::new();
            let mut chains: Vec<ChainBinding> = Vec::new();
            for item in &cmd.items {
                let name = item.argument_name();
                let arg =
                    command
                        .argument(name)
                        .ok_or_else(|| ValidationError::UnknownArgument {
                            tool: tool.to_string(),
                            command: command.name.clone(),
                            argument: name.to_string(),
                            at: item.span(),
                        })?;
                match item {
                    Item::Argument(a) => {
                        if !is_valid_value(arg.value_type, &a.value) {
                            return Err(ValidationError::InvalidArgumentValue {
                                tool: tool.to_string(),
                                command: command.name.clone(),
                                argument: a.name.clone(),
                                expected: arg.value_type,
                                value: a.value.clone(),
                                at: a.span,
                            });
                        }
                        if arguments.insert(a.name.clone(), a.value.clone()).is_some() {
                            let w = Warning::new(
                                a.span,
                                format!(
                                    "argument '{}' of '{tool}/{}' is bound more than once; the last value wins",
                                    a.name, command.name
                                ),
                            );
                            warnings.push(w);
                        }
                    }
                    Item::Chain(c) => chains.push(c.clone()),
                }
            }
            // A chained argument may not also be bound literally or by another chain.
            for (i, chain) in chains.iter().enumerate() {
                let dup_chain = chains[..i]
                    .iter()
                    .any(|c| c.argument_name == chain.argument_name);
                if dup_chain || arguments.contains_key(&chain.argument_name) {
                    return Err(ValidationError::ConflictingBinding {
                        tool: tool.to_string(),
                        command: command.name.clone(),
                        argument: chain.argument_name.clone(),
                        at: chain.span,
                    });
                }
            }
            for arg in command.arguments.iter().filter(|a| a.is_required) {
                let bound = arguments.contains_key(&arg.name)
                    || chains.iter().any(|c| c.argument_name == arg.name);
                if !bound {
                    return Err(ValidationError::MissingRequiredArgument {
                        tool: tool.to_string(),
                        command: command.name.clone(),
                        argument: arg.name.clone(),
                        at,
                    });
                }
            }

            instances.push(CommandInstance {
                instance_index: cmd.instance_index,
                tool_block: block_idx,
                tool_name: tool.to_string(),
                command: command.clone(),
                arguments,
                chains,
                span: at,
            });
        }
        tools.push(ResolvedTool {
            descriptor,
            configurator,
        });
    }
    instances.sort_by_key(|i| i.instance_index);

    Ok(ValidatedPipeline {
        ast: ast.clone(),
        tools,
        instances,
        warnings,
    })
}
