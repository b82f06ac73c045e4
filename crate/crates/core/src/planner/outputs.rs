use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::repository::{CommandDescriptor, OutputKind};
use crate::template::{self, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolvedOutput {
    pub name: String,
    pub kind: OutputKind,
    /// Relative to the staging directory.
    pub path: String,
}

/// Directory, relative to staging, where an instance runs.
pub fn step_work_dir(instance_index: usize, command: &str) -> String {
    let safe: String = command
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("steps/{instance_index:03}-{safe}")
}

/// Instantiates every output template of a command instance.
///
/// Templates with placeholders are relative to the staging directory, like
/// the argument values they interpolate. Templates without placeholders name
/// files the command writes into its own working directory.
pub fn resolve_outputs(
    instance_index: usize,
    cd: &CommandDescriptor,
    bindings: &BTreeMap<String, String>,
) -> Result<Vec<ResolvedOutput>, PlanError> {
    cd.outputs
        .iter()
        .map(|out| {
            let placeholders = template::placeholders(&out.value_template).map_err(|reason| {
                PlanError::MalformedTemplate {
                    command: cd.name.clone(),
                    output: out.name.clone(),
                    reason,
                }
            })?;
            let rendered =
                template::render(&out.value_template, |n| bindings.get(n).map(String::as_str))
                    .map_err(|e| match e {
                        TemplateError::Unbound(argument) => PlanError::UnboundTemplateArgument {
                            command: cd.name.clone(),
                            output: out.name.clone(),
                            argument,
                        },
                        TemplateError::Malformed(reason) => PlanError::MalformedTemplate {
                            command: cd.name.clone(),
                            output: out.name.clone(),
                            reason,
                        },
                    })?;
            let path = if placeholders.is_empty() && !rendered.starts_with('/') {
                format!("{}/{rendered}", step_work_dir(instance_index, &cd.name))
            } else {
                rendered
            };
            Ok(ResolvedOutput {
                name: out.name.clone(),
                kind: out.output_kind,
                path,
            })
        })
        .collect()
}
