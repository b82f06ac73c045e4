//! Argument composers: strategies that turn bound argument values into argv tokens.
//!
//! Tokens always follow the descriptor's argument declaration order. Flag
//! arguments take the values `true`/`false`; a true flag contributes its
//! name, a false one contributes nothing.
//!
//! | composer          | `(name, value)` becomes |
//! |-------------------|-------------------------|
//! | `valuesOnly`      | `value`                 |
//! | `nameValueSpace`  | `name`, `value`         |
//! | `nameValueEquals` | `name=value`            |
//! | `flagsOnly`       | `name` for true flags; other arguments are dropped |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::repository::{CommandDescriptor, ValueType};

pub const VALUES_ONLY: &str = "valuesOnly";
pub const NAME_VALUE_SPACE: &str = "nameValueSpace";
pub const NAME_VALUE_EQUALS: &str = "nameValueEquals";
pub const FLAGS_ONLY: &str = "flagsOnly";

pub const BUILTIN_COMPOSERS: [&str; 4] =
    [VALUES_ONLY, NAME_VALUE_SPACE, NAME_VALUE_EQUALS, FLAGS_ONLY];

pub fn is_registered(composer: &str) -> bool {
    BUILTIN_COMPOSERS.contains(&composer)
}

/// Marks where a workspace-relative path starts inside an argv token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSpan {
    pub token: usize,
    /// Byte offset of the path within the token.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComposedArgs {
    pub tokens: Vec<String>,
    pub path_spans: Vec<PathSpan>,
}

impl ComposedArgs {
    fn push(&mut self, token: String) {
        self.tokens.push(token);
    }

    fn push_path(&mut self, token: String, offset: usize) {
        self.path_spans.push(PathSpan {
            token: self.tokens.len(),
            offset,
        });
        self.tokens.push(token);
    }
}

/// Composes the argv tail (everything after the command token) for one command instance.
pub fn compose_arguments(
    bindings: &BTreeMap<String, String>,
    cd: &CommandDescriptor,
    composer: &str,
) -> Result<ComposedArgs, PlanError> {
    if !is_registered(composer) {
        return Err(PlanError::UnknownComposer {
            command: cd.name.clone(),
            composer: composer.to_string(),
        });
    }
    let mut out = ComposedArgs::default();
    for arg in &cd.arguments {
        let Some(value) = bindings.get(&arg.name) else {
            continue;
        };
        let is_path = arg.value_type.is_path();
        if arg.value_type == ValueType::Flag {
            if value == "true" {
                out.push(arg.name.clone());
            }
            continue;
        }
        match composer {
            VALUES_ONLY if is_path => out.push_path(value.clone(), 0),
            VALUES_ONLY => out.push(value.clone()),
            NAME_VALUE_SPACE => {
                out.push(arg.name.clone());
                if is_path {
                    out.push_path(value.clone(), 0);
                } else {
                    out.push(value.clone());
                }
            }
            NAME_VALUE_EQUALS if is_path => {
                out.push_path(format!("{}={value}", arg.name), arg.name.len() + 1)
            }
            NAME_VALUE_EQUALS => out.push(format!("{}={value}", arg.name)),
            FLAGS_ONLY => {}
            _ => unreachable!("registered composers are handled above"),
        }
    }
    Ok(out)
}
