//! Tool descriptor and configurator records.
//!
//! Files are read through loosely typed `Raw*` mirrors first so that every
//! schema violation can name the tool and the JSON path of the offending
//! field, then converted into the checked public types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

use super::RepositoryError;

/// Kinds of value an argument accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    String,
    Int,
    Float,
    File,
    Directory,
    Flag,
}

impl ValueType {
    fn parse(raw: &str) -> Option<Self> {
        Some(match raw {
            "string" => Self::String,
            "int" => Self::Int,
            "float" => Self::Float,
            "file" => Self::File,
            "directory" => Self::Directory,
            "flag" => Self::Flag,
            _ => return None,
        })
    }

    /// File and directory values name paths in the workspace.
    pub fn is_path(self) -> bool {
        matches!(self, Self::File | Self::Directory)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::String => "string",
            Self::Int => "int",
            Self::Float => "float",
            Self::File => "file",
            Self::Directory => "directory",
            Self::Flag => "flag",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    File,
    Directory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArgumentDescriptor {
    pub name: String,
    #[serde(rename = "type")]
    pub value_type: ValueType,
    /// Marks an argument whose value names an output (e.g. `outputDir`).
    /// Values other than the ones shown in published descriptors are kept verbatim.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_type: Option<String>,
    pub is_required: bool,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutputDescriptor {
    pub name: String,
    #[serde(rename = "type")]
    pub output_kind: OutputKind,
    /// Path template; `$arg` and `${arg}` are replaced by bound argument values.
    #[serde(rename = "value")]
    pub value_template: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CommandDescriptor {
    pub name: String,
    pub command: String,
    pub priority: i64,
    pub argument_composer: String,
    pub arguments: Vec<ArgumentDescriptor>,
    pub outputs: Vec<OutputDescriptor>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl CommandDescriptor {
    pub fn argument(&self, name: &str) -> Option<&ArgumentDescriptor> {
        self.arguments.iter().find(|a| a.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&OutputDescriptor> {
        self.outputs.iter().find(|o| o.name == name)
    }
}

/// Everything the engine needs to know to run a tool's commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ToolDescriptor {
    pub name: String,
    pub version: String,
    pub setup: Vec<String>,
    /// Memory requirement in MiB.
    pub required_memory: u64,
    pub commands: Vec<CommandDescriptor>,
    /// Optional metadata (author, description, documentation, ...), kept as-is.
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

impl ToolDescriptor {
    pub fn command(&self, name: &str) -> Option<&CommandDescriptor> {
        self.commands.iter().find(|c| c.name == name)
    }

    /// Parses and checks a `Descriptor.json` document. `tool` is the name the
    /// repository filed it under and is used in error messages.
    pub fn from_json(tool: &str, bytes: &[u8]) -> Result<Self, RepositoryError> {
        let raw: RawDescriptor = serde_json::from_slice(bytes)
            .map_err(|e| RepositoryError::schema(tool, serde_field(&e), e.to_string()))?;
        raw.check(tool)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }
}

/// How to obtain and run a tool in a given execution context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolConfigurator {
    pub name: String,
    pub builder: String,
    pub uri: String,
    pub setup: Vec<String>,
}

impl ToolConfigurator {
    pub fn from_json(tool: &str, bytes: &[u8]) -> Result<Self, RepositoryError> {
        let cfg: ToolConfigurator = serde_json::from_slice(bytes)
            .map_err(|e| RepositoryError::schema(tool, serde_field(&e), e.to_string()))?;
        for (field, value) in [
            ("name", &cfg.name),
            ("builder", &cfg.builder),
            ("uri", &cfg.uri),
        ] {
            if value.trim().is_empty() {
                return Err(RepositoryError::schema(
                    tool,
                    field,
                    format!("configurator field `{field}` must not be empty"),
                ));
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configurator serializes")
    }
}

/// Pulls the field name out of serde's "missing field `x`" style messages.
fn serde_field(err: &serde_json::Error) -> String {
    let msg = err.to_string();
    msg.split('`').nth(1).unwrap_or("<document>").to_string()
}

fn bool_or_string<'de, D: Deserializer<'de>>(de: D) -> Result<bool, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Flexible {
        Bool(bool),
        Text(String),
    }
    match Flexible::deserialize(de)? {
        Flexible::Bool(b) => Ok(b),
        Flexible::Text(s) => match s.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(serde::de::Error::custom(format!(
                "isRequired must be true or false, got {other:?}"
            ))),
        },
    }
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawArgument {
    name: String,
    #[serde(rename = "type")]
    value_type: String,
    #[serde(default)]
    output_type: Option<String>,
    #[serde(deserialize_with = "bool_or_string")]
    is_required: bool,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawOutput {
    name: String,
    #[serde(rename = "type")]
    output_kind: String,
    value: String,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawCommand {
    name: String,
    command: String,
    priority: i64,
    argument_composer: String,
    #[serde(default)]
    arguments: Vec<RawArgument>,
    #[serde(default)]
    outputs: Vec<RawOutput>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawDescriptor {
    name: String,
    version: String,
    setup: Vec<String>,
    required_memory: i64,
    commands: Vec<RawCommand>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

impl RawDescriptor {
    fn check(self, tool: &str) -> Result<ToolDescriptor, RepositoryError> {
        let err = |field: String, msg: String| RepositoryError::schema(tool, field, msg);
        if self.name.trim().is_empty() {
            return Err(err("name".into(), "tool name must not be empty".into()));
        }
        if self.required_memory <= 0 {
            return Err(err(
                "requiredMemory".into(),
                format!(
                    "requiredMemory must be positive, got {}",
                    self.required_memory
                ),
            ));
        }
        let mut seen = BTreeSet::new();
        let mut commands = Vec::with_capacity(self.commands.len());
        for (ci, raw) in self.commands.into_iter().enumerate() {
            let at = format!("commands[{ci}]");
            if raw.name.trim().is_empty() {
                return Err(err(
                    format!("{at}.name"),
                    "command name must not be empty".into(),
                ));
            }
            if !seen.insert(raw.name.clone()) {
                return Err(err(
                    format!("{at}.name"),
                    format!("duplicate command name '{}'", raw.name),
                ));
            }
            if raw.command.trim().is_empty() {
                return Err(err(
                    format!("{at}.command"),
                    "command token must not be empty".into(),
                ));
            }
            commands.push(raw.check(&at, &err)?);
        }
        Ok(ToolDescriptor {
            name: self.name,
            version: self.version,
            setup: self.setup,
            required_memory: self.required_memory as u64,
            commands,
            extra: self.extra,
        })
    }
}

impl RawCommand {
    fn check(
        self,
        at: &str,
        err: &dyn Fn(String, String) -> RepositoryError,
    ) -> Result<CommandDescriptor, RepositoryError> {
        let mut arg_names = BTreeSet::new();
        let mut arguments = Vec::with_capacity(self.arguments.len());
        for (ai, raw) in self.arguments.into_iter().enumerate() {
            let here = format!("{at}.arguments[{ai}]");
            if raw.name.is_empty() {
                return Err(err(
                    format!("{here}.name"),
                    "argument name must not be empty".into(),
                ));
            }
            if !arg_names.insert(raw.name.clone()) {
                return Err(err(
                    format!("{here}.name"),
                    format!(
                        "duplicate argument name '{}' in command '{}'",
                        raw.name, self.name
                    ),
                ));
            }
            let value_type = ValueType::parse(&raw.value_type).ok_or_else(|| {
                err(
                    format!("{here}.type"),
                    format!("unknown argument type '{}'", raw.value_type),
                )
            })?;
            if raw.output_type.is_some() && !value_type.is_path() {
                return Err(err(
                    format!("{here}.outputType"),
                    format!(
                        "argument '{}' has an outputType but type '{value_type}' is not file or directory",
                        raw.name
                    ),
                ));
            }
            arguments.push(ArgumentDescriptor {
                name: raw.name,
                value_type,
                output_type: raw.output_type,
                is_required: raw.is_required,
                extra: raw.extra,
            });
        }

        let mut out_names = BTreeSet::new();
        let mut outputs = Vec::with_capacity(self.outputs.len());
        for (oi, raw) in self.outputs.into_iter().enumerate() {
            let here = format!("{at}.outputs[{oi}]");
            if raw.name.is_empty() {
                return Err(err(
                    format!("{here}.name"),
                    "output name must not be empty".into(),
                ));
            }
            if !out_names.insert(raw.name.clone()) {
                return Err(err(
                    format!("{here}.name"),
                    format!(
                        "duplicate output name '{}' in command '{}'",
                        raw.name, self.name
                    ),
                ));
            }
            let output_kind = match raw.output_kind.as_str() {
                "file" => OutputKind::File,
                "directory" => OutputKind::Directory,
                other => {
                    return Err(err(
                        format!("{here}.type"),
                        format!("unknown output type '{other}'"),
                    ))
                }
            };
            let placeholders = crate::template::placeholders(&raw.value)
                .map_err(|m| err(format!("{here}.value"), m))?;
            if let Some(missing) = placeholders.iter().find(|p| !arg_names.contains(*p)) {
                return Err(err(
                    format!("{here}.value"),
                    format!(
                        "placeholder '${missing}' does not name an argument of '{}'",
                        self.name
                    ),
                ));
            }
            outputs.push(OutputDescriptor {
                name: raw.name,
                output_kind,
                value_template: raw.value,
                extra: raw.extra,
            });
        }

        Ok(CommandDescriptor {
            name: self.name,
            command: self.command,
            priority: self.priority,
            argument_composer: self.argument_composer,
            arguments,
            outputs,
            extra: self.extra,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VELVET: &str = r#"{
        "name": "Velvet",
        "version": "0.7.01",
        "setup": ["make"],
        "requiredMemory": 12288,
        "author": "Zerbino",
        "commands": [
            { "name": "velveth", "command": "velveth", "priority": 2,
              "argumentComposer": "valuesOnly",
              "arguments": [
                { "name": "output_directory", "type": "directory",
                  "outputType": "outputDir", "isRequired": "true" },
                { "name": "hash_length", "type": "int", "isRequired": true }
              ],
              "outputs": [
                { "name": "dir", "type": "directory", "value": "$output_directory" }
              ] }
        ]
    }"#;

    #[test]
    fn parses_string_booleans_and_keeps_extra_fields() {
        let d = ToolDescriptor::from_json("Velvet", VELVET.as_bytes()).unwrap();
        assert_eq!(d.required_memory, 12288);
        let arg = &d.commands[0].arguments[0];
        assert!(arg.is_required);
        assert_eq!(arg.output_type.as_deref(), Some("outputDir"));
        assert_eq!(d.extra.get("author"), Some(&Value::from("Zerbino")));
    }

    #[test]
    fn rejects_non_positive_memory() {
        let doc = VELVET.replace("12288", "0");
        let e = ToolDescriptor::from_json("Velvet", doc.as_bytes()).unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("requiredMemory") && msg.contains("Velvet"),
            "{msg}"
        );
    }

    #[test]
    fn missing_field_is_named() {
        let doc = VELVET.replace("\"version\": \"0.7.01\",", "");
        let e = ToolDescriptor::from_json("Velvet", doc.as_bytes()).unwrap_err();
        assert!(matches!(&e, RepositoryError::SchemaViolation { field, .. } if field == "version"));
    }

    #[test]
    fn output_type_requires_path_argument() {
        let doc = VELVET.replace(
            r#""type": "directory",
                  "outputType""#,
            r#""type": "int",
                  "outputType""#,
        );
        let e = ToolDescriptor::from_json("Velvet", doc.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("outputType"), "{e}");
    }

    #[test]
    fn template_placeholders_must_name_arguments() {
        let doc = VELVET.replace("$output_directory", "$nope/x");
        let e = ToolDescriptor::from_json("Velvet", doc.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("$nope"), "{e}");
    }

    #[test]
    fn unknown_output_type_is_preserved() {
        let doc = VELVET.replace("outputDir", "outputSomethingElse");
        let d = ToolDescriptor::from_json("Velvet", doc.as_bytes()).unwrap();
        assert_eq!(
            d.commands[0].arguments[0].output_type.as_deref(),
            Some("outputSomethingElse")
        );
    }

    #[test]
    fn configurator_rejects_blank_uri() {
        let doc = r#"{"name":"DockerConfig","builder":"Docker","uri":"","setup":[]}"#;
        let e = ToolConfigurator::from_json("Velvet", doc.as_bytes()).unwrap_err();
        assert!(matches!(&e, RepositoryError::SchemaViolation { field, .. } if field == "uri"));
    }
}
