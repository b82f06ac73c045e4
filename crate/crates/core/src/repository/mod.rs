//! Tool repositories: where descriptors, configurators and tool artifacts live.
//!
//! A repository is laid out as one directory per tool:
//!
//! ```text
//! <root>/<Tool>/Descriptor.json
//! <root>/<Tool>/<ConfigName>.json
//! <root>/<Tool>/Logo.png        (optional, never loaded)
//! <root>/<Tool>/bin/<file>      (optional artifact payload)
//! ```
//!
//! Remote repositories mirror this under a URL base and additionally serve
//! `<base>/index.json`, a JSON array of tool names.

mod model;
mod provider;

use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use model::{
    ArgumentDescriptor, CommandDescriptor, OutputDescriptor, OutputKind, ToolConfigurator,
    ToolDescriptor, ValueType,
};
pub use provider::{
    ArtifactFile, HttpTransport, LocalProvider, MemoryProvider, RemoteProvider, RepositoryProvider,
    TransportError, UreqTransport,
};

pub const DESCRIPTOR_FILE: &str = "Descriptor.json";
pub const LOGO_FILE: &str = "Logo.png";
pub const ARTIFACT_DIR: &str = "bin";
pub const REMOTE_INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum RepositoryError {
    #[error("repository location unreachable: {location}: {reason}")]
    LocationUnreachable { location: String, reason: String },
    #[error("failed to fetch {what}: {reason}")]
    FetchFailure { what: String, reason: String },
    #[error("tool '{0}' not found in repository")]
    ToolNotFound(String),
    #[error("configurator '{config}' not found for tool '{tool}'")]
    ConfiguratorNotFound { tool: String, config: String },
    #[error("schema violation in tool '{tool}', field '{field}': {message}")]
    SchemaViolation {
        tool: String,
        field: String,
        message: String,
    },
}

impl RepositoryError {
    pub(crate) fn schema(
        tool: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Self::SchemaViolation {
            tool: tool.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepositoryKind {
    Local,
    Remote,
}

/// Where a pipeline's tools come from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepositoryRef {
    pub kind: RepositoryKind,
    pub location: String,
}

impl RepositoryRef {
    pub fn local(path: impl Into<String>) -> Self {
        Self {
            kind: RepositoryKind::Local,
            location: path.into(),
        }
    }

    pub fn remote(url: impl Into<String>) -> Self {
        Self {
            kind: RepositoryKind::Remote,
            location: url.into(),
        }
    }
}

impl fmt::Display for RepositoryRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RepositoryKind::Local => write!(f, "local:{}", self.location),
            RepositoryKind::Remote => write!(f, "remote:{}", self.location),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchKind {
    Descriptor,
    Configurator,
    Artifact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchRecord {
    pub operation: FetchKind,
    pub tool: String,
}

/// Payload fetched for a tool when it is installed into the cache.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub tool: String,
    pub uri: String,
    pub files: Vec<ArtifactFile>,
}

/// An open repository. Reads are lazy; every fetch that reaches the
/// underlying provider is appended to the handle's fetch log.
#[derive(Debug)]
pub struct RepositoryHandle {
    reference: RepositoryRef,
    provider: Arc<dyn RepositoryProvider>,
    log: Mutex<Vec<FetchRecord>>,
}

/// Opens a repository with the default providers (filesystem or HTTPS).
pub fn open_repository(reference: &RepositoryRef) -> Result<RepositoryHandle, RepositoryError> {
    match reference.kind {
        RepositoryKind::Local => {
            let provider = LocalProvider::open(PathBuf::from(&reference.location))?;
            Ok(RepositoryHandle::with_provider(
                reference.clone(),
                Arc::new(provider),
            ))
        }
        RepositoryKind::Remote => open_remote(reference, Arc::new(UreqTransport::default())),
    }
}

/// Opens a remote repository over a caller-supplied transport.
pub fn open_remote(
    reference: &RepositoryRef,
    transport: Arc<dyn HttpTransport>,
) -> Result<RepositoryHandle, RepositoryError> {
    let provider = RemoteProvider::open(&reference.location, transport)?;
    Ok(RepositoryHandle::with_provider(
        reference.clone(),
        Arc::new(provider),
    ))
}

fn is_safe_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(['/', '\\'])
        && !name.contains('\0')
}

impl RepositoryHandle {
    pub fn with_provider(reference: RepositoryRef, provider: Arc<dyn RepositoryProvider>) -> Self {
        Self {
            reference,
            provider,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn reference(&self) -> &RepositoryRef {
        &self.reference
    }

    fn record(&self, operation: FetchKind, tool: &str) {
        self.log
            .lock()
            .expect("fetch log poisoned")
            .push(FetchRecord {
                operation,
                tool: tool.to_string(),
            });
    }

    /// Tool names, sorted.
    pub fn list_tools(&self) -> Result<Vec<String>, RepositoryError> {
        let mut tools = self.provider.list_tools()?;
        tools.sort();
        tools.dedup();
        Ok(tools)
    }

    pub fn get_descriptor(&self, tool: &str) -> Result<ToolDescriptor, RepositoryError> {
        if !is_safe_name(tool) {
            return Err(RepositoryError::ToolNotFound(tool.to_string()));
        }
        self.record(FetchKind::Descriptor, tool);
        let bytes = self
            .provider
            .read_file(tool, DESCRIPTOR_FILE)?
            .ok_or_else(|| RepositoryError::ToolNotFound(tool.to_string()))?;
        ToolDescriptor::from_json(tool, &bytes)
    }

    pub fn get_configurator(
        &self,
        tool: &str,
        config: &str,
    ) -> Result<ToolConfigurator, RepositoryError> {
        if !is_safe_name(tool) || !self.provider.has_tool(tool)? {
            return Err(RepositoryError::ToolNotFound(tool.to_string()));
        }
        let not_found = || RepositoryError::ConfiguratorNotFound {
            tool: tool.to_string(),
            config: config.to_string(),
        };
        let file = format!("{config}.json");
        if !is_safe_name(config) || file == DESCRIPTOR_FILE {
            return Err(not_found());
        }
        self.record(FetchKind::Configurator, tool);
        let bytes = self
            .provider
            .read_file(tool, &file)?
            .ok_or_else(not_found)?;
        let cfg = ToolConfigurator::from_json(tool, &bytes)?;
        if cfg.name != config {
            return Err(RepositoryError::schema(
                tool,
                "name",
                format!("configurator file '{file}' declares name '{}'", cfg.name),
            ));
        }
        Ok(cfg)
    }

    /// Fetches the payload installed into the tool cache on a cold run.
    pub fn fetch_artifact(
        &self,
        tool: &str,
        commands: &[String],
        configurator: &ToolConfigurator,
    ) -> Result<Artifact, RepositoryError> {
        if !is_safe_name(tool) {
            return Err(RepositoryError::ToolNotFound(tool.to_string()));
        }
        self.record(FetchKind::Artifact, tool);
        let files = self.provider.artifact_files(tool, commands)?;
        Ok(Artifact {
            tool: tool.to_string(),
            uri: configurator.uri.clone(),
            files,
        })
    }

    /// Where the tool's logo would be found. Never fetched.
    pub fn logo_location(&self, tool: &str) -> Option<String> {
        self.provider.logo_location(tool)
    }

    pub fn fetch_log(&self) -> Vec<FetchRecord> {
        self.log.lock().expect("fetch log poisoned").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn memory_repo() -> RepositoryHandle {
        let desc = ToolDescriptor::from_json(
            "Velvet",
            br#"{"name":"Velvet","version":"1","setup":[],"requiredMemory":10,
                "commands":[{"name":"velveth","command":"velveth","priority":2,
                "argumentComposer":"valuesOnly","arguments":[],"outputs":[]}]}"#,
        )
        .unwrap();
        let cfg = ToolConfigurator {
            name: "DockerConfig".into(),
            builder: "Docker".into(),
            uri: "img".into(),
            setup: vec![],
        };
        let mut provider = MemoryProvider::default();
        provider.insert(desc, vec![cfg]);
        RepositoryHandle::with_provider(RepositoryRef::local("<memory>"), Arc::new(provider))
    }

    #[test]
    fn fetch_log_counts_calls_in_order() {
        let repo = memory_repo();
        assert!(repo.fetch_log().is_empty());
        repo.get_descriptor("Velvet").unwrap();
        repo.get_configurator("Velvet", "DockerConfig").unwrap();
        assert_eq!(
            repo.fetch_log(),
            vec![
                FetchRecord {
                    operation: FetchKind::Descriptor,
                    tool: "Velvet".into()
                },
                FetchRecord {
                    operation: FetchKind::Configurator,
                    tool: "Velvet".into()
                },
            ]
        );
    }

    #[test]
    fn path_like_names_are_not_tools() {
        let repo = memory_repo();
        assert!(matches!(
            repo.get_descriptor("../etc"),
            Err(RepositoryError::ToolNotFound(_))
        ));
        assert!(matches!(
            repo.get_configurator("Velvet", "../x"),
            Err(RepositoryError::ConfiguratorNotFound { .. })
        ));
        assert!(matches!(
            repo.get_configurator("Velvet", "Descriptor"),
            Err(RepositoryError::ConfiguratorNotFound { .. })
        ));
    }

    #[test]
    fn descriptor_reads_are_deterministic() {
        let repo = memory_repo();
        assert_eq!(
            repo.get_descriptor("Velvet").unwrap(),
            repo.get_descriptor("Velvet").unwrap()
        );
    }
}
