use std::collections::BTreeMap;
use std::fmt::Debug;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Duration;

use thiserror::Error;
use url::Url;

use super::{
    RepositoryError, ToolConfigurator, ToolDescriptor, ARTIFACT_DIR, DESCRIPTOR_FILE, LOGO_FILE,
    REMOTE_INDEX_FILE,
};

/// A file shipped with a tool and copied into the cache on installation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactFile {
    pub name: String,
    pub contents: Vec<u8>,
    pub executable: bool,
}

/// Backing store for a [`super::RepositoryHandle`].
pub trait RepositoryProvider: Send + Sync + Debug {
    fn list_tools(&self) -> Result<Vec<String>, RepositoryError>;
    fn has_tool(&self, tool: &str) -> Result<bool, RepositoryError>;
    /// `Ok(None)` when the file does not exist.
    fn read_file(&self, tool: &str, file: &str) -> Result<Option<Vec<u8>>, RepositoryError>;
    /// Artifact payload for `tool`. `commands` are the command tokens a plan uses.
    fn artifact_files(
        &self,
        tool: &str,
        commands: &[String],
    ) -> Result<Vec<ArtifactFile>, RepositoryError>;
    fn logo_location(&self, tool: &str) -> Option<String>;
}

#[derive(Debug, Clone)]
pub struct LocalProvider {
    root: PathBuf,
}

impl LocalProvider {
    pub fn open(root: PathBuf) -> Result<Self, RepositoryError> {
        if !root.is_dir() {
            return Err(RepositoryError::LocationUnreachable {
                location: root.display().to_string(),
                reason: "not an existing directory".into(),
            });
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn fetch_failure(what: &Path, err: io::Error) -> RepositoryError {
        RepositoryError::FetchFailure {
            what: what.display().to_string(),
            reason: err.to_string(),
        }
    }
}

#[cfg(unix)]
fn is_executable(meta: &std::fs::Metadata) -> bool {
    use std::os::unix::fs::PermissionsExt;
    meta.permissions().mode() & 0o111 != 0
}

#[cfg(not(unix))]
fn is_executable(_meta: &std::fs::Metadata) -> bool {
    false
}

impl RepositoryProvider for LocalProvider {
    fn list_tools(&self) -> Result<Vec<String>, RepositoryError> {
        let entries =
            std::fs::read_dir(&self.root).map_err(|e| Self::fetch_failure(&self.root, e))?;
        let mut tools = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Self::fetch_failure(&self.root, e))?;
            let path = entry.path();
            if path.join(DESCRIPTOR_FILE).is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    tools.push(name.to_string());
                }
            }
        }
        Ok(tools)
    }

    fn has_tool(&self, tool: &str) -> Result<bool, RepositoryError> {
        Ok(self.root.join(tool).is_dir())
    }

    fn read_file(&self, tool: &str, file: &str) -> Result<Option<Vec<u8>>, RepositoryError> {
        let path = self.root.join(tool).join(file);
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Self::fetch_failure(&path, e)),
        }
    }

    fn artifact_files(
        &self,
        tool: &str,
        _commands: &[String],
    ) -> Result<Vec<ArtifactFile>, RepositoryError> {
        let dir = self.root.join(tool).join(ARTIFACT_DIR);
        if !dir.is_dir() {
            return Ok(Vec::new());
        }
        let mut files = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| Self::fetch_failure(&dir, e))? {
            let entry = entry.map_err(|e| Self::fetch_failure(&dir, e))?;
            let path = entry.path();
            let meta = entry
                .metadata()
                .map_err(|e| Self::fetch_failure(&path, e))?;
            if !meta.is_file() {
                continue;
            }
            let Some(name) = entry.file_name().to_str().map(str::to_string) else {
                continue;
            };
            let contents = std::fs::read(&path).map_err(|e| Self::fetch_failure(&path, e))?;
            files.push(ArtifactFile {
                name,
                contents,
                executable: is_executable(&meta),
            });
        }
        files.sort_by(|a, b| a.name.cmp(&b.name));
        Ok(files)
    }

    fn logo_location(&self, tool: &str) -> Option<String> {
        let path = self.root.join(tool).join(LOGO_FILE);
        path.is_file().then(|| path.display().to_string())
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("host unreachable: {0}")]
    Unreachable(String),
    #[error("HTTP {status} for {url}")]
    Status { url: String, status: u16 },
    #[error("{0}")]
    Io(String),
}

/// Minimal HTTP GET surface the remote provider needs.
pub trait HttpTransport: Send + Sync + Debug {
    /// `Ok(None)` on 404.
    fn get(&self, url: &Url) -> Result<Option<Vec<u8>>, TransportError>;
    /// Checks that the URL's host can be resolved.
    fn check_host(&self, url: &Url) -> Result<(), TransportError>;
}

#[derive(Debug)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build();
        Self {
            agent: config.into(),
        }
    }
}

const MAX_REMOTE_FILE: u64 = 64 * 1024 * 1024;

impl HttpTransport for UreqTransport {
    fn get(&self, url: &Url) -> Result<Option<Vec<u8>>, TransportError> {
        let resp = self
            .agent
            .get(url.as_str())
            .call()
            .map_err(|e| TransportError::Io(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        if !(200..300).contains(&status) {
            return Err(TransportError::Status {
                url: url.to_string(),
                status,
            });
        }
        let mut body = Vec::new();
        resp.into_body()
            .into_reader()
            .take(MAX_REMOTE_FILE)
            .read_to_end(&mut body)
            .map_err(|e| TransportError::Io(e.to_string()))?;
        Ok(Some(body))
    }

    fn check_host(&self, url: &Url) -> Result<(), TransportError> {
        url.socket_addrs(|| None)
            .map_err(|e| TransportError::Unreachable(e.to_string()))
            .and_then(|addrs| {
                if addrs.is_empty() {
                    Err(TransportError::Unreachable(format!("{url}: no addresses")))
                } else {
                    Ok(())
                }
            })
    }
}

/// Repository served as static files under an HTTP(S) base URL.
#[derive(Debug)]
pub struct RemoteProvider {
    base: Url,
    transport: std::sync::Arc<dyn HttpTransport>,
    index: OnceLock<Vec<String>>,
}

impl RemoteProvider {
    pub fn open(
        location: &str,
        transport: std::sync::Arc<dyn HttpTransport>,
    ) -> Result<Self, RepositoryError> {
        let unreachable = |reason: String| RepositoryError::LocationUnreachable {
            location: location.to_string(),
            reason,
        };
        let base = Url::parse(location).map_err(|e| unreachable(e.to_string()))?;
        if !matches!(base.scheme(), "http" | "https") || base.host().is_none() {
            return Err(unreachable("expected an absolute http(s) URL".into()));
        }
        transport
            .check_host(&base)
            .map_err(|e| unreachable(e.to_string()))?;
        Ok(Self {
            base,
            transport,
            index: OnceLock::new(),
        })
    }

    fn url(&self, segments: &[&str]) -> Url {
        let mut url = self.base.clone();
        {
            let mut path = url
                .path_segments_mut()
                .expect("http(s) URLs have path segments");
            path.pop_if_empty();
            for s in segments {
                path.push(s);
            }
        }
        url
    }

    fn get(&self, segments: &[&str]) -> Result<Option<Vec<u8>>, RepositoryError> {
        let url = self.url(segments);
        self.transport
            .get(&url)
            .map_err(|e| RepositoryError::FetchFailure {
                what: url.to_string(),
                reason: e.to_string(),
            })
    }

    fn index(&self) -> Result<&Vec<String>, RepositoryError> {
        if let Some(index) = self.index.get() {
            return Ok(index);
        }
        let bytes =
            self.get(&[REMOTE_INDEX_FILE])?
                .ok_or_else(|| RepositoryError::FetchFailure {
                    what: self.url(&[REMOTE_INDEX_FILE]).to_string(),
                    reason: "not found".into(),
                })?;
        let tools: Vec<String> =
            serde_json::from_slice(&bytes).map_err(|e| RepositoryError::FetchFailure {
                what: self.url(&[REMOTE_INDEX_FILE]).to_string(),
                reason: format!("malformed tool index: {e}"),
            })?;
        Ok(self.index.get_or_init(|| tools))
    }
}

impl RepositoryProvider for RemoteProvider {
    fn list_tools(&self) -> Result<Vec<String>, RepositoryError> {
        self.index().cloned()
    }

    fn has_tool(&self, tool: &str) -> Result<bool, RepositoryError> {
        match self.index() {
            Ok(index) => Ok(index.iter().any(|t| t == tool)),
            // Without an index, existence is discovered by the file fetch itself.
            Err(_) => Ok(true),
        }
    }

    fn read_file(&self, tool: &str, file: &str) -> Result<Option<Vec<u8>>, RepositoryError> {
        self.get(&[tool, file])
    }

    fn artifact_files(
        &self,
        tool: &str,
        commands: &[String],
    ) -> Result<Vec<ArtifactFile>, RepositoryError> {
        let mut names: Vec<&str> = commands.iter().map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        let mut files = Vec::new();
        for name in names {
            if let Some(contents) = self.get(&[tool, ARTIFACT_DIR, name])? {
                files.push(ArtifactFile {
                    name: name.to_string(),
                    contents,
                    executable: true,
                });
            }
        }
        Ok(files)
    }

    fn logo_location(&self, tool: &str) -> Option<String> {
        Some(self.url(&[tool, LOGO_FILE]).to_string())
    }
}

/// In-process repository, mostly for tests and embedding.
#[derive(Debug, Default, Clone)]
pub struct MemoryProvider {
    tools: BTreeMap<String, MemoryTool>,
}

#[derive(Debug, Default, Clone)]
struct MemoryTool {
    files: BTreeMap<String, Vec<u8>>,
    artifacts: Vec<ArtifactFile>,
}

impl MemoryProvider {
    pub fn insert(&mut self, descriptor: ToolDescriptor, configurators: Vec<ToolConfigurator>) {
        let tool = descriptor.name.clone();
        self.insert_file(&tool, DESCRIPTOR_FILE, descriptor.to_json().into_bytes());
        for cfg in configurators {
            self.insert_file(
                &tool,
                &format!("{}.json", cfg.name),
                cfg.to_json().into_bytes(),
            );
        }
    }

    /// Stores raw bytes, so malformed documents can be served too.
    pub fn insert_file(&mut self, tool: &str, file: &str, contents: Vec<u8>) {
        self.tools
            .entry(tool.to_string())
            .or_default()
            .files
            .insert(file.to_string(), contents);
    }

    pub fn insert_artifact(&mut self, tool: &str, file: ArtifactFile) {
        self.tools
            .entry(tool.to_string())
            .or_default()
            .artifacts
            .push(file);
    }
}

impl RepositoryProvider for MemoryProvider {
    fn list_tools(&self) -> Result<Vec<String>, RepositoryError> {
        Ok(self
            .tools
            .iter()
            .filter(|(_, t)| t.files.contains_key(DESCRIPTOR_FILE))
            .map(|(name, _)| name.clone())
            .collect())
    }

    fn has_tool(&self, tool: &str) -> Result<bool, RepositoryError> {
        Ok(self.tools.contains_key(tool))
    }

    fn read_file(&self, tool: &str, file: &str) -> Result<Option<Vec<u8>>, RepositoryError> {
        Ok(self
            .tools
            .get(tool)
            .and_then(|t| t.files.get(file))
            .cloned())
    }

    fn artifact_files(
        &self,
        tool: &str,
        _commands: &[String],
    ) -> Result<Vec<ArtifactFile>, RepositoryError> {
        Ok(self
            .tools
            .get(tool)
            .map(|t| t.artifacts.clone())
            .unwrap_or_default())
    }

    fn logo_location(&self, _tool: &str) -> Option<String> {
        None
    }
}
