//! On-disk cache of installed tools.
//!
//! ```text
//! <cacheDir>/<tool>/<version>/installed.marker
//! <cacheDir>/<tool>/<version>/artifact/manifest.json
//! <cacheDir>/<tool>/<version>/artifact/bin/<file>
//! <cacheDir>/.contexts/<digest>.marker
//! ```
//!
//! The marker is written last, by rename, so an interrupted installation
//! never leaves an entry that looks installed.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExecError;
use crate::repository::Artifact;

pub const MARKER_FILE: &str = "installed.marker";
pub const ARTIFACT_SUBDIR: &str = "artifact";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONTEXTS_DIR: &str = ".contexts";

/// Identifies one installable tool context.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub tool: String,
    pub version: String,
    pub uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct InstallMarker {
    tool: String,
    version: String,
    uri: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    uri: String,
    files: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryState {
    Installed,
    Missing,
    /// Marked installed but the artifact payload is gone.
    Corrupt,
}

#[derive(Debug)]
pub struct ToolCache {
    dir: PathBuf,
    locks: Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>,
}

/// Keeps a path component free of separators.
fn component(s: &str) -> String {
    let cleaned: String = s
        .chars()
        .map(|c| {
            if c == '/' || c == '\\' || c == '\0' {
                '_'
            } else {
                c
            }
        })
        .collect();
    match cleaned.as_str() {
        "" | "." | ".." => format!("_{cleaned}"),
        _ => cleaned,
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> ExecError {
    let context = context.into();
    move |source| ExecError::Io { context, source }
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

impl ToolCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_dir(&self, key: &CacheKey) -> PathBuf {
        self.dir
            .join(component(&key.tool))
            .join(component(&key.version))
    }

    pub fn bin_dir(&self, key: &CacheKey) -> PathBuf {
        self.entry_dir(key).join(ARTIFACT_SUBDIR).join("bin")
    }

    pub fn marker_path(&self, key: &CacheKey) -> PathBuf {
        self.entry_dir(key).join(MARKER_FILE)
    }

    /// Serializes install transitions for one entry across threads.
    pub fn entry_lock(&self, key: &CacheKey) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("cache lock table poisoned");
        Arc::clone(locks.entry(self.entry_dir(key)).or_default())
    }

    pub fn state(&self, key: &CacheKey) -> EntryState {
        let Ok(text) = fs::read(self.marker_path(key)) else {
            return EntryState::Missing;
        };
        let Ok(marker) = serde_json::from_slice::<InstallMarker>(&text) else {
            return EntryState::Corrupt;
        };
        if marker.uri != key.uri || marker.tool != key.tool || marker.version != key.version {
            // Installed from another configurator: reinstall over it.
            return EntryState::Missing;
        }
        let artifact = self.entry_dir(key).join(ARTIFACT_SUBDIR);
        let manifest: Manifest = match fs::read(artifact.join(MANIFEST_FILE))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
        {
            Some(m) => m,
            None => return EntryState::Corrupt,
        };
        if manifest
            .files
            .iter()
            .all(|f| artifact.join("bin").join(f).is_file())
        {
            EntryState::Installed
        } else {
            EntryState::Corrupt
        }
    }

    pub fn evict(&self, key: &CacheKey) -> Result<(), ExecError> {
        let dir = self.entry_dir(key);
        match fs::remove_dir_all(&dir) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(io_err(format!("evicting {}", dir.display()))(e)),
        }
    }

    /// Lays out the artifact payload for `key`, removing any previous entry.
    /// The entry is not marked installed; see [`ToolCache::mark_installed`].
    pub fn stage_artifact(
        &self,
        key: &CacheKey,
        artifact: &Artifact,
    ) -> Result<PathBuf, ExecError> {
        self.evict(key)?;
        let entry = self.entry_dir(key);
        let bin = self.bin_dir(key);
        fs::create_dir_all(&bin).map_err(io_err(format!("creating {}", bin.display())))?;
        let mut names = Vec::with_capacity(artifact.files.len());
        for file in &artifact.files {
            let name = component(&file.name);
            let path = bin.join(&name);
            fs::write(&path, &file.contents)
                .map_err(io_err(format!("writing {}", path.display())))?;
            #[cfg(unix)]
            if file.executable {
                use std::os::unix::fs::PermissionsExt;
                fs::set_permissions(&path, fs::Permissions::from_mode(0o755))
                    .map_err(io_err(format!("chmod {}", path.display())))?;
            }
            names.push(name);
        }
        let manifest = Manifest {
            uri: artifact.uri.clone(),
            files: names,
        };
        let path = entry.join(ARTIFACT_SUBDIR).join(MANIFEST_FILE);
        fs::write(
            &path,
            serde_json::to_vec_pretty(&manifest).expect("manifest serializes"),
        )
        .map_err(io_err(format!("writing {}", path.display())))?;
        Ok(entry)
    }

    pub fn mark_installed(&self, key: &CacheKey) -> Result<(), ExecError> {
        let marker = InstallMarker {
            tool: key.tool.clone(),
            version: key.version.clone(),
            uri: key.uri.clone(),
        };
        let path = self.marker_path(key);
        write_atomic(
            &path,
            &serde_json::to_vec_pretty(&marker).expect("marker serializes"),
        )
        .map_err(io_err(format!("writing {}", path.display())))
    }

    /// Marker recording that an execution-context setup script list has run.
    pub fn context_marker(&self, backend: &str, builder: &str, setup: &[String]) -> PathBuf {
        let mut hasher = Sha256::new();
        hasher.update(backend.as_bytes());
        hasher.update([0]);
        hasher.update(builder.as_bytes());
        for line in setup {
            hasher.update([0]);
            hasher.update(line.as_bytes());
        }
        let digest = hex::encode(hasher.finalize());
        self.dir
            .join(CONTEXTS_DIR)
            .join(format!("{}.marker", &digest[..32]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repository::ArtifactFile;

    fn key() -> CacheKey {
        CacheKey {
            tool: "Velvet".into(),
            version: "0.7.01".into(),
            uri: "pipekit/velvet0.7".into(),
        }
    }

    fn artifact() -> Artifact {
        Artifact {
            tool: "Velvet".into(),
            uri: "pipekit/velvet0.7".into(),
            files: vec![ArtifactFile {
                name: "velveth".into(),
                contents: b"#!/bin/sh\n".to_vec(),
                executable: true,
            }],
        }
    }

    #[test]
    fn lifecycle() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = ToolCache::new(tmp.path());
        assert_eq!(cache.state(&key()), EntryState::Missing);
        cache.stage_artifact(&key(), &artifact()).unwrap();
        assert_eq!(
            cache.state(&key()),
            EntryState::Missing,
            "not installed before the marker"
        );
        cache.mark_installed(&key()).unwrap();
        assert_eq!(cache.state(&key()), EntryState::Installed);
        assert!(tmp.path().join("Velvet/0.7.01/installed.marker").is_file());

        fs::remove_file(cache.bin_dir(&key()).join("velveth")).unwrap();
        assert_eq!(cache.state(&key()), EntryState::Corrupt);
        cache.evict(&key()).unwrap();
        assert_eq!(cache.state(&key()), EntryState::Missing);
    }

    #[test]
    fn other_uri_is_not_installed() {
        let tmp = tempfile::tempdir().unwrap();
        let cache = ToolCache::new(tmp.path());
        cache.stage_artifact(&key(), &artifact()).unwrap();
        cache.mark_installed(&key()).unwrap();
        let other = CacheKey {
            uri: "other/image".into(),
            ..key()
        };
        assert_eq!(cache.state(&other), EntryState::Missing);
    }

    #[test]
    fn hostile_names_stay_inside() {
        let cache = ToolCache::new("/cache");
        let k = CacheKey {
            tool: "..".into(),
            version: "a/b".into(),
            uri: "u".into(),
        };
        assert!(cache.entry_dir(&k).starts_with("/cache"));
        assert_eq!(cache.entry_dir(&k).components().count(), 4);
    }
}
