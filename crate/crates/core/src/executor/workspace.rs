use std::io;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExecError;

/// Directories one pipeline run works in.
///
/// `input_dir` is only ever read. Steps write into `staging_dir`; terminal
/// outputs are copied to `output_dir` once every step succeeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Workspace {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub staging_dir: PathBuf,
}

pub const DEFAULT_STAGING: &str = ".staging";

impl Workspace {
    /// Staging defaults to `<output_dir>/.staging`.
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let output_dir = output_dir.into();
        Self {
            input_dir: input_dir.into(),
            staging_dir: output_dir.join(DEFAULT_STAGING),
            output_dir,
        }
    }

    pub fn with_staging(mut self, staging_dir: impl Into<PathBuf>) -> Self {
        self.staging_dir = staging_dir.into();
        self
    }

    /// Absolute, lexically normalized copy of every path.
    pub fn absolute(&self) -> io::Result<Self> {
        Ok(Self {
            input_dir: absolute(&self.input_dir)?,
            output_dir: absolute(&self.output_dir)?,
            staging_dir: absolute(&self.staging_dir)?,
        })
    }

    /// Checks the directory layout before anything runs.
    pub fn check(&self) -> Result<(), ExecError> {
        if !self.input_dir.is_dir() {
            return Err(ExecError::Workspace(format!(
                "input directory {} does not exist",
                self.input_dir.display()
            )));
        }
        for (what, dir) in [("output", &self.output_dir), ("staging", &self.staging_dir)] {
            if overlaps(dir, &self.input_dir) {
                return Err(ExecError::WorkspaceViolation(format!(
                    "{what} directory {} overlaps the read-only input directory {}",
                    dir.display(),
                    self.input_dir.display()
                )));
            }
        }
        Ok(())
    }

    /// Maps a workspace-relative path into staging. Absolute paths are kept.
    pub fn staged(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.staging_dir.join(p)
        }
    }
}

pub(crate) fn absolute(p: &Path) -> io::Result<PathBuf> {
    Ok(normalize(&std::path::absolute(p)?))
}

/// Removes `.` and resolves `..` lexically.
pub(crate) fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

/// True when one path equals or contains the other.
pub fn overlaps(a: &Path, b: &Path) -> bool {
    let a = normalize(a);
    let b = normalize(b);
    a.starts_with(&b) || b.starts_with(&a)
}

/// A relative path that stays below its base directory.
pub(crate) fn stays_inside(rel: &str) -> bool {
    let mut depth: i64 = 0;
    for c in Path::new(rel).components() {
        match c {
            Component::Normal(_) => depth += 1,
            Component::CurDir => {}
            Component::ParentDir => {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
            Component::RootDir | Component::Prefix(_) => return false,
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_is_symmetric_and_lexical() {
        assert!(overlaps(Path::new("/a/b"), Path::new("/a")));
        assert!(overlaps(Path::new("/a"), Path::new("/a/b/../b/c")));
        assert!(!overlaps(Path::new("/a/b"), Path::new("/a/bc")));
    }

    #[test]
    fn escape_detection() {
        assert!(stays_inside("a/b/../c"));
        assert!(!stays_inside("../x"));
        assert!(!stays_inside("a/../../x"));
        assert!(!stays_inside("/etc/passwd"));
    }
}
