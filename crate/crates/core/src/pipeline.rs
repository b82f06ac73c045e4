//! Loading a `.pipes` file end to end: read, parse, open its repository, validate.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl::{self, PipelineAst, SyntaxError, ValidatedPipeline, ValidationError};
use crate::repository::{
    open_repository, RepositoryError, RepositoryHandle, RepositoryKind, RepositoryRef,
};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {error}", path.display())]
    Syntax { error: SyntaxError, path: PathBuf },
    #[error(transparent)]
    Repository(#[from] RepositoryError),
    #[error("{}: {error}", path.display())]
    Validation {
        error: Box<ValidationError>,
        path: PathBuf,
    },
}

#[derive(Debug)]
pub struct LoadedPipeline {
    pub path: PathBuf,
    pub source: String,
    pub repository: RepositoryHandle,
    pub validated: ValidatedPipeline,
}

impl LoadedPipeline {
    pub fn ast(&self) -> &PipelineAst {
        &self.validated.ast
    }
}

/// Local repository paths in a `.pipes` file are relative to the file's directory.
pub fn resolve_repository(reference: &RepositoryRef, pipes_path: &Path) -> RepositoryRef {
    match reference.kind {
        RepositoryKind::Local if Path::new(&reference.location).is_relative() => {
            let base = pipes_path.parent().unwrap_or(Path::new(""));
            RepositoryRef::local(
                base.join(&reference.location)
                    .to_string_lossy()
                    .into_owned(),
            )
        }
        _ => reference.clone(),
    }
}

/// Reads, parses and validates `path`. With `repo_override`, tools come from
/// that repository instead of the one the file names; either way the
/// validated pipeline records the repository actually used.
pub fn load_pipeline(
    path: &Path,
    repo_override: Option<&RepositoryRef>,
) -> Result<LoadedPipeline, LoadError> {
    let source = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut ast = dsl::parse(&source).map_err(|error| LoadError::Syntax {
        error,
        path: path.to_path_buf(),
    })?;
    ast.repository = match repo_override {
        Some(r) => r.clone(),
        None => resolve_repository(&ast.repository, path),
    };
    let repository = open_repository(&ast.repository)?;
    let validated = dsl::validate(&ast, &repository).map_err(|e| match e {
        ValidationError::Repository { source, .. } => LoadError::Repository(source),
        error => LoadError::Validation {
            error: Box::new(error),
            path: path.to_path_buf(),
        },
    })?;
    Ok(LoadedPipeline {
        path: path.to_path_buf(),
        source,
        repository,
        validated,
    })
}
