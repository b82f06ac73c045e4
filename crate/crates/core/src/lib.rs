//! A decentralized pipeline engine.
//!
//! A `.pipes` file names a tool repository and lists tool commands with
//! their arguments and `chain` links between outputs and inputs. The engine
//! runs in four stages:
//!
//! 1. [`dsl::parse`] turns source text into a [`dsl::PipelineAst`];
//! 2. [`dsl::validate`] resolves every tool, configurator, command and
//!    argument against a [`repository::RepositoryHandle`];
//! 3. [`planner::plan_pipeline`] builds the dependency graph, picks an
//!    execution order and composes concrete command lines;
//! 4. [`executor`] installs tools into a cache and runs each step through a
//!    backend (dry run, local processes, or a container runtime).

pub mod dsl;
pub mod executor;
pub mod pipeline;
pub mod planner;
pub mod repository;
pub mod template;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use dsl::Span;

/// A non-fatal diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub message: String,
    #[serde(skip)]
    pub at: Option<Span>,
}

impl Warning {
    pub fn new(at: Span, message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            at: Some(at),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            at: None,
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.at {
            Some(at) => write!(f, "warning: {at}: {}", self.message),
            None => write!(f, "warning: {}", self.message),
        }
    }
}
