use std::num::{NonZeroU32, NonZeroU64};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dsl::ValidatedPipeline;
use crate::Warning;

/// Resources and paths the executor is configured with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceConfig {
    pub memory_mib: u64,
    pub cpu_cores: u32,
    pub input_path: PathBuf,
    pub output_path: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResourceOverrides {
    pub memory_mib: Option<NonZeroU64>,
    pub cpu_cores: Option<NonZeroU32>,
}

impl ResourceOverrides {
    /// `memory_gib` as given on the command line (`-mem 4` is 4096 MiB).
    pub fn from_gib(memory_gib: Option<NonZeroU64>, cpu_cores: Option<NonZeroU32>) -> Self {
        Self {
            memory_mib: memory_gib.map(|g| g.saturating_mul(NonZeroU64::new(1024).unwrap())),
            cpu_cores,
        }
    }
}

/// Largest memory requirement among the tools the pipeline uses.
pub fn required_memory(vp: &ValidatedPipeline) -> u64 {
    vp.tools
        .iter()
        .map(|t| t.descriptor.required_memory)
        .max()
        .unwrap_or(1)
}

/// Memory defaults to the highest requirement among the pipeline's tools and
/// cores to 1. Overrides always win; an override below the requirement only
/// produces a warning.
pub fn compute_resources(
    vp: &ValidatedPipeline,
    overrides: ResourceOverrides,
    input_path: impl Into<PathBuf>,
    output_path: impl Into<PathBuf>,
) -> (ResourceConfig, Vec<Warning>) {
    let needed = required_memory(vp);
    let mut warnings = Vec::new();
    let memory_mib = match overrides.memory_mib {
        Some(m) => {
            if m.get() < needed {
                let w = Warning::general(format!(
                        "memory override of {} MiB is below the {needed} MiB required by the pipeline's tools; execution may fail",
                    m.get()
                ));
                warnings.push(w);
            }
            m.get()
        }
        None => needed,
    };
    let config = ResourceConfig {
        memory_mib,
        cpu_cores: overrides.cpu_cores.map_or(1, NonZeroU32::get),
        input_path: input_path.into(),
        output_path: output_path.into(),
    };
    (config, warnings)
}
