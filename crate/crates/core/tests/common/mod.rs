#![allow(dead_code)]

pub mod grammar;
pub mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pipekit::pipeline::{load_pipeline, LoadedPipeline};
use pipekit::repository::{
    MemoryProvider, RepositoryHandle, RepositoryRef, ToolConfigurator, ToolDescriptor,
};
use sha2::{Digest, Sha256};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn case_study() -> LoadedPipeline {
    let repo = RepositoryRef::local(fixtures().join("repo").to_string_lossy().into_owned());
    load_pipeline(&fixtures().join("pipelines/case_study.pipes"), Some(&repo)).unwrap()
}

pub fn stub_case_study() -> LoadedPipeline {
    load_pipeline(&fixtures().join("pipelines/stub_case_study.pipes"), None).unwrap()
}

/// Relative path -> content hash ("dir" for directories), for every entry under `root`.
pub fn snapshot(root: &Path) -> BTreeMap<String, String> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
        let Ok(entries) = fs::read_dir(dir) else {
            return;
        };
        for entry in entries {
            let path = entry.unwrap().path();
            let rel = path
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            if path.is_dir() {
                out.insert(rel, "dir".into());
                walk(root, &path, out);
            } else {
                out.insert(rel, hex::encode(Sha256::digest(fs::read(&path).unwrap())));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Copies the stub inputs into a fresh directory.
pub fn stub_inputs(dst: &Path) {
    copy_dir(&fixtures().join("stub-input"), dst);
}

pub fn copy_dir(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &to);
        } else {
            fs::copy(entry.path(), to).unwrap();
        }
    }
}

/// Step names appended by the stub tools, in file order.
pub fn step_trace(contents: &str) -> Vec<&str> {
    const STEPS: [&str; 5] = ["trimmomatic", "velveth", "velvetg", "makeblastdb", "blastx"];
    contents.lines().filter(|l| STEPS.contains(l)).collect()
}

fn synthetic_descriptor(name: &str, memory: u64, priorities: &[i64]) -> ToolDescriptor {
    let commands: Vec<String> = priorities
        .iter()
        .enumerate()
        .map(|(i, p)| {
            format!(
                r#"{{"name":"c{i}","command":"run{i}","priority":{p},"argumentComposer":"nameValueSpace",
                  "arguments":[{{"name":"x","type":"string","isRequired":true}},
                               {{"name":"in","type":"file","isRequired":false}}],
                  "outputs":[{{"name":"out","type":"file","value":"$x.out"}}]}}"#
            )
        })
        .collect();
    let json = format!(
        r#"{{"name":"{name}","version":"1","setup":[],"requiredMemory":{memory},"commands":[{}]}}"#,
        commands.join(",")
    );
    ToolDescriptor::from_json(name, json.as_bytes()).unwrap()
}

/// In-memory repository of tools `(name, requiredMemory, command priorities)`;
/// command `c{i}` takes `x` and an optional `in`, and writes `$x.out`.
pub fn synthetic_repo(tools: &[(String, u64, Vec<i64>)]) -> RepositoryHandle {
    let mut provider = MemoryProvider::default();
    for (name, memory, priorities) in tools {
        provider.insert(
            synthetic_descriptor(name, *memory, priorities),
            vec![ToolConfigurator {
                name: "Cfg".into(),
                builder: "Docker".into(),
                uri: format!("img/{name}"),
                setup: vec![],
            }],
        );
    }
    RepositoryHandle::with_provider(RepositoryRef::local("<memory>"), Arc::new(provider))
}
