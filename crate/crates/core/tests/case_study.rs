mod common;

use pipekit::planner::{plan_pipeline, EdgeOrigin, ResourceOverrides};
use pipekit::repository::FetchKind;

const ORDER: [&str; 5] = ["trimmomatic", "velveth", "velvetg", "makeblastdb", "blastx"];

#[test]
fn parses_and_validates_against_fixture_repository() {
    let loaded = common::case_study();
    let ast = loaded.ast();
    assert_eq!(ast.tools.len(), 3);
    assert_eq!(ast.command_count(), 5);
    assert_eq!(ast.chain_count(), 3);
    assert_eq!(loaded.validated.instances.len(), 5);
    // one descriptor and one configurator per tool, nothing else
    let log = loaded.repository.fetch_log();
    assert_eq!(
        log.iter()
            .filter(|r| r.operation == FetchKind::Descriptor)
            .count(),
        3
    );
    assert_eq!(
        log.iter()
            .filter(|r| r.operation == FetchKind::Configurator)
            .count(),
        3
    );
    assert!(log.iter().all(|r| r.operation != FetchKind::Artifact));
}

#[test]
fn order_and_edges() {
    let loaded = common::case_study();
    let planned =
        plan_pipeline(&loaded.validated, ResourceOverrides::default(), "in", "out").unwrap();
    let names: Vec<&str> = planned
        .plan
        .steps
        .iter()
        .map(|s| s.command_name.as_str())
        .collect();
    assert_eq!(names, ORDER);
    assert_eq!(planned.order.0, vec![0, 1, 2, 3, 4]);

    let mut chains: Vec<(usize, usize)> = planned
        .graph
        .edges
        .iter()
        .filter(|e| matches!(e.origin, EdgeOrigin::Chain { .. }))
        .map(|e| (e.producer, e.consumer))
        .collect();
    chains.sort();
    assert_eq!(chains, vec![(0, 1), (2, 4), (3, 4)]);
    let mut same_tool: Vec<(usize, usize)> = planned
        .graph
        .edges
        .iter()
        .filter(|e| e.origin == EdgeOrigin::SameToolOrder)
        .map(|e| (e.producer, e.consumer))
        .collect();
    same_tool.sort();
    assert_eq!(same_tool, vec![(1, 2), (3, 4)]);
}

#[test]
fn memory_defaults_to_largest_requirement() {
    let loaded = common::case_study();
    let planned =
        plan_pipeline(&loaded.validated, ResourceOverrides::default(), "in", "out").unwrap();
    assert_eq!(planned.plan.config.memory_mib, 12288);
    assert_eq!(planned.plan.config.cpu_cores, 1);

    let overrides = ResourceOverrides::from_gib(4.try_into().ok(), 2.try_into().ok());
    let planned = plan_pipeline(&loaded.validated, overrides, "in", "out").unwrap();
    assert_eq!(planned.plan.config.memory_mib, 4096);
    assert_eq!(planned.plan.config.cpu_cores, 2);
    assert_eq!(
        planned.warnings.len(),
        1,
        "4 GiB is below Velvet's 12288 MiB"
    );
}

#[test]
fn composed_command_lines() {
    let loaded = common::case_study();
    let plan = plan_pipeline(&loaded.validated, ResourceOverrides::default(), "in", "out")
        .unwrap()
        .plan;
    assert_eq!(
        plan.steps[1].composed_argv,
        [
            "velveth",
            "velvetdir",
            "21",
            "-fastq",
            "ERR406040.filtered.fastq"
        ]
    );
    assert_eq!(
        plan.steps[4].composed_argv,
        [
            "blastx",
            "-db",
            "allrefs",
            "-query",
            "velvetdir/contigs.fa",
            "-out",
            "blast.out"
        ]
    );
    let terminal: Vec<&str> = plan
        .steps
        .iter()
        .flat_map(|s| {
            s.declared_outputs
                .iter()
                .filter(|o| o.terminal)
                .map(|o| o.path.as_str())
        })
        .collect();
    assert_eq!(
        terminal,
        ["velvetdir/Sequences", "velvetdir/Roadmaps", "blast.out"]
    );
}

#[test]
fn plan_is_deterministic() {
    let a = common::case_study();
    let b = common::case_study();
    let pa = plan_pipeline(&a.validated, ResourceOverrides::default(), "in", "out").unwrap();
    let pb = plan_pipeline(&b.validated, ResourceOverrides::default(), "in", "out").unwrap();
    assert_eq!(pa.plan.to_json(), pb.plan.to_json());
    assert_eq!(pa.graph.to_dot(), pb.graph.to_dot());
}
