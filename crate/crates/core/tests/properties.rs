mod common;

use common::grammar::{ast, mutate, mutation};
use pipekit::dsl::{parse, serialize, validate};
use pipekit::planner::{
    build_graph, compute_resources, plan_pipeline, topological_order, EdgeOrigin, ExecutionGraph,
    GraphEdge, GraphNode, PlanError, ResourceOverrides,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn parse_serialize_round_trip(ast in ast()) {
        let text = serialize(&ast);
        let parsed = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &ast);
        prop_assert_eq!(serialize(&parsed), text);
    }

    #[test]
    fn grammar_violations_are_located(ast in ast(), m in mutation()) {
        let text = mutate(&serialize(&ast), &m);
        match parse(&text) {
            Ok(_) => prop_assert!(false, "mutation {:?} parsed:\n{}", m, text),
            Err(e) => prop_assert!(e.points_into(&text), "{} does not point into:\n{}", e, text),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn memory_is_the_largest_requirement(
        memories in prop::collection::vec(1u64..100_000, 1..8),
        mask in 1u32..256,
        override_gib in prop::option::of(1u64..64),
    ) {
        let tools: Vec<(String, u64, Vec<i64>)> =
            memories.iter().enumerate().map(|(i, &m)| (format!("T{i}"), m, vec![1])).collect();
        let chosen: Vec<usize> = (0..tools.len()).filter(|i| mask & (1 << i) != 0).collect();
        prop_assume!(!chosen.is_empty());
        let mut text = String::from("Pipeline \"Local\" \"<memory>\" {\n");
        for &i in &chosen {
            text.push_str(&format!("tool \"T{i}\" \"Cfg\" {{ command \"c0\" {{ argument \"x\" \"v\" }} }}\n"));
        }
        text.push_str("}\n");
        let repo = common::synthetic_repo(&tools);
        let vp = validate(&parse(&text).unwrap(), &repo).unwrap();

        let mut oracle = 0;
        for &i in &chosen {
            if memories[i] > oracle {
                oracle = memories[i];
            }
        }
        let (config, warnings) = compute_resources(&vp, ResourceOverrides::default(), "in", "out");
        prop_assert_eq!(config.memory_mib, oracle);
        prop_assert!(warnings.is_empty());

        if let Some(g) = override_gib {
            let overrides = ResourceOverrides::from_gib(g.try_into().ok(), None);
            let (config, warnings) = compute_resources(&vp, overrides, "in", "out");
            prop_assert_eq!(config.memory_mib, g * 1024);
            prop_assert_eq!(warnings.len(), usize::from(g * 1024 < oracle));
        }
    }
}

fn arbitrary_graph() -> impl Strategy<Value = ExecutionGraph> {
    (1usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(-2i64..3, n),
            prop::collection::vec((0..n, 0..n), 0..(n * 2)),
        )
            .prop_map(move |(priorities, pairs)| ExecutionGraph {
                nodes: priorities
                    .iter()
                    .enumerate()
                    .map(|(i, &priority)| GraphNode {
                        instance_index: i,
                        tool_name: "T".into(),
                        command_name: format!("c{i}"),
                        priority,
                    })
                    .collect(),
                edges: pairs
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(producer, consumer)| GraphEdge {
                        producer,
                        consumer,
                        origin: EdgeOrigin::SameToolOrder,
                    })
                    .collect(),
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn order_matches_brute_force(graph in arbitrary_graph()) {
        let all = common::oracle::all_topological_orders(&graph);
        match topological_order(&graph) {
            Ok(order) => {
                prop_assert!(all.contains(&order.0));
                prop_assert!(order.is_topological_for(&graph));
                prop_assert_eq!(Some(order.0), common::oracle::expected_order(&graph));
            }
            Err(PlanError::CycleDetected(_)) => prop_assert!(all.is_empty()),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }
}

/// A pipeline over tools T0..T2 whose instance `i` runs command `c{i}` of
/// tool `tools[i]`, optionally chaining `in` from an earlier instance.
fn chained_pipeline(tools: &[usize], links: &[Option<usize>]) -> String {
    let mut text = String::from("Pipeline \"Local\" \"<memory>\" {\n");
    let mut i = 0;
    while i < tools.len() {
        let t = tools[i];
        text.push_str(&format!("  tool \"T{t}\" \"Cfg\" {{\n"));
        while i < tools.len() && tools[i] == t {
            text.push_str(&format!(
                "    command \"c{i}\" {{\n      argument \"x\" \"f{i}\"\n"
            ));
            if let Some(j) = links[i].filter(|_| i > 0).map(|j| j % i) {
                text.push_str(&format!(
                    "      chain \"in\" \"T{}\" \"c{j}\" \"out\"\n",
                    tools[j]
                ));
            }
            text.push_str("    }\n");
            i += 1;
        }
        text.push_str("  }\n");
    }
    text.push_str("}\n");
    text
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chained_producers_run_first(
        tools in prop::collection::vec(0usize..3, 1..8),
        links in prop::collection::vec(prop::option::of(any::<usize>()), 8),
        priorities in prop::collection::vec(-3i64..4, 8),
    ) {
        let defs: Vec<(String, u64, Vec<i64>)> =
            (0..3).map(|t| (format!("T{t}"), 100, priorities.clone())).collect();
        let repo = common::synthetic_repo(&defs);
        let text = chained_pipeline(&tools, &links);
        let vp = validate(&parse(&text).unwrap(), &repo).unwrap();
        let planned = plan_pipeline(&vp, ResourceOverrides::default(), "in", "out").unwrap();
        let position: Vec<usize> = {
            let mut p = vec![0; tools.len()];
            for (pos, &v) in planned.order.0.iter().enumerate() {
                p[v] = pos;
            }
            p
        };
        let graph = build_graph(&vp).unwrap();
        let chain_edges: Vec<_> = graph
            .edges
            .iter()
            .filter(|e| matches!(e.origin, EdgeOrigin::Chain { .. }))
            .collect();
        let expected_chains = (1..tools.len()).filter(|&i| links[i].is_some()).count();
        prop_assert_eq!(chain_edges.len(), expected_chains);
        for e in chain_edges {
            prop_assert_eq!(e.producer, links[e.consumer].unwrap() % e.consumer);
            prop_assert!(position[e.producer] < position[e.consumer]);
        }
        // the chained argument is the producer's output path
        for step in &planned.plan.steps {
            for input in &step.staged_inputs {
                prop_assert_eq!(&input.path, &format!("f{}.out", input.producer));
            }
        }

        // same input, same plan
        let again = plan_pipeline(&vp, ResourceOverrides::default(), "in", "out").unwrap();
        prop_assert_eq!(again.plan.to_json(), planned.plan.to_json());
        prop_assert_eq!(again.graph.to_dot(), planned.graph.to_dot());
    }
}
