//! Brute-force references for small graphs.

use pipekit::planner::ExecutionGraph;

/// Every topological order of `graph`, by exhaustive search. Meant for
/// graphs of at most 8 nodes.
pub fn all_topological_orders(graph: &ExecutionGraph) -> Vec<Vec<usize>> {
    let n = graph.nodes.len();
    assert!(n <= 8, "brute force is limited to 8 nodes");
    let mut preds = vec![0u16; n];
    for e in &graph.edges {
        preds[e.consumer] |= 1 << e.producer;
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn go(
        n: usize,
        preds: &[u16],
        placed: u16,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for v in 0..n {
            if placed & (1 << v) == 0 && preds[v] & !placed == 0 {
                current.push(v);
                go(n, preds, placed | (1 << v), current, out);
                current.pop();
            }
        }
    }
    go(n, &preds, 0, &mut current, &mut out);
    out
}

/// The order the documented tie-break should produce: among all valid
/// orders, the lexicographically smallest when each node is keyed by
/// (higher priority first, then lower instance index).
pub fn expected_order(graph: &ExecutionGraph) -> Option<Vec<usize>> {
    let key = |v: usize| (-graph.nodes[v].priority, v);
    all_topological_orders(graph)
        .into_iter()
        .min_by(|a, b| a.iter().map(|&v| key(v)).cmp(b.iter().map(|&v| key(v))))
}
