//! Shared builders for the benchmarks: deterministic graphs and problems
//! of configurable size.

use got_core::graph::{AndPath, NodeId, NodeKind, Provenance, ThoughtGraph, ThoughtNode};

/// Layered AND-graph: `layers` ranks of `width` nodes over a row of
/// conditions; each node depends on two nodes of the rank below.
pub fn layered_graph(layers: usize, width: usize) -> ThoughtGraph {
    let mut graph = ThoughtGraph::new("layered target");
    let mut below: Vec<NodeId> = Vec::new();
    for i in 0..width {
        let node = ThoughtNode::new(&format!("base {i}"), NodeKind::Condition, Provenance::Given);
        below.push(node.id.clone());
        graph.add_node(node).unwrap();
    }
    for layer in 0..layers {
        let mut row = Vec::new();
        for i in 0..width {
            let node = ThoughtNode::new(
                &format!("node {layer}/{i}"),
                NodeKind::Intermediate,
                Provenance::Generated,
            );
            let id = node.id.clone();
            graph.add_node(node).unwrap();
            let prereqs = vec![below[i].clone(), below[(i + 1) % width].clone()];
            graph
                .add_path(&id, AndPath::new(prereqs, format!("combine {layer}/{i}")))
                .unwrap();
            row.push(id);
        }
        below = row;
    }
    let target = graph.target().clone();
    graph
        .add_path(&target, AndPath::new(vec![below[0].clone()], "finish"))
        .unwrap();
    graph
}
