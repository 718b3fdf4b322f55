//! Labeled undirected graph view of a data tree: tree nodes plus one vertex
//! per distinct data value, with leaves linked to their value vertex.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{DataTree, DataValue, NodeLabel, Tag};

/// Vertex labels: `(tag, depth)` for tag nodes, `(#, depth)` for data
/// leaves, `$` for data-value vertices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VertexLabel {
    Tag(Tag, u64),
    DataLeaf(u64),
    Value,
}

impl std::fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexLabel::Tag(t, i) => write!(f, "({t},{i})"),
            VertexLabel::DataLeaf(i) => write!(f, "(#,{i})"),
            VertexLabel::Value => write!(f, "$"),
        }
    }
}

/// Simple undirected labeled graph: no self-loops, no multi-edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledGraph {
    labels: Vec<VertexLabel>,
    adj: Vec<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("tree depth {depth} exceeds the declared bound {bound}")]
    DepthBound { depth: u64, bound: u64 },
    #[error("graph is disconnected")]
    Disconnected,
}

impl LabeledGraph {
    pub fn new(labels: Vec<VertexLabel>) -> Self {
        let n = labels.len();
        LabeledGraph {
            labels,
            adj: vec![Vec::new(); n],
        }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert_ne!(a, b, "no self-loops");
        if !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|n| n.len()).sum::<usize>() / 2
    }

    pub fn label(&self, v: usize) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn is_connected(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.labels.len()
    }
}

/// Graph representation of a data tree. Vertices 0..len are the tree nodes
/// (same numbering), followed by one vertex per distinct data value in value
/// order. Fails when the tree is deeper than `depth_bound` (the label
/// alphabet is `(Σ∪{#}) × [B+1]` for the declared B).
pub fn graph_of(t: &DataTree, depth_bound: u64) -> Result<LabeledGraph, GraphError> {
    let depth = t.depth();
    if depth > depth_bound {
        return Err(GraphError::DepthBound {
            depth,
            bound: depth_bound,
        });
    }
    let mut labels = Vec::with_capacity(t.len());
    for n in t.node_ids() {
        let d = t.node_depth(n);
        labels.push(match t.label(n) {
            NodeLabel::Tag(tag) => VertexLabel::Tag(tag.clone(), d),
            NodeLabel::Data(_) => VertexLabel::DataLeaf(d),
        });
    }
    let values: Vec<DataValue> = t.data_values().into_iter().collect();
    let value_vertex: BTreeMap<DataValue, usize> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, t.len() + i))
        .collect();
    labels.extend(values.iter().map(|_| VertexLabel::Value));

    let mut g = LabeledGraph::new(labels);
    for n in t.node_ids() {
        if let Some(p) = t.parent(n) {
            g.add_edge(p.index(), n.index());
        }
        if let NodeLabel::Data(v) = t.label(n) {
            g.add_edge(n.index(), value_vertex[v]);
        }
    }
    Ok(g)
}

/// Exact length (edge count) of the longest simple path, by exhaustive
/// search from every start vertex. Exponential in the worst case; the value
/// gates correctness so no heuristic shortcut is taken.
pub fn longest_simple_path(g: &LabeledGraph) -> u64 {
    let n = g.vertex_count();
    if n == 0 {
        return 0;
    }
    let mut visited = vec![false; n];
    let mut best = 0u64;
    fn dfs(g: &LabeledGraph, v: usize, len: u64, visited: &mut [bool], best: &mut u64) {
        *best = (*best).max(len);
        visited[v] = true;
        for &w in g.neighbors(v) {
            if !visited[w] {
                dfs(g, w, len + 1, visited, best);
            }
        }
        visited[v] = false;
    }
    for start in 0..n {
        dfs(g, start, 0, &mut visited, &mut best);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_value_merges_into_one_vertex() {
        // root a with two data leaves both holding 7
        let t = DataTree::node(
            "a",
            vec![DataTree::data_leaf(7), DataTree::data_leaf(7)],
        );
        let g = graph_of(&t, 1).unwrap();
        assert_eq!(g.vertex_count(), 4);
        let dollar = (0..4).find(|v| *v >= 3).unwrap();
        assert_eq!(g.label(dollar), &VertexLabel::Value);
        assert_eq!(g.degree(dollar), 2);
    }

    #[test]
    fn single_data_leaf_gives_three_vertex_path() {
        let t = DataTree::node("a", vec![DataTree::data_leaf(5)]);
        let g = graph_of(&t, 1).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.label(0), &VertexLabel::Tag(Tag::new("a"), 0));
        assert_eq!(g.label(1), &VertexLabel::DataLeaf(1));
        assert_eq!(g.label(2), &VertexLabel::Value);
        assert_eq!(longest_simple_path(&g), 2);
    }

    #[test]
    fn depth_bound_is_enforced() {
        let t = DataTree::node("a", vec![DataTree::node("b", vec![DataTree::tag_leaf("c")])]);
        assert!(graph_of(&t, 1).is_err());
        assert!(graph_of(&t, 2).is_ok());
    }

    #[test]
    fn single_vertex_path_is_zero() {
        let g = graph_of(&DataTree::tag_leaf("a"), 0).unwrap();
        assert_eq!(longest_simple_path(&g), 0);
    }

    #[test]
    fn vertex_and_edge_counts_follow_tree() {
        let t = DataTree::node(
            "a",
            vec![
                DataTree::node("b", vec![DataTree::data_leaf(1), DataTree::data_leaf(2)]),
                DataTree::tag_leaf("c"),
            ],
        );
        let g = graph_of(&t, 5).unwrap();
        assert_eq!(g.vertex_count(), t.len() + t.data_values().len());
        assert_eq!(g.edge_count(), (t.len() - 1) + t.data_leaves().len());
    }

    #[test]
    fn longest_path_at_least_depth() {
        let t = DataTree::node("a", vec![DataTree::node("b", vec![DataTree::data_leaf(3)])]);
        let g = graph_of(&t, 5).unwrap();
        assert!(longest_simple_path(&g) >= t.depth());
    }
}
