//! The embedding quasi-order on data trees and its graph-side machinery:
//! induced-subgraph tests, depth-first tree decompositions, and the bounded
//! label encoding of decompositions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, LabeledGraph, VertexLabel};
use crate::tree::{DataTree, DataValue, NodeId, NodeLabel};

/// Witness for `t1` embedding into `t2`: injective, root-preserving,
/// parent-child preserved in both directions, tags equal, and the equality
/// pattern of data values preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    map: Vec<NodeId>,
}

impl Embedding {
    pub fn get(&self, n: NodeId) -> NodeId {
        self.map[n.index()]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.map
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), *n))
    }

    /// Check the witness against both trees (used by tests).
    pub fn verify(&self, t1: &DataTree, t2: &DataTree) -> bool {
        if self.map.len() != t1.len() {
            return false;
        }
        let mut seen = vec![false; t2.len()];
        for (a, b) in self.pairs() {
            if seen[b.index()] {
                return false;
            }
            seen[b.index()] = true;
            match t1.parent(a) {
                None => {
                    if b != DataTree::ROOT {
                        return false;
                    }
                }
                Some(p) => {
                    if t2.parent(b) != Some(self.get(p)) {
                        return false;
                    }
                }
            }
            match (t1.label(a), t2.label(b)) {
                (NodeLabel::Tag(x), NodeLabel::Tag(y)) if x == y => {}
                (NodeLabel::Data(_), NodeLabel::Data(_)) => {}
                _ => return false,
            }
        }
        // equality pattern
        let leaves = t1.data_leaves();
        for &x in &leaves {
            for &y in &leaves {
                let vx1 = t1.label(x).data().unwrap();
                let vy1 = t1.label(y).data().unwrap();
                let vx2 = t2.label(self.get(x)).data().unwrap();
                let vy2 = t2.label(self.get(y)).data().unwrap();
                if (vx1 == vy1) != (vx2 == vy2) {
                    return false;
                }
            }
        }
        true
    }
}

/// Decide `t1 ⪯ t2` by backtracking over node maps, maintaining an
/// injective partial map on data values for the (in)equality clause.
/// Returns some witness embedding, or `None`.
pub fn embeds(t1: &DataTree, t2: &DataTree) -> Option<Embedding> {
    if t1.len() > t2.len() {
        return None;
    }

    // Assignments in preorder; because parents precede children, a node's
    // image is constrained to the unused children of its parent's image.
    let mut map: Vec<Option<NodeId>> = vec![None; t1.len()];
    let mut used = vec![false; t2.len()];
    let mut value_map: BTreeMap<DataValue, DataValue> = BTreeMap::new();
    let mut value_used: BTreeMap<DataValue, u32> = BTreeMap::new();

    fn assign(
        t1: &DataTree,
        t2: &DataTree,
        idx: usize,
        map: &mut Vec<Option<NodeId>>,
        used: &mut Vec<bool>,
        value_map: &mut BTreeMap<DataValue, DataValue>,
        value_used: &mut BTreeMap<DataValue, u32>,
    ) -> bool {
        if idx == t1.len() {
            return true;
        }
        let n = NodeId(idx as u32);
        let candidates: Vec<NodeId> = match t1.parent(n) {
            None => vec![DataTree::ROOT],
            Some(p) => t2.children(map[p.index()].unwrap()).to_vec(),
        };
        for c in candidates {
            if used[c.index()] {
                continue;
            }
            let mut added_value: Option<(DataValue, DataValue)> = None;
            match (t1.label(n), t2.label(c)) {
                (NodeLabel::Tag(x), NodeLabel::Tag(y)) => {
                    if x != y {
                        continue;
                    }
                }
                (NodeLabel::Data(v1), NodeLabel::Data(v2)) => match value_map.get(v1) {
                    Some(mapped) => {
                        if mapped != v2 {
                            continue;
                        }
                    }
                    None => {
                        // injectivity on values: v2 must not be an image yet
                        if value_used.get(v2).copied().unwrap_or(0) > 0 {
                            continue;
                        }
                        value_map.insert(*v1, *v2);
                        value_used.insert(*v2, 1);
                        added_value = Some((*v1, *v2));
                    }
                },
                _ => continue,
            }
            map[idx] = Some(c);
            used[c.index()] = true;
            if assign(t1, t2, idx + 1, map, used, value_map, value_used) {
                return true;
            }
            used[c.index()] = false;
            map[idx] = None;
            if let Some((v1, v2)) = added_value {
                value_map.remove(&v1);
                value_used.remove(&v2);
            }
        }
        false
    }

    if assign(
        t1,
        t2,
        0,
        &mut map,
        &mut used,
        &mut value_map,
        &mut value_used,
    ) {
        Some(Embedding {
            map: map.into_iter().map(|m| m.unwrap()).collect(),
        })
    } else {
        None
    }
}

/// Equivalence under mutual embedding. For equal sizes a single embedding is
/// a size-preserving isomorphism respecting the data pattern, so the
/// converse embedding exists automatically.
pub fn equivalent(t1: &DataTree, t2: &DataTree) -> bool {
    t1.len() == t2.len() && embeds(t1, t2).is_some()
}

/// `g1 ⊑ g2`: injective, label-preserving, edges preserved in both
/// directions. Exhaustive backtracking with adjacency pruning.
pub fn induced_subgraph(g1: &LabeledGraph, g2: &LabeledGraph) -> bool {
    let n1 = g1.vertex_count();
    let n2 = g2.vertex_count();
    if n1 > n2 {
        return false;
    }
    if n1 == 0 {
        return true;
    }
    let mut map: Vec<Option<usize>> = vec![None; n1];
    let mut used = vec![false; n2];

    fn assign(
        g1: &LabeledGraph,
        g2: &LabeledGraph,
        v: usize,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        if v == g1.vertex_count() {
            return true;
        }
        'cand: for w in 0..g2.vertex_count() {
            if used[w] || g1.label(v) != g2.label(w) {
                continue;
            }
            if g1.degree(v) > g2.degree(w) {
                continue;
            }
            // edge-iff against all previously mapped vertices
            for prev in 0..v {
                let pw = map[prev].unwrap();
                if g1.has_edge(v, prev) != g2.has_edge(w, pw) {
                    continue 'cand;
                }
            }
            map[v] = Some(w);
            used[w] = true;
            if assign(g1, g2, v + 1, map, used) {
                return true;
            }
            used[w] = false;
            map[v] = None;
        }
        false
    }

    assign(g1, g2, 0, &mut map, &mut used)
}

// ---------------------------------------------------------------------------
// Tree decompositions
// ---------------------------------------------------------------------------

/// An ordered tree decomposition: every bag is a sequence of exactly `k+1`
/// graph vertices (repetitions allowed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    /// parent[i] is the decomposition-tree parent of node i; root is node 0.
    parents: Vec<Option<usize>>,
    bags: Vec<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("DFS tree depth {depth} exceeds the path bound {bound}")]
    PathBound { depth: usize, bound: usize },
    #[error("bag length {got} does not match K+1 = {want}")]
    BagLength { got: usize, want: usize },
}

impl TreeDecomposition {
    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    pub fn parent(&self, n: usize) -> Option<usize> {
        self.parents[n]
    }

    pub fn bag(&self, n: usize) -> &[usize] {
        &self.bags[n]
    }

    pub fn children(&self, n: usize) -> Vec<usize> {
        (0..self.bags.len())
            .filter(|i| self.parents[*i] == Some(n))
            .collect()
    }

    /// Width: maximum number of distinct vertices in a bag, minus one.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(|b| {
                let mut d = b.clone();
                d.sort_unstable();
                d.dedup();
                d.len() - 1
            })
            .max()
            .unwrap_or(0)
    }

    /// Depth of the decomposition tree (root at 0).
    pub fn depth(&self) -> usize {
        (0..self.bags.len())
            .map(|mut n| {
                let mut d = 0;
                while let Some(p) = self.parents[n] {
                    d += 1;
                    n = p;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }

    /// Validity against a graph: every edge inside some bag, and for each
    /// vertex the set of bags holding it is connected in the tree.
    pub fn is_valid_for(&self, g: &LabeledGraph) -> bool {
        for v in 0..g.vertex_count() {
            for &w in g.neighbors(v) {
                if w < v {
                    continue;
                }
                let covered = self
                    .bags
                    .iter()
                    .any(|b| b.contains(&v) && b.contains(&w));
                if !covered {
                    return false;
                }
            }
        }
        // connectivity of supports
        for v in 0..g.vertex_count() {
            let holders: Vec<usize> = (0..self.bags.len())
                .filter(|i| self.bags[*i].contains(&v))
                .collect();
            if holders.is_empty() {
                return false; // every vertex must appear somewhere
            }
            // walk up from each holder; within the holder-induced subgraph
            // there must be exactly one root.
            let mut roots = 0;
            for &h in &holders {
                match self.parents[h] {
                    Some(p) if holders.contains(&p) => {}
                    _ => roots += 1,
                }
            }
            if roots != 1 {
                return false;
            }
        }
        true
    }
}

/// Depth-first-search decomposition: DFS tree from vertex 0 (the tree
/// root's graph vertex for tree-derived graphs, neighbors in vertex order);
/// the bag of `v` is `v` plus its DFS ancestors, padded by repeating `v` to
/// length exactly `k+1`.
pub fn dfs_decomposition(
    g: &LabeledGraph,
    k: usize,
) -> Result<TreeDecomposition, DecompositionError> {
    if !g.is_connected() {
        return Err(DecompositionError::Graph(GraphError::Disconnected));
    }
    let n = g.vertex_count();
    // DFS from vertex 0, neighbors in ascending order.
    let mut dfs_parent: Vec<Option<usize>> = vec![None; n];
    let mut order: Vec<usize> = Vec::with_capacity(n); // DFS preorder of vertices
    let mut seen = vec![false; n];
    fn dfs(
        g: &LabeledGraph,
        v: usize,
        seen: &mut [bool],
        dfs_parent: &mut [Option<usize>],
        order: &mut Vec<usize>,
    ) {
        seen[v] = true;
        order.push(v);
        let mut ns: Vec<usize> = g.neighbors(v).to_vec();
        ns.sort_unstable();
        for w in ns {
            if !seen[w] {
                dfs_parent[w] = Some(v);
                dfs(g, w, seen, dfs_parent, order);
            }
        }
    }
    dfs(g, 0, &mut seen, &mut dfs_parent, &mut order);

    // decomposition node i corresponds to vertex order[i]
    let index_of: BTreeMap<usize, usize> = order.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut parents = Vec::with_capacity(n);
    let mut bags = Vec::with_capacity(n);
    for &v in &order {
        parents.push(dfs_parent[v].map(|p| index_of[&p]));
        let mut ancestry = vec![v];
        let mut cur = dfs_parent[v];
        while let Some(p) = cur {
            ancestry.push(p);
            cur = dfs_parent[p];
        }
        if ancestry.len() > k + 1 {
            return Err(DecompositionError::PathBound {
                depth: ancestry.len() - 1,
                bound: k,
            });
        }
        ancestry.reverse(); // root ... v
        while ancestry.len() < k + 1 {
            ancestry.push(v);
        }
        bags.push(ancestry);
    }
    Ok(TreeDecomposition { parents, bags })
}

// ---------------------------------------------------------------------------
// Bounded-alphabet encoding of decompositions
// ---------------------------------------------------------------------------

/// Label of one encoded node: the bag's vertex-label word plus the three
/// position relations (intra-bag equality, intra-bag edges, parent overlap).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EncodedLabel {
    pub word: Vec<VertexLabel>,
    pub eq_pairs: Vec<(u16, u16)>,
    pub edge_pairs: Vec<(u16, u16)>,
    pub parent_overlap: Vec<(u16, u16)>,
}

/// A labeled unordered tree over the encoding alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedTree {
    parents: Vec<Option<usize>>,
    labels: Vec<EncodedLabel>,
}

impl EncodedTree {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, n: usize) -> &EncodedLabel {
        &self.labels[n]
    }

    pub fn parent(&self, n: usize) -> Option<usize> {
        self.parents[n]
    }

    pub fn children(&self, n: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|i| self.parents[*i] == Some(n))
            .collect()
    }

    pub fn depth(&self) -> usize {
        (0..self.labels.len())
            .map(|mut n| {
                let mut d = 0;
                while let Some(p) = self.parents[n] {
                    d += 1;
                    n = p;
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}

/// Encode a decomposition of `g`: each node labeled with its bag's label
/// word and the three relations; the parent-overlap relation is empty
/// exactly at the root.
pub fn encode(
    d: &TreeDecomposition,
    g: &LabeledGraph,
) -> Result<EncodedTree, DecompositionError> {
    let k_plus_1 = d.bag(0).len();
    let mut labels = Vec::with_capacity(d.node_count());
    for n in 0..d.node_count() {
        let bag = d.bag(n);
        if bag.len() != k_plus_1 {
            return Err(DecompositionError::BagLength {
                got: bag.len(),
                want: k_plus_1,
            });
        }
        let word = bag.iter().map(|v| g.label(*v).clone()).collect();
        let mut eq_pairs = Vec::new();
        let mut edge_pairs = Vec::new();
        for i in 0..bag.len() {
            for j in 0..bag.len() {
                if bag[i] == bag[j] {
                    eq_pairs.push((i as u16, j as u16));
                }
                if g.has_edge(bag[i], bag[j]) {
                    edge_pairs.push((i as u16, j as u16));
                }
            }
        }
        let mut parent_overlap = Vec::new();
        if let Some(p) = d.parent(n) {
            let pbag = d.bag(p);
            for i in 0..pbag.len() {
                for j in 0..bag.len() {
                    if pbag[i] == bag[j] {
                        parent_overlap.push((i as u16, j as u16));
                    }
                }
            }
        }
        labels.push(EncodedLabel {
            word,
            eq_pairs,
            edge_pairs,
            parent_overlap,
        });
    }
    Ok(EncodedTree {
        parents: (0..d.node_count()).map(|n| d.parent(n)).collect(),
        labels,
    })
}

/// Labeled unordered-tree embedding: injective, root-preserving, labels
/// equal, parent-child preserved. Exhaustive search.
pub fn label_tree_embeds(e1: &EncodedTree, e2: &EncodedTree) -> bool {
    if e1.node_count() > e2.node_count() {
        return false;
    }

    fn assign(
        e1: &EncodedTree,
        e2: &EncodedTree,
        nodes1: &[usize],
        idx: usize,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        if idx == nodes1.len() {
            return true;
        }
        let n = nodes1[idx];
        let candidates: Vec<usize> = match e1.parent(n) {
            None => vec![0],
            Some(p) => e2.children(map[p].unwrap()),
        };
        for c in candidates {
            if used[c] || e1.label(n) != e2.label(c) {
                continue;
            }
            map[n] = Some(c);
            used[c] = true;
            if assign(e1, e2, nodes1, idx + 1, map, used) {
                return true;
            }
            used[c] = false;
            map[n] = None;
        }
        false
    }

    // preorder of e1 (parents precede children by construction of encode)
    let nodes1: Vec<usize> = (0..e1.node_count()).collect();
    let mut map = vec![None; e1.node_count()];
    let mut used = vec![false; e2.node_count()];
    assign(e1, e2, &nodes1, 0, &mut map, &mut used)
}

/// The simple-path length bound implied by a decomposition of width <= A
/// and depth <= B: `(A+2)^B + sum_{1<=i<=B} (A+2)^i` (saturating).
pub fn path_bound_from_decomposition(width: u64, depth: u64) -> u128 {
    let a2 = width as u128 + 2;
    let mut pow = 1u128;
    let mut sum = 0u128;
    for _ in 0..depth {
        pow = pow.saturating_mul(a2);
        sum = sum.saturating_add(pow);
    }
    pow.saturating_add(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_of;

    #[test]
    fn every_tree_embeds_into_itself() {
        let t = DataTree::node(
            "a",
            vec![DataTree::node("b", vec![DataTree::data_leaf(1)]), DataTree::tag_leaf("c")],
        );
        let e = embeds(&t, &t).expect("identity embedding");
        assert!(e.verify(&t, &t));
        assert!(equivalent(&t, &t));
    }

    #[test]
    fn equality_pattern_blocks_embedding() {
        // [a](@1,@1) does not embed into [a](@1,@2)
        let t1 = DataTree::node("a", vec![DataTree::data_leaf(1), DataTree::data_leaf(1)]);
        let t2 = DataTree::node("a", vec![DataTree::data_leaf(1), DataTree::data_leaf(2)]);
        assert!(embeds(&t1, &t2).is_none());
        // and inequality is preserved too: [a](@1,@2) /⪯ [a](@1,@1)
        assert!(embeds(&t2, &t1).is_none());
        // but renaming is fine
        let t3 = DataTree::node("a", vec![DataTree::data_leaf(9), DataTree::data_leaf(9)]);
        assert!(embeds(&t1, &t3).is_some());
        assert!(equivalent(&t1, &t3));
    }

    #[test]
    fn bigger_tree_embeds_smaller_does_not() {
        let small = DataTree::node("a", vec![DataTree::tag_leaf("b")]);
        let big = DataTree::node(
            "a",
            vec![DataTree::tag_leaf("b"), DataTree::tag_leaf("c")],
        );
        assert!(embeds(&small, &big).is_some());
        assert!(embeds(&big, &small).is_none());
        assert!(!equivalent(&small, &big));
    }

    #[test]
    fn graph_reflexive_and_triangle_vs_path() {
        let t = DataTree::node("a", vec![DataTree::data_leaf(1)]);
        let g = graph_of(&t, 5).unwrap();
        assert!(induced_subgraph(&g, &g));

        // triangle is not an induced subgraph of a path (same labels)
        let mut tri = LabeledGraph::new(vec![VertexLabel::Value; 3]);
        tri.add_edge(0, 1);
        tri.add_edge(1, 2);
        tri.add_edge(0, 2);
        let mut path = LabeledGraph::new(vec![VertexLabel::Value; 3]);
        path.add_edge(0, 1);
        path.add_edge(1, 2);
        assert!(!induced_subgraph(&tri, &path));
        // and the path is not induced in the triangle (missing edge must stay missing)
        assert!(!induced_subgraph(&path, &tri));
    }

    #[test]
    fn dfs_decomposition_single_vertex() {
        let g = graph_of(&DataTree::tag_leaf("a"), 0).unwrap();
        let d = dfs_decomposition(&g, 0).unwrap();
        assert_eq!(d.node_count(), 1);
        assert_eq!(d.bag(0), &[0]);
        assert!(d.is_valid_for(&g));
    }

    #[test]
    fn dfs_decomposition_path_three() {
        let t = DataTree::node("a", vec![DataTree::data_leaf(5)]);
        let g = graph_of(&t, 1).unwrap(); // path of 3
        let d = dfs_decomposition(&g, 2).unwrap();
        assert_eq!(d.node_count(), 3);
        assert_eq!(d.depth(), 2);
        assert!(d.width() <= 2);
        assert!(d.is_valid_for(&g));
        assert_eq!(d.bag(0), &[0, 0, 0]);
        assert_eq!(d.bag(1), &[0, 1, 1]);
        assert_eq!(d.bag(2), &[0, 1, 2]);
    }

    #[test]
    fn dfs_decomposition_respects_bound() {
        let t = DataTree::node("a", vec![DataTree::node("b", vec![DataTree::data_leaf(5)])]);
        let g = graph_of(&t, 2).unwrap(); // path of 4
        assert!(dfs_decomposition(&g, 2).is_err());
        assert!(dfs_decomposition(&g, 3).is_ok());
    }

    #[test]
    fn encode_root_relations() {
        let g = graph_of(&DataTree::tag_leaf("a"), 0).unwrap();
        let d = dfs_decomposition(&g, 2).unwrap(); // bag [0,0,0]
        let e = encode(&d, &g).unwrap();
        let l = e.label(0);
        assert_eq!(l.eq_pairs.len(), 9); // all pairs equal
        assert!(l.edge_pairs.is_empty());
        assert!(l.parent_overlap.is_empty()); // empty exactly at the root
    }

    #[test]
    fn encode_of_three_path_hand_checked() {
        let t = DataTree::node("a", vec![DataTree::data_leaf(5)]);
        let g = graph_of(&t, 1).unwrap();
        let d = dfs_decomposition(&g, 2).unwrap();
        let e = encode(&d, &g).unwrap();
        // node 1 has bag [0,1,1] under parent bag [0,0,0]
        let l1 = e.label(1);
        assert_eq!(
            l1.word,
            vec![
                g.label(0).clone(),
                g.label(1).clone(),
                g.label(1).clone()
            ]
        );
        // eq: (0,0),(1,1),(1,2),(2,1),(2,2)
        assert_eq!(l1.eq_pairs.len(), 5);
        // edges: {0,1} present in both orders (and via the repeated position 2)
        assert!(l1.edge_pairs.contains(&(0, 1)) && l1.edge_pairs.contains(&(1, 0)));
        // parent overlap: parent positions all hold vertex 0, child position 0 holds 0
        assert_eq!(l1.parent_overlap, vec![(0, 0), (1, 0), (2, 0)]);
        assert!(e.label(0).parent_overlap.is_empty());
    }

    #[test]
    fn encoded_tree_embeds_itself_not_deeper() {
        let t = DataTree::node("a", vec![DataTree::data_leaf(5)]);
        let g = graph_of(&t, 1).unwrap();
        let d = dfs_decomposition(&g, 2).unwrap();
        let e = encode(&d, &g).unwrap();
        assert!(label_tree_embeds(&e, &e));

        let t2 = DataTree::tag_leaf("a");
        let g2 = graph_of(&t2, 1).unwrap();
        let e2 = encode(&dfs_decomposition(&g2, 2).unwrap(), &g2).unwrap();
        // deeper tree never embeds into shallower
        assert!(!label_tree_embeds(&e, &e2));
    }

    #[test]
    fn path_bound_formula() {
        // A=0, B=1: 2^1 + 2 = 4
        assert_eq!(path_bound_from_decomposition(0, 1), 4);
        // A=1, B=2: 9 + 3 + 9 = 21
        assert_eq!(path_bound_from_decomposition(1, 2), 21);
        assert_eq!(path_bound_from_decomposition(0, 0), 1);
    }
}
