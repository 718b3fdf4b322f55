//! Unordered data trees: inner nodes carry tags, leaves carry tags or data
//! values drawn from an infinite domain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// A tag from the finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag(String);

impl Tag {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty(), "tag names must be nonempty");
        Tag(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Tag {
    fn from(s: &str) -> Self {
        Tag::new(s)
    }
}

/// Canonical representative of an element of the infinite data domain.
///
/// Only equality between values is ever consulted; there is no ordering or
/// arithmetic in any semantics. The `Ord` impl below exists purely so values
/// can live in sorted containers and print deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataValue(pub u64);

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

/// Node label: a tag or a data value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeLabel {
    Tag(Tag),
    Data(DataValue),
}

impl NodeLabel {
    pub fn tag(&self) -> Option<&Tag> {
        match self {
            NodeLabel::Tag(t) => Some(t),
            NodeLabel::Data(_) => None,
        }
    }

    pub fn data(&self) -> Option<DataValue> {
        match self {
            NodeLabel::Tag(_) => None,
            NodeLabel::Data(d) => Some(*d),
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self, NodeLabel::Data(_))
    }
}

/// Index of a node within one tree's arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
struct NodeSlot {
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    label: NodeLabel,
}

/// A rooted unordered data tree.
///
/// Nodes are stored in preorder: the root is node 0 and every node's id is
/// greater than its parent's. Trees are value-semantic; rewriting always
/// produces a fresh tree. Children are a multiset — the stored order is a
/// representation artifact with no meaning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DataTree {
    nodes: Vec<NodeSlot>,
}

impl DataTree {
    /// Single-node tree.
    pub fn leaf(label: NodeLabel) -> Self {
        DataTree {
            nodes: vec![NodeSlot {
                parent: None,
                children: Vec::new(),
                label,
            }],
        }
    }

    pub fn tag_leaf(tag: impl Into<String>) -> Self {
        Self::leaf(NodeLabel::Tag(Tag::new(tag)))
    }

    pub fn data_leaf(value: u64) -> Self {
        Self::leaf(NodeLabel::Data(DataValue(value)))
    }

    /// Tree with a tag-labeled root over the given subtrees.
    pub fn node(tag: impl Into<String>, children: Vec<DataTree>) -> Self {
        let mut nodes = vec![NodeSlot {
            parent: None,
            children: Vec::new(),
            label: NodeLabel::Tag(Tag::new(tag)),
        }];
        fn copy(src: &DataTree, n: NodeId, parent: NodeId, nodes: &mut Vec<NodeSlot>) {
            let id = NodeId(nodes.len() as u32);
            nodes.push(NodeSlot {
                parent: Some(parent),
                children: Vec::new(),
                label: src.label(n).clone(),
            });
            nodes[parent.index()].children.push(id);
            for &c in src.children(n) {
                copy(src, c, id, nodes);
            }
        }
        for child in &children {
            copy(child, Self::ROOT, Self::ROOT, &mut nodes);
        }
        DataTree { nodes }
    }

    pub const ROOT: NodeId = NodeId(0);

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a tree always has a root
    }

    pub fn label(&self, n: NodeId) -> &NodeLabel {
        &self.nodes[n.index()].label
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n.index()].parent
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n.index()].children
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.nodes[n.index()].children.is_empty()
    }

    /// True iff `anc` is a proper ancestor of `n`.
    pub fn is_proper_ancestor(&self, anc: NodeId, n: NodeId) -> bool {
        let mut cur = self.parent(n);
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Depth of a node; the root has depth 0.
    pub fn node_depth(&self, n: NodeId) -> u64 {
        let mut d = 0;
        let mut cur = n;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// Depth of the tree: maximum node depth.
    pub fn depth(&self) -> u64 {
        self.node_ids().map(|n| self.node_depth(n)).max().unwrap_or(0)
    }

    /// All data values occurring in the tree, deduplicated.
    pub fn data_values(&self) -> BTreeSet<DataValue> {
        self.nodes
            .iter()
            .filter_map(|s| s.label.data())
            .collect()
    }

    /// Data-valued leaves in node order.
    pub fn data_leaves(&self) -> Vec<NodeId> {
        self.node_ids()
            .filter(|n| self.label(*n).is_data())
            .collect()
    }

    /// Smallest natural not used as a data value anywhere in the tree.
    pub fn fresh_value_floor(&self) -> u64 {
        let used = self.data_values();
        let mut v = 0;
        while used.contains(&DataValue(v)) {
            v += 1;
        }
        v
    }

    /// Append a child under `parent`. Callers must add nodes in depth-first
    /// order so the preorder invariant holds (the parser and builders do).
    pub fn add_child(&mut self, parent: NodeId, label: NodeLabel) -> NodeId {
        debug_assert!(
            !self.label(parent).is_data(),
            "data leaves cannot have children"
        );
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(NodeSlot {
            parent: Some(parent),
            children: Vec::new(),
            label,
        });
        self.nodes[parent.index()].children.push(id);
        id
    }

    /// Copy of the subtree rooted at `n` as a standalone tree.
    pub fn subtree(&self, n: NodeId) -> DataTree {
        let mut nodes = vec![NodeSlot {
            parent: None,
            children: Vec::new(),
            label: self.label(n).clone(),
        }];
        fn copy_children(src: &DataTree, src_node: NodeId, dst: &mut Vec<NodeSlot>, dst_node: u32) {
            for &c in src.children(src_node) {
                let id = dst.len() as u32;
                dst.push(NodeSlot {
                    parent: Some(NodeId(dst_node)),
                    children: Vec::new(),
                    label: src.label(c).clone(),
                });
                dst[dst_node as usize].children.push(NodeId(id));
                copy_children(src, c, dst, id);
            }
        }
        copy_children(self, n, &mut nodes, 0);
        DataTree { nodes }
    }

    /// Rebuild with edits: drop the subtrees rooted in `deleted`, change the
    /// tags of nodes per `renamed`, and graft the listed forests under their
    /// anchors (each anchor may receive several trees). Node ids in the
    /// arguments refer to `self`. Returns the tree in preorder form along
    /// with the map from surviving old ids to new ids.
    pub fn rebuild(
        &self,
        deleted: &BTreeSet<NodeId>,
        renamed: &BTreeMap<NodeId, Tag>,
        appended: &BTreeMap<NodeId, Vec<DataTree>>,
    ) -> (DataTree, BTreeMap<NodeId, NodeId>) {
        let mut nodes: Vec<NodeSlot> = Vec::new();
        let mut survivor_map = BTreeMap::new();
        debug_assert!(!deleted.contains(&Self::ROOT), "the root is never deleted");

        fn visit(
            src: &DataTree,
            n: NodeId,
            parent: Option<NodeId>,
            deleted: &BTreeSet<NodeId>,
            renamed: &BTreeMap<NodeId, Tag>,
            appended: &BTreeMap<NodeId, Vec<DataTree>>,
            nodes: &mut Vec<NodeSlot>,
            survivor_map: &mut BTreeMap<NodeId, NodeId>,
        ) {
            let id = NodeId(nodes.len() as u32);
            let label = match renamed.get(&n) {
                Some(tag) => NodeLabel::Tag(tag.clone()),
                None => src.label(n).clone(),
            };
            nodes.push(NodeSlot {
                parent,
                children: Vec::new(),
                label,
            });
            survivor_map.insert(n, id);
            if let Some(p) = parent {
                nodes[p.index()].children.push(id);
            }
            for &c in src.children(n) {
                if deleted.contains(&c) {
                    continue;
                }
                visit(src, c, Some(id), deleted, renamed, appended, nodes, survivor_map);
            }
            if let Some(forest) = appended.get(&n) {
                for tree in forest {
                    graft_at(tree, id, nodes);
                }
            }
        }

        fn graft_at(tree: &DataTree, at: NodeId, nodes: &mut Vec<NodeSlot>) {
            fn go(tree: &DataTree, n: NodeId, parent: NodeId, nodes: &mut Vec<NodeSlot>) {
                let id = NodeId(nodes.len() as u32);
                nodes.push(NodeSlot {
                    parent: Some(parent),
                    children: Vec::new(),
                    label: tree.label(n).clone(),
                });
                nodes[parent.index()].children.push(id);
                for &c in tree.children(n) {
                    go(tree, c, id, nodes);
                }
            }
            go(tree, DataTree::ROOT, at, nodes);
        }

        visit(
            self,
            Self::ROOT,
            None,
            deleted,
            renamed,
            appended,
            &mut nodes,
            &mut survivor_map,
        );
        (DataTree { nodes }, survivor_map)
    }

    /// Overwrite one data leaf's value.
    pub fn set_data_value(&mut self, n: NodeId, value: DataValue) {
        debug_assert!(self.nodes[n.index()].label.is_data());
        self.nodes[n.index()].label = NodeLabel::Data(value);
    }

    /// Apply a data-value renaming; values without an entry are unchanged.
    pub fn rename_values(&self, map: &BTreeMap<DataValue, DataValue>) -> DataTree {
        let mut out = self.clone();
        for slot in &mut out.nodes {
            if let NodeLabel::Data(d) = &slot.label {
                if let Some(nd) = map.get(d) {
                    slot.label = NodeLabel::Data(*nd);
                }
            }
        }
        out
    }

    /// Structural well-formedness check used by tests and the parser:
    /// preorder ids, data leaves childless, single root.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.nodes[0].parent.is_some() {
            return Err("root has a parent".into());
        }
        for n in self.node_ids() {
            let slot = &self.nodes[n.index()];
            if n != Self::ROOT && slot.parent.is_none() {
                return Err(format!("node {} has no parent", n.0));
            }
            if let Some(p) = slot.parent {
                if p.0 >= n.0 {
                    return Err(format!("node {} not in preorder", n.0));
                }
                if !self.nodes[p.index()].children.contains(&n) {
                    return Err(format!("node {} missing from parent's children", n.0));
                }
            }
            if slot.label.is_data() && !slot.children.is_empty() {
                return Err(format!("data leaf {} has children", n.0));
            }
            for &c in &slot.children {
                if self.nodes[c.index()].parent != Some(n) {
                    return Err(format!("child {} has wrong parent", c.0));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DataTree {
        // [a]([b](@1, @2), [c])
        DataTree::node(
            "a",
            vec![
                DataTree::node_data("b", &[1, 2]),
                DataTree::tag_leaf("c"),
            ],
        )
    }

    impl DataTree {
        fn node_data(tag: &str, values: &[u64]) -> DataTree {
            DataTree::node(
                tag,
                values.iter().map(|v| DataTree::data_leaf(*v)).collect(),
            )
        }
    }

    #[test]
    fn depth_of_single_node_is_zero() {
        assert_eq!(DataTree::tag_leaf("a").depth(), 0);
    }

    #[test]
    fn depth_of_root_plus_leaf_is_one() {
        let t = DataTree::node("a", vec![DataTree::tag_leaf("b")]);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn preorder_invariant_holds_after_building() {
        let t = small();
        t.check_invariants().unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn subtree_extraction() {
        let t = small();
        let b = t.children(DataTree::ROOT)[0];
        let sub = t.subtree(b);
        sub.check_invariants().unwrap();
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.data_values().len(), 2);
    }

    #[test]
    fn rebuild_identity_when_no_edits() {
        let t = small();
        let (t2, map) = t.rebuild(&BTreeSet::new(), &BTreeMap::new(), &BTreeMap::new());
        assert_eq!(t, t2);
        assert_eq!(map.len(), t.len());
    }

    #[test]
    fn rebuild_deletes_whole_subtree() {
        let t = small();
        let b = t.children(DataTree::ROOT)[0];
        let mut del = BTreeSet::new();
        del.insert(b);
        let (t2, map) = t.rebuild(&del, &BTreeMap::new(), &BTreeMap::new());
        t2.check_invariants().unwrap();
        assert_eq!(t2.len(), 2);
        assert!(!map.contains_key(&b));
    }

    #[test]
    fn fresh_value_floor_skips_used() {
        let t = DataTree::node_data("a", &[0, 1, 3]);
        assert_eq!(t.fresh_value_floor(), 2);
    }
}
