//! Data tree patterns with child/descendant edges, wildcard and variable
//! labels, and data (in)equality constraints; Boolean pattern formulas;
//! queries (body ~> head) and template instantiation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon;
use crate::tree::{DataTree, DataValue, NodeId, NodeLabel, Tag};

/// A data variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Self {
        VarName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for VarName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternLabel {
    Tag(Tag),
    Var(VarName),
    Wildcard,
}

/// How a non-root pattern node hangs below its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Child,
    Descendant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatternNodeId(pub u32);

impl PatternNodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Atom of a data constraint; the constraint is their conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CondAtom {
    Eq(VarName, VarName),
    Neq(VarName, VarName),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct PSlot {
    parent: Option<PatternNodeId>,
    children: Vec<PatternNodeId>,
    label: PatternLabel,
    edge: EdgeKind, // meaningless at the root
}

/// A data tree pattern. Relative patterns designate a `self` node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreePattern {
    nodes: Vec<PSlot>,
    pub cond: Vec<CondAtom>,
    pub self_node: Option<PatternNodeId>,
}

impl TreePattern {
    pub const ROOT: PatternNodeId = PatternNodeId(0);

    pub fn leaf(label: PatternLabel) -> Self {
        TreePattern {
            nodes: vec![PSlot {
                parent: None,
                children: Vec::new(),
                label,
                edge: EdgeKind::Child,
            }],
            cond: Vec::new(),
            self_node: None,
        }
    }

    pub fn tag_leaf(tag: impl Into<String>) -> Self {
        Self::leaf(PatternLabel::Tag(Tag::new(tag)))
    }

    pub fn var_leaf(name: impl Into<String>) -> Self {
        Self::leaf(PatternLabel::Var(VarName::new(name)))
    }

    pub fn wildcard() -> Self {
        Self::leaf(PatternLabel::Wildcard)
    }

    /// Pattern with the given root label over child patterns, each attached
    /// by the given edge kind. Self markers and conds of children carry over.
    pub fn node(label: PatternLabel, children: Vec<(EdgeKind, TreePattern)>) -> Self {
        let mut out = TreePattern {
            nodes: vec![PSlot {
                parent: None,
                children: Vec::new(),
                label,
                edge: EdgeKind::Child,
            }],
            cond: Vec::new(),
            self_node: None,
        };
        fn copy(
            src: &TreePattern,
            n: PatternNodeId,
            parent: PatternNodeId,
            edge: EdgeKind,
            out: &mut TreePattern,
        ) {
            let id = PatternNodeId(out.nodes.len() as u32);
            out.nodes.push(PSlot {
                parent: Some(parent),
                children: Vec::new(),
                label: src.nodes[n.index()].label.clone(),
                edge,
            });
            out.nodes[parent.index()].children.push(id);
            if src.self_node == Some(n) {
                out.self_node = Some(id);
            }
            for &c in &src.nodes[n.index()].children {
                copy(src, c, id, src.nodes[c.index()].edge, out);
            }
        }
        for (edge, child) in &children {
            copy(child, Self::ROOT, Self::ROOT, *edge, &mut out);
            out.cond.extend(child.cond.iter().cloned());
        }
        out
    }

    pub fn tag_node(tag: impl Into<String>, children: Vec<(EdgeKind, TreePattern)>) -> Self {
        Self::node(PatternLabel::Tag(Tag::new(tag)), children)
    }

    /// Append a child under `parent`; nodes must be added depth-first so the
    /// preorder invariant holds.
    pub fn add_child(
        &mut self,
        parent: PatternNodeId,
        edge: EdgeKind,
        label: PatternLabel,
    ) -> PatternNodeId {
        let id = PatternNodeId(self.nodes.len() as u32);
        self.nodes.push(PSlot {
            parent: Some(parent),
            children: Vec::new(),
            label,
            edge,
        });
        self.nodes[parent.index()].children.push(id);
        id
    }

    pub fn with_cond(mut self, cond: Vec<CondAtom>) -> Self {
        self.cond = cond;
        self
    }

    pub fn with_self(mut self, node: PatternNodeId) -> Self {
        self.self_node = Some(node);
        self
    }

    /// Mark this (single-node or root) pattern's root as self.
    pub fn self_at_root(mut self) -> Self {
        self.self_node = Some(Self::ROOT);
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_relative(&self) -> bool {
        self.self_node.is_some()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = PatternNodeId> + '_ {
        (0..self.nodes.len() as u32).map(PatternNodeId)
    }

    pub fn label(&self, n: PatternNodeId) -> &PatternLabel {
        &self.nodes[n.index()].label
    }

    pub fn set_label(&mut self, n: PatternNodeId, label: PatternLabel) {
        self.nodes[n.index()].label = label;
    }

    pub fn parent(&self, n: PatternNodeId) -> Option<PatternNodeId> {
        self.nodes[n.index()].parent
    }

    pub fn children(&self, n: PatternNodeId) -> &[PatternNodeId] {
        &self.nodes[n.index()].children
    }

    pub fn edge(&self, n: PatternNodeId) -> EdgeKind {
        self.nodes[n.index()].edge
    }

    pub fn is_leaf(&self, n: PatternNodeId) -> bool {
        self.nodes[n.index()].children.is_empty()
    }

    /// Nodes of the subtree rooted at `n`, preorder.
    pub fn subtree_nodes(&self, n: PatternNodeId) -> Vec<PatternNodeId> {
        let mut out = Vec::new();
        let mut stack = vec![n];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.children(v).iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// All variables occurring as leaf labels.
    pub fn variables(&self) -> Vec<VarName> {
        let mut out = Vec::new();
        for n in self.node_ids() {
            if let PatternLabel::Var(v) = self.label(n) {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Structural sanity: preorder ids, variables only at leaves, cond
    /// variables present.
    pub fn check_invariants(&self) -> Result<(), String> {
        for n in self.node_ids() {
            let slot = &self.nodes[n.index()];
            if let Some(p) = slot.parent {
                if p.0 >= n.0 {
                    return Err("not in preorder".into());
                }
            }
            if matches!(slot.label, PatternLabel::Var(_)) && !slot.children.is_empty() {
                return Err("variable at a non-leaf".into());
            }
        }
        let vars = self.variables();
        for atom in &self.cond {
            let (CondAtom::Eq(x, y) | CondAtom::Neq(x, y)) = atom;
            if !vars.contains(x) || !vars.contains(y) {
                return Err(format!("cond mentions unknown variable {x} or {y}"));
            }
        }
        Ok(())
    }
}

/// Boolean combination of (relative) tree patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternFormula {
    True,
    False,
    Atom(TreePattern),
    And(Vec<PatternFormula>),
    Or(Vec<PatternFormula>),
    Not(Box<PatternFormula>),
}

impl PatternFormula {
    pub fn is_positive(&self) -> bool {
        match self {
            PatternFormula::True | PatternFormula::False | PatternFormula::Atom(_) => true,
            PatternFormula::And(fs) | PatternFormula::Or(fs) => {
                fs.iter().all(|f| f.is_positive())
            }
            PatternFormula::Not(_) => false,
        }
    }

    pub fn has_relative_atom(&self) -> bool {
        match self {
            PatternFormula::True | PatternFormula::False => false,
            PatternFormula::Atom(p) => p.is_relative(),
            PatternFormula::And(fs) | PatternFormula::Or(fs) => {
                fs.iter().any(|f| f.has_relative_atom())
            }
            PatternFormula::Not(f) => f.has_relative_atom(),
        }
    }

    pub fn atoms(&self) -> Vec<&TreePattern> {
        match self {
            PatternFormula::True | PatternFormula::False => Vec::new(),
            PatternFormula::Atom(p) => vec![p],
            PatternFormula::And(fs) | PatternFormula::Or(fs) => {
                fs.iter().flat_map(|f| f.atoms()).collect()
            }
            PatternFormula::Not(f) => f.atoms(),
        }
    }

    /// Total pattern nodes across all atoms (size measure for bounds).
    pub fn size(&self) -> usize {
        self.atoms().iter().map(|p| p.len()).sum()
    }
}

/// A matching of pattern nodes to tree nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    map: Vec<NodeId>,
}

impl Matching {
    pub fn get(&self, p: PatternNodeId) -> NodeId {
        self.map[p.index()]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (PatternNodeId, NodeId)> + '_ {
        self.map
            .iter()
            .enumerate()
            .map(|(i, n)| (PatternNodeId(i as u32), *n))
    }

    /// Valuation induced on the pattern's variables.
    pub fn valuation(&self, p: &TreePattern, t: &DataTree) -> BTreeMap<VarName, DataValue> {
        let mut out = BTreeMap::new();
        for n in p.node_ids() {
            if let PatternLabel::Var(v) = p.label(n) {
                if let NodeLabel::Data(d) = t.label(self.get(n)) {
                    out.insert(v.clone(), *d);
                }
            }
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchError {
    #[error("relative pattern matched without an anchor")]
    RelativeWithoutAnchor,
}

fn label_ok(p: &TreePattern, pn: PatternNodeId, t: &DataTree, tn: NodeId) -> bool {
    match (p.label(pn), t.label(tn)) {
        (PatternLabel::Tag(pt), NodeLabel::Tag(tt)) => pt == tt,
        (PatternLabel::Wildcard, NodeLabel::Tag(_)) => true,
        (PatternLabel::Var(_), NodeLabel::Data(_)) => true,
        _ => false,
    }
}

fn cond_holds(cond: &[CondAtom], valuation: &BTreeMap<VarName, DataValue>) -> bool {
    cond.iter().all(|atom| match atom {
        CondAtom::Eq(x, y) => valuation.get(x) == valuation.get(y),
        CondAtom::Neq(x, y) => valuation.get(x) != valuation.get(y),
    })
}

/// Core backtracking enumeration. Pattern nodes are assigned in preorder;
/// tree candidates are tried in node-id order, so the result order is
/// deterministic. `anchor` pins the self node when present.
pub(crate) fn matchings(
    p: &TreePattern,
    t: &DataTree,
    anchor: Option<NodeId>,
    injective: bool,
) -> Vec<Matching> {
    let mut out = Vec::new();
    let mut map: Vec<Option<NodeId>> = vec![None; p.len()];
    let mut used: Vec<bool> = vec![false; t.len()];
    let mut valuation: BTreeMap<VarName, DataValue> = BTreeMap::new();

    fn descendants(t: &DataTree, n: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = t.children(n).to_vec();
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(t.children(v).iter().copied());
        }
        out.sort();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn assign(
        p: &TreePattern,
        t: &DataTree,
        anchor: Option<NodeId>,
        injective: bool,
        idx: usize,
        map: &mut Vec<Option<NodeId>>,
        used: &mut Vec<bool>,
        valuation: &mut BTreeMap<VarName, DataValue>,
        out: &mut Vec<Matching>,
    ) {
        if idx == p.len() {
            if cond_holds(&p.cond, valuation) {
                out.push(Matching {
                    map: map.iter().map(|m| m.unwrap()).collect(),
                });
            }
            return;
        }
        let pn = PatternNodeId(idx as u32);
        let candidates: Vec<NodeId> = match p.parent(pn) {
            None => vec![DataTree::ROOT],
            Some(parent) => {
                let anchor_tree = map[parent.index()].unwrap();
                match p.edge(pn) {
                    EdgeKind::Child => t.children(anchor_tree).to_vec(),
                    EdgeKind::Descendant => descendants(t, anchor_tree),
                }
            }
        };
        for tn in candidates {
            if injective && used[tn.index()] {
                continue;
            }
            if p.self_node == Some(pn) && anchor.is_some() && anchor != Some(tn) {
                continue;
            }
            if !label_ok(p, pn, t, tn) {
                continue;
            }
            let mut added_var: Option<VarName> = None;
            if let PatternLabel::Var(v) = p.label(pn) {
                let NodeLabel::Data(d) = t.label(tn) else {
                    continue;
                };
                match valuation.get(v) {
                    Some(existing) if existing != d => continue,
                    Some(_) => {}
                    None => {
                        valuation.insert(v.clone(), *d);
                        added_var = Some(v.clone());
                    }
                }
            }
            map[idx] = Some(tn);
            used[tn.index()] = true;
            assign(p, t, anchor, injective, idx + 1, map, used, valuation, out);
            used[tn.index()] = false;
            map[idx] = None;
            if let Some(v) = added_var {
                valuation.remove(&v);
            }
        }
    }

    assign(
        p, t, anchor, injective, 0, &mut map, &mut used, &mut valuation, &mut out,
    );
    out
}

/// All (not necessarily injective) matchings of `p` into `t`.
pub fn match_all(
    p: &TreePattern,
    t: &DataTree,
    anchor: Option<NodeId>,
) -> Result<Vec<Matching>, MatchError> {
    if p.is_relative() && anchor.is_none() {
        return Err(MatchError::RelativeWithoutAnchor);
    }
    Ok(matchings(p, t, anchor, false))
}

/// As `match_all`, restricted to injective matchings.
pub fn match_injective(
    p: &TreePattern,
    t: &DataTree,
    anchor: Option<NodeId>,
) -> Result<Vec<Matching>, MatchError> {
    if p.is_relative() && anchor.is_none() {
        return Err(MatchError::RelativeWithoutAnchor);
    }
    Ok(matchings(p, t, anchor, true))
}

/// Standard Boolean semantics; each pattern atom is true iff it has a
/// matching (relative atoms anchored at `anchor`).
pub fn eval_formula(
    f: &PatternFormula,
    t: &DataTree,
    anchor: Option<NodeId>,
) -> Result<bool, MatchError> {
    Ok(match f {
        PatternFormula::True => true,
        PatternFormula::False => false,
        PatternFormula::Atom(p) => !match_all(p, t, anchor)?.is_empty(),
        PatternFormula::And(fs) => {
            for f in fs {
                if !eval_formula(f, t, anchor)? {
                    return Ok(false);
                }
            }
            true
        }
        PatternFormula::Or(fs) => {
            for f in fs {
                if eval_formula(f, t, anchor)? {
                    return Ok(true);
                }
            }
            false
        }
        PatternFormula::Not(f) => !eval_formula(f, t, anchor)?,
    })
}

// ---------------------------------------------------------------------------
// Queries and templates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemplateLabel {
    Tag(Tag),
    Data(DataValue),
    Var(VarName),
    /// Reference to a query by name; the evaluated forest is spliced in.
    Query(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct TSlot {
    parent: Option<u32>,
    children: Vec<u32>,
    label: TemplateLabel,
}

/// An output tree shape: internal nodes tag-labeled, leaves tags, values,
/// variables, or query references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    nodes: Vec<TSlot>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("variable {0} has no value")]
    UnboundVariable(String),
    #[error("unknown query {0}")]
    UnknownQuery(String),
}

impl Template {
    pub fn leaf(label: TemplateLabel) -> Self {
        Template {
            nodes: vec![TSlot {
                parent: None,
                children: Vec::new(),
                label,
            }],
        }
    }

    pub fn tag_leaf(tag: impl Into<String>) -> Self {
        Self::leaf(TemplateLabel::Tag(Tag::new(tag)))
    }

    pub fn var_leaf(name: impl Into<String>) -> Self {
        Self::leaf(TemplateLabel::Var(VarName::new(name)))
    }

    pub fn query_leaf(name: impl Into<String>) -> Self {
        Self::leaf(TemplateLabel::Query(name.into()))
    }

    pub fn node(tag: impl Into<String>, children: Vec<Template>) -> Self {
        let mut nodes = vec![TSlot {
            parent: None,
            children: Vec::new(),
            label: TemplateLabel::Tag(Tag::new(tag)),
        }];
        fn copy(src: &Template, n: u32, parent: u32, nodes: &mut Vec<TSlot>) {
            let id = nodes.len() as u32;
            nodes.push(TSlot {
                parent: Some(parent),
                children: Vec::new(),
                label: src.nodes[n as usize].label.clone(),
            });
            nodes[parent as usize].children.push(id);
            for &c in &src.nodes[n as usize].children {
                copy(src, c, id, nodes);
            }
        }
        for child in &children {
            copy(child, 0, 0, &mut nodes);
        }
        Template { nodes }
    }

    /// Append a child under node `parent` (depth-first order expected).
    pub fn add_child(&mut self, parent: usize, label: TemplateLabel) -> usize {
        let id = self.nodes.len() as u32;
        self.nodes.push(TSlot {
            parent: Some(parent as u32),
            children: Vec::new(),
            label,
        });
        self.nodes[parent].children.push(id);
        id as usize
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> impl Iterator<Item = &TemplateLabel> + '_ {
        self.nodes.iter().map(|s| &s.label)
    }

    pub fn label_of(&self, n: usize) -> &TemplateLabel {
        &self.nodes[n].label
    }

    pub fn root_label(&self) -> &TemplateLabel {
        &self.nodes[0].label
    }

    pub fn child_labels(&self, n: usize) -> impl Iterator<Item = &TemplateLabel> + '_ {
        self.nodes[n].children.iter().map(|c| &self.nodes[*c as usize].label)
    }

    pub fn children_of(&self, n: usize) -> Vec<usize> {
        self.nodes[n].children.iter().map(|c| *c as usize).collect()
    }

    /// Variables occurring anywhere in the template.
    pub fn variables(&self) -> Vec<VarName> {
        let mut out = Vec::new();
        for slot in &self.nodes {
            if let TemplateLabel::Var(v) = &slot.label {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn query_refs(&self) -> Vec<String> {
        let mut out = Vec::new();
        for slot in &self.nodes {
            if let TemplateLabel::Query(q) = &slot.label {
                if !out.contains(q) {
                    out.push(q.clone());
                }
            }
        }
        out
    }

    /// Instantiate: variables take their values, query leaves are replaced
    /// by the trees of the named evaluated forest (spliced as siblings).
    /// Returns a forest because a query label at the root expands to the
    /// whole query result.
    pub fn instantiate(
        &self,
        valuation: &BTreeMap<VarName, DataValue>,
        query_results: &BTreeMap<String, Vec<DataTree>>,
    ) -> Result<Vec<DataTree>, TemplateError> {
        self.instantiate_at(0, valuation, query_results)
    }

    fn instantiate_at(
        &self,
        n: usize,
        valuation: &BTreeMap<VarName, DataValue>,
        query_results: &BTreeMap<String, Vec<DataTree>>,
    ) -> Result<Vec<DataTree>, TemplateError> {
        match &self.nodes[n].label {
            TemplateLabel::Data(d) => Ok(vec![DataTree::data_leaf(d.0)]),
            TemplateLabel::Var(v) => {
                let d = valuation
                    .get(v)
                    .ok_or_else(|| TemplateError::UnboundVariable(v.to_string()))?;
                Ok(vec![DataTree::data_leaf(d.0)])
            }
            TemplateLabel::Query(name) => query_results
                .get(name)
                .cloned()
                .ok_or_else(|| TemplateError::UnknownQuery(name.clone())),
            TemplateLabel::Tag(tag) => {
                let mut children = Vec::new();
                for c in &self.nodes[n].children {
                    children.extend(self.instantiate_at(
                        *c as usize,
                        valuation,
                        query_results,
                    )?);
                }
                Ok(vec![DataTree::node(tag.as_str(), children)])
            }
        }
    }
}

/// A data tree pattern query `body ~> head`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub body: TreePattern,
    pub head: Template,
}

impl Query {
    /// Size measure |body| + |head| used by the pred-basis bound.
    pub fn size(&self) -> usize {
        self.body.len() + self.head.len()
    }
}

/// Evaluate a query at an anchor: one head instantiation per body matching,
/// deduplicated (set semantics) and sorted for determinism.
pub fn eval_query(
    q: &Query,
    t: &DataTree,
    anchor: NodeId,
) -> Result<Vec<DataTree>, MatchError> {
    let anchor_opt = if q.body.is_relative() {
        Some(anchor)
    } else {
        None
    };
    let ms = match_all(&q.body, t, anchor_opt)?;
    let empty = BTreeMap::new();
    let mut out: Vec<(String, DataTree)> = Vec::new();
    for m in ms {
        let valuation = m.valuation(&q.body, t);
        let trees = q
            .head
            .instantiate(&valuation, &empty)
            .expect("head variables are bound by the body");
        for tree in trees {
            let key = canon::literal_key(&tree);
            if !out.iter().any(|(k, _)| *k == key) {
                out.push((key, tree));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out.into_iter().map(|(_, t)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::DataTree;

    fn t_ab() -> DataTree {
        // [a]([b])
        DataTree::node("a", vec![DataTree::tag_leaf("b")])
    }

    #[test]
    fn wildcard_root_matches_once() {
        let p = TreePattern::wildcard();
        let ms = match_all(&p, &t_ab(), None).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].get(TreePattern::ROOT), DataTree::ROOT);
    }

    #[test]
    fn duplicate_pattern_children_collapse_onto_one_leaf() {
        // [a]([b],[b]) against [a]([b]): the single map sends both pattern
        // b-nodes to the one leaf; injectively there is none (pigeonhole).
        let p = TreePattern::tag_node(
            "a",
            vec![
                (EdgeKind::Child, TreePattern::tag_leaf("b")),
                (EdgeKind::Child, TreePattern::tag_leaf("b")),
            ],
        );
        let ms = match_all(&p, &t_ab(), None).unwrap();
        assert_eq!(ms.len(), 1);
        let inj = match_injective(&p, &t_ab(), None).unwrap();
        assert!(inj.is_empty());
    }

    #[test]
    fn single_pattern_child_fans_out_over_equal_leaves() {
        // [a]([b]) into [a]([b],[b]): two matchings.
        let p = TreePattern::tag_node("a", vec![(EdgeKind::Child, TreePattern::tag_leaf("b"))]);
        let t = DataTree::node("a", vec![DataTree::tag_leaf("b"), DataTree::tag_leaf("b")]);
        assert_eq!(match_all(&p, &t, None).unwrap().len(), 2);
    }

    #[test]
    fn descendant_edge_requires_proper_step() {
        let deep = DataTree::node("a", vec![DataTree::node("c", vec![DataTree::tag_leaf("b")])]);
        let p = TreePattern::tag_node(
            "a",
            vec![(EdgeKind::Descendant, TreePattern::tag_leaf("b"))],
        );
        assert_eq!(match_all(&p, &deep, None).unwrap().len(), 1);
        // self-match is not a proper descendant
        let p_self = TreePattern::tag_node(
            "a",
            vec![(EdgeKind::Descendant, TreePattern::tag_leaf("a"))],
        );
        assert!(match_all(&p_self, &DataTree::tag_leaf("a"), None)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn variable_consistency_and_cond() {
        // [a]($X,$X) on [a](@1,@2): no matching; on [a](@1,@1): matches
        let p = TreePattern::tag_node(
            "a",
            vec![
                (EdgeKind::Child, TreePattern::var_leaf("X")),
                (EdgeKind::Child, TreePattern::var_leaf("X")),
            ],
        );
        let t12 = DataTree::node("a", vec![DataTree::data_leaf(1), DataTree::data_leaf(2)]);
        let t11 = DataTree::node("a", vec![DataTree::data_leaf(1), DataTree::data_leaf(1)]);
        // non-injectively both X-leaves may collapse onto one tree leaf
        assert_eq!(match_all(&p, &t12, None).unwrap().len(), 2);
        assert!(match_injective(&p, &t12, None).unwrap().is_empty());
        assert!(!match_injective(&p, &t11, None).unwrap().is_empty());

        let p_neq = TreePattern::tag_node(
            "a",
            vec![
                (EdgeKind::Child, TreePattern::var_leaf("X")),
                (EdgeKind::Child, TreePattern::var_leaf("Y")),
            ],
        )
        .with_cond(vec![CondAtom::Neq(VarName::new("X"), VarName::new("Y"))]);
        assert_eq!(match_all(&p_neq, &t12, None).unwrap().len(), 2);
        assert!(match_all(&p_neq, &t11, None).unwrap().is_empty());
    }

    #[test]
    fn relative_without_anchor_is_an_error() {
        let p = TreePattern::wildcard().self_at_root();
        assert_eq!(
            match_all(&p, &t_ab(), None).unwrap_err(),
            MatchError::RelativeWithoutAnchor
        );
        assert!(match_all(&p, &t_ab(), Some(DataTree::ROOT)).is_ok());
    }

    #[test]
    fn formula_constants() {
        let t = t_ab();
        assert!(eval_formula(&PatternFormula::True, &t, None).unwrap());
        assert!(eval_formula(&PatternFormula::And(vec![]), &t, None).unwrap());
        let not_a = PatternFormula::Not(Box::new(PatternFormula::Atom(
            TreePattern::tag_leaf("a"),
        )));
        assert!(!eval_formula(&not_a, &t, None).unwrap());
    }

    #[test]
    fn query_set_semantics_collapse_duplicates() {
        // two b-children with the same value: head $X yields one result
        let t = DataTree::node(
            "a",
            vec![
                DataTree::node("b", vec![DataTree::data_leaf(7)]),
                DataTree::node("b", vec![DataTree::data_leaf(7)]),
            ],
        );
        let q = Query {
            body: TreePattern::tag_node(
                "a",
                vec![(
                    EdgeKind::Child,
                    TreePattern::tag_node("b", vec![(EdgeKind::Child, TreePattern::var_leaf("X"))]),
                )],
            ),
            head: Template::var_leaf("X"),
        };
        let forest = eval_query(&q, &t, DataTree::ROOT).unwrap();
        assert_eq!(forest.len(), 1);
        assert_eq!(forest[0], DataTree::data_leaf(7));
    }

    #[test]
    fn query_empty_body_match_gives_empty_forest() {
        let q = Query {
            body: TreePattern::tag_leaf("z"),
            head: Template::var_leaf("X"),
        };
        let forest = eval_query(&q, &t_ab(), DataTree::ROOT).unwrap();
        assert!(forest.is_empty());
    }
}
