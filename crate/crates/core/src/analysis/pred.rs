//! Predecessor bases for positive systems.
//!
//! For a rule R and a target tree t, every minimal tree t1 with some
//! R-successor above t decomposes into: survivors of t glued with the
//! locator's image, minimal instantiations of the deleted subtrees, guard
//! support, and DTD completion. The generator below enumerates those
//! amalgamations — overlaying the rule's post-state footprint onto t,
//! un-applying the actions, completing counts jointly for the pre and post
//! state, and enumerating data-value sharing patterns — then keeps exactly
//! the candidates that verifiably rewrite into the upward closure of t,
//! minimized to an antichain.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::{AnalysisError, Basis};
use crate::canon::canonical_print;
use crate::dtd::{CountLabel, Dtd};
use crate::graph::graph_of;
use crate::graph::longest_simple_path;
use crate::order::embeds;
use crate::pattern::{
    CondAtom, EdgeKind, PatternFormula, PatternLabel, TemplateLabel, TreePattern, VarName,
};
use crate::rewrite::{enabled, Rule, System};
use crate::tree::{DataTree, DataValue, NodeLabel, Tag};

/// Tuning knobs for the generator; the caps trade completeness for time and
/// set the `capped` flag when they bite.
#[derive(Debug, Clone)]
pub struct PredOptions {
    /// Candidate predecessors larger than this are dropped (capped).
    pub size_cap: usize,
    /// Depth bound B of the bounded state space.
    pub max_depth: u64,
    /// Simple-path bound K.
    pub max_path: u64,
    /// Free value slots beyond this fall back to fresh-only sharing (capped).
    pub max_free_slots: usize,
    /// Hard limit on raw candidates per rule (capped when exceeded).
    pub max_candidates: usize,
}

impl PredOptions {
    pub fn for_system(sys: &System) -> Self {
        PredOptions {
            size_cap: 64,
            max_depth: sys
                .depth_bound
                .unwrap_or_else(|| sys.effective_depth_bound()),
            max_path: sys.simple_path_bound.unwrap_or(u64::MAX),
            max_free_slots: 6,
            max_candidates: 200_000,
        }
    }
}

// ---------------------------------------------------------------------------
// Candidates: trees under construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum CLabel {
    Tag(Tag),
    /// Unresolved wildcard tag.
    AnyTag,
    /// Data leaf carrying a value class.
    Data(usize),
}

#[derive(Debug, Clone)]
struct CNode {
    parent: Option<usize>,
    children: Vec<usize>,
    label: CLabel,
    /// Pre-state label when this node is renamed by the step (post label is
    /// in `label` only during overlay; after assembly `label` is the pre
    /// label and `post_tag` the renamed one).
    post_tag: Option<Tag>,
    /// Inside a deleted region of the step.
    deleted: bool,
    /// No new children may be attached (exact forest-copy structure).
    frozen: bool,
    /// Root labels of the forest copies appended at this node by the step.
    appended: Vec<CountLabel>,
    /// Node exists only in the post state (forest copy content).
    post_only: bool,
}

#[derive(Debug, Clone, Default)]
struct Anchor {
    t_value: Option<DataValue>,
    constant: Option<DataValue>,
    fresh_var: bool,
}

/// A growing tree with value classes tracked by union-find.
#[derive(Debug, Clone, Default)]
struct Candidate {
    nodes: Vec<CNode>,
    uf: Vec<usize>,
    anchors: Vec<Anchor>,
    /// Required-distinct class pairs (from `!=` atoms).
    neq: Vec<(usize, usize)>,
}

impl Candidate {
    fn from_tree(t: &DataTree) -> Candidate {
        let mut c = Candidate::default();
        let mut class_of: BTreeMap<DataValue, usize> = BTreeMap::new();
        for n in t.node_ids() {
            let label = match t.label(n) {
                NodeLabel::Tag(tag) => CLabel::Tag(tag.clone()),
                NodeLabel::Data(v) => {
                    let slot = *class_of.entry(*v).or_insert_with(|| {
                        c.new_slot(Anchor {
                            t_value: Some(*v),
                            ..Anchor::default()
                        })
                    });
                    CLabel::Data(slot)
                }
            };
            c.nodes.push(CNode {
                parent: t.parent(n).map(|p| p.index()),
                children: t.children(n).iter().map(|x| x.index()).collect(),
                label,
                post_tag: None,
                deleted: false,
                frozen: false,
                appended: Vec::new(),
                post_only: false,
            });
        }
        c
    }

    fn new_slot(&mut self, anchor: Anchor) -> usize {
        self.uf.push(self.uf.len());
        self.anchors.push(anchor);
        self.uf.len() - 1
    }

    fn find(&self, mut x: usize) -> usize {
        while self.uf[x] != x {
            x = self.uf[x];
        }
        x
    }

    /// Merge two classes; false on anchor contradiction.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (aa, ab) = (self.anchors[ra].clone(), self.anchors[rb].clone());
        if let (Some(x), Some(y)) = (aa.t_value, ab.t_value) {
            if x != y {
                return false;
            }
        }
        if let (Some(x), Some(y)) = (aa.constant, ab.constant) {
            if x != y {
                return false;
            }
        }
        if aa.fresh_var && ab.fresh_var {
            return false; // distinct fresh variables never coincide
        }
        let merged = Anchor {
            t_value: aa.t_value.or(ab.t_value),
            constant: aa.constant.or(ab.constant),
            fresh_var: aa.fresh_var || ab.fresh_var,
        };
        self.uf[rb] = ra;
        self.anchors[ra] = merged;
        true
    }

    fn add_node(&mut self, parent: Option<usize>, label: CLabel) -> usize {
        let id = self.nodes.len();
        // frozen discipline is enforced by the overlay's attach-point checks
        let deleted = parent.map(|p| self.nodes[p].deleted).unwrap_or(false);
        self.nodes.push(CNode {
            parent,
            children: Vec::new(),
            label,
            post_tag: None,
            deleted,
            frozen: false,
            appended: Vec::new(),
            post_only: false,
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }

    fn depth_of(&self, mut n: usize) -> u64 {
        let mut d = 0;
        while let Some(p) = self.nodes[n].parent {
            d += 1;
            n = p;
        }
        d
    }

    fn descendants(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.nodes[n].children.clone();
        while let Some(v) = stack.pop() {
            out.push(v);
            stack.extend(self.nodes[v].children.iter().copied());
        }
        out.sort_unstable();
        out
    }

    fn live_size(&self) -> usize {
        self.nodes.iter().filter(|n| !n.post_only).count()
    }

    /// Drop post-only nodes and swap renamed labels back to the pre state.
    fn assemble(&self) -> Candidate {
        let mut out = Candidate {
            nodes: Vec::new(),
            uf: self.uf.clone(),
            anchors: self.anchors.clone(),
            neq: self.neq.clone(),
        };
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.post_only {
                continue;
            }
            let parent = n.parent.map(|p| {
                *remap.get(&p).unwrap_or_else(|| {
                    panic!(
                        "live node {i} ({:?}) hangs under post-only/later node {p} ({:?}); nodes: {:?}",
                        n.label,
                        self.nodes[p].label,
                        self.nodes
                            .iter()
                            .map(|x| (x.label.clone(), x.parent, x.post_only, x.deleted))
                            .collect::<Vec<_>>()
                    )
                })
            });
            let id = out.nodes.len();
            remap.insert(i, id);
            out.nodes.push(CNode {
                parent,
                children: Vec::new(),
                label: n.label.clone(),
                post_tag: n.post_tag.clone(),
                deleted: n.deleted,
                frozen: false,
                appended: n.appended.clone(),
                post_only: false,
            });
            if let Some(p) = parent {
                out.nodes[p].children.push(id);
            }
        }
        out
    }

    /// Free classes: no anchor at all (enumeration targets fill them).
    fn free_classes(&self) -> Vec<usize> {
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for n in &self.nodes {
            if let CLabel::Data(s) = n.label {
                used.insert(self.find(s));
            }
        }
        used.into_iter()
            .filter(|r| {
                let a = &self.anchors[*r];
                a.t_value.is_none() && a.constant.is_none() && !a.fresh_var
            })
            .collect()
    }

    fn pinned_classes(&self) -> Vec<usize> {
        let mut used: BTreeSet<usize> = BTreeSet::new();
        for n in &self.nodes {
            if let CLabel::Data(s) = n.label {
                used.insert(self.find(s));
            }
        }
        used.into_iter()
            .filter(|r| {
                let a = &self.anchors[*r];
                a.t_value.is_some() || a.constant.is_some()
            })
            .collect()
    }

    /// Concrete trees under one class-to-value map; None when constraints
    /// fail (distinctness, fresh flags).
    fn realize(&self, merge: &BTreeMap<usize, usize>) -> Option<DataTree> {
        // final class of a slot: follow the enumerated merge on top of uf
        let final_class = |s: usize| -> usize {
            let r = self.find(s);
            *merge.get(&r).unwrap_or(&r)
        };
        for (a, b) in &self.neq {
            if final_class(*a) == final_class(*b) {
                return None;
            }
        }
        // fresh-var classes must not merge into anything pre-existing
        for (from, into) in merge {
            if self.anchors[*from].fresh_var {
                let _ = into;
                return None;
            }
        }
        // assign values: constants first, then distinct canonical naturals
        let mut classes: BTreeSet<usize> = BTreeSet::new();
        for n in &self.nodes {
            if let CLabel::Data(s) = n.label {
                classes.insert(final_class(s));
            }
        }
        let mut value_of: BTreeMap<usize, DataValue> = BTreeMap::new();
        let mut taken: BTreeSet<DataValue> = BTreeSet::new();
        for c in &classes {
            if let Some(v) = self.anchors[*c].constant {
                if !taken.insert(v) {
                    return None; // two classes on the same constant
                }
                value_of.insert(*c, v);
            }
        }
        let mut next = 0u64;
        for c in &classes {
            if value_of.contains_key(c) {
                continue;
            }
            while taken.contains(&DataValue(next)) {
                next += 1;
            }
            value_of.insert(*c, DataValue(next));
            taken.insert(DataValue(next));
            next += 1;
        }
        // build the tree (root is node 0)
        fn build(
            cand: &Candidate,
            n: usize,
            value_of: &BTreeMap<usize, DataValue>,
            final_class: &dyn Fn(usize) -> usize,
        ) -> Option<DataTree> {
            match &cand.nodes[n].label {
                CLabel::AnyTag => None, // must be resolved before realization
                CLabel::Data(s) => Some(DataTree::leaf(NodeLabel::Data(
                    value_of[&final_class(*s)],
                ))),
                CLabel::Tag(tag) => {
                    let mut children = Vec::new();
                    for c in &cand.nodes[n].children {
                        children.push(build(cand, *c, value_of, final_class)?);
                    }
                    Some(DataTree::node(tag.as_str(), children))
                }
            }
        }
        build(self, 0, &value_of, &final_class)
    }
}

// ---------------------------------------------------------------------------
// Shapes: what must be embedded/instantiated
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Pre and post state (locator survivors).
    Both,
    /// Pre state only (deleted subtrees).
    PreOnly,
    /// Post state only (appended forest copies).
    PostOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SLabel {
    Tag(Tag),
    AnyTag,
    Slot(usize),
    Const(DataValue),
}

#[derive(Debug, Clone)]
struct SNode {
    parent: Option<usize>,
    children: Vec<usize>,
    edge: EdgeKind,
    label: SLabel,
    /// Pre-state label when the step renames this node.
    pre_label: Option<SLabel>,
    phase: Phase,
    /// Overlaid base nodes must have all children covered (forest copies).
    exact: bool,
    /// Forest copies appended here (root count labels), for completion.
    appended: Vec<CountLabel>,
}

#[derive(Debug, Clone, Default)]
struct Shape {
    nodes: Vec<SNode>,
    slot_count: usize,
    /// Local slot pairs required distinct.
    neq: Vec<(usize, usize)>,
    /// Local slots bound to fresh variables of the rule.
    fresh_slots: BTreeSet<usize>,
}

impl Shape {
    fn add(&mut self, parent: Option<usize>, edge: EdgeKind, label: SLabel, phase: Phase) -> usize {
        let id = self.nodes.len();
        self.nodes.push(SNode {
            parent,
            children: Vec::new(),
            edge,
            label,
            pre_label: None,
            phase,
            exact: false,
            appended: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        id
    }
}

/// Shape of a plain pattern (guard atom or reachability target).
fn pattern_shape(p: &TreePattern) -> Shape {
    let mut shape = Shape::default();
    let mut slot_of_var: BTreeMap<VarName, usize> = BTreeMap::new();
    let mut map: BTreeMap<u32, usize> = BTreeMap::new();
    for n in p.node_ids() {
        let label = match p.label(n) {
            PatternLabel::Tag(t) => SLabel::Tag(t.clone()),
            PatternLabel::Wildcard => SLabel::AnyTag,
            PatternLabel::Var(v) => {
                let next = slot_of_var.len();
                let s = *slot_of_var.entry(v.clone()).or_insert(next);
                SLabel::Slot(s)
            }
        };
        let parent = p.parent(n).map(|x| map[&x.0]);
        let id = shape.add(parent, p.edge(n), label, Phase::Both);
        map.insert(n.0, id);
    }
    shape.slot_count = slot_of_var.len();
    for atom in &p.cond {
        match atom {
            CondAtom::Eq(x, y) => {
                // share the slot: remap all occurrences of y's slot to x's
                if let (Some(&sx), Some(&sy)) = (slot_of_var.get(x), slot_of_var.get(y)) {
                    for node in &mut shape.nodes {
                        if node.label == SLabel::Slot(sy) {
                            node.label = SLabel::Slot(sx);
                        }
                    }
                }
            }
            CondAtom::Neq(x, y) => {
                if let (Some(&sx), Some(&sy)) = (slot_of_var.get(x), slot_of_var.get(y)) {
                    shape.neq.push((sx, sy));
                }
            }
        }
    }
    shape
}

/// Shape of a rule: the locator with deleted subtrees marked pre-only,
/// renamed nodes carrying their post label, and the forest copies attached
/// below their append targets as exact post-only subtrees.
fn rule_shape(rule: &Rule) -> Shape {
    let base = &rule.locator.base;
    let mut shape = Shape::default();
    let mut slot_of_var: BTreeMap<VarName, usize> = BTreeMap::new();
    let mut map: BTreeMap<u32, usize> = BTreeMap::new();

    for n in base.node_ids() {
        let phase = if rule.locator.deletes.contains(&n) {
            Phase::PreOnly
        } else {
            Phase::Both
        };
        let mut pre_label = None;
        let label = match base.label(n) {
            PatternLabel::Tag(t) => {
                if let Some(post) = rule.locator.renames.get(&n) {
                    pre_label = Some(SLabel::Tag(t.clone()));
                    SLabel::Tag(post.clone())
                } else {
                    SLabel::Tag(t.clone())
                }
            }
            PatternLabel::Wildcard => {
                if let Some(post) = rule.locator.renames.get(&n) {
                    pre_label = Some(SLabel::AnyTag);
                    SLabel::Tag(post.clone())
                } else {
                    SLabel::AnyTag
                }
            }
            PatternLabel::Var(v) => {
                let next = slot_of_var.len();
                let s = *slot_of_var.entry(v.clone()).or_insert(next);
                SLabel::Slot(s)
            }
        };
        let parent = base.parent(n).map(|x| map[&x.0]);
        let id = shape.add(parent, base.edge(n), label, phase);
        shape.nodes[id].pre_label = pre_label;
        map.insert(n.0, id);
    }

    // forest copies below append targets
    for (pn, fname) in &rule.chi {
        let anchor = map[&pn.0];
        for template in &rule.forests[fname] {
            // template roots: record the count label for completion
            let count_label = match template.root_label() {
                TemplateLabel::Tag(t) => CountLabel::Tag(t.clone()),
                _ => CountLabel::Dom,
            };
            shape.nodes[anchor].appended.push(count_label);
            // walk the template
            fn add_template(
                shape: &mut Shape,
                slot_of_var: &mut BTreeMap<VarName, usize>,
                fresh_vars: &BTreeSet<VarName>,
                template: &crate::pattern::Template,
                t_node: usize,
                parent: usize,
            ) {
                let label = match template.label_of(t_node) {
                    TemplateLabel::Tag(t) => SLabel::Tag(t.clone()),
                    TemplateLabel::Data(d) => SLabel::Const(*d),
                    TemplateLabel::Var(v) => {
                        let next = slot_of_var.len();
                        let s = *slot_of_var.entry(v.clone()).or_insert(next);
                        if fresh_vars.contains(v) {
                            // record on the shape later via fresh_slots
                        }
                        SLabel::Slot(s)
                    }
                    TemplateLabel::Query(_) => {
                        unreachable!("queries rejected before backward analysis")
                    }
                };
                let id = shape.add(Some(parent), EdgeKind::Child, label, Phase::PostOnly);
                shape.nodes[id].exact = true;
                for c in template.children_of(t_node) {
                    add_template(shape, slot_of_var, fresh_vars, template, c, id);
                }
            }
            let fresh_vars: BTreeSet<VarName> = rule.fresh_variables().into_iter().collect();
            add_template(
                &mut shape,
                &mut slot_of_var,
                &fresh_vars,
                template,
                0,
                anchor,
            );
        }
    }

    shape.slot_count = slot_of_var.len();
    for fresh in rule.fresh_variables() {
        if let Some(s) = slot_of_var.get(&fresh) {
            shape.fresh_slots.insert(*s);
        }
    }
    for atom in &base.cond {
        match atom {
            CondAtom::Eq(x, y) => {
                if let (Some(&sx), Some(&sy)) = (slot_of_var.get(x), slot_of_var.get(y)) {
                    for node in &mut shape.nodes {
                        if node.label == SLabel::Slot(sy) {
                            node.label = SLabel::Slot(sx);
                        }
                    }
                }
            }
            CondAtom::Neq(x, y) => {
                if let (Some(&sx), Some(&sy)) = (slot_of_var.get(x), slot_of_var.get(y)) {
                    shape.neq.push((sx, sy));
                }
            }
        }
    }
    shape
}

// ---------------------------------------------------------------------------
// Overlay search
// ---------------------------------------------------------------------------

struct Overlay<'a> {
    shape: &'a Shape,
    alphabet: &'a [Tag],
    injective: bool,
    /// True for the rule-footprint pass (phases and deletions are live);
    /// false for pattern gluing onto a pre-state candidate.
    rule_phase: bool,
    opts: &'a PredOptions,
    base_len: usize,
    out: Vec<Candidate>,
    capped: bool,
}

impl<'a> Overlay<'a> {
    /// heights below each shape node (for depth budgeting)
    fn shape_height(&self, n: usize) -> u64 {
        self.shape.nodes[n]
            .children
            .iter()
            .map(|c| 1 + self.shape_height(*c))
            .max()
            .unwrap_or(0)
    }

    fn run(&mut self, base: Option<&Candidate>) {
        let mut cand = base.cloned().unwrap_or_default();
        self.base_len = cand.nodes.len();
        // local slot -> candidate slot
        let mut slot_map: Vec<Option<usize>> = vec![None; self.shape.slot_count];
        for s in 0..self.shape.slot_count {
            let anchor = Anchor {
                fresh_var: self.shape.fresh_slots.contains(&s),
                ..Anchor::default()
            };
            slot_map[s] = Some(cand.new_slot(anchor));
        }
        let slot_map: Vec<usize> = slot_map.into_iter().map(|s| s.unwrap()).collect();
        for (a, b) in &self.shape.neq {
            cand.neq.push((slot_map[*a], slot_map[*b]));
        }
        let mut map: Vec<Option<usize>> = vec![None; self.shape.nodes.len()];
        self.assign(cand, 0, &mut map, &slot_map, base.is_none());
    }

    fn label_compatible(
        &self,
        cand: &mut Candidate,
        slabel: &SLabel,
        node: usize,
        slot_map: &[usize],
    ) -> bool {
        match (slabel, cand.nodes[node].label.clone()) {
            (SLabel::Tag(a), CLabel::Tag(b)) => *a == b,
            (SLabel::Tag(a), CLabel::AnyTag) => {
                cand.nodes[node].label = CLabel::Tag(a.clone());
                true
            }
            (SLabel::AnyTag, CLabel::Tag(_)) | (SLabel::AnyTag, CLabel::AnyTag) => true,
            (SLabel::Slot(s), CLabel::Data(c)) => cand.union(slot_map[*s], c),
            (SLabel::Const(v), CLabel::Data(c)) => {
                let slot = cand.new_slot(Anchor {
                    constant: Some(*v),
                    ..Anchor::default()
                });
                cand.union(slot, c)
            }
            _ => false,
        }
    }

    fn new_label(&self, cand: &mut Candidate, slabel: &SLabel, slot_map: &[usize]) -> CLabel {
        match slabel {
            SLabel::Tag(t) => CLabel::Tag(t.clone()),
            SLabel::AnyTag => CLabel::AnyTag,
            SLabel::Slot(s) => CLabel::Data(slot_map[*s]),
            SLabel::Const(v) => {
                let slot = cand.new_slot(Anchor {
                    constant: Some(*v),
                    ..Anchor::default()
                });
                CLabel::Data(slot)
            }
        }
    }

    fn finish_node(
        &mut self,
        cand: &mut Candidate,
        shape_node: usize,
        cand_node: usize,
    ) {
        let s = &self.shape.nodes[shape_node];
        if let Some(pre) = &s.pre_label {
            // the candidate keeps the pre label; post label recorded aside
            let post = match &cand.nodes[cand_node].label {
                CLabel::Tag(t) => t.clone(),
                _ => unreachable!("renames only touch tag nodes"),
            };
            cand.nodes[cand_node].post_tag = Some(post);
            cand.nodes[cand_node].label = match pre {
                SLabel::Tag(t) => CLabel::Tag(t.clone()),
                SLabel::AnyTag => CLabel::AnyTag,
                _ => unreachable!(),
            };
        }
        if s.phase == Phase::PreOnly {
            cand.nodes[cand_node].deleted = true;
        }
        if s.phase == Phase::PostOnly {
            cand.nodes[cand_node].post_only = true;
            cand.nodes[cand_node].frozen = true;
        }
        cand.nodes[cand_node]
            .appended
            .extend(s.appended.iter().cloned());
    }

    fn assign(
        &mut self,
        cand: Candidate,
        idx: usize,
        map: &mut Vec<Option<usize>>,
        slot_map: &[usize],
        standalone: bool,
    ) {
        if self.out.len() >= self.opts.max_candidates {
            self.capped = true;
            return;
        }
        if idx == self.shape.nodes.len() {
            // exactness: overlaid pre-existing nodes below forest copies
            // must have every child covered by the copy structure
            for (s_idx, c_idx) in map.iter().enumerate().filter_map(|(i, m)| m.map(|c| (i, c))) {
                if !self.shape.nodes[s_idx].exact {
                    continue;
                }
                let covered: BTreeSet<usize> = self.shape.nodes[s_idx]
                    .children
                    .iter()
                    .filter_map(|sc| map[*sc])
                    .collect();
                for child in &cand.nodes[c_idx].children {
                    if !covered.contains(child) {
                        return; // uncovered child inside a copy
                    }
                }
            }
            self.out.push(cand);
            return;
        }
        let s = &self.shape.nodes[idx];
        let snode = s.clone();
        match snode.parent {
            None => {
                // pattern roots overlay the tree root; standalone shapes
                // create it
                if standalone {
                    let mut c = cand.clone();
                    let label = self.new_label(&mut c, &snode.label, slot_map);
                    let id = c.add_node(None, label);
                    map[idx] = Some(id);
                    self.finish_node(&mut c, idx, id);
                    self.assign(c, idx + 1, map, slot_map, standalone);
                    map[idx] = None;
                } else {
                    let mut c = cand.clone();
                    if !c.nodes.is_empty()
                        && self.label_compatible(&mut c, &snode.label, 0, slot_map)
                    {
                        map[idx] = Some(0);
                        self.finish_node(&mut c, idx, 0);
                        self.assign(c, idx + 1, map, slot_map, standalone);
                        map[idx] = None;
                    }
                }
            }
            Some(sparent) => {
                let pimage = map[sparent].expect("parents assigned before children");
                // (1) overlay onto an existing candidate node
                if snode.phase != Phase::PreOnly {
                    let targets: Vec<usize> = match snode.edge {
                        EdgeKind::Child => cand.nodes[pimage].children.clone(),
                        EdgeKind::Descendant => cand.descendants(pimage),
                    };
                    for tnode in targets {
                        if self.injective && map.iter().any(|m| *m == Some(tnode)) {
                            continue;
                        }
                        // appended copies are built by their own shape nodes
                        if cand.nodes[tnode].post_only {
                            continue;
                        }
                        // post-state content never overlays deleted regions
                        // (pattern glue targets the pre state, where deleted
                        // nodes are ordinary content)
                        if self.rule_phase && cand.nodes[tnode].deleted {
                            continue;
                        }
                        let mut c = cand.clone();
                        if !self.label_compatible(&mut c, &snode.label, tnode, slot_map) {
                            continue;
                        }
                        map[idx] = Some(tnode);
                        self.finish_node(&mut c, idx, tnode);
                        self.assign(c, idx + 1, map, slot_map, standalone);
                        map[idx] = None;
                    }
                }
                // (2) create new nodes (with a chain for descendant edges)
                let budget_height = self.shape_height(idx);
                let attach_points: Vec<usize> = match snode.edge {
                    EdgeKind::Child => vec![pimage],
                    EdgeKind::Descendant => {
                        let mut pts = vec![pimage];
                        pts.extend(cand.descendants(pimage));
                        pts
                    }
                };
                for attach in attach_points {
                    // frozen nodes only take their own copy's children
                    if cand.nodes[attach].frozen && snode.phase != Phase::PostOnly {
                        continue;
                    }
                    if matches!(cand.nodes[attach].label, CLabel::Data(_)) {
                        continue;
                    }
                    // phase coherence during the rule pass: post-state
                    // content never hangs below deletions; deleted content
                    // and pre-state pattern support may
                    if self.rule_phase
                        && cand.nodes[attach].deleted
                        && snode.phase != Phase::PreOnly
                    {
                        continue;
                    }
                    let base_depth = cand.depth_of(attach);
                    let max_chain = match snode.edge {
                        EdgeKind::Child => 0,
                        EdgeKind::Descendant => {
                            let room = self
                                .opts
                                .max_depth
                                .saturating_sub(base_depth + 1 + budget_height);
                            let lim = room.min(4);
                            if room > lim {
                                self.capped = true;
                            }
                            lim
                        }
                    };
                    for chain_len in 0..=max_chain {
                        self.with_chains(
                            &cand,
                            idx,
                            attach,
                            chain_len,
                            map,
                            slot_map,
                            standalone,
                        );
                    }
                }
            }
        }
    }

    /// Create `chain_len` intermediate tag nodes below `attach`, then the
    /// shape node itself, enumerating chain tags over the alphabet.
    #[allow(clippy::too_many_arguments)]
    fn with_chains(
        &mut self,
        cand: &Candidate,
        idx: usize,
        attach: usize,
        chain_len: u64,
        map: &mut Vec<Option<usize>>,
        slot_map: &[usize],
        standalone: bool,
    ) {
        let snode = self.shape.nodes[idx].clone();
        if cand.live_size() + chain_len as usize + 1 > self.opts.size_cap + 8 {
            self.capped = true;
            return;
        }
        if chain_len == 0 {
            let mut c = cand.clone();
            let label = self.new_label(&mut c, &snode.label, slot_map);
            let id = c.add_node(Some(attach), label);
            if snode.phase == Phase::PostOnly {
                c.nodes[id].post_only = true;
                c.nodes[id].frozen = true;
            }
            map[idx] = Some(id);
            self.finish_node(&mut c, idx, id);
            self.assign(c, idx + 1, map, slot_map, standalone);
            map[idx] = None;
        } else {
            for tag in self.alphabet {
                let mut c = cand.clone();
                let mid = c.add_node(Some(attach), CLabel::Tag(tag.clone()));
                // chains inherit the deletion region of the attach point;
                // they are ordinary survivors otherwise
                c.nodes[mid].deleted = c.nodes[attach].deleted;
                self.with_chains(&c, idx, mid, chain_len - 1, map, slot_map, standalone);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Completion
// ---------------------------------------------------------------------------

/// All minimal completion variants for a tag (different minimal models of
/// nested rules give incomparable minimal trees).
fn completion_variants(dtd: &Dtd, tag: &Tag, depth_left: u64) -> Vec<DataTreeTemplate> {
    if depth_left == 0 {
        return Vec::new();
    }
    let Some(formula) = dtd.rules.get(tag) else {
        return vec![DataTreeTemplate::Tag(tag.clone(), Vec::new())];
    };
    let Some(models) = formula.minimal_models() else {
        return Vec::new(); // non-positive: not handled here
    };
    let mut out = Vec::new();
    for model in models {
        let mut variants: Vec<Vec<DataTreeTemplate>> = vec![Vec::new()];
        let mut dead = false;
        for (label, k) in &model {
            for _ in 0..*k {
                let choices: Vec<DataTreeTemplate> = match label {
                    CountLabel::Dom => vec![DataTreeTemplate::DataSlot],
                    CountLabel::Tag(t) => completion_variants(dtd, t, depth_left - 1),
                };
                if choices.is_empty() {
                    dead = true;
                    break;
                }
                let mut next = Vec::new();
                for prefix in &variants {
                    for choice in &choices {
                        let mut v = prefix.clone();
                        v.push(choice.clone());
                        next.push(v);
                    }
                }
                variants = next;
            }
            if dead {
                break;
            }
        }
        if dead {
            continue;
        }
        for children in variants {
            out.push(DataTreeTemplate::Tag(tag.clone(), children));
        }
    }
    out
}

/// Completion content: tags with children, and unconstrained data slots to
/// be wired into the value-class enumeration.
#[derive(Debug, Clone)]
enum DataTreeTemplate {
    Tag(Tag, Vec<DataTreeTemplate>),
    DataSlot,
}

impl DataTreeTemplate {
    fn attach(&self, cand: &mut Candidate, parent: usize) {
        match self {
            DataTreeTemplate::DataSlot => {
                let slot = cand.new_slot(Anchor::default());
                cand.add_node(Some(parent), CLabel::Data(slot));
            }
            DataTreeTemplate::Tag(tag, children) => {
                let id = cand.add_node(Some(parent), CLabel::Tag(tag.clone()));
                for c in children {
                    c.attach(cand, id);
                }
            }
        }
    }
}

/// Extend every node's children so that both the pre-state counts and the
/// post-state counts (children minus deletions plus appends) satisfy their
/// formulas; enumerates minimal-model pairs.
fn complete(cand: &Candidate, dtd: &Dtd, opts: &PredOptions, capped: &mut bool) -> Vec<Candidate> {
    let mut results = vec![cand.clone()];
    let node_count = cand.nodes.len();
    for n in 0..node_count {
        let CLabel::Tag(tag) = cand.nodes[n].label.clone() else {
            continue;
        };
        let pre_formula = dtd.rules.get(&tag).cloned();
        let post_formula = cand.nodes[n]
            .post_tag
            .clone()
            .map(|t| dtd.rules.get(&t).cloned())
            .unwrap_or_else(|| pre_formula.clone());
        if pre_formula.is_none() && post_formula.is_none() {
            continue;
        }
        // current counts and the deleted/appended deltas
        let count_label = |cand: &Candidate, child: usize| -> CountLabel {
            match &cand.nodes[child].label {
                CLabel::Tag(t) => CountLabel::Tag(t.clone()),
                CLabel::AnyTag => unreachable!("wildcards are resolved before completion"),
                CLabel::Data(_) => CountLabel::Dom,
            }
        };
        let mut current: BTreeMap<CountLabel, u64> = BTreeMap::new();
        let mut deleted: BTreeMap<CountLabel, u64> = BTreeMap::new();
        for c in &cand.nodes[n].children {
            *current.entry(count_label(cand, *c)).or_insert(0) += 1;
            if cand.nodes[*c].deleted && !cand.nodes[n].deleted {
                *deleted.entry(count_label(cand, *c)).or_insert(0) += 1;
            }
        }
        let mut appended: BTreeMap<CountLabel, u64> = BTreeMap::new();
        for a in &cand.nodes[n].appended {
            *appended.entry(a.clone()).or_insert(0) += 1;
        }

        let pre_models = match &pre_formula {
            None => vec![BTreeMap::new()],
            Some(f) => match f.minimal_models() {
                Some(m) => m,
                None => return Vec::new(), // non-positive
            },
        };
        // nodes inside deletions have no post state
        let post_models = if cand.nodes[n].deleted {
            vec![BTreeMap::new()]
        } else {
            match &post_formula {
                None => vec![BTreeMap::new()],
                Some(f) => match f.minimal_models() {
                    Some(m) => m,
                    None => return Vec::new(),
                },
            }
        };

        let mut next_results = Vec::new();
        for base in &results {
            for m1 in &pre_models {
                for m2 in &post_models {
                    // required additions per label
                    let mut need: BTreeMap<CountLabel, u64> = BTreeMap::new();
                    let mut labels: BTreeSet<CountLabel> = BTreeSet::new();
                    labels.extend(m1.keys().cloned());
                    labels.extend(m2.keys().cloned());
                    for label in labels {
                        let cur = current.get(&label).copied().unwrap_or(0);
                        let del = deleted.get(&label).copied().unwrap_or(0);
                        let app = appended.get(&label).copied().unwrap_or(0);
                        let need_pre = m1.get(&label).copied().unwrap_or(0);
                        let need_post = m2.get(&label).copied().unwrap_or(0) + del;
                        let needed = need_pre.max(need_post.saturating_sub(app));
                        if needed > cur {
                            need.insert(label, needed - cur);
                        }
                    }
                    if need.is_empty() {
                        next_results.push(base.clone());
                        continue;
                    }
                    // instantiate additions, enumerating completion variants
                    let mut variants: Vec<Candidate> = vec![base.clone()];
                    let mut dead = false;
                    for (label, k) in &need {
                        for _ in 0..*k {
                            let choices: Vec<DataTreeTemplate> = match label {
                                CountLabel::Dom => vec![DataTreeTemplate::DataSlot],
                                CountLabel::Tag(t) => {
                                    completion_variants(dtd, t, opts.max_depth + 1)
                                }
                            };
                            if choices.is_empty() {
                                dead = true;
                                break;
                            }
                            let mut grown = Vec::new();
                            for v in &variants {
                                for choice in &choices {
                                    let mut c = v.clone();
                                    choice.attach(&mut c, n);
                                    grown.push(c);
                                }
                            }
                            variants = grown;
                            if variants.len() > opts.max_candidates {
                                *capped = true;
                                variants.truncate(opts.max_candidates);
                            }
                        }
                        if dead {
                            break;
                        }
                    }
                    if !dead {
                        next_results.extend(variants);
                    }
                }
            }
        }
        results = next_results;
        if results.len() > opts.max_candidates {
            *capped = true;
            results.truncate(opts.max_candidates);
        }
    }
    results
}

// ---------------------------------------------------------------------------
// Wildcards, guard support, value sharing
// ---------------------------------------------------------------------------

fn resolve_anytags(cand: &Candidate, alphabet: &[Tag]) -> Vec<Candidate> {
    let unresolved: Vec<usize> = cand
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.label == CLabel::AnyTag)
        .map(|(i, _)| i)
        .collect();
    let mut out = vec![cand.clone()];
    for n in unresolved {
        let mut next = Vec::new();
        for c in &out {
            for tag in alphabet {
                let mut v = c.clone();
                v.nodes[n].label = CLabel::Tag(tag.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Witness choices of a positive formula: sets of atoms whose joint
/// satisfaction makes the formula true, minimized over disjunctions.
fn formula_witnesses(f: &PatternFormula) -> Vec<Vec<&TreePattern>> {
    match f {
        PatternFormula::True => vec![Vec::new()],
        PatternFormula::False => Vec::new(),
        PatternFormula::Atom(p) => vec![vec![p]],
        PatternFormula::And(fs) => {
            let mut acc: Vec<Vec<&TreePattern>> = vec![Vec::new()];
            for g in fs {
                let sub = formula_witnesses(g);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &sub {
                        let mut v = a.clone();
                        v.extend(b.iter().copied());
                        next.push(v);
                    }
                }
                acc = next;
            }
            acc
        }
        PatternFormula::Or(fs) => fs.iter().flat_map(formula_witnesses).collect(),
        PatternFormula::Not(_) => Vec::new(), // positive systems only
    }
}

/// Glue minimal support for every atom in `atoms` onto the candidate.
fn glue_atoms(
    cand: &Candidate,
    atoms: &[&TreePattern],
    alphabet: &[Tag],
    opts: &PredOptions,
    capped: &mut bool,
) -> Vec<Candidate> {
    let mut results = vec![cand.clone()];
    for atom in atoms {
        let shape = pattern_shape(atom);
        let mut next = Vec::new();
        for base in &results {
            let mut ov = Overlay {
                shape: &shape,
                alphabet,
                injective: false,
                rule_phase: false,
                opts,
                base_len: 0,
                out: Vec::new(),
                capped: false,
            };
            ov.run(Some(base));
            *capped |= ov.capped;
            next.extend(ov.out);
        }
        results = next;
        if results.len() > opts.max_candidates {
            *capped = true;
            results.truncate(opts.max_candidates);
        }
    }
    results
}

/// Enumerate value-sharing: each free class merges into a pinned class or
/// into a fresh block (restricted growth keeps the enumeration canonical).
fn sharing_choices(cand: &Candidate, opts: &PredOptions, capped: &mut bool) -> Vec<DataTree> {
    let free = cand.free_classes();
    let pinned = cand.pinned_classes();
    if free.len() > opts.max_free_slots {
        *capped = true;
        // fresh-only fallback
        return cand.realize(&BTreeMap::new()).into_iter().collect();
    }
    let mut out = Vec::new();
    let mut merge: BTreeMap<usize, usize> = BTreeMap::new();
    fn go(
        cand: &Candidate,
        free: &[usize],
        pinned: &[usize],
        idx: usize,
        merge: &mut BTreeMap<usize, usize>,
        out: &mut Vec<DataTree>,
    ) {
        if idx == free.len() {
            out.extend(cand.realize(merge));
            return;
        }
        let class = free[idx];
        // (a) a fresh block of its own
        go(cand, free, pinned, idx + 1, merge, out);
        // (b) join the block of an earlier free class (restricted growth:
        // only block representatives are merge targets)
        for earlier in &free[..idx] {
            if merge.contains_key(earlier) {
                continue;
            }
            merge.insert(class, *earlier);
            go(cand, free, pinned, idx + 1, merge, out);
            merge.remove(&class);
        }
        // (c) share an existing pinned value
        for p in pinned {
            merge.insert(class, *p);
            go(cand, free, pinned, idx + 1, merge, out);
            merge.remove(&class);
        }
    }
    go(cand, &free, &pinned, 0, &mut merge, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

fn within_bounds(t: &DataTree, opts: &PredOptions) -> bool {
    if t.depth() > opts.max_depth {
        return false;
    }
    let g = graph_of(t, u64::MAX).expect("unbounded");
    longest_simple_path(&g) <= opts.max_path
}

/// The minimal invariant trees with a one-step successor covering `t`,
/// together with a flag marking whether any cap was hit (in which case the
/// result may be incomplete and empty answers are inconclusive).
pub fn pred_basis(
    sys: &System,
    t: &DataTree,
    opts: &PredOptions,
) -> Result<(Basis, bool), AnalysisError> {
    let alphabet: Vec<Tag> = sys.alphabet.iter().cloned().collect();
    let mut capped = false;
    let mut verified: Vec<DataTree> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();

    for rule in &sys.rules {
        if !rule.queries.is_empty() {
            return Err(AnalysisError::QueriesUnsupported(rule.name.clone()));
        }
        let shape = rule_shape(rule);
        let base = Candidate::from_tree(t);
        let mut ov = Overlay {
            shape: &shape,
            alphabet: &alphabet,
            injective: true,
            rule_phase: true,
            opts,
            base_len: 0,
            out: Vec::new(),
            capped: false,
        };
        ov.run(Some(&base));
        capped |= ov.capped;

        let witness_sets: Vec<Vec<&TreePattern>> = {
            let mut w = formula_witnesses(&rule.guard);
            let inv = formula_witnesses(&sys.data_invariant);
            // combine guard and invariant support
            let mut combined = Vec::new();
            for a in w.drain(..) {
                for b in &inv {
                    let mut v = a.clone();
                    v.extend(b.iter().copied());
                    combined.push(v);
                }
            }
            combined
        };

        for overlayed in ov.out {
            let assembled = overlayed.assemble();
            let mut glued_all = Vec::new();
            for atoms in &witness_sets {
                glued_all.extend(glue_atoms(&assembled, atoms, &alphabet, opts, &mut capped));
            }
            for glued in glued_all {
                for resolved in resolve_anytags(&glued, &alphabet) {
                    for completed in complete(&resolved, &sys.dtd, opts, &mut capped) {
                        if completed.live_size() > opts.size_cap {
                            capped = true;
                            continue;
                        }
                        for t1 in sharing_choices(&completed, opts, &mut capped) {
                            if t1.len() > opts.size_cap {
                                capped = true;
                                continue;
                            }
                            let key = canonical_print(&t1);
                            if !seen.insert(key) {
                                continue;
                            }
                            if !verify_predecessor(sys, rule, &t1, t, opts)? {
                                continue;
                            }
                            verified.push(t1);
                        }
                    }
                }
            }
        }
    }

    let mut basis = Basis::new();
    for t1 in verified {
        basis.insert(t1);
    }
    Ok((basis, capped))
}

fn verify_predecessor(
    sys: &System,
    rule: &Rule,
    t1: &DataTree,
    target: &DataTree,
    opts: &PredOptions,
) -> Result<bool, AnalysisError> {
    if !sys.satisfies_invariant(t1)? {
        return Ok(false);
    }
    if !within_bounds(t1, opts) {
        return Ok(false);
    }
    for w in enabled(rule, t1, sys)? {
        if !within_bounds(&w.result, opts) {
            continue;
        }
        if embeds(target, &w.result).is_some() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Minimal invariant trees matched by a pattern: the backward search's
/// starting basis.
pub fn target_basis(sys: &System, pattern: &TreePattern, opts: &PredOptions) -> (Basis, bool) {
    let alphabet: Vec<Tag> = sys.alphabet.iter().cloned().collect();
    let mut capped = false;
    let shape = pattern_shape(pattern);
    let mut ov = Overlay {
        shape: &shape,
        alphabet: &alphabet,
        injective: false,
        rule_phase: false,
        opts,
        base_len: 0,
        out: Vec::new(),
        capped: false,
    };
    ov.run(None);
    capped |= ov.capped;

    let inv_witnesses = formula_witnesses(&sys.data_invariant);
    let mut basis = Basis::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for cand in ov.out {
        let mut glued_all = Vec::new();
        for atoms in &inv_witnesses {
            glued_all.extend(glue_atoms(&cand, atoms, &alphabet, opts, &mut capped));
        }
        for glued in glued_all {
            for resolved in resolve_anytags(&glued, &alphabet) {
                for completed in complete(&resolved, &sys.dtd, opts, &mut capped) {
                    if completed.live_size() > opts.size_cap {
                        capped = true;
                        continue;
                    }
                    for t0 in sharing_choices(&completed, opts, &mut capped) {
                        if t0.len() > opts.size_cap {
                            capped = true;
                            continue;
                        }
                        let key = canonical_print(&t0);
                        if !seen.insert(key) {
                            continue;
                        }
                        let ok = sys.satisfies_invariant(&t0).unwrap_or(false)
                            && within_bounds(&t0, opts)
                            && !crate::pattern::match_all(pattern, &t0, None)
                                .unwrap_or_default()
                                .is_empty();
                        if ok {
                            basis.insert(t0);
                        }
                    }
                }
            }
        }
    }
    (basis, capped)
}
