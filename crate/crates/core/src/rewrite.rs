//! Rewrite rules over data trees: locators with delete/rename/append
//! actions, guards, queries, one-step application, successor enumeration,
//! and the reduction of service call/return steps to rules.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon;
use crate::dtd::Dtd;
use crate::graph::{graph_of, longest_simple_path};
use crate::pattern::{
    eval_formula, eval_query, matchings, CondAtom, EdgeKind, MatchError, Matching, PatternFormula,
    PatternLabel, PatternNodeId, Query, Template, TreePattern, VarName,
};
use crate::tree::{DataTree, DataValue, NodeId, Tag};

/// A locator: a relative pattern whose nodes may carry delete, rename, and
/// append annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locator {
    pub base: TreePattern,
    pub appends: BTreeSet<PatternNodeId>,
    pub renames: BTreeMap<PatternNodeId, Tag>,
    pub deletes: BTreeSet<PatternNodeId>,
}

impl Locator {
    pub fn plain(base: TreePattern) -> Self {
        Locator {
            base,
            appends: BTreeSet::new(),
            renames: BTreeMap::new(),
            deletes: BTreeSet::new(),
        }
    }

    /// Deleted nodes that have no deleted ancestor; deleting these subtrees
    /// removes the whole downward-closed delete set.
    pub fn maximal_deletes(&self) -> Vec<PatternNodeId> {
        self.deletes
            .iter()
            .copied()
            .filter(|n| {
                let mut cur = self.base.parent(*n);
                while let Some(p) = cur {
                    if self.deletes.contains(&p) {
                        return false;
                    }
                    cur = self.base.parent(p);
                }
                true
            })
            .collect()
    }

    /// Structural invariants: append/rename only on tag or wildcard nodes,
    /// deletes downward-closed and disjoint from append/rename, no delete at
    /// the pattern root.
    pub fn check_invariants(&self) -> Result<(), String> {
        for n in self.appends.iter().chain(self.renames.keys()) {
            match self.base.label(*n) {
                PatternLabel::Tag(_) | PatternLabel::Wildcard => {}
                PatternLabel::Var(_) => {
                    return Err("append/rename on a variable node".into());
                }
            }
            if self.deletes.contains(n) {
                return Err("append/rename on a deleted node".into());
            }
        }
        for n in &self.deletes {
            for c in self.base.children(*n) {
                if !self.deletes.contains(c) {
                    return Err("delete set is not downward-closed".into());
                }
            }
        }
        if self.deletes.contains(&TreePattern::ROOT) {
            return Err("the locator root cannot be deleted".into());
        }
        self.base.check_invariants()
    }
}

/// A rewrite rule (locator, guard, queries, forests, append map).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub locator: Locator,
    pub guard: PatternFormula,
    pub queries: BTreeMap<String, Query>,
    pub forests: BTreeMap<String, Vec<Template>>,
    /// append node -> forest name
    pub chi: BTreeMap<PatternNodeId, String>,
}

impl Rule {
    /// Variables occurring in forests but not in the locator take fresh
    /// values, in lexicographic name order.
    pub fn fresh_variables(&self) -> Vec<VarName> {
        let locator_vars: BTreeSet<VarName> =
            self.locator.base.variables().into_iter().collect();
        let mut fresh: BTreeSet<VarName> = BTreeSet::new();
        for forest in self.forests.values() {
            for template in forest {
                for v in template.variables() {
                    if !locator_vars.contains(&v) {
                        fresh.insert(v);
                    }
                }
            }
        }
        fresh.into_iter().collect()
    }

    /// Rule-level sanity: chi total on appends, forest references resolve,
    /// query heads draw variables from their bodies, relative guard/query
    /// atoms need a self node.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.locator.check_invariants()?;
        for n in &self.locator.appends {
            if !self.chi.contains_key(n) {
                return Err(format!("rule {}: append node without forest", self.name));
            }
        }
        for (n, f) in &self.chi {
            if !self.locator.appends.contains(n) {
                return Err(format!("rule {}: chi on a non-append node", self.name));
            }
            if !self.forests.contains_key(f) {
                return Err(format!("rule {}: unknown forest {f}", self.name));
            }
        }
        for forest in self.forests.values() {
            for template in forest {
                for q in template.query_refs() {
                    if !self.queries.contains_key(&q) {
                        return Err(format!("rule {}: unknown query {q}", self.name));
                    }
                }
            }
        }
        for (name, q) in &self.queries {
            let body_vars: BTreeSet<VarName> = q.body.variables().into_iter().collect();
            let head_vars = q.head.variables();
            if head_vars.is_empty() {
                return Err(format!(
                    "rule {}: query {name} has no head variable",
                    self.name
                ));
            }
            for v in &head_vars {
                if !body_vars.contains(v) {
                    return Err(format!(
                        "rule {}: head variable {v} not in body of {name}",
                        self.name
                    ));
                }
            }
            if !q.head.query_refs().is_empty() {
                return Err(format!("rule {}: query head references a query", self.name));
            }
        }
        // queries are always evaluated relative to the self image
        let needs_self = self.guard.has_relative_atom() || !self.queries.is_empty();
        if needs_self && self.locator.base.self_node.is_none() {
            return Err(format!(
                "rule {}: relative guard or query requires a self node in the locator",
                self.name
            ));
        }
        Ok(())
    }
}

/// Initial-state description: explicit trees, or the system invariant plus
/// a pattern formula with an enumeration cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitSpec {
    Explicit(Vec<DataTree>),
    Symbolic { formula: PatternFormula, cap: usize },
}

/// A rewriting system: rules plus the static invariant (DTD and data
/// invariant) and the declared bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct System {
    pub name: String,
    pub alphabet: BTreeSet<Tag>,
    pub rules: Vec<Rule>,
    pub dtd: Dtd,
    pub data_invariant: PatternFormula,
    pub depth_bound: Option<u64>,
    pub simple_path_bound: Option<u64>,
    pub init: InitSpec,
}

impl System {
    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// A tree satisfies the static invariant if the DTD accepts it and the
    /// data invariant holds.
    pub fn satisfies_invariant(&self, t: &DataTree) -> Result<bool, MatchError> {
        Ok(self.dtd.check(t) && eval_formula(&self.data_invariant, t, None)?)
    }

    /// Effective depth bound: declared, or derived from the DTD.
    pub fn effective_depth_bound(&self) -> u64 {
        if let Some(b) = self.depth_bound {
            return b;
        }
        self.dtd.depth_bound().unwrap_or(u64::MAX)
    }
}

/// One applied step: enough to replay it bit for bit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepWitness {
    pub rule: String,
    pub matching: Matching,
    pub valuation: BTreeMap<VarName, DataValue>,
    pub result: DataTree,
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("matching is not injective")]
    NotInjective,
    #[error("data constraint of the locator is not satisfied")]
    CondUnsatisfied,
    #[error("matching deletes the root")]
    RootDeleted,
    #[error("a rename/append target lies inside a deleted subtree")]
    ActionInsideDeletion,
    #[error("query evaluation needs a self anchor")]
    MissingAnchor,
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("template instantiation: {0}")]
    Template(#[from] crate::pattern::TemplateError),
}

#[derive(Debug, Error)]
pub enum SuccError {
    #[error(
        "simple-path bound {bound} exceeded by a successor of rule {rule} (path length {got}): {tree}"
    )]
    PathBound {
        rule: String,
        bound: u64,
        got: u64,
        tree: String,
    },
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// How successor enumeration treats the declared simple-path bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathBoundMode {
    /// Error out on violation (used by the positive-system procedures).
    Enforce,
    /// Silently drop violating successors (used when restricting a search
    /// to the bounded state space).
    Filter,
    /// No monitoring (general forward exploration).
    Off,
}

fn cond_holds_under(
    cond: &[CondAtom],
    valuation: &BTreeMap<VarName, DataValue>,
) -> bool {
    cond.iter().all(|atom| match atom {
        CondAtom::Eq(x, y) => valuation.get(x) == valuation.get(y),
        CondAtom::Neq(x, y) => valuation.get(x) != valuation.get(y),
    })
}

/// Apply `rule` at the injective matching `mu`, producing the successor
/// tree and the full valuation (locator-bound plus canonical fresh values).
///
/// Queries are evaluated on the pre-state; the step deletes, then renames,
/// then appends, all anchored at the pre-state images.
pub fn apply(
    rule: &Rule,
    t: &DataTree,
    mu: &Matching,
) -> Result<(DataTree, BTreeMap<VarName, DataValue>), ApplyError> {
    let locator = &rule.locator;
    let base = &locator.base;

    // Preconditions: injectivity, cond, no root deletion, no action target
    // inside a deleted image (cross-branch nesting in the subject tree).
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    for (_, tn) in mu.pairs() {
        if !seen.insert(tn) {
            return Err(ApplyError::NotInjective);
        }
    }
    let mut valuation = mu.valuation(base, t);
    if !cond_holds_under(&base.cond, &valuation) {
        return Err(ApplyError::CondUnsatisfied);
    }
    let max_deletes = locator.maximal_deletes();
    let deleted_roots: Vec<NodeId> = max_deletes.iter().map(|n| mu.get(*n)).collect();
    if deleted_roots.contains(&DataTree::ROOT) {
        return Err(ApplyError::RootDeleted);
    }
    let inside_deletion = |n: NodeId| {
        deleted_roots
            .iter()
            .any(|d| *d == n || t.is_proper_ancestor(*d, n))
    };
    for pn in locator.appends.iter().chain(locator.renames.keys()) {
        if inside_deletion(mu.get(*pn)) {
            debug!(
                "rule {}: matching disabled, action target nested in a deleted subtree",
                rule.name
            );
            return Err(ApplyError::ActionInsideDeletion);
        }
    }

    // Fresh values for forest-only variables: smallest unused naturals, in
    // lexicographic variable order.
    let used_values = t.data_values();
    let mut next_fresh = 0u64;
    for v in rule.fresh_variables() {
        while used_values.contains(&DataValue(next_fresh)) {
            next_fresh += 1;
        }
        valuation.insert(v, DataValue(next_fresh));
        next_fresh += 1;
    }

    // Queries on the pre-state, relative to mu(self).
    let mut query_results: BTreeMap<String, Vec<DataTree>> = BTreeMap::new();
    if !rule.queries.is_empty() {
        let anchor = base
            .self_node
            .map(|s| mu.get(s))
            .ok_or(ApplyError::MissingAnchor)?;
        for (name, q) in &rule.queries {
            query_results.insert(name.clone(), eval_query(q, t, anchor)?);
        }
    }

    // Forests are instantiated once per application and appended as
    // structure-equal copies wherever chi points at them.
    let mut instantiated: BTreeMap<&str, Vec<DataTree>> = BTreeMap::new();
    for fname in rule.chi.values() {
        if !instantiated.contains_key(fname.as_str()) {
            let mut trees = Vec::new();
            for template in &rule.forests[fname] {
                trees.extend(template.instantiate(&valuation, &query_results)?);
            }
            instantiated.insert(fname, trees);
        }
    }

    let deleted: BTreeSet<NodeId> = deleted_roots.iter().copied().collect();
    let renames: BTreeMap<NodeId, Tag> = locator
        .renames
        .iter()
        .map(|(pn, tag)| (mu.get(*pn), tag.clone()))
        .collect();
    let mut appends: BTreeMap<NodeId, Vec<DataTree>> = BTreeMap::new();
    for (pn, fname) in &rule.chi {
        appends
            .entry(mu.get(*pn))
            .or_default()
            .extend(instantiated[fname.as_str()].iter().cloned());
    }

    let (result, _) = t.rebuild(&deleted, &renames, &appends);
    Ok((result, valuation))
}

/// All step witnesses of one rule on `t`: injective matchings of the
/// locator whose guard holds at the self image and whose result satisfies
/// the static invariant.
pub fn enabled(rule: &Rule, t: &DataTree, sys: &System) -> Result<Vec<StepWitness>, MatchError> {
    let base = &rule.locator.base;
    let mut out = Vec::new();
    for mu in matchings(base, t, None, true) {
        let anchor = base.self_node.map(|s| mu.get(s));
        match eval_formula(&rule.guard, t, anchor) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(e) => return Err(e),
        }
        let (result, valuation) = match apply(rule, t, &mu) {
            Ok(r) => r,
            Err(ApplyError::Match(e)) => return Err(e),
            Err(_) => continue, // matching not usable; rule not enabled here
        };
        match sys.satisfies_invariant(&result) {
            Ok(true) => {}
            Ok(false) => continue,
            Err(e) => return Err(e),
        }
        out.push(StepWitness {
            rule: rule.name.clone(),
            matching: mu,
            valuation,
            result,
        });
    }
    Ok(out)
}

/// Successors of `t` under all rules, one representative per
/// equivalence class, in deterministic (rule, matching) order.
pub fn succ(
    sys: &System,
    t: &DataTree,
    mode: PathBoundMode,
) -> Result<Vec<StepWitness>, SuccError> {
    let mut out: Vec<StepWitness> = Vec::new();
    let mut keys: BTreeSet<String> = BTreeSet::new();
    let bound = sys.simple_path_bound;
    for rule in &sys.rules {
        for w in enabled(rule, t, sys)? {
            if let (Some(k), PathBoundMode::Enforce | PathBoundMode::Filter) = (bound, mode) {
                let g = graph_of(&w.result, u64::MAX).expect("no depth bound here");
                let got = longest_simple_path(&g);
                if got > k {
                    match mode {
                        PathBoundMode::Enforce => {
                            return Err(SuccError::PathBound {
                                rule: rule.name.clone(),
                                bound: k,
                                got,
                                tree: canon::canonical_print(&w.result),
                            });
                        }
                        _ => continue,
                    }
                }
            }
            let key = canon::canonical_print(&w.result);
            if keys.insert(key) {
                out.push(w);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Service call/return reduction
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("tag {0} is not in the system alphabet")]
    MissingTag(String),
}

fn require_tags(alphabet: &BTreeSet<Tag>, tags: &[&Tag]) -> Result<(), CompileError> {
    for t in tags {
        if !alphabet.contains(*t) {
            return Err(CompileError::MissingTag(t.to_string()));
        }
    }
    Ok(())
}

pub fn call_tag(f: &Tag) -> Tag {
    Tag::new(format!("!{f}"))
}

pub fn pending_tag(f: &Tag) -> Tag {
    Tag::new(format!("?{f}"))
}

pub fn workspace_tag() -> Tag {
    Tag::new("WS")
}

/// Rule for invoking an internal service `f`: the `!f` node (self, somewhere
/// below the root) is renamed to `?f` and given a fresh identifier leaf; the
/// workspace receives `[f](arg-query result, identifier)`.
pub fn compile_gaxml_call(
    alphabet: &BTreeSet<Tag>,
    f: &Tag,
    arg_query: Query,
    call_guard: PatternFormula,
) -> Result<Rule, CompileError> {
    let call = call_tag(f);
    let pending = pending_tag(f);
    let ws = workspace_tag();
    require_tags(alphabet, &[&call, &pending, &ws])?;

    // [*]( -[!f]{self, ren=?f, append=T_X}, [WS]{append=T_f} )
    let base = TreePattern::node(
        PatternLabel::Wildcard,
        vec![
            (EdgeKind::Descendant, TreePattern::leaf(PatternLabel::Tag(call.clone()))),
            (EdgeKind::Child, TreePattern::leaf(PatternLabel::Tag(ws.clone()))),
        ],
    );
    let call_node = PatternNodeId(1);
    let ws_node = PatternNodeId(2);
    let base = base.with_self(call_node);

    let mut locator = Locator::plain(base);
    locator.appends.insert(call_node);
    locator.appends.insert(ws_node);
    locator.renames.insert(call_node, pending);

    let query_name = "arg".to_string();
    let t_f = Template::node(
        f.as_str(),
        vec![Template::query_leaf(&query_name), Template::var_leaf("X")],
    );
    let t_x = Template::var_leaf("X");

    let mut forests = BTreeMap::new();
    forests.insert("T_f".to_string(), vec![t_f]);
    forests.insert("T_X".to_string(), vec![t_x]);
    let mut chi = BTreeMap::new();
    chi.insert(call_node, "T_X".to_string());
    chi.insert(ws_node, "T_f".to_string());
    let mut queries = BTreeMap::new();
    queries.insert(query_name, arg_query);

    let rule = Rule {
        name: format!("call-{f}"),
        locator,
        guard: call_guard,
        queries,
        forests,
        chi,
    };
    rule.check_invariants().expect("compiled call rule is well-formed");
    Ok(rule)
}

/// Rule for returning an internal service `f`: locates the pending `?f`
/// whose identifier matches the workspace entry (X = Y), appends the return
/// query's result as a sibling of `?f`, deletes the workspace entry and
/// both identifiers, and renames `?f` back to `!f`.
pub fn compile_gaxml_return(
    alphabet: &BTreeSet<Tag>,
    f: &Tag,
    ret_query: Query,
    ret_guard: PatternFormula,
) -> Result<Rule, CompileError> {
    let call = call_tag(f);
    let pending = pending_tag(f);
    let ws = workspace_tag();
    require_tags(alphabet, &[&call, &pending, &ws])?;

    // [*]( -[*]{append=T_Q}( [?f]{self, ren=!f}( $X{del} ) ),
    //      [WS]( [f]{del}( $Y{del} ) ) )  with X = Y
    let base = TreePattern::node(
        PatternLabel::Wildcard,
        vec![
            (
                EdgeKind::Descendant,
                TreePattern::node(
                    PatternLabel::Wildcard,
                    vec![(
                        EdgeKind::Child,
                        TreePattern::node(
                            PatternLabel::Tag(pending.clone()),
                            vec![(EdgeKind::Child, TreePattern::var_leaf("X"))],
                        ),
                    )],
                ),
            ),
            (
                EdgeKind::Child,
                TreePattern::node(
                    PatternLabel::Tag(ws.clone()),
                    vec![(
                        EdgeKind::Child,
                        TreePattern::node(
                            PatternLabel::Tag(f.clone()),
                            vec![(EdgeKind::Child, TreePattern::var_leaf("Y"))],
                        ),
                    )],
                ),
            ),
        ],
    )
    .with_cond(vec![CondAtom::Eq(VarName::new("X"), VarName::new("Y"))]);
    // node ids in preorder: 0 root, 1 parent-of-?f (*), 2 ?f, 3 $X, 4 WS, 5 f, 6 $Y
    let parent_node = PatternNodeId(1);
    let pending_node = PatternNodeId(2);
    let x_node = PatternNodeId(3);
    let f_node = PatternNodeId(5);
    let y_node = PatternNodeId(6);
    let base = base.with_self(pending_node);

    let mut locator = Locator::plain(base);
    locator.appends.insert(parent_node);
    locator.renames.insert(pending_node, call);
    locator.deletes.insert(x_node);
    locator.deletes.insert(f_node);
    locator.deletes.insert(y_node);

    let query_name = "ret".to_string();
    let mut forests = BTreeMap::new();
    forests.insert("T_Q".to_string(), vec![Template::query_leaf(&query_name)]);
    let mut chi = BTreeMap::new();
    chi.insert(parent_node, "T_Q".to_string());
    let mut queries = BTreeMap::new();
    queries.insert(query_name, ret_query);

    let rule = Rule {
        name: format!("return-{f}"),
        locator,
        guard: ret_guard,
        queries,
        forests,
        chi,
    };
    rule.check_invariants().expect("compiled return rule is well-formed");
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::PatternFormula;

    fn tiny_system(rules: Vec<Rule>) -> System {
        System {
            name: "tiny".into(),
            alphabet: ["a", "b", "c"].iter().map(|s| Tag::new(*s)).collect(),
            rules,
            dtd: Dtd::new([Tag::new("a"), Tag::new("b")]),
            data_invariant: PatternFormula::True,
            depth_bound: Some(4),
            simple_path_bound: Some(8),
            init: InitSpec::Explicit(vec![]),
        }
    }

    fn rename_root_rule(from: &str, to: &str) -> Rule {
        let base = TreePattern::tag_leaf(from);
        let mut locator = Locator::plain(base);
        locator.renames.insert(TreePattern::ROOT, Tag::new(to));
        Rule {
            name: format!("{from}-to-{to}"),
            locator,
            guard: PatternFormula::True,
            queries: BTreeMap::new(),
            forests: BTreeMap::new(),
            chi: BTreeMap::new(),
        }
    }

    #[test]
    fn empty_action_rule_is_identity() {
        let rule = Rule {
            name: "noop".into(),
            locator: Locator::plain(TreePattern::tag_leaf("a")),
            guard: PatternFormula::True,
            queries: BTreeMap::new(),
            forests: BTreeMap::new(),
            chi: BTreeMap::new(),
        };
        let t = DataTree::node("a", vec![DataTree::tag_leaf("b"), DataTree::data_leaf(1)]);
        let ms = matchings(&rule.locator.base, &t, None, true);
        assert_eq!(ms.len(), 1);
        let (result, _) = apply(&rule, &t, &ms[0]).unwrap();
        assert_eq!(result, t);
    }

    #[test]
    fn rename_changes_tag_in_place() {
        let rule = rename_root_rule("a", "b");
        let t = DataTree::node("a", vec![DataTree::tag_leaf("c")]);
        let ms = matchings(&rule.locator.base, &t, None, true);
        let (result, _) = apply(&rule, &t, &ms[0]).unwrap();
        assert_eq!(result, DataTree::node("b", vec![DataTree::tag_leaf("c")]));
    }

    #[test]
    fn fresh_values_avoid_tree_values() {
        // append a fresh-value leaf under the root
        let base = TreePattern::tag_leaf("a");
        let mut locator = Locator::plain(base);
        locator.appends.insert(TreePattern::ROOT);
        let mut forests = BTreeMap::new();
        forests.insert("F".to_string(), vec![Template::var_leaf("Z")]);
        let mut chi = BTreeMap::new();
        chi.insert(TreePattern::ROOT, "F".to_string());
        let rule = Rule {
            name: "grow".into(),
            locator,
            guard: PatternFormula::True,
            queries: BTreeMap::new(),
            forests,
            chi,
        };
        let t = DataTree::node("a", vec![DataTree::data_leaf(0), DataTree::data_leaf(2)]);
        let ms = matchings(&rule.locator.base, &t, None, true);
        let (result, valuation) = apply(&rule, &t, &ms[0]).unwrap();
        assert_eq!(valuation[&VarName::new("Z")], DataValue(1));
        assert_eq!(result.len(), 4);
        assert_eq!(result.data_values().len(), 3);
    }

    #[test]
    fn guard_false_disables_rule() {
        let mut rule = rename_root_rule("a", "b");
        rule.guard = PatternFormula::False;
        let sys = tiny_system(vec![rule]);
        let t = DataTree::tag_leaf("a");
        assert!(enabled(&sys.rules[0], &t, &sys).unwrap().is_empty());
    }

    #[test]
    fn succ_quotients_equivalent_results() {
        // two rules renaming the root to b produce one class
        let mut r1 = rename_root_rule("a", "b");
        r1.name = "r1".into();
        let mut r2 = rename_root_rule("a", "b");
        r2.name = "r2".into();
        let sys = tiny_system(vec![r1, r2]);
        let t = DataTree::tag_leaf("a");
        let ws = succ(&sys, &t, PathBoundMode::Off).unwrap();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].rule, "r1");
    }

    #[test]
    fn succ_empty_when_nothing_enabled() {
        let sys = tiny_system(vec![rename_root_rule("c", "b")]);
        let t = DataTree::tag_leaf("a");
        assert!(succ(&sys, &t, PathBoundMode::Off).unwrap().is_empty());
    }

    #[test]
    fn invariant_filters_successors() {
        // DTD requires b-root to have a c child; renaming a->b violates it
        let mut sys = tiny_system(vec![rename_root_rule("a", "b")]);
        sys.dtd = Dtd::new([Tag::new("a"), Tag::new("b")]).with_rule(
            "b",
            crate::dtd::CountFormula::AtLeast(
                crate::dtd::CountLabel::Tag(Tag::new("c")),
                1,
            ),
        );
        let t = DataTree::tag_leaf("a");
        assert!(succ(&sys, &t, PathBoundMode::Off).unwrap().is_empty());
    }

    #[test]
    fn path_bound_enforce_and_filter() {
        // appending a second child sharing a data value lengthens paths
        let base = TreePattern::tag_node(
            "a",
            vec![(EdgeKind::Child, TreePattern::var_leaf("X"))],
        );
        let mut locator = Locator::plain(base);
        locator.appends.insert(TreePattern::ROOT);
        let mut forests = BTreeMap::new();
        forests.insert(
            "F".to_string(),
            vec![Template::node("b", vec![Template::var_leaf("X")])],
        );
        let mut chi = BTreeMap::new();
        chi.insert(TreePattern::ROOT, "F".to_string());
        let rule = Rule {
            name: "link".into(),
            locator,
            guard: PatternFormula::True,
            queries: BTreeMap::new(),
            forests,
            chi,
        };
        let mut sys = tiny_system(vec![rule]);
        sys.simple_path_bound = Some(3);
        let t = DataTree::node("a", vec![DataTree::data_leaf(0)]);
        // result: [a](@0, [b](@0)) has a simple path a-leaf-$-leaf-b of length 4
        let err = succ(&sys, &t, PathBoundMode::Enforce).unwrap_err();
        assert!(matches!(err, SuccError::PathBound { .. }));
        assert!(succ(&sys, &t, PathBoundMode::Filter).unwrap().is_empty());
        assert_eq!(succ(&sys, &t, PathBoundMode::Off).unwrap().len(), 1);
    }

    #[test]
    fn compiled_call_locator_shape() {
        let alphabet: BTreeSet<Tag> = ["!f", "?f", "WS", "f", "root", "env"]
            .iter()
            .map(|s| Tag::new(*s))
            .collect();
        let q = Query {
            body: TreePattern::tag_node(
                "env",
                vec![(EdgeKind::Child, TreePattern::var_leaf("A"))],
            )
            .self_at_root(),
            head: Template::var_leaf("A"),
        };
        let rule =
            compile_gaxml_call(&alphabet, &Tag::new("f"), q, PatternFormula::True).unwrap();
        assert_eq!(rule.locator.base.len(), 3);
        assert_eq!(rule.locator.appends.len(), 2);
        assert_eq!(rule.locator.renames.len(), 1);
        // missing WS tag in alphabet
        let small: BTreeSet<Tag> = ["!f", "?f"].iter().map(|s| Tag::new(*s)).collect();
        let q2 = Query {
            body: TreePattern::node(
                PatternLabel::Wildcard,
                vec![(EdgeKind::Child, TreePattern::var_leaf("A"))],
            )
            .self_at_root(),
            head: Template::var_leaf("A"),
        };
        assert!(compile_gaxml_call(&small, &Tag::new("f"), q2, PatternFormula::True).is_err());
    }

    #[test]
    fn compiled_return_locator_shape() {
        let alphabet: BTreeSet<Tag> = ["!f", "?f", "WS", "f"]
            .iter()
            .map(|s| Tag::new(*s))
            .collect();
        let q = Query {
            body: TreePattern::node(
                PatternLabel::Wildcard,
                vec![(EdgeKind::Child, TreePattern::var_leaf("A"))],
            )
            .self_at_root(),
            head: Template::var_leaf("A"),
        };
        let rule =
            compile_gaxml_return(&alphabet, &Tag::new("f"), q, PatternFormula::True).unwrap();
        assert_eq!(rule.locator.base.len(), 7);
        assert_eq!(rule.locator.base.cond.len(), 1);
        assert_eq!(rule.locator.deletes.len(), 3);
    }

    #[test]
    fn call_not_enabled_without_workspace() {
        let mut alphabet: BTreeSet<Tag> = ["!f", "?f", "WS", "f", "root"]
            .iter()
            .map(|s| Tag::new(*s))
            .collect();
        alphabet.insert(Tag::new("env"));
        let q = Query {
            body: TreePattern::node(
                PatternLabel::Wildcard,
                vec![(EdgeKind::Child, TreePattern::var_leaf("A"))],
            )
            .self_at_root(),
            head: Template::var_leaf("A"),
        };
        let rule =
            compile_gaxml_call(&alphabet, &Tag::new("f"), q, PatternFormula::True).unwrap();
        let sys = System {
            name: "gaxml".into(),
            alphabet,
            rules: vec![rule],
            dtd: Dtd::new([Tag::new("root")]),
            data_invariant: PatternFormula::True,
            depth_bound: Some(6),
            simple_path_bound: None,
            init: InitSpec::Explicit(vec![]),
        };
        let t = DataTree::node("root", vec![DataTree::node("env", vec![DataTree::tag_leaf("!f")])]);
        assert!(enabled(&sys.rules[0], &t, &sys).unwrap().is_empty());
    }
}
