//! DTDs over unordered trees: per-tag Boolean combinations of child-count
//! inequalities `|b| >= k`, plus the set of allowed root labels.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tree::{DataTree, NodeId, NodeLabel, Tag};

/// What a count atom counts: children with a given tag, or data-valued
/// children (`dom`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CountLabel {
    Tag(Tag),
    Dom,
}

/// Boolean combination of `count(label) >= k` atoms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountFormula {
    AtLeast(CountLabel, u64),
    And(Vec<CountFormula>),
    Or(Vec<CountFormula>),
    Not(Box<CountFormula>),
}

impl CountFormula {
    /// Formula with no constraints (empty conjunction).
    pub fn trivial() -> Self {
        CountFormula::And(Vec::new())
    }

    pub fn is_positive(&self) -> bool {
        match self {
            CountFormula::AtLeast(..) => true,
            CountFormula::And(fs) | CountFormula::Or(fs) => fs.iter().all(|f| f.is_positive()),
            CountFormula::Not(_) => false,
        }
    }

    pub fn eval(&self, counts: &BTreeMap<CountLabel, u64>) -> bool {
        match self {
            CountFormula::AtLeast(label, k) => counts.get(label).copied().unwrap_or(0) >= *k,
            CountFormula::And(fs) => fs.iter().all(|f| f.eval(counts)),
            CountFormula::Or(fs) => fs.iter().any(|f| f.eval(counts)),
            CountFormula::Not(f) => !f.eval(counts),
        }
    }

    /// Labels mentioned anywhere in the formula.
    pub fn mentioned(&self, out: &mut BTreeSet<CountLabel>) {
        match self {
            CountFormula::AtLeast(label, _) => {
                out.insert(label.clone());
            }
            CountFormula::And(fs) | CountFormula::Or(fs) => {
                for f in fs {
                    f.mentioned(out);
                }
            }
            CountFormula::Not(f) => f.mentioned(out),
        }
    }

    /// Largest constant appearing in any atom.
    pub fn max_constant(&self) -> u64 {
        match self {
            CountFormula::AtLeast(_, k) => *k,
            CountFormula::And(fs) | CountFormula::Or(fs) => {
                fs.iter().map(|f| f.max_constant()).max().unwrap_or(0)
            }
            CountFormula::Not(f) => f.max_constant(),
        }
    }

    /// Minimal models of a positive formula: each model maps labels to lower
    /// bounds; satisfying a model satisfies the formula, and every satisfying
    /// count vector dominates some model. Non-positive formulas return `None`.
    pub fn minimal_models(&self) -> Option<Vec<BTreeMap<CountLabel, u64>>> {
        fn merge(
            a: &BTreeMap<CountLabel, u64>,
            b: &BTreeMap<CountLabel, u64>,
        ) -> BTreeMap<CountLabel, u64> {
            let mut out = a.clone();
            for (k, v) in b {
                let e = out.entry(k.clone()).or_insert(0);
                *e = (*e).max(*v);
            }
            out
        }
        fn minimize(models: Vec<BTreeMap<CountLabel, u64>>) -> Vec<BTreeMap<CountLabel, u64>> {
            // le(a, b): every bound of a is implied by b's counts meeting a,
            // i.e. a <= b pointwise, so b is redundant whenever a is kept.
            fn le(a: &BTreeMap<CountLabel, u64>, b: &BTreeMap<CountLabel, u64>) -> bool {
                a.iter().all(|(k, v)| b.get(k).copied().unwrap_or(0) >= *v)
            }
            let mut out: Vec<BTreeMap<CountLabel, u64>> = Vec::new();
            'next: for m in models {
                for kept in &out {
                    if le(kept, &m) {
                        continue 'next;
                    }
                }
                out.retain(|kept| !le(&m, kept));
                out.push(m);
            }
            out
        }
        match self {
            CountFormula::AtLeast(label, k) => {
                let mut m = BTreeMap::new();
                if *k > 0 {
                    m.insert(label.clone(), *k);
                }
                Some(vec![m])
            }
            CountFormula::And(fs) => {
                let mut acc = vec![BTreeMap::new()];
                for f in fs {
                    let models = f.minimal_models()?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &models {
                            next.push(merge(a, b));
                        }
                    }
                    acc = minimize(next);
                }
                Some(acc)
            }
            CountFormula::Or(fs) => {
                if fs.is_empty() {
                    // empty disjunction is unsatisfiable
                    return Some(Vec::new());
                }
                let mut acc = Vec::new();
                for f in fs {
                    acc.extend(f.minimal_models()?);
                }
                Some(minimize(acc))
            }
            CountFormula::Not(_) => None,
        }
    }
}

/// DTD: allowed root labels plus per-tag count formulas. Tags without a rule
/// impose no constraint on their children.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dtd {
    pub root_labels: BTreeSet<Tag>,
    pub rules: BTreeMap<Tag, CountFormula>,
}

#[derive(Debug, Error)]
pub enum DtdError {
    #[error("recursive DTD: tag cycle {0}")]
    Recursive(String),
}

impl Dtd {
    pub fn new(root_labels: impl IntoIterator<Item = Tag>) -> Self {
        Dtd {
            root_labels: root_labels.into_iter().collect(),
            rules: BTreeMap::new(),
        }
    }

    pub fn with_rule(mut self, tag: impl Into<String>, formula: CountFormula) -> Self {
        self.rules.insert(Tag::new(tag), formula);
        self
    }

    pub fn is_positive(&self) -> bool {
        self.rules.values().all(|f| f.is_positive())
    }

    /// The tag-dependency graph: an edge a -> b whenever `count(b)` appears
    /// in the rule of `a`. `None` in the target position marks a `dom` atom.
    fn dependencies(&self) -> BTreeMap<&Tag, BTreeSet<CountLabel>> {
        let mut deps = BTreeMap::new();
        for (tag, formula) in &self.rules {
            let mut mentioned = BTreeSet::new();
            formula.mentioned(&mut mentioned);
            deps.insert(tag, mentioned);
        }
        deps
    }

    /// Error with a witness cycle if the tag-dependency graph is cyclic.
    pub fn check_non_recursive(&self) -> Result<(), DtdError> {
        let deps = self.dependencies();
        // Iterative DFS with colors; reconstruct a cycle on a back edge.
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Grey,
            Black,
        }
        let tags: Vec<&Tag> = deps.keys().copied().collect();
        let mut color: BTreeMap<&Tag, Color> = tags.iter().map(|t| (*t, Color::White)).collect();

        fn dfs<'a>(
            t: &'a Tag,
            deps: &BTreeMap<&'a Tag, BTreeSet<CountLabel>>,
            color: &mut BTreeMap<&'a Tag, Color>,
            stack: &mut Vec<&'a Tag>,
        ) -> Option<Vec<String>> {
            color.insert(t, Color::Grey);
            stack.push(t);
            if let Some(next) = deps.get(t) {
                for label in next {
                    let CountLabel::Tag(b) = label else { continue };
                    let Some((b_key, _)) = deps.get_key_value(b) else {
                        continue; // no rule for b: sink
                    };
                    match color.get(b_key).copied().unwrap_or(Color::White) {
                        Color::Grey => {
                            let pos = stack.iter().position(|x| *x == *b_key).unwrap();
                            let mut cycle: Vec<String> =
                                stack[pos..].iter().map(|x| x.to_string()).collect();
                            cycle.push(b_key.to_string());
                            return Some(cycle);
                        }
                        Color::White => {
                            if let Some(c) = dfs(b_key, deps, color, stack) {
                                return Some(c);
                            }
                        }
                        Color::Black => {}
                    }
                }
            }
            stack.pop();
            color.insert(t, Color::Black);
            None
        }

        for t in &tags {
            if color[t] == Color::White {
                let mut stack = Vec::new();
                if let Some(cycle) = dfs(t, &deps, &mut color, &mut stack) {
                    return Err(DtdError::Recursive(cycle.join(" -> ")));
                }
            }
        }
        Ok(())
    }

    /// Depth bound induced by a non-recursive DTD: the longest path in the
    /// tag-dependency graph starting from a root label, plus one for data
    /// leaves below the deepest constrained tag.
    pub fn depth_bound(&self) -> Result<u64, DtdError> {
        self.check_non_recursive()?;
        let deps = self.dependencies();
        fn longest(
            tag: &Tag,
            deps: &BTreeMap<&Tag, BTreeSet<CountLabel>>,
            memo: &mut BTreeMap<Tag, u64>,
        ) -> u64 {
            if let Some(v) = memo.get(tag) {
                return *v;
            }
            let mut best = 0;
            if let Some(next) = deps.get(tag) {
                for label in next {
                    if let CountLabel::Tag(b) = label {
                        best = best.max(1 + longest(b, deps, memo));
                    }
                }
            }
            memo.insert(tag.clone(), best);
            best
        }
        let mut memo = BTreeMap::new();
        let longest_tag_path = self
            .root_labels
            .iter()
            .map(|r| longest(r, &deps, &mut memo))
            .max()
            .unwrap_or(0);
        Ok(longest_tag_path + 1)
    }

    /// Largest constant in any rule (1 if all rules are trivial).
    pub fn max_constant(&self) -> u64 {
        self.rules
            .values()
            .map(|f| f.max_constant())
            .max()
            .unwrap_or(0)
            .max(1)
    }

    /// Check a tree against the DTD.
    pub fn check(&self, t: &DataTree) -> bool {
        match t.label(DataTree::ROOT) {
            NodeLabel::Tag(tag) => {
                if !self.root_labels.contains(tag) {
                    return false;
                }
            }
            NodeLabel::Data(_) => return false,
        }
        t.node_ids().all(|n| self.node_ok(t, n))
    }

    fn node_ok(&self, t: &DataTree, n: NodeId) -> bool {
        let NodeLabel::Tag(tag) = t.label(n) else {
            return true;
        };
        let Some(formula) = self.rules.get(tag) else {
            return true;
        };
        let mut counts: BTreeMap<CountLabel, u64> = BTreeMap::new();
        for &c in t.children(n) {
            let key = match t.label(c) {
                NodeLabel::Tag(ct) => CountLabel::Tag(ct.clone()),
                NodeLabel::Data(_) => CountLabel::Dom,
            };
            *counts.entry(key).or_insert(0) += 1;
        }
        formula.eval(&counts)
    }

    /// Smallest tree rooted at `tag` that satisfies every rule along the way
    /// (`None` when no finite completion exists, e.g. unsatisfiable rules or
    /// a recursive DTD). Positive DTDs only.
    pub fn minimal_completion(&self, tag: &Tag) -> Option<DataTree> {
        self.minimal_completion_inner(tag, &mut Vec::new())
    }

    fn minimal_completion_inner(&self, tag: &Tag, visiting: &mut Vec<Tag>) -> Option<DataTree> {
        if visiting.contains(tag) {
            return None; // recursion guard
        }
        let Some(formula) = self.rules.get(tag) else {
            return Some(DataTree::leaf(NodeLabel::Tag(tag.clone())));
        };
        let models = formula.minimal_models()?;
        visiting.push(tag.clone());
        let mut best: Option<DataTree> = None;
        for model in models {
            let mut children = Vec::new();
            let mut ok = true;
            for (label, k) in &model {
                for _ in 0..*k {
                    match label {
                        CountLabel::Dom => children.push(DataTree::data_leaf(0)),
                        CountLabel::Tag(b) => match self.minimal_completion_inner(b, visiting) {
                            Some(sub) => children.push(sub),
                            None => {
                                ok = false;
                                break;
                            }
                        },
                    }
                }
                if !ok {
                    break;
                }
            }
            if !ok {
                continue;
            }
            let candidate = DataTree::node(tag.as_str(), children);
            if best.as_ref().is_none_or(|b| candidate.len() < b.len()) {
                best = Some(candidate);
            }
        }
        visiting.pop();
        best
    }
}
