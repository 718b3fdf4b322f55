//! Seeded random instances for property suites: trees, embedded
//! extensions, renamings, patterns, and small positive systems.

use std::collections::BTreeMap;

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dtd::{CountFormula, CountLabel, Dtd};
use crate::pattern::{
    CondAtom, EdgeKind, PatternFormula, PatternLabel, Template, TreePattern, VarName,
};
use crate::rewrite::{InitSpec, Locator, Rule, System};
use crate::tree::{DataTree, DataValue, NodeId, NodeLabel, Tag};

pub type TestRng = ChaCha8Rng;

pub fn tags(names: &[&str]) -> Vec<Tag> {
    names.iter().map(|n| Tag::new(*n)).collect()
}

/// Random unordered data tree with at most `max_nodes` nodes and data
/// values drawn from `0..max_values`.
pub fn rand_tree(rng: &mut TestRng, alphabet: &[Tag], max_nodes: usize, max_values: u64) -> DataTree {
    let nodes = rng.random_range(1..=max_nodes.max(1));
    let root_tag = alphabet.choose(rng).unwrap().clone();
    let mut t = DataTree::leaf(NodeLabel::Tag(root_tag));
    let mut tag_nodes: Vec<NodeId> = vec![DataTree::ROOT];
    for _ in 1..nodes {
        let parent = *tag_nodes.choose(rng).unwrap();
        let label = if rng.random_bool(0.4) {
            NodeLabel::Data(DataValue(rng.random_range(0..max_values.max(1))))
        } else {
            NodeLabel::Tag(alphabet.choose(rng).unwrap().clone())
        };
        let is_tag = !label.is_data();
        let id = t.add_child(parent, label);
        if is_tag {
            tag_nodes.push(id);
        }
    }
    t
}

/// Extend `t` by grafting extra content; the identity map witnesses
/// `t ⪯ result`.
pub fn rand_extension(
    rng: &mut TestRng,
    t: &DataTree,
    alphabet: &[Tag],
    extra: usize,
) -> DataTree {
    let mut out = t.clone();
    for _ in 0..extra {
        let tag_nodes: Vec<NodeId> = out
            .node_ids()
            .filter(|n| !out.label(*n).is_data())
            .collect();
        let parent = *tag_nodes.choose(rng).unwrap();
        let label = if rng.random_bool(0.4) {
            let v = if rng.random_bool(0.5) {
                // reuse an existing value when there is one
                out.data_values()
                    .into_iter()
                    .collect::<Vec<_>>()
                    .choose(rng)
                    .copied()
                    .unwrap_or(DataValue(out.fresh_value_floor()))
            } else {
                DataValue(out.fresh_value_floor() + rng.random_range(0..3))
            };
            NodeLabel::Data(v)
        } else {
            NodeLabel::Tag(alphabet.choose(rng).unwrap().clone())
        };
        out.add_child(parent, label);
    }
    out
}

/// Apply a random bijective renaming of data values.
pub fn rand_renaming(rng: &mut TestRng, t: &DataTree) -> DataTree {
    let values: Vec<DataValue> = t.data_values().into_iter().collect();
    let mut targets: Vec<u64> = (0..values.len() as u64)
        .map(|i| 100 + i * 7 + rng.random_range(0..3))
        .collect();
    // keep it a bijection
    targets.dedup();
    while targets.len() < values.len() {
        targets.push(1000 + targets.len() as u64);
    }
    let map: BTreeMap<DataValue, DataValue> = values
        .into_iter()
        .zip(targets.into_iter().map(DataValue))
        .collect();
    t.rename_values(&map)
}

/// Random pattern: small tree with occasional descendant edges, wildcards,
/// and variables; sometimes a data constraint.
pub fn rand_pattern(rng: &mut TestRng, alphabet: &[Tag], max_nodes: usize) -> TreePattern {
    let nodes = rng.random_range(1..=max_nodes.max(1));
    let root_label = if rng.random_bool(0.15) {
        PatternLabel::Wildcard
    } else {
        PatternLabel::Tag(alphabet.choose(rng).unwrap().clone())
    };
    let mut p = TreePattern::leaf(root_label);
    let mut inner: Vec<crate::pattern::PatternNodeId> = vec![TreePattern::ROOT];
    let mut var_idx = 0;
    for _ in 1..nodes {
        let parent = *inner.choose(rng).unwrap();
        let edge = if rng.random_bool(0.25) {
            EdgeKind::Descendant
        } else {
            EdgeKind::Child
        };
        let roll: f64 = rng.random();
        let label = if roll < 0.25 {
            var_idx += 1;
            PatternLabel::Var(VarName::new(format!("X{var_idx}")))
        } else if roll < 0.35 {
            PatternLabel::Wildcard
        } else {
            PatternLabel::Tag(alphabet.choose(rng).unwrap().clone())
        };
        let is_inner = !matches!(label, PatternLabel::Var(_));
        let id = p.add_child(parent, edge, label);
        if is_inner {
            inner.push(id);
        }
    }
    let vars = p.variables();
    if vars.len() >= 2 && rng.random_bool(0.4) {
        let atom = if rng.random_bool(0.5) {
            CondAtom::Eq(vars[0].clone(), vars[1].clone())
        } else {
            CondAtom::Neq(vars[0].clone(), vars[1].clone())
        };
        p = p.with_cond(vec![atom]);
    }
    p
}

/// Configuration for random positive systems.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub alphabet_size: usize,
    pub rules: usize,
    pub locator_nodes: usize,
    pub allow_descendant_edges: bool,
    pub allow_guards: bool,
    pub allow_dom_atoms: bool,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            alphabet_size: 3,
            rules: 2,
            locator_nodes: 3,
            allow_descendant_edges: true,
            allow_guards: true,
            allow_dom_atoms: true,
        }
    }
}

/// Random positive system: non-recursive positive DTD over a layered
/// alphabet, locator-only rules with delete/rename/append actions and
/// occasional guards, declared bounds.
pub fn rand_positive_system(rng: &mut TestRng, config: &SystemConfig) -> System {
    let names = ["a", "b", "c", "d", "e"];
    let alphabet: Vec<Tag> = names[..config.alphabet_size]
        .iter()
        .map(|n| Tag::new(*n))
        .collect();

    // layered DTD: tag i may only require tags j > i
    let mut dtd = Dtd::new([alphabet[0].clone()]);
    for (i, tag) in alphabet.iter().enumerate() {
        if !rng.random_bool(0.6) {
            continue;
        }
        let mut conj = Vec::new();
        for later in alphabet.iter().skip(i + 1) {
            if rng.random_bool(0.4) {
                conj.push(CountFormula::AtLeast(
                    CountLabel::Tag(later.clone()),
                    rng.random_range(0..=1),
                ));
            }
        }
        if config.allow_dom_atoms && rng.random_bool(0.3) {
            conj.push(CountFormula::AtLeast(CountLabel::Dom, rng.random_range(0..=1)));
        }
        if !conj.is_empty() {
            dtd.rules.insert(tag.clone(), CountFormula::And(conj));
        }
    }

    let mut rules = Vec::new();
    for r in 0..config.rules {
        rules.push(rand_rule(rng, &alphabet, config, r));
    }

    let depth_bound = dtd.depth_bound().unwrap_or(3).max(3);
    System {
        name: format!("random-{}", rng.random_range(0..u32::MAX)),
        alphabet: alphabet.iter().cloned().collect(),
        rules,
        dtd,
        data_invariant: PatternFormula::True,
        depth_bound: Some(depth_bound),
        simple_path_bound: Some(2 * depth_bound + 2),
        init: InitSpec::Explicit(vec![]),
    }
}

fn rand_rule(rng: &mut TestRng, alphabet: &[Tag], config: &SystemConfig, idx: usize) -> Rule {
    // locator rooted at the DTD root label so rules can fire
    let nodes = rng.random_range(1..=config.locator_nodes.max(1));
    let mut base = TreePattern::leaf(PatternLabel::Tag(alphabet[0].clone()));
    let mut inner = vec![TreePattern::ROOT];
    let mut var_idx = 0;
    let mut all = vec![TreePattern::ROOT];
    for _ in 1..nodes {
        let parent = *inner.choose(rng).unwrap();
        let edge = if config.allow_descendant_edges && rng.random_bool(0.2) {
            EdgeKind::Descendant
        } else {
            EdgeKind::Child
        };
        let roll: f64 = rng.random();
        let label = if roll < 0.2 {
            var_idx += 1;
            PatternLabel::Var(VarName::new(format!("X{var_idx}")))
        } else {
            PatternLabel::Tag(alphabet.choose(rng).unwrap().clone())
        };
        let is_inner = !matches!(label, PatternLabel::Var(_));
        let id = base.add_child(parent, edge, label);
        if is_inner {
            inner.push(id);
        }
        all.push(id);
    }

    let mut locator = Locator::plain(base);
    // actions on non-root nodes: delete some subtree, rename some node
    for n in all.iter().skip(1) {
        let roll: f64 = rng.random();
        if roll < 0.25 {
            for sub in locator.base.subtree_nodes(*n) {
                locator.deletes.insert(sub);
            }
        } else if roll < 0.45 && !matches!(locator.base.label(*n), PatternLabel::Var(_)) {
            locator
                .renames
                .insert(*n, alphabet.choose(rng).unwrap().clone());
        }
    }
    locator.renames.retain(|n, _| !locator.deletes.contains(n));

    // maybe append a small forest at a non-deleted tag node
    let mut forests = BTreeMap::new();
    let mut chi = BTreeMap::new();
    let append_candidates: Vec<_> = all
        .iter()
        .filter(|n| {
            !locator.deletes.contains(n)
                && !matches!(locator.base.label(**n), PatternLabel::Var(_))
        })
        .copied()
        .collect();
    if rng.random_bool(0.7) {
        let target = *append_candidates.choose(rng).unwrap();
        let mut trees = Vec::new();
        let template = match rng.random_range(0..3) {
            0 => Template::node(
                alphabet.choose(rng).unwrap().as_str(),
                vec![Template::var_leaf("F1")],
            ),
            1 => Template::tag_leaf(alphabet.choose(rng).unwrap().as_str()),
            _ => Template::var_leaf("F1"),
        };
        trees.push(template);
        if rng.random_bool(0.3) {
            trees.push(Template::tag_leaf(alphabet.choose(rng).unwrap().as_str()));
        }
        forests.insert("F".to_string(), trees);
        locator.appends.insert(target);
        chi.insert(target, "F".to_string());
    }

    // occasional positive guard
    let guard = if config.allow_guards && rng.random_bool(0.3) {
        PatternFormula::Atom(rand_guard_pattern(rng, alphabet))
    } else {
        PatternFormula::True
    };

    // occasional data constraint between locator variables
    let vars = locator.base.variables();
    if vars.len() >= 2 && rng.random_bool(0.4) {
        let atom = if rng.random_bool(0.5) {
            CondAtom::Eq(vars[0].clone(), vars[1].clone())
        } else {
            CondAtom::Neq(vars[0].clone(), vars[1].clone())
        };
        locator.base.cond.push(atom);
    }

    Rule {
        name: format!("r{idx}"),
        locator,
        guard,
        queries: BTreeMap::new(),
        forests,
        chi,
    }
}

fn rand_guard_pattern(rng: &mut TestRng, alphabet: &[Tag]) -> TreePattern {
    // guards are absolute patterns rooted at the document root
    let mut p = TreePattern::leaf(PatternLabel::Tag(alphabet[0].clone()));
    let n = rng.random_range(0..=2);
    for _ in 0..n {
        let edge = if rng.random_bool(0.3) {
            EdgeKind::Descendant
        } else {
            EdgeKind::Child
        };
        p.add_child(
            TreePattern::ROOT,
            edge,
            PatternLabel::Tag(alphabet.choose(rng).unwrap().clone()),
        );
    }
    p
}

/// A random tree satisfying the system invariant, by rejection sampling
/// over DTD-guided growth.
pub fn rand_invariant_tree(
    rng: &mut TestRng,
    sys: &System,
    max_nodes: usize,
    attempts: usize,
) -> Option<DataTree> {
    let alphabet: Vec<Tag> = sys.alphabet.iter().cloned().collect();
    let roots: Vec<Tag> = sys.dtd.root_labels.iter().cloned().collect();
    for _ in 0..attempts {
        // start from the minimal completion of a root label and extend
        let root = roots[rng.random_range(0..roots.len())].clone();
        let Some(seed) = sys.dtd.minimal_completion(&root) else {
            continue;
        };
        let extra = max_nodes.saturating_sub(seed.len());
        let grow = rng.random_range(0..=extra);
        let t = rand_extension(rng, &seed, &alphabet, grow);
        if t.len() <= max_nodes && sys.satisfies_invariant(&t).unwrap_or(false) {
            let deep_enough = t.depth() <= sys.effective_depth_bound();
            let k_ok = sys
                .simple_path_bound
                .map(|k| crate::analysis::simple_path_length(&t) <= k)
                .unwrap_or(true);
            if deep_enough && k_ok {
                return Some(t);
            }
        }
    }
    None
}

/// An invariant-preserving extension of `t` (for compatibility tests).
pub fn rand_invariant_extension(
    rng: &mut TestRng,
    sys: &System,
    t: &DataTree,
    extra: usize,
    attempts: usize,
) -> Option<DataTree> {
    let alphabet: Vec<Tag> = sys.alphabet.iter().cloned().collect();
    for _ in 0..attempts {
        let grow = rng.random_range(1..=extra.max(1));
        let t2 = rand_extension(rng, t, &alphabet, grow);
        if sys.satisfies_invariant(&t2).unwrap_or(false)
            && t2.depth() <= sys.effective_depth_bound()
            && sys
                .simple_path_bound
                .map(|k| crate::analysis::simple_path_length(&t2) <= k)
                .unwrap_or(true)
        {
            return Some(t2);
        }
    }
    None
}
