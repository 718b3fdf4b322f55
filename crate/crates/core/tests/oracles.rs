//! Independent brute-force oracles cross-checking the engine's search
//! procedures: matching enumeration, embedding, induced subgraphs, query
//! evaluation, and the predecessor basis.

use std::collections::BTreeMap;

use rand::SeedableRng;

use dtprs_core::analysis::{pred_basis, simple_path_length, Basis, PredOptions};
use dtprs_core::canon::canonical_print;
use dtprs_core::enumerate::enumerate_trees;
use dtprs_core::gen::{self, SystemConfig, TestRng};
use dtprs_core::graph::{graph_of, LabeledGraph};
use dtprs_core::order::{embeds, equivalent, induced_subgraph};
use dtprs_core::pattern::{
    eval_query, match_all, match_injective, EdgeKind, Matching, PatternLabel, TreePattern,
};
use dtprs_core::rewrite::{enabled, Locator, Rule, System};
use dtprs_core::tree::{DataTree, NodeId, NodeLabel, Tag};

// ---------------------------------------------------------------------------
// Matching oracle: enumerate all node maps, filter valid ones
// ---------------------------------------------------------------------------

fn oracle_matchings(p: &TreePattern, t: &DataTree, injective: bool) -> Vec<Vec<NodeId>> {
    let pattern_nodes: Vec<_> = p.node_ids().collect();
    let tree_nodes: Vec<_> = t.node_ids().collect();
    let mut out = Vec::new();
    let mut map = vec![NodeId(0); pattern_nodes.len()];

    fn valid(p: &TreePattern, t: &DataTree, map: &[NodeId]) -> bool {
        // root preservation
        if map[0] != DataTree::ROOT {
            return false;
        }
        let mut valuation: BTreeMap<String, u64> = BTreeMap::new();
        for pn in p.node_ids() {
            let tn = map[pn.index()];
            match (p.label(pn), t.label(tn)) {
                (PatternLabel::Tag(a), NodeLabel::Tag(b)) if a == b => {}
                (PatternLabel::Wildcard, NodeLabel::Tag(_)) => {}
                (PatternLabel::Var(v), NodeLabel::Data(d)) => {
                    if let Some(prev) = valuation.get(v.as_str()) {
                        if *prev != d.0 {
                            return false;
                        }
                    }
                    valuation.insert(v.as_str().to_string(), d.0);
                }
                _ => return false,
            }
            if let Some(pp) = p.parent(pn) {
                let anchor = map[pp.index()];
                match p.edge(pn) {
                    EdgeKind::Child => {
                        if t.parent(tn) != Some(anchor) {
                            return false;
                        }
                    }
                    EdgeKind::Descendant => {
                        if !t.is_proper_ancestor(anchor, tn) {
                            return false;
                        }
                    }
                }
            }
        }
        for atom in &p.cond {
            use dtprs_core::pattern::CondAtom;
            let (x, y, want_eq) = match atom {
                CondAtom::Eq(x, y) => (x, y, true),
                CondAtom::Neq(x, y) => (x, y, false),
            };
            let (Some(a), Some(b)) = (valuation.get(x.as_str()), valuation.get(y.as_str()))
            else {
                return false;
            };
            if (a == b) != want_eq {
                return false;
            }
        }
        true
    }

    fn go(
        p: &TreePattern,
        t: &DataTree,
        tree_nodes: &[NodeId],
        idx: usize,
        injective: bool,
        map: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        if idx == map.len() {
            if valid(p, t, map) {
                out.push(map.clone());
            }
            return;
        }
        for tn in tree_nodes {
            if injective && map[..idx].contains(tn) {
                continue;
            }
            map[idx] = *tn;
            go(p, t, tree_nodes, idx + 1, injective, map, out);
        }
    }

    go(p, t, &tree_nodes, 0, injective, &mut map, &mut out);
    out
}

fn matching_as_vec(p: &TreePattern, m: &Matching) -> Vec<NodeId> {
    p.node_ids().map(|n| m.get(n)).collect()
}

#[test]
fn matching_agrees_with_brute_force() {
    let mut rng = TestRng::seed_from_u64(1001);
    let alphabet = gen::tags(&["a", "b", "c"]);
    let mut nonempty = 0;
    for _ in 0..300 {
        let p = gen::rand_pattern(&mut rng, &alphabet, 4);
        if p.is_relative() {
            continue;
        }
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        for injective in [false, true] {
            let got: Vec<Vec<NodeId>> = if injective {
                match_injective(&p, &t, None)
                    .unwrap()
                    .iter()
                    .map(|m| matching_as_vec(&p, m))
                    .collect()
            } else {
                match_all(&p, &t, None)
                    .unwrap()
                    .iter()
                    .map(|m| matching_as_vec(&p, m))
                    .collect()
            };
            let mut want = oracle_matchings(&p, &t, injective);
            let mut got_sorted = got.clone();
            got_sorted.sort();
            want.sort();
            assert_eq!(got_sorted, want, "pattern/tree disagreement");
            if !want.is_empty() {
                nonempty += 1;
            }
        }
    }
    assert!(nonempty > 40, "need a healthy number of matching cases, got {nonempty}");
}

#[test]
fn injective_matchings_subset_of_all() {
    let mut rng = TestRng::seed_from_u64(1002);
    let alphabet = gen::tags(&["a", "b"]);
    for _ in 0..200 {
        let p = gen::rand_pattern(&mut rng, &alphabet, 4);
        if p.is_relative() {
            continue;
        }
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        let all: Vec<_> = match_all(&p, &t, None)
            .unwrap()
            .iter()
            .map(|m| matching_as_vec(&p, m))
            .collect();
        for m in match_injective(&p, &t, None).unwrap() {
            assert!(all.contains(&matching_as_vec(&p, &m)));
        }
    }
}

// ---------------------------------------------------------------------------
// Embedding oracle
// ---------------------------------------------------------------------------

fn oracle_embeds(t1: &DataTree, t2: &DataTree) -> bool {
    // enumerate all injective maps nodes(t1) -> nodes(t2)
    let n1 = t1.len();
    let nodes2: Vec<_> = t2.node_ids().collect();
    let mut map = vec![NodeId(0); n1];
    let mut used = vec![false; t2.len()];

    fn valid(t1: &DataTree, t2: &DataTree, map: &[NodeId]) -> bool {
        if map[0] != DataTree::ROOT {
            return false;
        }
        for n in t1.node_ids() {
            let img = map[n.index()];
            match (t1.label(n), t2.label(img)) {
                (NodeLabel::Tag(a), NodeLabel::Tag(b)) if a == b => {}
                (NodeLabel::Data(_), NodeLabel::Data(_)) => {}
                _ => return false,
            }
            match t1.parent(n) {
                None => {}
                Some(p) => {
                    if t2.parent(img) != Some(map[p.index()]) {
                        return false;
                    }
                }
            }
        }
        let leaves = t1.data_leaves();
        for &x in &leaves {
            for &y in &leaves {
                let a = t1.label(x).data().unwrap();
                let b = t1.label(y).data().unwrap();
                let fa = t2.label(map[x.index()]).data().unwrap();
                let fb = t2.label(map[y.index()]).data().unwrap();
                if (a == b) != (fa == fb) {
                    return false;
                }
            }
        }
        true
    }

    fn go(
        t1: &DataTree,
        t2: &DataTree,
        nodes2: &[NodeId],
        idx: usize,
        map: &mut Vec<NodeId>,
        used: &mut Vec<bool>,
    ) -> bool {
        if idx == map.len() {
            return valid(t1, t2, map);
        }
        for tn in nodes2 {
            if used[tn.index()] {
                continue;
            }
            map[idx] = *tn;
            used[tn.index()] = true;
            if go(t1, t2, nodes2, idx + 1, map, used) {
                return true;
            }
            used[tn.index()] = false;
        }
        false
    }

    go(t1, t2, &nodes2, 0, &mut map, &mut used)
}

#[test]
fn embeds_agrees_with_brute_force() {
    let mut rng = TestRng::seed_from_u64(1003);
    let alphabet = gen::tags(&["a", "b"]);
    let mut positive = 0;
    let mut negative = 0;
    for i in 0..250 {
        let t1 = gen::rand_tree(&mut rng, &alphabet, 5, 3);
        // mix constructed extensions with unrelated trees
        let t2 = if i % 2 == 0 {
            gen::rand_extension(&mut rng, &t1, &alphabet, 3)
        } else {
            gen::rand_tree(&mut rng, &alphabet, 6, 3)
        };
        let got = embeds(&t1, &t2);
        let want = oracle_embeds(&t1, &t2);
        assert_eq!(got.is_some(), want, "embeds disagreement");
        if let Some(witness) = got {
            assert!(witness.verify(&t1, &t2), "witness fails verification");
            positive += 1;
        } else {
            negative += 1;
        }
    }
    assert!(positive > 50 && negative > 50, "{positive}/{negative}");
}

#[test]
fn equivalence_matches_size_and_mutual_embedding() {
    let mut rng = TestRng::seed_from_u64(1004);
    let alphabet = gen::tags(&["a", "b"]);
    for _ in 0..200 {
        let t1 = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        let t2 = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        let want = t1.len() == t2.len() && oracle_embeds(&t1, &t2) && oracle_embeds(&t2, &t1);
        assert_eq!(equivalent(&t1, &t2), want);
    }
}

// ---------------------------------------------------------------------------
// Induced subgraph oracle
// ---------------------------------------------------------------------------

fn oracle_induced(g1: &LabeledGraph, g2: &LabeledGraph) -> bool {
    let n1 = g1.vertex_count();
    let n2 = g2.vertex_count();
    if n1 > n2 {
        return false;
    }
    let mut map = vec![0usize; n1];
    let mut used = vec![false; n2];
    fn go(
        g1: &LabeledGraph,
        g2: &LabeledGraph,
        idx: usize,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if idx == map.len() {
            for a in 0..map.len() {
                if g1.label(a) != g2.label(map[a]) {
                    return false;
                }
                for b in 0..map.len() {
                    if g1.has_edge(a, b) != g2.has_edge(map[a], map[b]) {
                        return false;
                    }
                }
            }
            return true;
        }
        for w in 0..g2.vertex_count() {
            if used[w] {
                continue;
            }
            map[idx] = w;
            used[w] = true;
            if go(g1, g2, idx + 1, map, used) {
                return true;
            }
            used[w] = false;
        }
        false
    }
    go(g1, g2, 0, &mut map, &mut used)
}

#[test]
fn induced_subgraph_agrees_with_brute_force() {
    let mut rng = TestRng::seed_from_u64(1005);
    let alphabet = gen::tags(&["a", "b"]);
    for i in 0..120 {
        let t1 = gen::rand_tree(&mut rng, &alphabet, 4, 2);
        let t2 = if i % 2 == 0 {
            gen::rand_extension(&mut rng, &t1, &alphabet, 2)
        } else {
            gen::rand_tree(&mut rng, &alphabet, 5, 2)
        };
        let g1 = graph_of(&t1, u64::MAX).unwrap();
        let g2 = graph_of(&t2, u64::MAX).unwrap();
        assert_eq!(induced_subgraph(&g1, &g2), oracle_induced(&g1, &g2));
    }
}

// ---------------------------------------------------------------------------
// Query oracle
// ---------------------------------------------------------------------------

#[test]
fn query_results_match_brute_force() {
    use dtprs_core::pattern::{Query, Template};
    let mut rng = TestRng::seed_from_u64(1006);
    let alphabet = gen::tags(&["a", "b"]);
    let mut nonempty = 0;
    for _ in 0..400 {
        let body = gen::rand_pattern(&mut rng, &alphabet, 3);
        if body.is_relative() {
            continue;
        }
        let vars = body.variables();
        if vars.is_empty() {
            continue;
        }
        let head = Template::node("a", vec![Template::var_leaf(vars[0].as_str())]);
        let q = Query {
            body: body.clone(),
            head,
        };
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 2);
        let got = eval_query(&q, &t, DataTree::ROOT).unwrap();

        // oracle: instantiate per brute-force matching, dedupe by canonical
        // print with literal values kept (single-var heads make this exact)
        let mut want: Vec<DataTree> = Vec::new();
        for m in oracle_matchings(&body, &t, false) {
            let mut val = None;
            for pn in body.node_ids() {
                if body.label(pn) == &PatternLabel::Var(vars[0].clone()) {
                    val = t.label(m[pn.index()]).data();
                }
            }
            let inst = DataTree::node("a", vec![DataTree::data_leaf(val.unwrap().0)]);
            if !want.contains(&inst) {
                want.push(inst);
            }
        }
        assert_eq!(got.len(), want.len());
        for w in &want {
            assert!(got.contains(w));
        }
        if !want.is_empty() {
            nonempty += 1;
        }
    }
    assert!(nonempty >= 8, "{nonempty}");
}

// ---------------------------------------------------------------------------
// Predecessor oracle
// ---------------------------------------------------------------------------

fn within_space(sys: &System, t: &DataTree) -> bool {
    t.depth() <= sys.effective_depth_bound()
        && sys
            .simple_path_bound
            .map(|k| simple_path_length(t) <= k)
            .unwrap_or(true)
}

/// Exhaustive predecessor basis: every invariant tree up to `cap` nodes
/// with a one-step successor covering `t`, minimized.
fn oracle_pred_basis(sys: &System, t: &DataTree, cap: usize) -> Vec<DataTree> {
    let alphabet: Vec<Tag> = sys.alphabet.iter().cloned().collect();
    let mut preds: Vec<DataTree> = Vec::new();
    for t1 in enumerate_trees(&alphabet, cap, true) {
        if !sys.satisfies_invariant(&t1).unwrap() || !within_space(sys, &t1) {
            continue;
        }
        let mut hit = false;
        'rules: for rule in &sys.rules {
            for w in enabled(rule, &t1, sys).unwrap() {
                if within_space(sys, &w.result) && embeds(t, &w.result).is_some() {
                    hit = true;
                    break 'rules;
                }
            }
        }
        if hit {
            preds.push(t1);
        }
    }
    // minimize
    let mut minimal: Vec<DataTree> = Vec::new();
    for p in &preds {
        if preds
            .iter()
            .any(|q| canonical_print(q) != canonical_print(p) && embeds(q, p).is_some())
        {
            continue;
        }
        if !minimal.iter().any(|m| equivalent(m, p)) {
            minimal.push(p.clone());
        }
    }
    minimal
}

fn basis_equals(one: &Basis, other: &[DataTree]) -> bool {
    one.len() == other.len()
        && other.iter().all(|t| one.trees().iter().any(|b| equivalent(b, t)))
}

#[test]
fn pred_basis_of_root_rename_is_one_step_inversion() {
    // single rule renaming root a -> b; target [b] gives basis {[a]}
    let src = r#"
system rename {
  alphabet { a, b }
  dtd { root: a, b; }
  bounds { depth: 2; simple-path: 4; }
  init { tree: [a]; }
  rule flip {
    locator: [a{ren=b}];
  }
}
"#;
    let sys = dtprs_core::frontend::parse_system(src).unwrap();
    let opts = PredOptions::for_system(&sys);
    let (basis, capped) = pred_basis(&sys, &DataTree::tag_leaf("b"), &opts).unwrap();
    assert!(!capped);
    assert_eq!(basis.len(), 1);
    assert!(equivalent(&basis.trees()[0], &DataTree::tag_leaf("a")));
}

#[test]
fn pred_basis_empty_for_rule_free_system() {
    let src = r#"
system none {
  alphabet { a }
  dtd { root: a; }
  bounds { depth: 2; simple-path: 4; }
  init { tree: [a]; }
}
"#;
    let sys = dtprs_core::frontend::parse_system(src).unwrap();
    let opts = PredOptions::for_system(&sys);
    let (basis, capped) = pred_basis(&sys, &DataTree::tag_leaf("a"), &opts).unwrap();
    assert!(!capped);
    assert!(basis.is_empty());
}

#[test]
fn pred_basis_matches_exhaustive_oracle() {
    let mut rng = TestRng::seed_from_u64(1007);
    let config = SystemConfig {
        alphabet_size: 3,
        rules: 2,
        locator_nodes: 3,
        allow_descendant_edges: true,
        allow_guards: true,
        allow_dom_atoms: true,
    };
    let cap = 6;
    let mut checked = 0;
    let mut nonempty = 0;
    let mut attempts = 0;
    while checked < 12 && attempts < 200 {
        attempts += 1;
        let sys = gen::rand_positive_system(&mut rng, &config);
        let Some(target) = gen::rand_invariant_tree(&mut rng, &sys, 4, 30) else {
            continue;
        };
        let opts = PredOptions {
            size_cap: cap,
            ..PredOptions::for_system(&sys)
        };
        let (got, capped) = pred_basis(&sys, &target, &opts).unwrap();
        if capped {
            continue; // only uncapped runs are comparable to the oracle
        }
        let want = oracle_pred_basis(&sys, &target, cap);
        assert!(
            basis_equals(&got, &want),
            "pred basis mismatch for {}\ntarget: {}\ngot:  {:?}\nwant: {:?}",
            dtprs_core::frontend::print_system(&sys),
            canonical_print(&target),
            got.trees().iter().map(canonical_print).collect::<Vec<_>>(),
            want.iter().map(canonical_print).collect::<Vec<_>>(),
        );
        checked += 1;
        if !want.is_empty() {
            nonempty += 1;
        }
    }
    assert!(checked >= 12, "too few comparable runs: {checked}");
    assert!(nonempty >= 4, "need nonempty bases to be meaningful: {nonempty}");
}
