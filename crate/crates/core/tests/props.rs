//! Semantic properties: renaming invariance, upward closure, determinism
//! of rule application, canonical-form completeness, and the behaviour of
//! the small verification procedures on hand-built systems.

use std::collections::BTreeMap;

use rand::SeedableRng;

use dtprs_core::analysis::{self, bmc, replay, simulate, terminate, Basis, Policy, Verdict};
use dtprs_core::canon::canonical_print;
use dtprs_core::frontend::{parse_pattern, parse_system, parse_tree};
use dtprs_core::gen::{self, SystemConfig, TestRng};
use dtprs_core::order::{embeds, equivalent};
use dtprs_core::pattern::match_all;
use dtprs_core::rewrite::{apply, enabled, succ, PathBoundMode};
use dtprs_core::tree::{DataTree, DataValue};

#[test]
fn positive_atoms_are_upward_closed() {
    let mut rng = TestRng::seed_from_u64(2001);
    let alphabet = gen::tags(&["a", "b", "c"]);
    let mut transported = 0;
    for _ in 0..400 {
        let p = gen::rand_pattern(&mut rng, &alphabet, 4);
        if p.is_relative() {
            continue;
        }
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        if match_all(&p, &t, None).unwrap().is_empty() {
            continue;
        }
        let t2 = gen::rand_extension(&mut rng, &t, &alphabet, 3);
        assert!(
            !match_all(&p, &t2, None).unwrap().is_empty(),
            "embedding extension lost a match"
        );
        transported += 1;
    }
    assert!(transported > 30, "{transported}");
}

#[test]
fn matching_is_renaming_invariant() {
    let mut rng = TestRng::seed_from_u64(2002);
    let alphabet = gen::tags(&["a", "b"]);
    for _ in 0..200 {
        let p = gen::rand_pattern(&mut rng, &alphabet, 4);
        if p.is_relative() {
            continue;
        }
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        let renamed = gen::rand_renaming(&mut rng, &t);
        assert_eq!(
            match_all(&p, &t, None).unwrap().len(),
            match_all(&p, &renamed, None).unwrap().len()
        );
    }
}

#[test]
fn dtd_check_is_renaming_invariant() {
    let mut rng = TestRng::seed_from_u64(2003);
    for _ in 0..100 {
        let sys = gen::rand_positive_system(&mut rng, &SystemConfig::default());
        let alphabet: Vec<_> = sys.alphabet.iter().cloned().collect();
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 3);
        let renamed = gen::rand_renaming(&mut rng, &t);
        assert_eq!(sys.dtd.check(&t), sys.dtd.check(&renamed));
    }
}

#[test]
fn succ_is_renaming_invariant_up_to_canonical_form() {
    let mut rng = TestRng::seed_from_u64(2004);
    let mut compared = 0;
    for _ in 0..80 {
        let sys = gen::rand_positive_system(&mut rng, &SystemConfig::default());
        let Some(t) = gen::rand_invariant_tree(&mut rng, &sys, 6, 20) else {
            continue;
        };
        let renamed = gen::rand_renaming(&mut rng, &t);
        if !sys.satisfies_invariant(&renamed).unwrap() {
            continue;
        }
        let a: Vec<String> = succ(&sys, &t, PathBoundMode::Off)
            .unwrap()
            .iter()
            .map(|w| canonical_print(&w.result))
            .collect();
        let b: Vec<String> = succ(&sys, &renamed, PathBoundMode::Off)
            .unwrap()
            .iter()
            .map(|w| canonical_print(&w.result))
            .collect();
        let (mut a, mut b) = (a, b);
        a.sort();
        b.sort();
        assert_eq!(a, b);
        compared += 1;
    }
    assert!(compared > 30, "{compared}");
}

#[test]
fn apply_is_deterministic_and_replayable() {
    let mut rng = TestRng::seed_from_u64(2005);
    let mut replayed = 0;
    for _ in 0..60 {
        let sys = gen::rand_positive_system(&mut rng, &SystemConfig::default());
        let Some(t) = gen::rand_invariant_tree(&mut rng, &sys, 6, 20) else {
            continue;
        };
        for rule in &sys.rules {
            for w in enabled(rule, &t, &sys).unwrap() {
                let (again, valuation) = apply(rule, &t, &w.matching).unwrap();
                assert_eq!(again, w.result);
                assert_eq!(valuation, w.valuation);
                assert!(replay(&sys, &t, &[w.clone()]).unwrap());
                replayed += 1;
            }
        }
    }
    assert!(replayed > 20, "{replayed}");
}

#[test]
fn fresh_values_never_collide_with_source_values() {
    let mut rng = TestRng::seed_from_u64(2006);
    let mut observed = 0;
    for _ in 0..80 {
        let sys = gen::rand_positive_system(&mut rng, &SystemConfig::default());
        let Some(t) = gen::rand_invariant_tree(&mut rng, &sys, 6, 20) else {
            continue;
        };
        let source_values = t.data_values();
        for rule in &sys.rules {
            let fresh = rule.fresh_variables();
            if fresh.is_empty() {
                continue;
            }
            for w in enabled(rule, &t, &sys).unwrap() {
                let mut seen: Vec<DataValue> = Vec::new();
                for v in &fresh {
                    let value = w.valuation[v];
                    assert!(!source_values.contains(&value), "fresh value collides");
                    assert!(!seen.contains(&value), "fresh values not distinct");
                    seen.push(value);
                    observed += 1;
                }
            }
        }
    }
    assert!(observed > 10, "{observed}");
}

#[test]
fn canonical_print_characterizes_equivalence() {
    let mut rng = TestRng::seed_from_u64(2007);
    let alphabet = gen::tags(&["a", "b"]);
    let mut equal = 0;
    let mut different = 0;
    for i in 0..400 {
        let t1 = gen::rand_tree(&mut rng, &alphabet, 7, 3);
        let t2 = if i % 2 == 0 {
            gen::rand_renaming(&mut rng, &t1)
        } else {
            gen::rand_tree(&mut rng, &alphabet, 7, 3)
        };
        let same_print = canonical_print(&t1) == canonical_print(&t2);
        let equiv = equivalent(&t1, &t2);
        assert_eq!(same_print, equiv, "{t1:?} vs {t2:?}");
        if equiv {
            equal += 1;
        } else {
            different += 1;
        }
    }
    assert!(equal > 100 && different > 100, "{equal}/{different}");
}

#[test]
fn basis_insert_maintains_antichain() {
    let mut rng = TestRng::seed_from_u64(2008);
    let alphabet = gen::tags(&["a", "b"]);
    let mut basis = Basis::new();
    for _ in 0..60 {
        let t = gen::rand_tree(&mut rng, &alphabet, 5, 2);
        basis.insert(t);
        assert!(basis.is_antichain());
    }
    // covering is consistent with membership
    for t in basis.trees().to_vec() {
        assert!(basis.covers(&t));
        let bigger = gen::rand_extension(&mut rng, &t, &alphabet, 2);
        assert!(basis.covers(&bigger));
    }
}

// ---------------------------------------------------------------------------
// Hand-built verification cases
// ---------------------------------------------------------------------------

const LOOPING: &str = r#"
system looping {
  alphabet { a, b }
  dtd { root: a; }
  bounds { depth: 1; simple-path: 2; }
  init { tree: [a]; }
  rule grow {
    locator: [a{append=F}];
    forest F: [b];
  }
}
"#;

const DELETE_ONLY: &str = r#"
system shrinking {
  alphabet { a, b }
  dtd { root: a; }
  bounds { depth: 1; simple-path: 2; }
  init { tree: [a]([b], [b], [b]); }
  rule drop {
    locator: [a]([b{del}]);
  }
}
"#;

#[test]
fn terminate_detects_monotone_growth() {
    let sys = parse_system(LOOPING).unwrap();
    let t0 = parse_tree("[a]").unwrap();
    let outcome = terminate(&sys, &t0).unwrap();
    let Verdict::Nonterminating { initial, prefix, lasso } = outcome.verdict else {
        panic!("expected a lasso, got {:?}", outcome.verdict);
    };
    assert_eq!(initial, t0);
    assert!(prefix.is_empty(), "t0 itself is dominated after one step");
    assert_eq!(lasso.len(), 1);
    // the lasso witness replays and its endpoints embed
    assert!(replay(&sys, &t0, &lasso).unwrap());
    assert!(embeds(&t0, &lasso.last().unwrap().result).is_some());
}

#[test]
fn terminate_on_delete_only_system() {
    let sys = parse_system(DELETE_ONLY).unwrap();
    let t0 = parse_tree("[a]([b], [b], [b])").unwrap();
    let outcome = terminate(&sys, &t0).unwrap();
    assert!(matches!(outcome.verdict, Verdict::Terminates));
    assert!(outcome.stats.states_explored >= 4);
}

#[test]
fn terminate_trivial_when_nothing_enabled() {
    let sys = parse_system(DELETE_ONLY).unwrap();
    let t0 = parse_tree("[a]").unwrap(); // no b to delete
    let outcome = terminate(&sys, &t0).unwrap();
    assert!(matches!(outcome.verdict, Verdict::Terminates));
    assert_eq!(outcome.stats.states_explored, 1);
}

const RENAME_CHAIN: &str = r#"
system chain {
  alphabet { a, b, c }
  dtd { root: a, b, c; }
  bounds { depth: 1; simple-path: 2; }
  init { tree: [a]; }
  rule ab { locator: [a{ren=b}]; }
  rule bc { locator: [b{ren=c}]; }
}
"#;

#[test]
fn bmc_finds_chain_at_exact_depth() {
    let sys = parse_system(RENAME_CHAIN).unwrap();
    let target = parse_pattern("[c]").unwrap();
    // not reachable within 1 step, but the space is not exhausted
    let at1 = bmc(&sys, &target, 1).unwrap();
    assert!(matches!(at1.verdict, Verdict::Inconclusive { .. }));
    // found at 2 with a trace of length 2
    let at2 = bmc(&sys, &target, 2).unwrap();
    let Verdict::Reachable { initial, trace } = at2.verdict else {
        panic!("expected reachable");
    };
    assert_eq!(trace.len(), 2);
    assert!(replay(&sys, &initial, &trace).unwrap());
    assert!(!match_all(&target, &trace.last().unwrap().result, None)
        .unwrap()
        .is_empty());
}

#[test]
fn bmc_zero_bound_checks_initial_trees_only() {
    let sys = parse_system(RENAME_CHAIN).unwrap();
    let hit = bmc(&sys, &parse_pattern("[a]").unwrap(), 0).unwrap();
    assert!(matches!(hit.verdict, Verdict::Reachable { ref trace, .. } if trace.is_empty()));
    let miss = bmc(&sys, &parse_pattern("[b]").unwrap(), 0).unwrap();
    assert!(matches!(miss.verdict, Verdict::Inconclusive { .. }));
}

#[test]
fn bmc_exhaustion_gives_definitive_unreachable() {
    let sys = parse_system(RENAME_CHAIN).unwrap();
    // the chain saturates after 2 steps; a large bound exhausts the space
    let out = bmc(&sys, &parse_pattern("[a]([b])").unwrap(), 50).unwrap();
    assert!(matches!(out.verdict, Verdict::Unreachable));
}

#[test]
fn simulate_is_reproducible_and_replayable() {
    let sys = parse_system(LOOPING).unwrap();
    let t0 = parse_tree("[a]").unwrap();
    let a = simulate(&sys, &t0, 5, Policy::Random(42)).unwrap();
    let b = simulate(&sys, &t0, 5, Policy::Random(42)).unwrap();
    assert_eq!(a.steps.len(), 5);
    let ta: Vec<String> = a.steps.iter().map(|s| canonical_print(&s.witness.result)).collect();
    let tb: Vec<String> = b.steps.iter().map(|s| canonical_print(&s.witness.result)).collect();
    assert_eq!(ta, tb);
    let witnesses: Vec<_> = a.steps.iter().map(|s| s.witness.clone()).collect();
    assert!(replay(&sys, &t0, &witnesses).unwrap());

    let zero = simulate(&sys, &t0, 0, Policy::FirstEnabled).unwrap();
    assert!(zero.steps.is_empty());
}

#[test]
fn simulate_stops_early_without_enabled_rules() {
    let sys = parse_system(DELETE_ONLY).unwrap();
    let t0 = parse_tree("[a]([b])").unwrap();
    let trace = simulate(&sys, &t0, 10, Policy::FirstEnabled).unwrap();
    assert_eq!(trace.steps.len(), 1);
    assert!(trace.stopped_early.is_some());
}

#[test]
fn validation_classifies_systems() {
    let positive = parse_system(RENAME_CHAIN).unwrap();
    assert!(analysis::validate(&positive).positive_eligible);

    let negated_guard = r#"
system negated {
  alphabet { a, b }
  dtd { root: a; }
  bounds { depth: 1; simple-path: 2; }
  init { tree: [a]; }
  rule r { locator: [a{ren=b}]; guard: ![b]; }
}
"#;
    let sys = parse_system(negated_guard).unwrap();
    let report = analysis::validate(&sys);
    assert!(!report.guards_positive);
    assert!(!report.positive_eligible);

    let recursive = r#"
system recursive {
  alphabet { a }
  dtd { root: a; a -> |a| >= 0; }
  bounds { simple-path: 2; }
  init { tree: [a]; }
}
"#;
    let sys = parse_system(recursive).unwrap();
    let report = analysis::validate(&sys);
    assert!(report.dtd_depth_bound.is_err());
    assert!(!report.positive_eligible);
}

#[test]
fn deleted_nodes_are_exactly_the_marked_subtrees() {
    let src = r#"
system del {
  alphabet { a, b, c }
  dtd { root: a; }
  bounds { depth: 3; simple-path: 6; }
  init { tree: [a]; }
  rule cut { locator: [a]([b{del}](-[c{del}])); }
}
"#;
    let sys = parse_system(src).unwrap();
    let t = parse_tree("[a]([b]([x.mid]([c])), [b]([c]))").unwrap();
    // undeclared tag in the subject tree is fine for the engine itself
    for w in enabled(&sys.rules[0], &t, &sys).unwrap() {
        // deleting the matched b-subtree removes it wholly, nothing else
        let b_image = w.matching.get(dtprs_core::pattern::PatternNodeId(1));
        let removed = t.subtree(b_image).len();
        assert_eq!(w.result.len(), t.len() - removed);
    }
}

#[test]
fn eval_query_returns_distinct_trees() {
    use dtprs_core::pattern::{eval_query, Query, Template};
    let mut rng = TestRng::seed_from_u64(2009);
    let alphabet = gen::tags(&["a", "b"]);
    for _ in 0..100 {
        let body = gen::rand_pattern(&mut rng, &alphabet, 3);
        if body.is_relative() {
            continue;
        }
        let vars = body.variables();
        if vars.is_empty() {
            continue;
        }
        let q = Query {
            body: body.clone(),
            head: Template::node("a", vec![Template::var_leaf(vars[0].as_str())]),
        };
        let t = gen::rand_tree(&mut rng, &alphabet, 6, 2);
        let forest = eval_query(&q, &t, DataTree::ROOT).unwrap();
        for (i, a) in forest.iter().enumerate() {
            for b in forest.iter().skip(i + 1) {
                assert_ne!(a, b, "duplicate query results");
            }
        }
    }
}

#[test]
fn symbolic_init_enumerates_invariant_trees() {
    let src = r#"
system sym {
  alphabet { a, b }
  dtd { root: a; a -> |b| >= 1; }
  bounds { depth: 2; simple-path: 4; }
  init { symbolic { formula: [a]([b]); cap: 4; } }
}
"#;
    let sys = parse_system(src).unwrap();
    let trees = analysis::initial_trees(&sys).unwrap();
    assert!(!trees.is_empty());
    for t in &trees {
        assert!(sys.satisfies_invariant(t).unwrap());
        assert!(t.len() <= 4);
    }
    let mut prints: Vec<_> = trees.iter().map(canonical_print).collect();
    prints.sort();
    prints.dedup();
    assert_eq!(prints.len(), trees.len(), "no duplicate classes");
}

#[test]
fn renaming_map_sanity() {
    // rename_values is a plain relabeling
    let t = parse_tree("[a](@1, @2, @1)").unwrap();
    let mut map = BTreeMap::new();
    map.insert(DataValue(1), DataValue(9));
    let renamed = t.rename_values(&map);
    assert_eq!(renamed.data_values().len(), 2);
    assert!(equivalent(&t, &renamed));
}
