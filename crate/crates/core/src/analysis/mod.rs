//! Verification procedures: system validation, backward pattern
//! reachability for positive systems, termination from a single tree, and
//! bounded forward exploration.

mod pred;

pub use pred::{pred_basis, PredOptions};

use std::collections::BTreeMap;
use std::time::Instant;

use rand::prelude::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::canonical_print;
use crate::graph::{graph_of, longest_simple_path};
use crate::order::{embeds, equivalent};
use crate::pattern::{eval_formula, match_all, MatchError, TreePattern};
use crate::rewrite::{
    apply, enabled, succ, InitSpec, PathBoundMode, StepWitness, SuccError, System,
};
use crate::tree::DataTree;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("system is not positive-eligible: {0}")]
    NotPositiveEligible(String),
    #[error("initial tree violates the static invariant: {0}")]
    InitViolatesInvariant(String),
    #[error("backward analysis does not support rules with queries (rule {0})")]
    QueriesUnsupported(String),
    #[error("target pattern must be positive and non-relative")]
    BadTarget,
    #[error(transparent)]
    Succ(#[from] SuccError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Outcome of a verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Verdict {
    /// Forward-replayable witness trace from `initial`.
    Reachable {
        initial: DataTree,
        trace: Vec<StepWitness>,
    },
    Unreachable,
    Terminates,
    /// A lasso: `prefix` reaches a tree that embeds into the tree reached
    /// after `lasso` (strong compatibility pumps it forever).
    Nonterminating {
        initial: DataTree,
        prefix: Vec<StepWitness>,
        lasso: Vec<StepWitness>,
    },
    Inconclusive { reason: String },
}

impl Verdict {
    /// Exit-code contract: 0 definitive good, 1 witness found, 2
    /// inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Unreachable | Verdict::Terminates => 0,
            Verdict::Reachable { .. } | Verdict::Nonterminating { .. } => 1,
            Verdict::Inconclusive { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Stats {
    pub states_explored: usize,
    pub basis_size: usize,
    pub iterations: usize,
    pub wall_time_ms: u128,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: Stats,
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub system: String,
    /// Depth bound derived from the DTD, or the recursion witness.
    pub dtd_depth_bound: Result<u64, String>,
    pub declared_depth_bound: Option<u64>,
    pub dtd_positive: bool,
    pub guards_positive: bool,
    pub invariant_positive: bool,
    pub simple_path_bound: Option<u64>,
    pub rule_problems: Vec<String>,
    pub init_problems: Vec<String>,
    pub positive_eligible: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("system {}\n", self.system));
        match &self.dtd_depth_bound {
            Ok(b) => out.push_str(&format!("  dtd: non-recursive, derived depth bound B = {b}\n")),
            Err(c) => out.push_str(&format!("  dtd: RECURSIVE ({c})\n")),
        }
        if let Some(b) = self.declared_depth_bound {
            out.push_str(&format!("  declared depth bound: {b}\n"));
        }
        out.push_str(&format!("  dtd positive: {}\n", self.dtd_positive));
        out.push_str(&format!("  guards positive: {}\n", self.guards_positive));
        out.push_str(&format!(
            "  data invariant positive: {}\n",
            self.invariant_positive
        ));
        match self.simple_path_bound {
            Some(k) => out.push_str(&format!(
                "  simple-path bound K = {k} (enforced by the runtime monitor)\n"
            )),
            None => out.push_str("  simple-path bound: NOT DECLARED\n"),
        }
        for p in &self.rule_problems {
            out.push_str(&format!("  rule problem: {p}\n"));
        }
        for p in &self.init_problems {
            out.push_str(&format!("  init problem: {p}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out.push_str(&format!(
            "  classification: {}\n",
            if self.positive_eligible {
                "positive-eligible (backward reachability and termination available)"
            } else {
                "forward-only (bmc and simulate)"
            }
        ));
        out
    }
}

/// Check the positive-fragment conditions and report them; the simple-path
/// bound cannot be verified statically and is monitored at runtime.
pub fn validate(sys: &System) -> ValidationReport {
    let dtd_depth_bound = sys.dtd.depth_bound().map_err(|e| e.to_string());
    let dtd_positive = sys.dtd.is_positive();
    let guards_positive = sys.rules.iter().all(|r| r.guard.is_positive());
    let invariant_positive = sys.data_invariant.is_positive();
    let mut rule_problems = Vec::new();
    for rule in &sys.rules {
        if let Err(e) = rule.check_invariants() {
            rule_problems.push(e);
        }
    }
    let mut init_problems = Vec::new();
    if let InitSpec::Explicit(trees) = &sys.init {
        for (i, t) in trees.iter().enumerate() {
            match sys.satisfies_invariant(t) {
                Ok(true) => {}
                Ok(false) => init_problems.push(format!("initial tree {i} violates the invariant")),
                Err(e) => init_problems.push(format!("initial tree {i}: {e}")),
            }
        }
    }
    let mut notes = Vec::new();
    if sys.simple_path_bound.is_none() {
        notes.push(
            "no simple-path bound declared: the system may create unbounded data links; \
             only bmc and simulate apply"
                .to_string(),
        );
    } else {
        notes.push(
            "the declared simple-path bound is a promise about reachable trees; \
             it is checked by the runtime monitor, not statically"
                .to_string(),
        );
    }
    if let (Ok(derived), Some(declared)) = (&dtd_depth_bound, sys.depth_bound) {
        if declared < *derived {
            notes.push(format!(
                "declared depth bound {declared} is smaller than the DTD-derived bound {derived}"
            ));
        }
    }
    let positive_eligible = dtd_depth_bound.is_ok()
        && dtd_positive
        && guards_positive
        && invariant_positive
        && sys.simple_path_bound.is_some()
        && rule_problems.is_empty()
        && init_problems.is_empty();
    ValidationReport {
        system: sys.name.clone(),
        dtd_depth_bound,
        declared_depth_bound: sys.depth_bound,
        dtd_positive,
        guards_positive,
        invariant_positive,
        simple_path_bound: sys.simple_path_bound,
        rule_problems,
        init_problems,
        positive_eligible,
        notes,
    }
}

fn require_positive_eligible(sys: &System) -> Result<(), AnalysisError> {
    let report = validate(sys);
    if !report.positive_eligible {
        let mut why = Vec::new();
        if report.dtd_depth_bound.is_err() {
            why.push("recursive DTD".to_string());
        }
        if !report.dtd_positive {
            why.push("non-positive DTD".to_string());
        }
        if !report.guards_positive {
            why.push("non-positive guard".to_string());
        }
        if !report.invariant_positive {
            why.push("non-positive invariant".to_string());
        }
        if report.simple_path_bound.is_none() {
            why.push("no simple-path bound".to_string());
        }
        why.extend(report.rule_problems);
        why.extend(report.init_problems);
        return Err(AnalysisError::NotPositiveEligible(why.join("; ")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bases
// ---------------------------------------------------------------------------

/// Finite antichain of trees representing its upward closure.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Basis {
    trees: Vec<DataTree>,
}

impl Basis {
    pub fn new() -> Self {
        Basis { trees: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[DataTree] {
        &self.trees
    }

    /// Some element embeds into `t`.
    pub fn covers(&self, t: &DataTree) -> bool {
        self.trees.iter().any(|b| embeds(b, t).is_some())
    }

    /// Antichain insert: drop `t` if covered, evict members it covers.
    /// Returns true when `t` enters the basis.
    pub fn insert(&mut self, t: DataTree) -> bool {
        if self.covers(&t) {
            return false;
        }
        self.trees.retain(|b| embeds(&t, b).is_none());
        self.trees.push(t);
        true
    }

    /// No element embeds into another (checked by tests).
    pub fn is_antichain(&self) -> bool {
        for (i, a) in self.trees.iter().enumerate() {
            for (j, b) in self.trees.iter().enumerate() {
                if i != j && embeds(a, b).is_some() {
                    return false;
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Termination
// ---------------------------------------------------------------------------

/// Build the finite reachability tree depth-first; close a branch when an
/// ancestor embeds into the current tree (a lasso) and report it, otherwise
/// exhaust the tree.
pub fn terminate(sys: &System, t0: &DataTree) -> Result<Outcome, AnalysisError> {
    require_positive_eligible(sys)?;
    if !sys.satisfies_invariant(t0)? {
        return Err(AnalysisError::InitViolatesInvariant(canonical_print(t0)));
    }
    let started = Instant::now();
    let mut stats = Stats::default();

    struct Frame {
        tree: DataTree,
        witness: Option<StepWitness>,
    }

    // memo of subtrees known to terminate, by canonical form
    let mut known_terminating: std::collections::BTreeSet<String> = Default::default();

    fn explore(
        sys: &System,
        branch: &mut Vec<Frame>,
        known: &mut std::collections::BTreeSet<String>,
        stats: &mut Stats,
    ) -> Result<Option<(usize, Vec<StepWitness>)>, AnalysisError> {
        stats.states_explored += 1;
        let current = branch.last().unwrap().tree.clone();
        // domination check against proper ancestors on this branch
        for (i, frame) in branch.iter().enumerate().take(branch.len() - 1) {
            if embeds(&frame.tree, &current).is_some() {
                let lasso = branch[i + 1..]
                    .iter()
                    .map(|f| f.witness.clone().expect("non-root frames carry witnesses"))
                    .collect();
                return Ok(Some((i, lasso)));
            }
        }
        let key = canonical_print(&current);
        if known.contains(&key) {
            return Ok(None);
        }
        for w in succ(sys, &current, PathBoundMode::Enforce)? {
            branch.push(Frame {
                tree: w.result.clone(),
                witness: Some(w),
            });
            let found = explore(sys, branch, known, stats)?;
            branch.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        known.insert(key);
        Ok(None)
    }

    let mut branch = vec![Frame {
        tree: t0.clone(),
        witness: None,
    }];
    let found = explore(sys, &mut branch, &mut known_terminating, &mut stats)?;
    stats.wall_time_ms = started.elapsed().as_millis();
    let verdict = match found {
        None => Verdict::Terminates,
        Some((anchor_index, lasso)) => {
            // witnesses along the branch up to the dominating ancestor
            let prefix = branch[1..=anchor_index]
                .iter()
                .map(|f| f.witness.clone().unwrap())
                .collect();
            Verdict::Nonterminating {
                initial: t0.clone(),
                prefix,
                lasso,
            }
        }
    };
    Ok(Outcome {
        verdict,
        stats,
    })
}

// ---------------------------------------------------------------------------
// Bounded exploration
// ---------------------------------------------------------------------------

/// Initial trees: the explicit list, or bounded enumeration of invariant
/// trees matching the symbolic formula.
pub fn initial_trees(sys: &System) -> Result<Vec<DataTree>, AnalysisError> {
    match &sys.init {
        InitSpec::Explicit(trees) => {
            for t in trees {
                if !sys.satisfies_invariant(t)? {
                    return Err(AnalysisError::InitViolatesInvariant(canonical_print(t)));
                }
            }
            Ok(trees.clone())
        }
        InitSpec::Symbolic { formula, cap } => {
            let alphabet: Vec<_> = sys.alphabet.iter().cloned().collect();
            let mut out = Vec::new();
            for t in crate::enumerate::enumerate_trees(&alphabet, *cap, true) {
                if sys.satisfies_invariant(&t)? && eval_formula(formula, &t, None)? {
                    out.push(t);
                }
            }
            Ok(out)
        }
    }
}

/// Breadth-first exploration of at most `bound` steps from the initial
/// trees, deduplicating states up to equivalence. Reachable verdicts carry
/// a minimal-length trace; exhausting the state space below the bound
/// yields a definitive Unreachable.
pub fn bmc(
    sys: &System,
    target: &TreePattern,
    bound: usize,
) -> Result<Outcome, AnalysisError> {
    if target.is_relative() {
        return Err(AnalysisError::BadTarget);
    }
    let started = Instant::now();
    let mut stats = Stats::default();

    struct Rec {
        tree: DataTree,
        parent: Option<(usize, StepWitness)>,
        root: usize, // index of the originating initial tree
    }

    let init = initial_trees(sys)?;
    let mut records: Vec<Rec> = Vec::new();
    let mut seen: std::collections::HashMap<String, ()> = Default::default();
    let mut frontier: Vec<usize> = Vec::new();

    let trace_to = |records: &Vec<Rec>, mut idx: usize| -> (usize, Vec<StepWitness>) {
        let mut rev = Vec::new();
        loop {
            match &records[idx].parent {
                None => return (records[idx].root, rev.into_iter().rev().collect()),
                Some((p, w)) => {
                    rev.push(w.clone());
                    idx = *p;
                }
            }
        }
    };

    for (root_idx, t) in init.iter().enumerate() {
        let key = canonical_print(t);
        if seen.contains_key(&key) {
            continue;
        }
        // exact confirmation behind the canonical-print prefilter
        debug_assert!(
            !records
                .iter()
                .any(|r: &Rec| canonical_print(&r.tree) == key && !equivalent(&r.tree, t)),
            "canonical print must refine equivalence"
        );
        seen.insert(key, ());
        records.push(Rec {
            tree: t.clone(),
            parent: None,
            root: root_idx,
        });
        frontier.push(records.len() - 1);
    }
    stats.states_explored = records.len();

    // bound 0: test the initial trees only
    for idx in &frontier {
        if !match_all(target, &records[*idx].tree, None)?.is_empty() {
            let (root, trace) = trace_to(&records, *idx);
            stats.wall_time_ms = started.elapsed().as_millis();
            return Ok(Outcome {
                verdict: Verdict::Reachable {
                    initial: init[root].clone(),
                    trace,
                },
                stats,
            });
        }
    }

    for _depth in 1..=bound {
        let mut next = Vec::new();
        for idx in frontier.drain(..) {
            let tree = records[idx].tree.clone();
            for w in succ(sys, &tree, PathBoundMode::Off)? {
                let key = canonical_print(&w.result);
                if seen.contains_key(&key) {
                    continue;
                }
                seen.insert(key, ());
                let root = records[idx].root;
                records.push(Rec {
                    tree: w.result.clone(),
                    parent: Some((idx, w)),
                    root,
                });
                let new_idx = records.len() - 1;
                stats.states_explored += 1;
                if !match_all(target, &records[new_idx].tree, None)?.is_empty() {
                    let (root, trace) = trace_to(&records, new_idx);
                    stats.wall_time_ms = started.elapsed().as_millis();
                    return Ok(Outcome {
                        verdict: Verdict::Reachable {
                            initial: init[root].clone(),
                            trace,
                        },
                        stats,
                    });
                }
                next.push(new_idx);
            }
        }
        if next.is_empty() {
            // state space exhausted below the bound
            stats.wall_time_ms = started.elapsed().as_millis();
            return Ok(Outcome {
                verdict: Verdict::Unreachable,
                stats,
            });
        }
        frontier = next;
    }

    stats.wall_time_ms = started.elapsed().as_millis();
    Ok(Outcome {
        verdict: Verdict::Inconclusive {
            reason: format!("no witness within {bound} steps"),
        },
        stats,
    })
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    FirstEnabled,
    Random(u64),
    /// Advance like FirstEnabled but record every enabled witness.
    ExhaustiveListing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStep {
    pub witness: StepWitness,
    pub enabled_count: usize,
    /// Present under the exhaustive-listing policy.
    pub alternatives: Option<Vec<StepWitness>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimTrace {
    pub initial: DataTree,
    pub steps: Vec<SimStep>,
    pub stopped_early: Option<String>,
}

/// Apply up to `steps` transitions under the policy, emitting a replayable
/// trace. Stops early (with a note) when no rule is enabled.
pub fn simulate(
    sys: &System,
    t0: &DataTree,
    steps: usize,
    policy: Policy,
) -> Result<SimTrace, AnalysisError> {
    if !sys.satisfies_invariant(t0)? {
        return Err(AnalysisError::InitViolatesInvariant(canonical_print(t0)));
    }
    let mut rng = match policy {
        Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut trace = SimTrace {
        initial: t0.clone(),
        steps: Vec::new(),
        stopped_early: None,
    };
    let mut current = t0.clone();
    for _ in 0..steps {
        let mut witnesses = Vec::new();
        for rule in &sys.rules {
            witnesses.extend(enabled(rule, &current, sys)?);
        }
        if witnesses.is_empty() {
            trace.stopped_early = Some("no rule enabled".to_string());
            break;
        }
        let enabled_count = witnesses.len();
        let chosen = match &mut rng {
            Some(rng) => {
                let indices: Vec<usize> = (0..witnesses.len()).collect();
                witnesses[*indices.choose(rng).unwrap()].clone()
            }
            None => witnesses[0].clone(),
        };
        current = chosen.result.clone();
        trace.steps.push(SimStep {
            witness: chosen,
            enabled_count,
            alternatives: if policy == Policy::ExhaustiveListing {
                Some(witnesses)
            } else {
                None
            },
        });
    }
    Ok(trace)
}

/// Re-run a trace through the rewriting engine and confirm it reproduces
/// each recorded result exactly.
pub fn replay(sys: &System, initial: &DataTree, trace: &[StepWitness]) -> Result<bool, AnalysisError> {
    let mut current = initial.clone();
    for w in trace {
        let Some(rule) = sys.rule(&w.rule) else {
            return Ok(false);
        };
        let Ok((result, valuation)) = apply(rule, &current, &w.matching) else {
            return Ok(false);
        };
        if result != w.result || valuation != w.valuation {
            return Ok(false);
        }
        current = result;
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Backward reachability
// ---------------------------------------------------------------------------

/// Backward exploration for positive systems: saturate the basis of trees
/// that can cover the target pattern, then intersect with the initial set.
pub fn reach_backward(
    sys: &System,
    target: &TreePattern,
    size_cap: usize,
) -> Result<Outcome, AnalysisError> {
    require_positive_eligible(sys)?;
    if target.is_relative() {
        return Err(AnalysisError::BadTarget);
    }
    for rule in &sys.rules {
        if !rule.queries.is_empty() {
            return Err(AnalysisError::QueriesUnsupported(rule.name.clone()));
        }
    }
    let started = Instant::now();
    let mut stats = Stats::default();
    let options = PredOptions {
        size_cap,
        ..PredOptions::for_system(sys)
    };

    let mut capped = false;

    // I0: minimal invariant trees matched by the pattern
    let (i0, i0_capped) = pred::target_basis(sys, target, &options);
    capped |= i0_capped;

    let mut basis = Basis::new();
    // iteration index at which each element entered (bounds the forward replay)
    let mut depth_of: Vec<(DataTree, usize)> = Vec::new();
    let mut worklist: Vec<(DataTree, usize)> = Vec::new();
    for t in i0.trees() {
        if basis.insert(t.clone()) {
            depth_of.push((t.clone(), 0));
            worklist.push((t.clone(), 0));
        }
    }

    while let Some((t, depth)) = worklist.pop() {
        stats.iterations = stats.iterations.max(depth + 1);
        let (pb, pb_capped) = pred_basis(sys, &t, &options)?;
        capped |= pb_capped;
        for p in pb.trees() {
            if basis.insert(p.clone()) {
                depth_of.retain(|(b, _)| basis.trees().iter().any(|x| x == b));
                depth_of.push((p.clone(), depth + 1));
                worklist.push((p.clone(), depth + 1));
            }
        }
        stats.basis_size = basis.len();
    }
    stats.basis_size = basis.len();

    // Intersection with the initial set.
    let init = initial_trees(sys)?;
    let mut hit: Option<(DataTree, usize)> = None;
    'outer: for t in &init {
        for (b, d) in &depth_of {
            if embeds(b, t).is_some() {
                hit = Some((t.clone(), *d));
                break 'outer;
            }
        }
    }

    let verdict = match hit {
        Some((initial, backward_depth)) => {
            // guided forward search: a witness of length <= backward_depth
            // exists by construction
            match forward_witness(sys, &initial, target, backward_depth)? {
                Some(trace) => Verdict::Reachable { initial, trace },
                None => Verdict::Inconclusive {
                    reason: "backward intersection found but forward replay failed \
                             (bound declaration is likely violated)"
                        .to_string(),
                },
            }
        }
        None => {
            if capped {
                Verdict::Inconclusive {
                    reason: format!(
                        "no intersection, but the predecessor search was capped at {size_cap} nodes"
                    ),
                }
            } else {
                Verdict::Unreachable
            }
        }
    };
    stats.wall_time_ms = started.elapsed().as_millis();
    Ok(Outcome { verdict, stats })
}

/// Bounded BFS used to produce the forward trace for a Reachable verdict.
fn forward_witness(
    sys: &System,
    initial: &DataTree,
    target: &TreePattern,
    bound: usize,
) -> Result<Option<Vec<StepWitness>>, AnalysisError> {
    struct Rec {
        tree: DataTree,
        parent: Option<(usize, StepWitness)>,
    }
    let mut records = vec![Rec {
        tree: initial.clone(),
        parent: None,
    }];
    let mut seen: std::collections::HashMap<String, ()> = Default::default();
    seen.insert(canonical_print(initial), ());
    let mut frontier = vec![0usize];

    let trace_to = |records: &Vec<Rec>, mut idx: usize| {
        let mut rev: Vec<StepWitness> = Vec::new();
        while let Some((p, w)) = &records[idx].parent {
            rev.push(w.clone());
            idx = *p;
        }
        rev.reverse();
        rev
    };

    if !match_all(target, initial, None)?.is_empty() {
        return Ok(Some(Vec::new()));
    }
    for _ in 0..bound {
        let mut next = Vec::new();
        for idx in frontier.drain(..) {
            let tree = records[idx].tree.clone();
            for w in succ(sys, &tree, PathBoundMode::Enforce)? {
                let key = canonical_print(&w.result);
                if seen.contains_key(&key) {
                    continue;
                }
                seen.insert(key, ());
                records.push(Rec {
                    tree: w.result.clone(),
                    parent: Some((idx, w)),
                });
                let new_idx = records.len() - 1;
                if !match_all(target, &records[new_idx].tree, None)?.is_empty() {
                    return Ok(Some(trace_to(&records, new_idx)));
                }
                next.push(new_idx);
            }
        }
        if next.is_empty() {
            return Ok(None);
        }
        frontier = next;
    }
    Ok(None)
}

/// Exhaustive forward closure (for finite state spaces): all reachable
/// states up to equivalence. Errors out if the closure exceeds `max_states`.
pub fn forward_closure(
    sys: &System,
    limit: usize,
) -> Result<(Vec<DataTree>, BTreeMap<String, usize>), AnalysisError> {
    let init = initial_trees(sys)?;
    let mut states: Vec<DataTree> = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut frontier: Vec<DataTree> = Vec::new();
    for t in init {
        let key = canonical_print(&t);
        if !seen.contains_key(&key) {
            seen.insert(key, states.len());
            states.push(t.clone());
            frontier.push(t);
        }
    }
    while let Some(t) = frontier.pop() {
        if states.len() > limit {
            return Err(AnalysisError::NotPositiveEligible(format!(
                "forward closure exceeded {limit} states"
            )));
        }
        for w in succ(sys, &t, PathBoundMode::Enforce)? {
            let key = canonical_print(&w.result);
            if !seen.contains_key(&key) {
                seen.insert(key, states.len());
                states.push(w.result.clone());
                frontier.push(w.result);
            }
        }
    }
    Ok((states, seen))
}

/// Simple-path length of a tree's graph (convenience for monitors/tests).
pub fn simple_path_length(t: &DataTree) -> u64 {
    let g = graph_of(t, u64::MAX).expect("unbounded");
    longest_simple_path(&g)
}
