//! Command-line front end.
//!
//! Exit codes: 0 for definitive good verdicts (unreachable / terminates),
//! 1 when a witness was found, 2 for inconclusive results, 3 and up for
//! usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dtprs_cli::{assets, pcp};
use dtprs_core::analysis::{
    self, bmc, reach_backward, simulate, terminate, Outcome, Policy, Verdict,
};
use dtprs_core::canon::canonical_print;
use dtprs_core::frontend::{parse_pattern, parse_system, parse_tree, print_system};
use dtprs_core::graph::{graph_of, longest_simple_path};
use dtprs_core::order::{dfs_decomposition, embeds, encode};
use dtprs_core::rewrite::{succ, PathBoundMode, StepWitness, System};
use dtprs_core::tree::DataTree;

#[derive(Parser)]
#[command(name = "dtprs", version, about = "Verifier for data tree rewriting systems")]
struct Cli {
    /// Keep exploration single-threaded for reproducible traces (the
    /// engine is single-threaded; the flag pins the contract).
    #[arg(long, global = true)]
    single_threaded: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Args)]
struct SpecArg {
    /// System specification file (.dtprs)
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check the positive-fragment conditions and classify the system
    Validate {
        #[command(flatten)]
        spec: SpecArg,
    },
    /// Apply a number of rewriting steps and print the trace
    Simulate {
        #[command(flatten)]
        spec: SpecArg,
        /// Initial tree file; defaults to the system's (single) initial tree
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// first-enabled | random | exhaustive
        #[arg(long, default_value = "first-enabled")]
        policy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List the successor classes of a tree
    Succ {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Backward pattern reachability (positive systems)
    Reach {
        #[command(flatten)]
        spec: SpecArg,
        /// Target pattern file (.dtp)
        #[arg(long)]
        pattern: PathBuf,
        /// Predecessor size cap; empty results under a cap are inconclusive
        #[arg(long, default_value_t = 64)]
        size_cap: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide termination from one initial tree (positive systems)
    Terminate {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bounded forward exploration for a pattern witness
    Bmc {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        pattern: PathBuf,
        /// Step bound
        #[arg(long)]
        bound: usize,
        /// Replace the system's initial set by these tree files
        #[arg(long)]
        init: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide whether the first tree embeds into the second
    Embed {
        tree1: PathBuf,
        tree2: PathBuf,
    },
    /// Depth-first tree decomposition of a tree's graph with its encoding
    Decompose {
        #[arg(long)]
        tree: PathBuf,
        /// Path bound K; defaults to the measured longest simple path
        #[arg(long)]
        bound: Option<u64>,
    },
    /// Generators for test inputs and the packaged case studies
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Subcommand)]
enum GenCommand {
    /// Emit a correspondence-problem reduction: <dir>/pcp.dtprs + solved.dtp
    Pcp {
        /// Instance as u:v pairs, e.g. "abbb:a,b:b,a:bbba"
        #[arg(long)]
        pairs: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the packaged example files into a directory
    Examples {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(3)
}

fn load_system(path: &Path) -> Result<System, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_system(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn load_tree(path: &Path) -> Result<DataTree, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_tree(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn initial_tree(sys: &System, flag: &Option<PathBuf>) -> Result<DataTree, String> {
    if let Some(path) = flag {
        return load_tree(path);
    }
    let trees = analysis::initial_trees(sys).map_err(|e| e.to_string())?;
    match trees.len() {
        1 => Ok(trees[0].clone()),
        0 => Err("the system declares no initial tree; pass --tree".into()),
        n => Err(format!("the system declares {n} initial trees; pass --tree")),
    }
}

/// One JSON record per step, matching the schema in the README.
fn step_record(index: usize, w: &StepWitness) -> serde_json::Value {
    let matching: Vec<serde_json::Value> = w
        .matching
        .pairs()
        .map(|(pn, tn)| serde_json::json!([pn.0, tree_path(&w.result, tn)]))
        .collect();
    let valuation: serde_json::Map<String, serde_json::Value> = w
        .valuation
        .iter()
        .map(|(k, v)| (k.to_string(), serde_json::json!(v.0)))
        .collect();
    serde_json::json!({
        "step": index,
        "rule": w.rule,
        "matching": matching,
        "valuation": valuation,
        "tree": canonical_print(&w.result),
    })
}

/// Child-index path from the root (in the tree's stored order).
fn tree_path(t: &DataTree, n: dtprs_core::tree::NodeId) -> String {
    if n.index() >= t.len() {
        return "?".into();
    }
    let mut segments = Vec::new();
    let mut cur = n;
    while let Some(p) = t.parent(cur) {
        let idx = t.children(p).iter().position(|c| *c == cur).unwrap();
        segments.push(idx.to_string());
        cur = p;
    }
    segments.reverse();
    segments.join(".")
}

fn print_trace(initial: &DataTree, trace: &[StepWitness], format: Format) {
    match format {
        Format::Text => {
            println!("initial: {}", canonical_print(initial));
            for (i, w) in trace.iter().enumerate() {
                println!(
                    "step {:>3}: {:<16} -> {}",
                    i + 1,
                    w.rule,
                    canonical_print(&w.result)
                );
            }
        }
        Format::JsonLines => {
            println!(
                "{}",
                serde_json::json!({"step": 0, "rule": null, "tree": canonical_print(initial)})
            );
            for (i, w) in trace.iter().enumerate() {
                println!("{}", step_record(i + 1, w));
            }
        }
    }
}

fn finish(outcome: Outcome, format: Format) -> ExitCode {
    eprintln!(
        "stats: states={} basis={} iterations={} wall={}ms",
        outcome.stats.states_explored,
        outcome.stats.basis_size,
        outcome.stats.iterations,
        outcome.stats.wall_time_ms
    );
    match &outcome.verdict {
        Verdict::Reachable { initial, trace } => {
            println!("REACHABLE in {} steps", trace.len());
            print_trace(initial, trace, format);
        }
        Verdict::Unreachable => println!("UNREACHABLE"),
        Verdict::Terminates => println!("TERMINATES"),
        Verdict::Nonterminating { initial, prefix, lasso } => {
            println!(
                "NONTERMINATING (lasso after {} steps, pumping segment of {})",
                prefix.len(),
                lasso.len()
            );
            let mut full = prefix.clone();
            full.extend(lasso.iter().cloned());
            print_trace(initial, &full, format);
        }
        Verdict::Inconclusive { reason } => println!("INCONCLUSIVE: {reason}"),
    }
    ExitCode::from(outcome.verdict.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { spec } => {
            let sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            print!("{}", analysis::validate(&sys).render());
            ExitCode::SUCCESS
        }
        Command::Simulate { spec, tree, steps, policy, seed, format } => {
            let sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let t0 = match initial_tree(&sys, &tree) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let policy = match policy.as_str() {
                "first-enabled" => Policy::FirstEnabled,
                "random" => Policy::Random(seed),
                "exhaustive" => Policy::ExhaustiveListing,
                other => return fail(format!("unknown policy `{other}`")),
            };
            let trace = match simulate(&sys, &t0, steps, policy) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let witnesses: Vec<StepWitness> =
                trace.steps.iter().map(|s| s.witness.clone()).collect();
            print_trace(&trace.initial, &witnesses, format);
            if policy == Policy::ExhaustiveListing {
                for (i, s) in trace.steps.iter().enumerate() {
                    if let Some(alts) = &s.alternatives {
                        for a in alts {
                            eprintln!(
                                "step {:>3}: enabled {:<16} -> {}",
                                i + 1,
                                a.rule,
                                canonical_print(&a.result)
                            );
                        }
                    }
                }
            }
            if let Some(note) = trace.stopped_early {
                eprintln!("stopped early: {note}");
            }
            ExitCode::SUCCESS
        }
        Command::Succ { spec, tree, format } => {
            let sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let t = match load_tree(&tree) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            match succ(&sys, &t, PathBoundMode::Off) {
                Ok(ws) => {
                    for (i, w) in ws.iter().enumerate() {
                        match format {
                            Format::Text => {
                                println!("{:<16} -> {}", w.rule, canonical_print(&w.result))
                            }
                            Format::JsonLines => println!("{}", step_record(i + 1, w)),
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Reach { spec, pattern, size_cap, format } => {
            let sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let text = match fs::read_to_string(&pattern) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let p = match parse_pattern(&text) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            match reach_backward(&sys, &p, size_cap) {
                Ok(outcome) => finish(outcome, format),
                Err(e) => fail(e),
            }
        }
        Command::Terminate { spec, tree, format } => {
            let sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let t0 = match initial_tree(&sys, &tree) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            match terminate(&sys, &t0) {
                Ok(outcome) => finish(outcome, format),
                Err(e) => fail(e),
            }
        }
        Command::Bmc { spec, pattern, bound, init, format } => {
            let mut sys = match load_system(&spec.spec) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let text = match fs::read_to_string(&pattern) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let p = match parse_pattern(&text) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            if !init.is_empty() {
                let mut trees = Vec::new();
                for path in &init {
                    match load_tree(path) {
                        Ok(t) => trees.push(t),
                        Err(e) => return fail(e),
                    }
                }
                sys.init = dtprs_core::rewrite::InitSpec::Explicit(trees);
            }
            match bmc(&sys, &p, bound) {
                Ok(outcome) => finish(outcome, format),
                Err(e) => fail(e),
            }
        }
        Command::Embed { tree1, tree2 } => {
            let (t1, t2) = match (load_tree(&tree1), load_tree(&tree2)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(e),
            };
            match embeds(&t1, &t2) {
                Some(witness) => {
                    println!("yes");
                    for (a, b) in witness.pairs() {
                        println!("  {} -> {}", tree_path(&t1, a), tree_path(&t2, b));
                    }
                    ExitCode::SUCCESS
                }
                None => {
                    println!("no");
                    ExitCode::from(1)
                }
            }
        }
        Command::Decompose { tree, bound } => {
            let t = match load_tree(&tree) {
                Ok(t) => t,
                Err(e) => return fail(e),
            };
            let g = match graph_of(&t, bound.unwrap_or(u64::MAX)) {
                Ok(g) => g,
                Err(e) => return fail(e),
            };
            let measured = longest_simple_path(&g);
            let k = bound.unwrap_or(measured);
            eprintln!("longest simple path: {measured}");
            let d = match dfs_decomposition(&g, k as usize) {
                Ok(d) => d,
                Err(e) => return fail(e),
            };
            let enc = match encode(&d, &g) {
                Ok(e) => e,
                Err(err) => return fail(err),
            };
            println!(
                "decomposition (K = {k}, width {}, depth {})",
                d.width(),
                d.depth()
            );
            for n in 0..d.node_count() {
                let bag: Vec<String> =
                    d.bag(n).iter().map(|v| format!("{}", g.label(*v))).collect();
                let parent = match d.parent(n) {
                    None => "-".to_string(),
                    Some(p) => p.to_string(),
                };
                println!("node {n} (parent {parent}): [{}]", bag.join(", "));
                let l = enc.label(n);
                println!(
                    "  eq={:?} edges={:?} overlap={:?}",
                    l.eq_pairs, l.edge_pairs, l.parent_overlap
                );
            }
            ExitCode::SUCCESS
        }
        Command::Gen(cmd) => match cmd {
            GenCommand::Pcp { pairs, out } => {
                let Some(parsed) = pcp::parse_pairs(&pairs) else {
                    return fail("pairs must look like \"abbb:a,b:b,a:bbba\"");
                };
                let (sys, target) = match pcp::gen_pcp(&parsed) {
                    Ok(x) => x,
                    Err(e) => return fail(e),
                };
                if let Err(e) = fs::create_dir_all(&out) {
                    return fail(e);
                }
                let sys_path = out.join("pcp.dtprs");
                let pat_path = out.join("solved.dtp");
                if let Err(e) = fs::write(&sys_path, print_system(&sys)) {
                    return fail(e);
                }
                if let Err(e) = fs::write(
                    &pat_path,
                    format!("{}\n", dtprs_core::frontend::print_pattern(&target)),
                ) {
                    return fail(e);
                }
                println!("wrote {}", sys_path.display());
                println!("wrote {}", pat_path.display());
                ExitCode::SUCCESS
            }
            GenCommand::Examples { out } => {
                if let Err(e) = fs::create_dir_all(&out) {
                    return fail(e);
                }
                for (name, text) in assets::all() {
                    let path = out.join(name);
                    if let Err(e) = fs::write(&path, text) {
                        return fail(e);
                    }
                    println!("wrote {}", path.display());
                }
                ExitCode::SUCCESS
            }
        },
    }
}
