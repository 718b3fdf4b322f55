//! Canonical form for unordered data trees.
//!
//! Two trees print identically iff they are equal up to a bijective renaming
//! of data values (the `equivalent` relation of the order module). Children
//! are ordered and values normalized by first occurrence; among all
//! orderings consistent with the value-blind structure the lexicographically
//! smallest token stream is chosen, which makes the result independent of
//! the stored child order and of the concrete value names.

use std::collections::BTreeMap;

use crate::tree::{DataTree, DataValue, NodeId, NodeLabel, Tag};

/// Token stream elements; the derived order fixes the canonical comparison.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum CTok {
    Open(Tag),
    Val(u64),
    Sep,
    Shut,
}

/// Bottom-up forms per node. `blind` collapses every value to `Val(0)`;
/// `raw` keeps the original value ids. Children are sorted by their own
/// form, so equal forms mean equal subtrees up to child order.
fn node_forms(t: &DataTree) -> (Vec<Vec<CTok>>, Vec<Vec<CTok>>) {
    let mut blind: Vec<Vec<CTok>> = vec![Vec::new(); t.len()];
    let mut raw: Vec<Vec<CTok>> = vec![Vec::new(); t.len()];
    for idx in (0..t.len()).rev() {
        let n = NodeId(idx as u32);
        match t.label(n) {
            NodeLabel::Data(v) => {
                blind[idx] = vec![CTok::Val(0)];
                raw[idx] = vec![CTok::Val(v.0)];
            }
            NodeLabel::Tag(tag) => {
                let mut kids: Vec<(&Vec<CTok>, &Vec<CTok>)> = t
                    .children(n)
                    .iter()
                    .map(|c| (&blind[c.index()], &raw[c.index()]))
                    .collect();
                kids.sort();
                let mut bf = vec![CTok::Open(tag.clone())];
                let mut rf = vec![CTok::Open(tag.clone())];
                for (i, (kb, kr)) in kids.iter().enumerate() {
                    if i > 0 {
                        bf.push(CTok::Sep);
                        rf.push(CTok::Sep);
                    }
                    bf.extend((*kb).iter().cloned());
                    rf.extend((*kr).iter().cloned());
                }
                bf.push(CTok::Shut);
                rf.push(CTok::Shut);
                blind[idx] = bf;
                raw[idx] = rf;
            }
        }
    }
    (blind, raw)
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv(h: u64, x: u64) -> u64 {
    let mut h = h;
    for b in x.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn fnv_str(h: u64, s: &str) -> u64 {
    let mut h = h;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn form_hash(form: &[CTok]) -> u64 {
    let mut h = FNV_OFFSET;
    for tok in form {
        match tok {
            CTok::Open(t) => {
                h = fnv(h, 1);
                h = fnv_str(h, t.as_str());
            }
            CTok::Val(v) => {
                h = fnv(h, 2);
                h = fnv(h, *v);
            }
            CTok::Sep => h = fnv(h, 3),
            CTok::Shut => h = fnv(h, 4),
        }
    }
    h
}

/// Isomorphism-invariant colors on data values, refined in the style of
/// Weisfeiler-Leman: a value's color combines its occurrence count with the
/// colors of values co-occurring under the same parents. The refinement
/// individualizes chain-linked values, which keeps the canonical search
/// linear on chain-shaped trees.
fn value_colors(t: &DataTree, blind: &[Vec<CTok>]) -> BTreeMap<DataValue, u64> {
    let mut colors: BTreeMap<DataValue, u64> = BTreeMap::new();
    let leaves = t.data_leaves();
    for &l in &leaves {
        let v = t.label(l).data().unwrap();
        *colors.entry(v).or_insert(0) += 1; // occurrence count as seed
    }
    let rounds = colors.len().min(16);
    for _ in 0..rounds {
        let mut next: BTreeMap<DataValue, u64> = BTreeMap::new();
        for (&v, &c) in &colors {
            let mut contexts: Vec<u64> = Vec::new();
            for &l in &leaves {
                if t.label(l).data() != Some(v) {
                    continue;
                }
                let parent = t.parent(l);
                let mut ctx = FNV_OFFSET;
                ctx = fnv(ctx, t.node_depth(l));
                if let Some(p) = parent {
                    ctx = fnv(ctx, form_hash(&blind[p.index()]));
                    // colors of sibling values under the same parent
                    let mut sib: Vec<u64> = t
                        .children(p)
                        .iter()
                        .filter(|c2| **c2 != l)
                        .filter_map(|c2| t.label(*c2).data())
                        .map(|w| colors[&w])
                        .collect();
                    sib.sort_unstable();
                    for x in sib {
                        ctx = fnv(ctx, x);
                    }
                }
                contexts.push(ctx);
            }
            contexts.sort_unstable();
            let mut h = fnv(FNV_OFFSET, c);
            for x in contexts {
                h = fnv(h, x);
            }
            next.insert(v, h);
        }
        let stable = {
            // partitions equal when the color->class grouping is unchanged
            let part = |m: &BTreeMap<DataValue, u64>| {
                let mut groups: BTreeMap<u64, Vec<DataValue>> = BTreeMap::new();
                for (v, c) in m {
                    groups.entry(*c).or_default().push(*v);
                }
                groups.into_values().collect::<Vec<_>>()
            };
            part(&colors) == part(&next)
        };
        colors = next;
        if stable {
            break;
        }
    }
    colors
}

/// Sorted multiset of value colors under each node (the ordering refiner).
fn wl_keys(t: &DataTree, colors: &BTreeMap<DataValue, u64>) -> Vec<Vec<u64>> {
    let mut keys: Vec<Vec<u64>> = vec![Vec::new(); t.len()];
    for idx in (0..t.len()).rev() {
        let n = NodeId(idx as u32);
        let mut k = Vec::new();
        if let Some(v) = t.label(n).data() {
            k.push(colors[&v]);
        }
        for c in t.children(n) {
            k.extend(keys[c.index()].iter().copied());
        }
        k.sort_unstable();
        keys[idx] = k;
    }
    keys
}

#[derive(Clone)]
enum Task {
    Node(NodeId),
    Children { remaining: Vec<NodeId>, first: bool },
    Tok(CTok),
}

#[derive(Clone)]
struct State {
    out: Vec<CTok>,
    assign: BTreeMap<DataValue, u64>,
    next_id: u64,
    on_best_prefix: bool,
}

struct Search<'a> {
    tree: &'a DataTree,
    blind: Vec<Vec<CTok>>,
    raw: Vec<Vec<CTok>>,
    wl: Vec<Vec<u64>>,
    best: Option<Vec<CTok>>,
}

impl<'a> Search<'a> {
    /// Append a token; false means the branch is already >= best and dead.
    fn push(&self, state: &mut State, tok: CTok) -> bool {
        if state.on_best_prefix {
            if let Some(best) = &self.best {
                match best.get(state.out.len()) {
                    None => return false,
                    Some(b) => {
                        if tok > *b {
                            return false;
                        }
                        if tok < *b {
                            state.on_best_prefix = false;
                        }
                    }
                }
            }
        }
        state.out.push(tok);
        true
    }

    /// Explore every completion of the task stack, updating `best`.
    fn run(&mut self, mut stack: Vec<Task>, mut state: State) {
        loop {
            let Some(task) = stack.pop() else {
                let better = match &self.best {
                    None => true,
                    Some(b) => state.out < *b,
                };
                if better {
                    self.best = Some(state.out);
                }
                return;
            };
            match task {
                Task::Tok(tok) => {
                    if !self.push(&mut state, tok) {
                        return;
                    }
                }
                Task::Node(n) => match self.tree.label(n) {
                    NodeLabel::Data(v) => {
                        let id = match state.assign.get(v) {
                            Some(id) => *id,
                            None => {
                                let id = state.next_id;
                                state.assign.insert(*v, id);
                                state.next_id = id + 1;
                                id
                            }
                        };
                        if !self.push(&mut state, CTok::Val(id)) {
                            return;
                        }
                    }
                    NodeLabel::Tag(tag) => {
                        if !self.push(&mut state, CTok::Open(tag.clone())) {
                            return;
                        }
                        stack.push(Task::Tok(CTok::Shut));
                        stack.push(Task::Children {
                            remaining: self.tree.children(n).to_vec(),
                            first: true,
                        });
                    }
                },
                Task::Children { remaining, first } => {
                    if remaining.is_empty() {
                        continue;
                    }
                    // Admissible orderings sort children by blind form and,
                    // within it, by the value-color refinement; both are
                    // isomorphism-invariant, so the minimum stays canonical.
                    let min_key = remaining
                        .iter()
                        .map(|c| (&self.blind[c.index()], &self.wl[c.index()]))
                        .min()
                        .unwrap();
                    let min_key = (min_key.0.clone(), min_key.1.clone());
                    // Identical raw forms lead to identical continuations,
                    // so keep one representative.
                    let mut candidates: Vec<NodeId> = Vec::new();
                    for &c in &remaining {
                        if (self.blind[c.index()].clone(), self.wl[c.index()].clone()) != min_key
                        {
                            continue;
                        }
                        if !candidates
                            .iter()
                            .any(|d| self.raw[d.index()] == self.raw[c.index()])
                        {
                            candidates.push(c);
                        }
                    }
                    for cand in candidates {
                        let mut branch_stack = stack.clone();
                        let rest: Vec<NodeId> =
                            remaining.iter().copied().filter(|c| *c != cand).collect();
                        branch_stack.push(Task::Children {
                            remaining: rest,
                            first: false,
                        });
                        branch_stack.push(Task::Node(cand));
                        if !first {
                            branch_stack.push(Task::Tok(CTok::Sep));
                        }
                        self.run(branch_stack, state.clone());
                    }
                    return;
                }
            }
        }
    }
}

fn canonical_stream(t: &DataTree) -> Vec<CTok> {
    let (blind, raw) = node_forms(t);
    let colors = value_colors(t, &blind);
    let wl = wl_keys(t, &colors);
    let mut search = Search {
        tree: t,
        blind,
        raw,
        wl,
        best: None,
    };
    search.run(
        vec![Task::Node(DataTree::ROOT)],
        State {
            out: Vec::new(),
            assign: BTreeMap::new(),
            next_id: 0,
            on_best_prefix: false,
        },
    );
    search.best.expect("at least one emission completes")
}

fn stream_to_string(stream: &[CTok]) -> String {
    let mut s = String::new();
    let mut prev_open = false;
    for tok in stream {
        match tok {
            CTok::Open(tag) => {
                s.push('[');
                s.push_str(tag.as_str());
                s.push(']');
                s.push('(');
                prev_open = true;
            }
            CTok::Val(v) => {
                s.push('@');
                s.push_str(&v.to_string());
                prev_open = false;
            }
            CTok::Sep => {
                s.push_str(", ");
            }
            CTok::Shut => {
                if prev_open {
                    // leaf tag: drop the empty "("
                    s.pop();
                    prev_open = false;
                } else {
                    s.push(')');
                }
            }
        }
    }
    s
}

/// Canonical printed form (children sorted, values normalized by first
/// occurrence in the canonical order).
pub fn canonical_print(t: &DataTree) -> String {
    stream_to_string(&canonical_stream(t))
}

/// Cheap renaming-invariant key: a hash of the value-blind structure with
/// leaves annotated by their refined value colors. Equivalent trees always
/// get equal keys; collisions are resolved by an exact equivalence check.
pub fn invariant_key(t: &DataTree) -> u64 {
    let (blind, _) = node_forms(t);
    let colors = value_colors(t, &blind);
    let mut h = form_hash(&blind[0]);
    let mut cs: Vec<u64> = Vec::new();
    for l in t.data_leaves() {
        let v = t.label(l).data().unwrap();
        cs.push(fnv(fnv(FNV_OFFSET, colors[&v]), t.node_depth(l)));
    }
    cs.sort_unstable();
    for c in cs {
        h = fnv(h, c);
    }
    fnv(h, t.len() as u64)
}

/// Literal structural key: children sorted but data values kept verbatim.
/// Two trees get equal keys iff they are equal as unordered trees with the
/// same concrete values (used for set semantics of query results).
pub fn literal_key(t: &DataTree) -> String {
    let (_, raw) = node_forms(t);
    stream_to_string(&raw[0])
}
