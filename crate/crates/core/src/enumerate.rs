//! Bounded enumeration of unordered labeled trees, one representative per
//! isomorphism class, with canonical data-value profiles (set partitions of
//! the data-leaf positions).

use crate::tree::{DataTree, DataValue, Tag};

/// All trees with `1..=max_nodes` nodes over the alphabet, where leaves may
/// also be data-valued when `allow_data`. Data values follow canonical
/// profiles: a tree with m data leaves uses values from `{0..m-1}`, one
/// variant per set partition of the leaf positions.
pub fn enumerate_trees(alphabet: &[Tag], max_nodes: usize, allow_data: bool) -> Vec<DataTree> {
    let shapes = enumerate_shapes(alphabet, max_nodes, allow_data);
    let mut out = Vec::new();
    // positions with symmetric siblings make several partitions isomorphic
    let mut seen = std::collections::BTreeSet::new();
    for shape in shapes {
        let leaves = shape.data_leaves();
        if leaves.is_empty() {
            out.push(shape);
            continue;
        }
        for partition in set_partitions(leaves.len()) {
            let mut t = shape.clone();
            for (leaf, class) in leaves.iter().zip(&partition) {
                t.set_data_value(*leaf, DataValue(*class as u64));
            }
            if seen.insert(crate::canon::canonical_print(&t)) {
                out.push(t);
            }
        }
    }
    out
}

/// Tree shapes: labeled trees where every data leaf carries a unique
/// placeholder value (so individual leaves can be re-labeled later).
fn enumerate_shapes(alphabet: &[Tag], max_nodes: usize, allow_data: bool) -> Vec<DataTree> {
    let mut by_size: Vec<Vec<DataTree>> = vec![Vec::new(); max_nodes + 1];
    for size in 1..=max_nodes {
        let mut acc = Vec::new();
        if size == 1 {
            for tag in alphabet {
                acc.push(DataTree::tag_leaf(tag.as_str()));
            }
            if allow_data {
                acc.push(DataTree::data_leaf(0));
            }
        } else {
            // root tag + children multiset totalling size-1
            for tag in alphabet {
                for children in child_multisets(&by_size, size - 1, 1) {
                    acc.push(DataTree::node(tag.as_str(), children));
                }
            }
        }
        by_size[size] = acc;
    }
    by_size.into_iter().flatten().collect()
}

/// Multisets of child trees with the given total size; children are chosen
/// with non-decreasing (size, index) so each multiset appears once.
fn child_multisets(
    by_size: &[Vec<DataTree>],
    total: usize,
    min_size: usize,
) -> Vec<Vec<DataTree>> {
    let mut out = Vec::new();
    for first_size in min_size..=total {
        for (idx, first) in by_size[first_size].iter().enumerate() {
            if first_size == total {
                out.push(vec![first.clone()]);
            } else {
                for mut rest in child_multisets_from(by_size, total - first_size, first_size, idx) {
                    let mut v = vec![first.clone()];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
        }
    }
    out
}

fn child_multisets_from(
    by_size: &[Vec<DataTree>],
    total: usize,
    min_size: usize,
    min_idx: usize,
) -> Vec<Vec<DataTree>> {
    let mut out = Vec::new();
    for size in min_size..=total {
        let start = if size == min_size { min_idx } else { 0 };
        for (idx, tree) in by_size[size].iter().enumerate().skip(start) {
            if size == total {
                out.push(vec![tree.clone()]);
            } else {
                for mut rest in child_multisets_from(by_size, total - size, size, idx) {
                    let mut v = vec![tree.clone()];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
        }
    }
    out
}

/// All set partitions of `{0..n-1}`, each as a vector mapping position to
/// block index (blocks numbered by first occurrence).
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn go(i: usize, n: usize, max_block: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(current.clone());
            return;
        }
        for b in 0..=max_block {
            current[i] = b;
            let next_max = if b == max_block { max_block + 1 } else { max_block };
            go(i + 1, n, next_max, current, out);
        }
    }
    if n == 0 {
        out.push(Vec::new());
    } else {
        go(0, n, 0, &mut current, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::canonical_print;
    use std::collections::BTreeSet;

    #[test]
    fn partitions_are_bell_numbers() {
        assert_eq!(set_partitions(0).len(), 1);
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(2).len(), 2);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
    }

    #[test]
    fn shapes_are_pairwise_non_isomorphic() {
        let alphabet = vec![Tag::new("a"), Tag::new("b")];
        let trees = enumerate_trees(&alphabet, 4, true);
        let mut seen = BTreeSet::new();
        for t in &trees {
            let key = canonical_print(t);
            assert!(seen.insert(key.clone()), "duplicate class: {key}");
        }
    }

    #[test]
    fn small_counts() {
        let alphabet = vec![Tag::new("a")];
        // size 1: [a]; size 2: [a](@0), [a]([a])
        let trees = enumerate_trees(&alphabet, 2, true);
        assert_eq!(trees.len(), 4); // [a], @0, [a](@0), [a]([a])
        let no_data = enumerate_trees(&alphabet, 2, false);
        assert_eq!(no_data.len(), 2); // [a], [a]([a])
    }

    #[test]
    fn data_profiles_cover_sharing_patterns() {
        let alphabet = vec![Tag::new("a")];
        let trees = enumerate_trees(&alphabet, 3, true);
        // among them: [a](@0,@0) and [a](@0,@1)
        let prints: BTreeSet<String> = trees.iter().map(canonical_print).collect();
        assert!(prints.contains("[a](@0, @0)"));
        assert!(prints.contains("[a](@0, @1)"));
    }
}
