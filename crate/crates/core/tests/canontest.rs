use dtprs_core::canon::canonical_print;
use dtprs_core::tree::{DataTree, DataValue, NodeLabel, Tag};
use std::time::Instant;

#[test]
fn chain_print_is_fast_and_orientation_invariant() {
    for k in [6u64, 10, 20, 40] {
        let mut t = DataTree::tag_leaf("root");
        for j in 0..k {
            let pos = t.add_child(DataTree::ROOT, NodeLabel::Tag(Tag::new("b")));
            t.add_child(pos, NodeLabel::Data(DataValue(j)));
            t.add_child(pos, NodeLabel::Data(DataValue(j + 1)));
        }
        // same chain built in reverse with shifted value names
        let mut r = DataTree::tag_leaf("root");
        for j in (0..k).rev() {
            let pos = r.add_child(DataTree::ROOT, NodeLabel::Tag(Tag::new("b")));
            r.add_child(pos, NodeLabel::Data(DataValue(100 + j + 1)));
            r.add_child(pos, NodeLabel::Data(DataValue(100 + j)));
        }
        let start = Instant::now();
        let p1 = canonical_print(&t);
        let p2 = canonical_print(&r);
        let elapsed = start.elapsed();
        assert_eq!(p1, p2, "k={k}");
        assert!(elapsed.as_millis() < 2000, "k={k}: {elapsed:?}");
    }
}
