//! Shared pieces of the command-line front end: the packaged case studies
//! and the correspondence-problem generator.

pub mod pcp;

/// Packaged example files, shipped with the binary and written out by
/// `gen examples`.
pub mod assets {
    pub const PLAYCOM: &str = include_str!("../assets/playcom.dtprs");
    pub const PLAYCOM_INSTRUMENTED: &str = include_str!("../assets/playcom-instrumented.dtprs");
    pub const PLAYCOM_FIXED: &str = include_str!("../assets/playcom-fixed.dtprs");
    pub const PLAYCOM_BUG_PATTERN: &str = include_str!("../assets/playcom-bug.dtp");
    pub const FIG3_TREE: &str = include_str!("../assets/fig3.dtree");
    pub const LOOPING: &str = include_str!("../assets/looping.dtprs");
    pub const DELETE_ONLY: &str = include_str!("../assets/delete-only.dtprs");
    pub const RESET_NET: &str = include_str!("../assets/reset-net.dtprs");

    /// (file name, contents), everything `gen examples` writes.
    pub fn all() -> Vec<(&'static str, &'static str)> {
        vec![
            ("playcom.dtprs", PLAYCOM),
            ("playcom-instrumented.dtprs", PLAYCOM_INSTRUMENTED),
            ("playcom-fixed.dtprs", PLAYCOM_FIXED),
            ("playcom-bug.dtp", PLAYCOM_BUG_PATTERN),
            ("fig3.dtree", FIG3_TREE),
            ("looping.dtprs", LOOPING),
            ("delete-only.dtprs", DELETE_ONLY),
            ("reset-net.dtprs", RESET_NET),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::assets;
    use dtprs_core::frontend::{parse_pattern, parse_system, parse_tree, print_system};

    #[test]
    fn all_packaged_files_parse() {
        for (name, text) in assets::all() {
            if name.ends_with(".dtprs") {
                let sys = parse_system(text).unwrap_or_else(|e| panic!("{name}: {e}"));
                // round trip on the abstract syntax
                let printed = print_system(&sys);
                let again = parse_system(&printed).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(printed, print_system(&again), "{name}");
            } else if name.ends_with(".dtree") {
                parse_tree(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            } else if name.ends_with(".dtp") {
                parse_pattern(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn fig3_satisfies_the_packaged_invariant() {
        let sys = parse_system(assets::PLAYCOM).unwrap();
        let fig3 = parse_tree(assets::FIG3_TREE).unwrap();
        assert!(sys.satisfies_invariant(&fig3).unwrap());
        assert_eq!(fig3.depth(), 4);
        // one shared customer id and one shared product id
        let g = dtprs_core::graph::graph_of(&fig3, 4).unwrap();
        let degrees: Vec<usize> = (0..g.vertex_count())
            .filter(|v| g.label(*v) == &dtprs_core::graph::VertexLabel::Value)
            .map(|v| g.degree(v))
            .collect();
        assert!(degrees.contains(&3), "product id shared by three leaves");
        assert!(degrees.contains(&2), "customer id shared by two leaves");
    }
}
