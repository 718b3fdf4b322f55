//! Generator reducing correspondence-problem instances to rewriting
//! systems.
//!
//! A partial match (U, V) with V a proper prefix of U is a depth-two tree:
//! one subtree per letter of U holding two data leaves that chain adjacent
//! positions, a marker tag on the first position beyond V, and an `end`
//! anchor child of the root holding the last chain value. Each pair (u, v)
//! becomes rules that consume v at the marker, advance the marker, and
//! append u at the anchored end with fresh chain values; the last pair
//! instead renames the root to `solved` when v closes the gap exactly.
//!
//! The generated systems declare no simple-path bound (the chains grow
//! without one), so they are usable with the forward procedures only.
//! Instances are assumed to satisfy the usual prefix discipline (every
//! partial match keeps V inside U and solutions start with the first and
//! end with the last pair); the generator cannot check that.

use std::collections::BTreeMap;
use std::fmt;

use dtprs_core::dtd::{CountFormula, CountLabel, Dtd};
use dtprs_core::pattern::{
    CondAtom, EdgeKind, PatternFormula, PatternLabel, Template, TreePattern, VarName,
};
use dtprs_core::rewrite::{InitSpec, Locator, Rule, System};
use dtprs_core::tree::{DataTree, NodeLabel, Tag};

#[derive(Debug)]
pub enum PcpError {
    Empty,
    BadAlphabet(char),
    EmptyWord(usize),
    FirstPairNotPrefixed,
}

impl fmt::Display for PcpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcpError::Empty => write!(f, "the instance has no pairs"),
            PcpError::BadAlphabet(c) => write!(f, "letter `{c}` is outside the a/b alphabet"),
            PcpError::EmptyWord(i) => write!(f, "pair {i} has an empty word"),
            PcpError::FirstPairNotPrefixed => write!(
                f,
                "the second word of the first pair must be a proper prefix of the first"
            ),
        }
    }
}

impl std::error::Error for PcpError {}

fn letter_tag(c: char) -> Tag {
    Tag::new(c.to_string())
}

fn marked_tag(c: char) -> Tag {
    Tag::new(format!("{c}_m"))
}

fn check_word(w: &str, idx: usize) -> Result<(), PcpError> {
    if w.is_empty() {
        return Err(PcpError::EmptyWord(idx));
    }
    for c in w.chars() {
        if c != 'a' && c != 'b' {
            return Err(PcpError::BadAlphabet(c));
        }
    }
    Ok(())
}

/// Build the rewriting system and the `[solved]` target pattern for an
/// instance over the letters a and b.
pub fn gen_pcp(pairs: &[(String, String)]) -> Result<(System, TreePattern), PcpError> {
    if pairs.is_empty() {
        return Err(PcpError::Empty);
    }
    for (i, (u, v)) in pairs.iter().enumerate() {
        check_word(u, i + 1)?;
        check_word(v, i + 1)?;
    }
    let (u1, v1) = &pairs[0];
    if !u1.starts_with(v1.as_str()) || u1.len() == v1.len() {
        return Err(PcpError::FirstPairNotPrefixed);
    }

    let letters = ['a', 'b'];
    let mut alphabet: Vec<Tag> = vec![Tag::new("root"), Tag::new("solved"), Tag::new("end")];
    for c in letters {
        alphabet.push(letter_tag(c));
        alphabet.push(marked_tag(c));
    }

    // positions hold two chain values each; the anchor holds one
    let mut dtd = Dtd::new([Tag::new("root"), Tag::new("solved")]);
    dtd.rules.insert(
        Tag::new("root"),
        CountFormula::AtLeast(CountLabel::Tag(Tag::new("end")), 1),
    );
    dtd.rules.insert(
        Tag::new("end"),
        CountFormula::AtLeast(CountLabel::Dom, 1),
    );
    for c in letters {
        for tag in [letter_tag(c), marked_tag(c)] {
            dtd.rules
                .insert(tag, CountFormula::AtLeast(CountLabel::Dom, 2));
        }
    }

    // initial tree: u1 with the marker after v1 and the end anchor
    let mut init = DataTree::tag_leaf("root");
    let u1_chars: Vec<char> = u1.chars().collect();
    for (j, c) in u1_chars.iter().enumerate() {
        let tag = if j == v1.len() {
            marked_tag(*c)
        } else {
            letter_tag(*c)
        };
        let pos = init.add_child(DataTree::ROOT, NodeLabel::Tag(tag));
        init.add_child(pos, NodeLabel::Data(dtprs_core::tree::DataValue(j as u64)));
        init.add_child(
            pos,
            NodeLabel::Data(dtprs_core::tree::DataValue(j as u64 + 1)),
        );
    }
    let end = init.add_child(DataTree::ROOT, NodeLabel::Tag(Tag::new("end")));
    init.add_child(
        end,
        NodeLabel::Data(dtprs_core::tree::DataValue(u1_chars.len() as u64)),
    );

    let mut rules = Vec::new();
    let last = pairs.len() - 1;

    // continuation rules for every pair but the last, one per possible
    // letter at the new marker position
    for (i, (u, v)) in pairs.iter().enumerate().take(last) {
        for c in letters {
            rules.push(continuation_rule(i + 1, u, v, c));
        }
    }

    // closing rules for the last pair: one per split v = w ++ u where the
    // consumed block w ends exactly at the anchor
    let (un, vn) = &pairs[last];
    let vn_chars: Vec<char> = vn.chars().collect();
    for l in 1..=vn_chars.len() {
        let remainder: String = vn_chars[l..].iter().collect();
        if remainder == *un {
            rules.push(closing_rule(last + 1, &vn_chars[..l]));
        }
    }

    let sys = System {
        name: "pcp".into(),
        alphabet: alphabet.into_iter().collect(),
        rules,
        dtd,
        data_invariant: PatternFormula::True,
        depth_bound: Some(2),
        simple_path_bound: None, // chains grow: forward procedures only
        init: InitSpec::Explicit(vec![init]),
    };
    Ok((sys, TreePattern::tag_leaf("solved")))
}

/// Consume `v` at the marker, advance the marker onto a `c`-position, and
/// append `u` at the end anchor.
fn continuation_rule(index: usize, u: &str, v: &str, c: char) -> Rule {
    let v_chars: Vec<char> = v.chars().collect();
    let mut base = TreePattern::leaf(PatternLabel::Tag(Tag::new("root")));
    let root = TreePattern::ROOT;

    // consumed block, chained through shared variables
    let mut ren = BTreeMap::new();
    for (j, vc) in v_chars.iter().enumerate() {
        let tag = if j == 0 { marked_tag(*vc) } else { letter_tag(*vc) };
        let pos = base.add_child(root, EdgeKind::Child, PatternLabel::Tag(tag));
        base.add_child(
            pos,
            EdgeKind::Child,
            PatternLabel::Var(VarName::new(format!("N{j}"))),
        );
        base.add_child(
            pos,
            EdgeKind::Child,
            PatternLabel::Var(VarName::new(format!("N{}", j + 1))),
        );
        if j == 0 {
            ren.insert(pos, letter_tag(*vc));
        }
    }
    // the position after the block receives the marker
    let c_pos = base.add_child(root, EdgeKind::Child, PatternLabel::Tag(letter_tag(c)));
    base.add_child(
        c_pos,
        EdgeKind::Child,
        PatternLabel::Var(VarName::new(format!("N{}", v_chars.len()))),
    );
    base.add_child(
        c_pos,
        EdgeKind::Child,
        PatternLabel::Var(VarName::new("Nc")),
    );
    ren.insert(c_pos, marked_tag(c));
    // the end anchor is consumed and re-created at the new end
    let end_pos = base.add_child(root, EdgeKind::Child, PatternLabel::Tag(Tag::new("end")));
    base.add_child(end_pos, EdgeKind::Child, PatternLabel::Var(VarName::new("E")));

    let mut locator = Locator::plain(base);
    locator.appends.insert(root);
    for (pos, tag) in ren {
        locator.renames.insert(pos, tag);
    }
    for sub in locator.base.subtree_nodes(end_pos) {
        locator.deletes.insert(sub);
    }

    // appended trees: the letters of u chained from the old end value,
    // with fresh values, then the new anchor
    let mut forest = Vec::new();
    let u_chars: Vec<char> = u.chars().collect();
    for (j, uc) in u_chars.iter().enumerate() {
        let left = if j == 0 {
            Template::var_leaf("E")
        } else {
            Template::var_leaf(format!("M{j}"))
        };
        let right = Template::var_leaf(format!("M{}", j + 1));
        forest.push(Template::node(
            letter_tag(*uc).as_str(),
            vec![left, right],
        ));
    }
    forest.push(Template::node(
        "end",
        vec![Template::var_leaf(format!("M{}", u_chars.len()))],
    ));

    let mut forests = BTreeMap::new();
    forests.insert("F".to_string(), forest);
    let mut chi = BTreeMap::new();
    chi.insert(root, "F".to_string());

    Rule {
        name: format!("apply-{index}-{c}"),
        locator,
        guard: PatternFormula::True,
        queries: BTreeMap::new(),
        forests,
        chi,
    }
}

/// Final pair: the consumed block must reach the anchor exactly; the root
/// is renamed to the success marker.
fn closing_rule(index: usize, consumed: &[char]) -> Rule {
    let mut base = TreePattern::leaf(PatternLabel::Tag(Tag::new("root")));
    let root = TreePattern::ROOT;
    for (j, vc) in consumed.iter().enumerate() {
        let tag = if j == 0 { marked_tag(*vc) } else { letter_tag(*vc) };
        let pos = base.add_child(root, EdgeKind::Child, PatternLabel::Tag(tag));
        base.add_child(
            pos,
            EdgeKind::Child,
            PatternLabel::Var(VarName::new(format!("N{j}"))),
        );
        base.add_child(
            pos,
            EdgeKind::Child,
            PatternLabel::Var(VarName::new(format!("N{}", j + 1))),
        );
    }
    let end_pos = base.add_child(root, EdgeKind::Child, PatternLabel::Tag(Tag::new("end")));
    base.add_child(end_pos, EdgeKind::Child, PatternLabel::Var(VarName::new("E")));
    let base = base.with_cond(vec![CondAtom::Eq(
        VarName::new(format!("N{}", consumed.len())),
        VarName::new("E"),
    )]);

    let mut locator = Locator::plain(base);
    locator.renames.insert(root, Tag::new("solved"));

    Rule {
        name: format!("solve-{index}-{}", consumed.len()),
        locator,
        guard: PatternFormula::True,
        queries: BTreeMap::new(),
        forests: BTreeMap::new(),
        chi: BTreeMap::new(),
    }
}

/// Parse `u:v,u:v,...` into pairs.
pub fn parse_pairs(text: &str) -> Option<Vec<(String, String)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let (u, v) = part.trim().split_once(':')?;
        out.push((u.trim().to_string(), v.trim().to_string()));
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dtprs_core::analysis::validate;

    fn pairs(spec: &[(&str, &str)]) -> Vec<(String, String)> {
        spec.iter()
            .map(|(u, v)| (u.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn generated_system_validates_as_forward_only() {
        let (sys, target) = gen_pcp(&pairs(&[("abbb", "a"), ("b", "b"), ("a", "bbba")])).unwrap();
        let report = validate(&sys);
        assert!(report.dtd_positive && report.guards_positive && report.invariant_positive);
        assert!(report.simple_path_bound.is_none());
        assert!(!report.positive_eligible, "no path bound: forward only");
        assert_eq!(target, TreePattern::tag_leaf("solved"));
        // rules: 2 continuation pairs x 2 letters + closing splits
        assert!(sys.rules.len() >= 5);
    }

    #[test]
    fn continuation_rule_shape_matches_the_construction() {
        // one locator child per consumed letter, plus the marker target and
        // the end anchor; the appended forest has one tree per letter of u
        // plus the new anchor
        let (sys, _) = gen_pcp(&pairs(&[("abbb", "a"), ("bb", "b"), ("a", "bbba")])).unwrap();
        let rule = sys.rule("apply-2-a").expect("continuation rule exists");
        let root_children = rule.locator.base.children(TreePattern::ROOT).len();
        assert_eq!(root_children, 1 + 1 + 1); // block of one letter, marker, end
        assert_eq!(rule.forests["F"].len(), 2 + 1); // u = bb plus anchor
        assert_eq!(rule.fresh_variables().len(), 2); // M1 and M2
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(gen_pcp(&[]).is_err());
        assert!(gen_pcp(&pairs(&[("ab", "ab")])).is_err());
        assert!(gen_pcp(&pairs(&[("ab", "c")])).is_err());
        assert!(gen_pcp(&pairs(&[("ab", "")])).is_err());
    }

    #[test]
    fn parse_pairs_round_trip() {
        let p = parse_pairs("abbb:a, b:b, a:bbba").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[0], ("abbb".to_string(), "a".to_string()));
        assert!(parse_pairs("nope").is_none());
    }
}
