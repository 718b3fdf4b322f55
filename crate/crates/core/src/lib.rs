//! Engine for data tree pattern rewriting systems: unordered data trees,
//! tree patterns and queries, rewrite rules with locators, the embedding
//! quasi-order with its graph/decomposition machinery, and the verification
//! procedures (backward reachability, termination, bounded exploration).

pub mod canon;
pub mod dtd;
pub mod graph;
pub mod pattern;
pub mod tree;
pub mod order;
pub mod rewrite;
pub mod frontend;
pub mod enumerate;
pub mod analysis;
pub mod gen;
