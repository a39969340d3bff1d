//! Lexicon matching and flat-lattice construction.

mod lattice;
mod trie;

pub use lattice::{
    flatten, match_words, recover, FlatLattice, LatticeGraph, LatticeNode, NodeKind, Span,
    SpanKind, WordMatch,
};
pub use trie::{BuildStats, Trie, WordId};
