//! Character-word lattices and their flat span form.
//!
//! A lattice over a sentence is a chain of character nodes plus one
//! skip-path per lexicon word found in the sentence. Flattening turns every
//! node into a [`Span`] carrying the index of its first (`head`) and last
//! (`tail`) character, both 0-based and inclusive. Character spans come first
//! in sentence order, followed by word spans ordered by `(head, tail, id)`.

use std::collections::VecDeque;

use serde::Serialize;

use super::trie::{Trie, WordId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SpanKind {
    Character,
    Word,
}

/// One node of the flat lattice.
///
/// `token_id` is the Unicode scalar value for characters and the lexicon
/// [`WordId`] for words; model code maps both to embedding rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Span {
    pub token_id: u32,
    pub kind: SpanKind,
    pub head: usize,
    pub tail: usize,
}

impl Span {
    pub fn character(c: char, pos: usize) -> Self {
        Span {
            token_id: c as u32,
            kind: SpanKind::Character,
            head: pos,
            tail: pos,
        }
    }

    pub fn word(id: WordId, head: usize, tail: usize) -> Self {
        Span {
            token_id: id,
            kind: SpanKind::Word,
            head,
            tail,
        }
    }

    pub fn len(&self) -> usize {
        self.tail - self.head + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.head <= pos && pos <= self.tail
    }
}

/// A lexicon word found in a sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WordMatch {
    pub head: usize,
    pub tail: usize,
    pub word: WordId,
}

/// Every lexicon occurrence in `chars`, sorted by `(head, tail)`.
pub fn match_words(chars: &[char], trie: &Trie) -> Vec<WordMatch> {
    let mut out = Vec::new();
    for start in 0..chars.len() {
        // walk_from reports terminals in increasing end order
        trie.walk_from(chars, start, |word, end| {
            out.push(WordMatch {
                head: start,
                tail: end,
                word,
            })
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlatLattice {
    chars: Vec<char>,
    spans: Vec<Span>,
}

/// Builds the flat lattice of `chars` with the given word matches.
pub fn flatten(chars: &[char], matches: &[WordMatch]) -> Result<FlatLattice> {
    let n = chars.len();
    let mut words: Vec<WordMatch> = Vec::with_capacity(matches.len());
    for m in matches {
        if m.tail >= n || m.head >= m.tail {
            return Err(Error::Structural(format!(
                "word match ({}, {}) does not fit a {n}-character sentence",
                m.head, m.tail
            )));
        }
        words.push(*m);
    }
    words.sort_unstable();
    words.dedup();

    let mut spans = Vec::with_capacity(n + words.len());
    spans.extend(chars.iter().enumerate().map(|(i, &c)| Span::character(c, i)));
    spans.extend(words.iter().map(|m| Span::word(m.word, m.head, m.tail)));
    Ok(FlatLattice {
        chars: chars.to_vec(),
        spans,
    })
}

impl FlatLattice {
    /// Convenience: match against `trie` and flatten.
    pub fn from_sentence(chars: &[char], trie: &Trie) -> Self {
        let matches = match_words(chars, trie);
        flatten(chars, &matches).expect("trie matches always fit the sentence")
    }

    /// Assembles a flat lattice from raw parts, checking its invariants.
    pub fn from_parts(chars: Vec<char>, spans: Vec<Span>) -> Result<Self> {
        let n = chars.len();
        if spans.len() < n {
            return Err(Error::Structural(format!(
                "{} spans cannot cover {n} characters",
                spans.len()
            )));
        }
        for (i, s) in spans.iter().enumerate() {
            if s.head > s.tail || s.tail >= n {
                return Err(Error::Structural(format!(
                    "span {i} ({}, {}) is outside a {n}-character sentence",
                    s.head, s.tail
                )));
            }
            let is_char = s.kind == SpanKind::Character;
            if is_char != (s.head == s.tail) {
                return Err(Error::Structural(format!(
                    "span {i}: kind {:?} disagrees with head {} / tail {}",
                    s.kind, s.head, s.tail
                )));
            }
            if i < n && (!is_char || s.head != i) {
                return Err(Error::Structural(format!(
                    "span {i} should be the character span at position {i}"
                )));
            }
            if i >= n && is_char {
                return Err(Error::Structural(format!(
                    "character span {i} found among word spans"
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for s in &spans {
            if !seen.insert((s.token_id, s.head, s.tail)) {
                return Err(Error::Structural(format!(
                    "duplicate span ({}, {}, {})",
                    s.token_id, s.head, s.tail
                )));
            }
        }
        Ok(FlatLattice { chars, spans })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn n_spans(&self) -> usize {
        self.spans.len()
    }

    pub fn word_spans(&self) -> &[Span] {
        &self.spans[self.chars.len()..]
    }

    pub fn heads(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().map(|s| s.head)
    }

    pub fn tails(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().map(|s| s.tail)
    }

    /// Indices (into [`spans`](Self::spans)) of the word spans covering
    /// character `char_index`.
    pub fn self_matched(&self, char_index: usize) -> Result<Vec<usize>> {
        let n = self.n_chars();
        if char_index >= n {
            return Err(Error::IndexOutOfRange {
                index: char_index,
                len: n,
            });
        }
        Ok(self
            .spans
            .iter()
            .enumerate()
            .skip(n)
            .filter(|(_, s)| s.contains(char_index))
            .map(|(i, _)| i)
            .collect())
    }

    /// Word matches in flat order, the inverse of [`flatten`].
    pub fn word_matches(&self) -> Vec<WordMatch> {
        self.word_spans()
            .iter()
            .map(|s| WordMatch {
                head: s.head,
                tail: s.tail,
                word: s.token_id,
            })
            .collect()
    }

    /// Lines of `token<TAB>head<TAB>tail`, using `trie` to spell words.
    pub fn dump(&self, trie: &Trie) -> String {
        let mut out = String::new();
        for s in &self.spans {
            match s.kind {
                SpanKind::Character => out.push(self.chars[s.head]),
                SpanKind::Word => out.push_str(trie.word(s.token_id).unwrap_or("<unk>")),
            }
            out.push('\t');
            out.push_str(&s.head.to_string());
            out.push('\t');
            out.push_str(&s.tail.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Character(char),
    Word(WordId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeNode {
    pub kind: NodeKind,
    pub head: usize,
    pub tail: usize,
}

/// Directed acyclic lattice: a chain over character nodes, and for each word
/// a node entered from the character at its head and leaving to the
/// character at its tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGraph {
    pub nodes: Vec<LatticeNode>,
    pub edges: Vec<(usize, usize)>,
    n_chars: usize,
}

/// Rebuilds the lattice from its flat form: character spans first form the
/// chain, then every word span becomes a skip-path.
pub fn recover(flat: &FlatLattice) -> Result<LatticeGraph> {
    let mut chars: Vec<&Span> = flat
        .spans()
        .iter()
        .filter(|s| s.head == s.tail && s.kind == SpanKind::Character)
        .collect();
    chars.sort_by_key(|s| s.head);
    for (i, s) in chars.iter().enumerate() {
        if s.head != i {
            return Err(Error::Structural(format!(
                "character chain has a gap or repeat at position {i}"
            )));
        }
    }
    let n = chars.len();
    let mut nodes: Vec<LatticeNode> = chars
        .iter()
        .map(|s| {
            let c = char::from_u32(s.token_id).ok_or_else(|| {
                Error::Structural(format!("invalid character token {}", s.token_id))
            })?;
            Ok(LatticeNode {
                kind: NodeKind::Character(c),
                head: s.head,
                tail: s.tail,
            })
        })
        .collect::<Result<_>>()?;
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();

    for s in flat.spans().iter().filter(|s| s.kind == SpanKind::Word) {
        if s.tail >= n || s.head >= s.tail {
            return Err(Error::Structural(format!(
                "word span ({}, {}) has no anchor characters in a {n}-character chain",
                s.head, s.tail
            )));
        }
        let id = nodes.len();
        nodes.push(LatticeNode {
            kind: NodeKind::Word(s.token_id),
            head: s.head,
            tail: s.tail,
        });
        edges.push((s.head, id));
        edges.push((id, s.tail));
    }
    Ok(LatticeGraph {
        nodes,
        edges,
        n_chars: n,
    })
}

impl LatticeGraph {
    pub fn n_chars(&self) -> usize {
        self.n_chars
    }

    /// Characters read along the chain.
    pub fn chars(&self) -> Vec<char> {
        self.nodes[..self.n_chars]
            .iter()
            .map(|n| match n.kind {
                NodeKind::Character(c) => c,
                NodeKind::Word(_) => unreachable!("chain holds only characters"),
            })
            .collect()
    }

    /// Skip-paths as word matches, sorted.
    pub fn skip_paths(&self) -> Vec<WordMatch> {
        let mut out: Vec<WordMatch> = self.nodes[self.n_chars..]
            .iter()
            .map(|n| match n.kind {
                NodeKind::Word(word) => WordMatch {
                    head: n.head,
                    tail: n.tail,
                    word,
                },
                NodeKind::Character(_) => unreachable!("skip-paths hold only words"),
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Kahn's algorithm; true when every node can be ordered.
    pub fn is_acyclic(&self) -> bool {
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            indegree[b] += 1;
            out[a].push(b);
        }
        let mut queue: VecDeque<usize> = (0..self.nodes.len())
            .filter(|&i| indegree[i] == 0)
            .collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        seen == self.nodes.len()
    }
}
