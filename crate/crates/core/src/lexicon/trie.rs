use std::collections::HashMap;

use crate::error::{Error, Result};

/// Identifier of a lexicon word inside a [`Trie`].
pub type WordId = u32;

#[derive(Debug, Clone, Default)]
struct Node {
    children: HashMap<char, u32>,
    terminal: Option<WordId>,
}

/// Counters collected while building a trie.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub inserted: usize,
    pub duplicates: usize,
    pub single_char_dropped: usize,
}

/// Prefix tree over lexicon words.
///
/// Words shorter than two characters are never stored: a one-character word
/// would produce a span identical in position to the character span.
#[derive(Debug, Clone)]
pub struct Trie {
    nodes: Vec<Node>,
    words: Vec<String>,
    max_len: usize,
    stats: BuildStats,
}

impl Trie {
    /// Builds a trie from `words`. Word ids follow first-occurrence order.
    ///
    /// An empty entry is rejected; the error carries its 1-based position.
    pub fn build<S: AsRef<str>>(words: &[S]) -> Result<Self> {
        let mut trie = Trie {
            nodes: vec![Node::default()],
            words: Vec::new(),
            max_len: 0,
            stats: BuildStats::default(),
        };
        for (idx, word) in words.iter().enumerate() {
            let word = word.as_ref();
            if word.is_empty() {
                return Err(Error::EmptyLexiconEntry { line: idx + 1 });
            }
            trie.insert(word);
        }
        Ok(trie)
    }

    fn insert(&mut self, word: &str) {
        let len = word.chars().count();
        if len < 2 {
            self.stats.single_char_dropped += 1;
            return;
        }
        let mut cur = 0usize;
        for c in word.chars() {
            cur = match self.nodes[cur].children.get(&c) {
                Some(&next) => next as usize,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[cur].children.insert(c, next as u32);
                    next
                }
            };
        }
        if self.nodes[cur].terminal.is_some() {
            self.stats.duplicates += 1;
            return;
        }
        let id = self.words.len() as WordId;
        self.nodes[cur].terminal = Some(id);
        self.words.push(word.to_owned());
        self.max_len = self.max_len.max(len);
        self.stats.inserted += 1;
    }

    /// Number of terminal nodes, i.e. distinct stored words.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: WordId) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Length in characters of the longest stored word.
    pub fn max_word_len(&self) -> usize {
        self.max_len
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    /// Exact lookup of a whole word.
    pub fn get(&self, word: &str) -> Option<WordId> {
        let mut cur = 0usize;
        for c in word.chars() {
            cur = *self.nodes[cur].children.get(&c)? as usize;
        }
        self.nodes[cur].terminal
    }

    /// Calls `f(word_id, end)` for every stored word that starts at
    /// `chars[start]`, where `end` is the inclusive index of its last character.
    pub fn walk_from(&self, chars: &[char], start: usize, mut f: impl FnMut(WordId, usize)) {
        let mut cur = 0usize;
        for (offset, c) in chars[start..].iter().enumerate() {
            match self.nodes[cur].children.get(c) {
                Some(&next) => cur = next as usize,
                None => return,
            }
            if let Some(id) = self.nodes[cur].terminal {
                f(id, start + offset);
            }
        }
    }
}
