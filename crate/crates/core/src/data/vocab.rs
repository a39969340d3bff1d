use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::corpus::TaggedSentence;
use crate::lexicon::Trie;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

/// Bijective symbol <-> id map. Ids are assigned in insertion order; tables
/// built with [`SymbolTable::with_reserved`] start with `PAD` and `UNK`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    from = "Vec<Option<T>>",
    into = "Vec<Option<T>>",
    bound(
        serialize = "T: Serialize",
        deserialize = "T: Deserialize<'de>"
    )
)]
pub struct SymbolTable<T: Eq + Hash + Clone> {
    symbols: Vec<Option<T>>,
    index: HashMap<T, usize>,
}

impl<T: Eq + Hash + Clone> From<Vec<Option<T>>> for SymbolTable<T> {
    fn from(symbols: Vec<Option<T>>) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.clone().map(|s| (s, i)))
            .collect();
        SymbolTable { symbols, index }
    }
}

impl<T: Eq + Hash + Clone> From<SymbolTable<T>> for Vec<Option<T>> {
    fn from(table: SymbolTable<T>) -> Self {
        table.symbols
    }
}

impl<T: Eq + Hash + Clone> SymbolTable<T> {
    pub fn new() -> Self {
        SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Table whose ids 0 and 1 are the padding and unknown rows.
    pub fn with_reserved() -> Self {
        SymbolTable {
            symbols: vec![None, None],
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, sym: T) -> usize {
        if let Some(&id) = self.index.get(&sym) {
            return id;
        }
        let id = self.symbols.len();
        self.index.insert(sym.clone(), id);
        self.symbols.push(Some(sym));
        id
    }

    pub fn get(&self, sym: &T) -> Option<usize> {
        self.index.get(sym).copied()
    }

    /// Id of `sym`, falling back to [`UNK`].
    pub fn id_or_unk(&self, sym: &T) -> usize {
        self.get(sym).unwrap_or(UNK)
    }

    pub fn symbol(&self, id: usize) -> Option<&T> {
        self.symbols.get(id).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> {
        self.symbols
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
    }
}

impl<T: Eq + Hash + Clone> Default for SymbolTable<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Character, word, and tag vocabularies of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    pub chars: SymbolTable<char>,
    /// Lexicon words; the word with trie id `i` has vocabulary id `i + 2`.
    pub words: SymbolTable<String>,
    pub tags: SymbolTable<String>,
}

impl Vocab {
    /// Characters in first-seen order from `corpus`, every lexicon word in
    /// trie order, and tags sorted with `O` first.
    pub fn build(corpus: &[TaggedSentence], trie: &Trie) -> Self {
        let mut chars = SymbolTable::with_reserved();
        let mut tag_set = std::collections::BTreeSet::new();
        for s in corpus {
            for &c in &s.chars {
                chars.insert(c);
            }
            tag_set.extend(s.tags.iter().cloned());
        }
        let mut tags = SymbolTable::new();
        tags.insert("O".to_owned());
        for t in tag_set {
            tags.insert(t);
        }
        let mut words = SymbolTable::with_reserved();
        for w in trie.words() {
            words.insert(w.clone());
        }
        Vocab { chars, words, tags }
    }

    pub fn word_row(&self, trie_id: u32) -> usize {
        let row = trie_id as usize + 2;
        if row < self.words.len() {
            row
        } else {
            UNK
        }
    }

    pub fn n_tags(&self) -> usize {
        self.tags.len()
    }

    pub fn tag_ids(&self, tags: &[String]) -> Option<Vec<usize>> {
        tags.iter().map(|t| self.tags.get(t)).collect()
    }

    pub fn tag_names(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .map(|&i| self.tags.symbol(i).cloned().unwrap_or_else(|| "O".to_owned()))
            .collect()
    }
}
