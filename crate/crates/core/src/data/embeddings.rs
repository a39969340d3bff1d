//! word2vec text-format embeddings.
//!
//! The first line is `count dim`; each following line is a token followed by
//! `dim` whitespace-separated floats.

use std::collections::HashMap;
use std::hash::Hash;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::vocab::SymbolTable;
use crate::error::{Error, Result};
use crate::numerics::Tensor;

#[derive(Debug, Clone)]
pub struct Word2Vec {
    pub dim: usize,
    /// Token order of first appearance.
    pub tokens: Vec<String>,
    pub vectors: HashMap<String, Vec<f64>>,
    pub duplicates: usize,
}

pub fn parse_word2vec(text: &str, path: &Path) -> Result<Word2Vec> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing `count dim` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [count, dim] = fields[..] else {
        return Err(Error::parse(path, 1, "header must be `count dim`"));
    };
    let bad_header = |_| Error::parse(path, 1, "header values must be integers");
    let count: usize = count.parse().map_err(bad_header)?;
    let dim: usize = dim.parse().map_err(bad_header)?;

    let mut out = Word2Vec {
        dim,
        tokens: Vec::with_capacity(count),
        vectors: HashMap::with_capacity(count),
        duplicates: 0,
    };
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().expect("non-empty line has a field");
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad value {f:?}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("row has {} values, header says {dim}", values.len()),
            ));
        }
        if out.vectors.insert(token.to_owned(), values).is_some() {
            out.duplicates += 1;
            log::warn!("{}:{lineno}: duplicate token {token:?}, keeping the last row", path.display());
        } else {
            out.tokens.push(token.to_owned());
        }
    }
    Ok(out)
}

pub fn read_word2vec(path: &Path) -> Result<Word2Vec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word2vec(&text, path)
}

/// An embedding table aligned with a vocabulary.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub table: Tensor,
    pub dim: usize,
    /// Vocabulary rows filled from the file.
    pub loaded: usize,
    /// File tokens with no vocabulary entry.
    pub dropped: usize,
    /// Vocabulary symbols absent from the file (randomly initialized).
    pub missing: usize,
}

/// Aligns `vectors` with `vocab`: row `i` holds the vector of symbol `i`.
/// Reserved rows and symbols absent from the file are drawn from
/// `N(0, 1/sqrt(dim))`.
pub fn align_embeddings<T, F>(
    vectors: &Word2Vec,
    vocab: &SymbolTable<T>,
    key: F,
    rng: &mut impl Rng,
) -> EmbeddingTable
where
    T: Eq + Hash + Clone,
    F: Fn(&str) -> Option<T>,
{
    let dim = vectors.dim;
    let normal = Normal::new(0.0, 1.0 / (dim.max(1) as f64).sqrt()).expect("positive std");
    let mut table = Tensor::zeros(vocab.len(), dim);
    let mut filled = vec![false; vocab.len()];
    let mut dropped = 0;
    for token in &vectors.tokens {
        match key(token).and_then(|k| vocab.get(&k)) {
            Some(row) => {
                table.row_mut(row).copy_from_slice(&vectors.vectors[token]);
                filled[row] = true;
            }
            None => dropped += 1,
        }
    }
    let mut missing = 0;
    for (row, done) in filled.iter().enumerate() {
        if !done {
            if vocab.symbol(row).is_some() {
                missing += 1;
            }
            for v in table.row_mut(row) {
                *v = normal.sample(rng);
            }
        }
    }
    if dropped > 0 {
        log::info!("{dropped} embedding tokens are not in the vocabulary");
    }
    EmbeddingTable {
        table,
        dim,
        loaded: filled.iter().filter(|&&f| f).count(),
        dropped,
        missing,
    }
}
