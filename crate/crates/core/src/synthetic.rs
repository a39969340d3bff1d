//! Generated corpora whose entities sit exactly on lexicon-word occurrences.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{entities_to_tags, Entity, Scheme, TaggedSentence};

const ALPHABET: &str = "天地人和山水日月风云花草木石金火土光明清河海江城家书画琴棋诗酒茶";

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n_sentences: usize,
    /// Size of the character alphabet; the first half spells words, the
    /// rest is filler.
    pub n_chars: usize,
    pub n_words: usize,
    pub types: Vec<String>,
    pub max_words_per_sentence: usize,
    pub scheme: Scheme,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_sentences: 50,
            n_chars: 30,
            n_words: 10,
            types: ["PER", "LOC", "ORG"].iter().map(|s| s.to_string()).collect(),
            max_words_per_sentence: 3,
            scheme: Scheme::Bmes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub sentences: Vec<TaggedSentence>,
    pub lexicon: Vec<String>,
    /// Entity type of each lexicon word.
    pub word_types: Vec<String>,
    pub alphabet: Vec<char>,
}

/// Builds a corpus from `spec`. Words have 2 or 3 characters and none is a
/// substring of another; words in a sentence are separated by filler, so the
/// only lexicon matches are the placed words themselves.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> SyntheticCorpus {
    let alphabet: Vec<char> = ALPHABET.chars().take(spec.n_chars).collect();
    assert_eq!(alphabet.len(), spec.n_chars, "alphabet has {} characters", ALPHABET.chars().count());
    assert!(!spec.types.is_empty());
    let split = spec.n_chars / 2;
    let (word_chars, filler) = alphabet.split_at(split);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // unused word characters are spent first so every one of them occurs
    let mut unused = word_chars.to_vec();
    unused.shuffle(&mut rng);
    let mut lexicon: Vec<String> = Vec::new();
    while lexicon.len() < spec.n_words {
        let len = rng.random_range(2..=3);
        let w: String = (0..len)
            .map(|p| match unused.get(p) {
                Some(&c) => c,
                None => *word_chars.choose(&mut rng).expect("word chars"),
            })
            .collect();
        if lexicon.iter().any(|o| o.contains(&w) || w.contains(o.as_str())) {
            unused.shuffle(&mut rng);
            continue;
        }
        unused.drain(..len.min(unused.len()));
        lexicon.push(w);
    }
    let word_types: Vec<String> = (0..lexicon.len())
        .map(|i| spec.types[i % spec.types.len()].clone())
        .collect();

    let mut sentences = Vec::with_capacity(spec.n_sentences);
    for s in 0..spec.n_sentences {
        let k = rng.random_range(1..=spec.max_words_per_sentence);
        let mut chars = Vec::new();
        let mut entities = Vec::new();
        // cycle through the lexicon first so every word occurs
        let mut picks: Vec<usize> = (0..k).map(|j| (s * spec.max_words_per_sentence + j) % lexicon.len()).collect();
        picks.shuffle(&mut rng);
        for (j, &w) in picks.iter().enumerate() {
            let gap = if j == 0 { rng.random_range(0..=2) } else { rng.random_range(1..=2) };
            for _ in 0..gap {
                chars.push(*filler.choose(&mut rng).expect("filler"));
            }
            let start = chars.len();
            chars.extend(lexicon[w].chars());
            entities.push(Entity::new(word_types[w].clone(), start, chars.len() - 1));
        }
        for _ in 0..rng.random_range(0..=2) {
            chars.push(*filler.choose(&mut rng).expect("filler"));
        }
        let tags = entities_to_tags(&entities, chars.len(), spec.scheme);
        sentences.push(TaggedSentence { chars, tags });
    }
    SyntheticCorpus {
        sentences,
        lexicon,
        word_types,
        alphabet,
    }
}
