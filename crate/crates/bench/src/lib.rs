//! Fixtures shared by the benchmarks in `benches/`.

use flat_core::data::Vocab;
use flat_core::synthetic::{generate, SyntheticCorpus, SyntheticSpec};
use flat_core::{FlatModel, Instance, ModelConfig, Scheme, Trie};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Synthetic corpus of `n` sentences over the default alphabet and lexicon.
pub fn corpus(n: usize, seed: u64) -> SyntheticCorpus {
    generate(
        &SyntheticSpec {
            n_sentences: n,
            max_words_per_sentence: 6,
            ..SyntheticSpec::default()
        },
        seed,
    )
}

/// Untrained model with `config` over `corpus`, and its featurized sentences.
pub fn model(corpus: &SyntheticCorpus, config: ModelConfig, seed: u64) -> (FlatModel, Vec<Instance>) {
    let trie = Trie::build(&corpus.lexicon).expect("synthetic lexicon");
    let vocab = Vocab::build(&corpus.sentences, &trie);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = FlatModel::new(config, vocab, Scheme::Bmes, &mut rng).expect("valid config");
    let insts = corpus
        .sentences
        .iter()
        .map(|s| model.featurize(&s.chars, None).expect("featurize"))
        .collect();
    (model, insts)
}
