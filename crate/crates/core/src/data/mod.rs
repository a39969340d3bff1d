mod corpus;
mod embeddings;
mod lexicon_file;
mod tags;
mod vocab;

pub use corpus::{parse_corpus, read_corpus, write_corpus, TaggedSentence};
pub use embeddings::{align_embeddings, parse_word2vec, read_word2vec, EmbeddingTable, Word2Vec};
pub use lexicon_file::{parse_lexicon, read_lexicon};
pub use tags::{entities_to_tags, tags_to_entities, Entity, Scheme};
pub use vocab::{SymbolTable, Vocab, PAD, UNK};
