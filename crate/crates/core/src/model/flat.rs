use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::mask::attention_mask;
use crate::data::{Scheme, Vocab};
use crate::error::{Error, Result};
use crate::lexicon::{FlatLattice, SpanKind, Trie};
use crate::numerics::{checkpoint, Init, ParamId, ParamStore, Tensor};
use crate::position::{distances, DistanceMatrices};

#[derive(Debug, Clone, Copy)]
pub struct HeadIds {
    pub w_q: ParamId,
    pub w_ke: ParamId,
    pub w_kr: ParamId,
    pub w_v: ParamId,
    pub u: ParamId,
    pub v: ParamId,
}

#[derive(Debug, Clone)]
pub struct LayerIds {
    pub heads: Vec<HeadIds>,
    pub w_o: ParamId,
    pub ln1_gain: ParamId,
    pub ln1_bias: ParamId,
    pub ffn_w1: ParamId,
    pub ffn_b1: ParamId,
    pub ffn_w2: ParamId,
    pub ffn_b2: ParamId,
    pub ln2_gain: ParamId,
    pub ln2_bias: ParamId,
}

/// Handles to every parameter of a [`FlatModel`].
#[derive(Debug, Clone)]
pub struct ParamIds {
    pub char_table: ParamId,
    pub word_table: ParamId,
    pub char_proj: ParamId,
    pub word_proj: ParamId,
    pub w_r: ParamId,
    pub layers: Vec<LayerIds>,
    pub out_w: ParamId,
    pub out_b: ParamId,
    pub transitions: ParamId,
    pub start: ParamId,
    pub end: ParamId,
}

/// `(name, rows, cols, init)` for every parameter, in registration order.
fn layout(cfg: &ModelConfig, vocab: &Vocab) -> Vec<(String, usize, usize, Init)> {
    let (d, dh, t) = (cfg.d_model, cfg.d_head(), vocab.n_tags());
    let mut out = vec![
        (
            "embed.char".to_owned(),
            vocab.chars.len(),
            cfg.char_dim,
            Init::Normal {
                std: 1.0 / (cfg.char_dim as f64).sqrt(),
            },
        ),
        (
            "embed.word".to_owned(),
            vocab.words.len(),
            cfg.word_dim,
            Init::Normal {
                std: 1.0 / (cfg.word_dim as f64).sqrt(),
            },
        ),
        ("proj.char".to_owned(), cfg.char_dim, d, Init::Glorot),
        ("proj.word".to_owned(), cfg.word_dim, d, Init::Glorot),
        ("pos.w_r".to_owned(), d, 4 * d, Init::Glorot),
    ];
    for l in 0..cfg.n_layers {
        for h in 0..cfg.n_heads {
            let p = format!("layer{l}.head{h}");
            for m in ["w_q", "w_ke", "w_kr", "w_v"] {
                out.push((format!("{p}.{m}"), d, dh, Init::Glorot));
            }
            out.push((format!("{p}.u"), 1, dh, Init::Zeros));
            out.push((format!("{p}.v"), 1, dh, Init::Zeros));
        }
        let p = format!("layer{l}");
        out.extend([
            (format!("{p}.w_o"), d, d, Init::Glorot),
            (format!("{p}.ln1.gain"), 1, d, Init::Ones),
            (format!("{p}.ln1.bias"), 1, d, Init::Zeros),
            (format!("{p}.ffn.w1"), d, cfg.ffn_size, Init::Glorot),
            (format!("{p}.ffn.b1"), 1, cfg.ffn_size, Init::Zeros),
            (format!("{p}.ffn.w2"), cfg.ffn_size, d, Init::Glorot),
            (format!("{p}.ffn.b2"), 1, d, Init::Zeros),
            (format!("{p}.ln2.gain"), 1, d, Init::Ones),
            (format!("{p}.ln2.bias"), 1, d, Init::Zeros),
        ]);
    }
    out.extend([
        ("out.w".to_owned(), d, t, Init::Glorot),
        ("out.b".to_owned(), 1, t, Init::Zeros),
        ("crf.transitions".to_owned(), t, t, Init::Zeros),
        ("crf.start".to_owned(), 1, t, Init::Zeros),
        ("crf.end".to_owned(), 1, t, Init::Zeros),
    ]);
    out
}

impl ParamIds {
    /// Looks every parameter up by name and checks its shape.
    fn resolve(store: &ParamStore, cfg: &ModelConfig, vocab: &Vocab) -> Result<Self> {
        for (name, rows, cols, _) in layout(cfg, vocab) {
            let id = store
                .id(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
            let shape = store.value(id).shape();
            if shape != [rows, cols] {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} has shape {shape:?}, expected [{rows}, {cols}]"
                )));
            }
        }
        if store.len() != layout(cfg, vocab).len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameters, found {}",
                layout(cfg, vocab).len(),
                store.len()
            )));
        }
        let id = |name: &str| store.id(name).expect("checked above");
        let layers = (0..cfg.n_layers)
            .map(|l| LayerIds {
                heads: (0..cfg.n_heads)
                    .map(|h| {
                        let p = format!("layer{l}.head{h}");
                        HeadIds {
                            w_q: id(&format!("{p}.w_q")),
                            w_ke: id(&format!("{p}.w_ke")),
                            w_kr: id(&format!("{p}.w_kr")),
                            w_v: id(&format!("{p}.w_v")),
                            u: id(&format!("{p}.u")),
                            v: id(&format!("{p}.v")),
                        }
                    })
                    .collect(),
                w_o: id(&format!("layer{l}.w_o")),
                ln1_gain: id(&format!("layer{l}.ln1.gain")),
                ln1_bias: id(&format!("layer{l}.ln1.bias")),
                ffn_w1: id(&format!("layer{l}.ffn.w1")),
                ffn_b1: id(&format!("layer{l}.ffn.b1")),
                ffn_w2: id(&format!("layer{l}.ffn.w2")),
                ffn_b2: id(&format!("layer{l}.ffn.b2")),
                ln2_gain: id(&format!("layer{l}.ln2.gain")),
                ln2_bias: id(&format!("layer{l}.ln2.bias")),
            })
            .collect();
        Ok(ParamIds {
            char_table: id("embed.char"),
            word_table: id("embed.word"),
            char_proj: id("proj.char"),
            word_proj: id("proj.word"),
            w_r: id("pos.w_r"),
            layers,
            out_w: id("out.w"),
            out_b: id("out.b"),
            transitions: id("crf.transitions"),
            start: id("crf.start"),
            end: id("crf.end"),
        })
    }
}

/// A sentence prepared for the model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub flat: FlatLattice,
    /// Character-table row of each character span.
    pub char_rows: Vec<usize>,
    /// Word-table row of each word span.
    pub word_rows: Vec<usize>,
    pub dm: DistanceMatrices,
    pub mask: Option<Vec<bool>>,
    /// Gold tag ids, when known.
    pub gold: Option<Vec<usize>>,
}

impl Instance {
    pub fn n_chars(&self) -> usize {
        self.flat.n_chars()
    }

    pub fn n_spans(&self) -> usize {
        self.flat.n_spans()
    }
}

#[derive(Serialize, Deserialize)]
struct Meta {
    format: String,
    config: ModelConfig,
    scheme: Scheme,
    vocab: Vocab,
}

const META_FORMAT: &str = "flat-model/1";

/// Model configuration, vocabularies, lexicon, and parameters.
#[derive(Debug, Clone)]
pub struct FlatModel {
    pub config: ModelConfig,
    pub scheme: Scheme,
    pub vocab: Vocab,
    pub trie: Trie,
    pub params: ParamStore,
    pub ids: ParamIds,
}

impl FlatModel {
    /// Freshly initialized model. The lexicon is `vocab.words`.
    pub fn new(config: ModelConfig, vocab: Vocab, scheme: Scheme, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        for (name, rows, cols, init) in layout(&config, &vocab) {
            params.add(name, rows, cols, init, rng)?;
        }
        Self::assemble(config, vocab, scheme, params)
    }

    fn assemble(config: ModelConfig, vocab: Vocab, scheme: Scheme, params: ParamStore) -> Result<Self> {
        let words: Vec<&str> = vocab.words.iter().map(|(_, w)| w.as_str()).collect();
        let trie = Trie::build(&words)?;
        if trie.len() + 2 != vocab.words.len() {
            return Err(Error::Config(
                "word vocabulary must hold distinct words of at least two characters".into(),
            ));
        }
        let ids = ParamIds::resolve(&params, &config, &vocab)?;
        Ok(FlatModel {
            config,
            scheme,
            vocab,
            trie,
            params,
            ids,
        })
    }

    pub fn n_tags(&self) -> usize {
        self.vocab.n_tags()
    }

    /// Replaces the character table; its width must equal `char_dim`.
    pub fn set_char_embeddings(&mut self, table: Tensor) -> Result<()> {
        Self::replace(&mut self.params, self.ids.char_table, table)
    }

    pub fn set_word_embeddings(&mut self, table: Tensor) -> Result<()> {
        Self::replace(&mut self.params, self.ids.word_table, table)
    }

    fn replace(params: &mut ParamStore, id: ParamId, table: Tensor) -> Result<()> {
        let cur = params.value(id);
        if !cur.same_shape(&table) {
            return Err(Error::ShapeMismatch {
                op: "set_embeddings",
                left: cur.shape().to_vec(),
                right: table.shape().to_vec(),
            });
        }
        *params.value_mut(id) = table;
        Ok(())
    }

    /// Builds the lattice, embedding rows, offsets, and mask of a sentence.
    /// Unknown characters map to the UNK row; unknown gold tags are an error.
    pub fn featurize(&self, chars: &[char], gold: Option<&[String]>) -> Result<Instance> {
        let flat = FlatLattice::from_sentence(chars, &self.trie);
        self.featurize_lattice(flat, gold)
    }

    pub fn featurize_lattice(&self, flat: FlatLattice, gold: Option<&[String]>) -> Result<Instance> {
        let mut char_rows = Vec::with_capacity(flat.n_chars());
        let mut word_rows = Vec::with_capacity(flat.word_spans().len());
        for s in flat.spans() {
            match s.kind {
                SpanKind::Character => {
                    let c = char::from_u32(s.token_id).expect("character span holds a code point");
                    char_rows.push(self.vocab.chars.id_or_unk(&c));
                }
                SpanKind::Word => word_rows.push(self.vocab.word_row(s.token_id)),
            }
        }
        let gold = match gold {
            None => None,
            Some(tags) => {
                if tags.len() != flat.n_chars() {
                    return Err(Error::Structural(format!(
                        "{} gold tags for {} characters",
                        tags.len(),
                        flat.n_chars()
                    )));
                }
                let ids = tags
                    .iter()
                    .map(|t| {
                        self.vocab
                            .tags
                            .get(t)
                            .ok_or_else(|| Error::Config(format!("tag {t:?} is not in the tag vocabulary")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(ids)
            }
        };
        let dm = distances(&flat);
        let mask = attention_mask(&flat, &dm, self.config.mask);
        Ok(Instance {
            flat,
            char_rows,
            word_rows,
            dm,
            mask,
            gold,
        })
    }

    pub fn meta_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Meta {
            format: META_FORMAT.to_owned(),
            config: self.config.clone(),
            scheme: self.scheme,
            vocab: self.vocab.clone(),
        })?)
    }

    pub fn from_parts(meta: &str, params: ParamStore) -> Result<Self> {
        let meta: Meta = serde_json::from_str(meta)?;
        if meta.format != META_FORMAT {
            return Err(Error::Checkpoint(format!("unsupported model format {:?}", meta.format)));
        }
        meta.config.validate()?;
        Self::assemble(meta.config, meta.vocab, meta.scheme, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::save(path, &self.meta_json()?, &self.params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (meta, params) = checkpoint::load(path)?;
        Self::from_parts(&meta, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TaggedSentence;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> FlatModel {
        let corpus = vec![TaggedSentence {
            chars: "重庆人和药店".chars().collect(),
            tags: ["B-GPE", "E-GPE", "O", "O", "B-ORG", "E-ORG"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }];
        let trie = Trie::build(&["重庆", "重庆人", "人和药店", "药店"]).unwrap();
        let vocab = Vocab::build(&corpus, &trie);
        let cfg = ModelConfig {
            d_model: 8,
            n_heads: 2,
            ffn_size: 12,
            char_dim: 5,
            word_dim: 3,
            ..Default::default()
        };
        FlatModel::new(cfg, vocab, Scheme::Bmes, &mut ChaCha8Rng::seed_from_u64(1)).unwrap()
    }

    #[test]
    fn featurize_figure_one() {
        let m = tiny();
        let chars: Vec<char> = "重庆人和药店".chars().collect();
        let inst = m.featurize(&chars, None).unwrap();
        assert_eq!(inst.n_spans(), 10);
        assert_eq!(inst.char_rows, vec![2, 3, 4, 5, 6, 7]);
        assert_eq!(inst.word_rows.len(), 4);
        let unknown = m.featurize(&['x', '重'], None).unwrap();
        assert_eq!(unknown.char_rows, vec![crate::data::UNK, 2]);
        let bad = m.featurize(&chars, Some(&vec!["X".to_owned(); 6]));
        assert!(bad.is_err());
    }

    #[test]
    fn save_load_roundtrip() {
        let m = tiny();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        m.save(&path).unwrap();
        let back = FlatModel::load(&path).unwrap();
        let mut rounded = m.params.clone();
        rounded.round_to_f32();
        assert_eq!(back.params.checksum(), rounded.checksum());
        assert_eq!(back.vocab, m.vocab);
        assert_eq!(back.config, m.config);
        assert_eq!(back.trie.words(), m.trie.words());
    }

    #[test]
    fn zero_tables_initialized_as_declared() {
        let m = tiny();
        assert_eq!(m.params.value(m.ids.transitions).sum(), 0.0);
        assert_eq!(m.params.value(m.ids.layers[0].heads[1].u).sum(), 0.0);
        assert_eq!(m.params.value(m.ids.layers[0].ln1_gain).sum(), 8.0);
    }
}
