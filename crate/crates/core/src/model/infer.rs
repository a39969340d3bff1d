//! Batched, tape-free evaluation.
//!
//! A batch is laid out as `B x S_max` padded span rows. Dense projections run
//! over the whole padded matrix; attention runs per sentence over its real
//! spans only, so padding never receives or contributes weight. Every row is
//! computed by the same kernels as the graph, which makes a sentence's result
//! independent of the batch it is in.

use rayon::prelude::*;

use super::encoder::LN_EPS;
use super::flat::{FlatModel, Instance, LayerIds};
use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::numerics::{dot, layer_norm_row, masked_softmax_in_place, matmul_row, ParamStore, Tensor};
use crate::position::{OffsetProjections, SinusoidTable};

fn par_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    out.data_mut()
        .par_chunks_mut(n)
        .zip(a.data().par_chunks(k))
        .for_each(|(o, ar)| matmul_row(ar, b, o));
    out
}

fn add_row_in_place(x: &mut Tensor, bias: &[f64]) {
    let n = x.cols();
    if n == 0 {
        return;
    }
    x.data_mut().par_chunks_mut(n).for_each(|row| {
        for (v, b) in row.iter_mut().zip(bias) {
            *v += b;
        }
    });
}

fn layer_norm(x: &Tensor, gain: &Tensor, bias: &Tensor) -> Tensor {
    let d = x.cols();
    let mut out = Tensor::zeros(x.rows(), d);
    if d == 0 {
        return out;
    }
    out.data_mut()
        .par_chunks_mut(d)
        .zip(x.data().par_chunks(d))
        .for_each(|(o, row)| {
            let mut xhat = vec![0.0; d];
            layer_norm_row(row, gain.row(0), bias.row(0), LN_EPS, &mut xhat, o);
        });
    out
}

/// Evaluates a model with a given parameter set.
pub struct InferenceEngine<'m> {
    model: &'m FlatModel,
    params: &'m ParamStore,
}

impl FlatModel {
    pub fn engine(&self) -> InferenceEngine<'_> {
        InferenceEngine {
            model: self,
            params: &self.params,
        }
    }
}

impl<'m> InferenceEngine<'m> {
    /// Engine over `params`, which must share the model's layout.
    pub fn with_params(model: &'m FlatModel, params: &'m ParamStore) -> Self {
        InferenceEngine { model, params }
    }

    fn value(&self, id: crate::numerics::ParamId) -> &'m Tensor {
        self.params.value(id)
    }

    /// Character representations of each sentence, `n_chars x d_model`.
    pub fn encode_batch(&self, batch: &[&Instance]) -> Result<Vec<Tensor>> {
        let cfg = &self.model.config;
        let ids = &self.model.ids;
        let d = cfg.d_model;
        let s_max = batch.iter().map(|i| i.n_spans()).max().unwrap_or(0);
        if s_max == 0 {
            return Ok(batch.iter().map(|_| Tensor::zeros(0, d)).collect());
        }
        let rows = batch.len() * s_max;

        let (ct, wt) = (self.value(ids.char_table), self.value(ids.word_table));
        let mut xc = Tensor::zeros(rows, ct.cols());
        let mut xw = Tensor::zeros(rows, wt.cols());
        for (b, inst) in batch.iter().enumerate() {
            let base = b * s_max;
            for (i, &r) in inst.char_rows.iter().enumerate() {
                if r >= ct.rows() {
                    return Err(Error::IndexOutOfRange { index: r, len: ct.rows() });
                }
                xc.row_mut(base + i).copy_from_slice(ct.row(r));
            }
            for (k, &r) in inst.word_rows.iter().enumerate() {
                if r >= wt.rows() {
                    return Err(Error::IndexOutOfRange { index: r, len: wt.rows() });
                }
                xw.row_mut(base + inst.n_chars() + k).copy_from_slice(wt.row(r));
            }
        }
        let ec = par_matmul(&xc, self.value(ids.char_proj));
        let ew = par_matmul(&xw, self.value(ids.word_proj));
        let mut e = Tensor::zeros(rows, d);
        for (b, inst) in batch.iter().enumerate() {
            let base = b * s_max;
            for i in 0..inst.n_spans() {
                let src = if i < inst.n_chars() { &ec } else { &ew };
                e.row_mut(base + i).copy_from_slice(src.row(base + i));
            }
        }

        let max_abs = batch.iter().map(|i| i.dm.max_abs()).max().unwrap_or(0);
        let table = SinusoidTable::new(d, max_abs)?;
        let proj = OffsetProjections::new(&table, self.value(ids.w_r))?;
        let rel: Vec<Tensor> = batch
            .par_iter()
            .map(|inst| {
                let s = inst.n_spans();
                let dm = &inst.dm;
                let mut data = vec![0.0; s * s * d];
                for (k, out) in data.chunks_exact_mut(d).enumerate() {
                    proj.fuse_into(dm.hh[k], dm.ht[k], dm.th[k], dm.tt[k], out);
                }
                Tensor::from_vec(s * s, d, data).expect("pair-major buffer")
            })
            .collect();

        for layer in &ids.layers {
            e = self.layer(e, &rel, batch, s_max, layer);
        }
        Ok(batch
            .iter()
            .enumerate()
            .map(|(b, inst)| e.slice_rows(b * s_max, b * s_max + inst.n_chars()))
            .collect())
    }

    fn layer(&self, e: Tensor, rel: &[Tensor], batch: &[&Instance], s_max: usize, ids: &LayerIds) -> Tensor {
        let cfg = &self.model.config;
        let (d, dh) = (cfg.d_model, cfg.d_head());
        let scale = cfg.scale_attention.then(|| 1.0 / (dh as f64).sqrt());
        let projections: Vec<[Tensor; 3]> = ids
            .heads
            .iter()
            .map(|h| {
                [
                    par_matmul(&e, self.value(h.w_q)),
                    par_matmul(&e, self.value(h.w_ke)),
                    par_matmul(&e, self.value(h.w_v)),
                ]
            })
            .collect();

        let per_sentence: Vec<Tensor> = batch
            .par_iter()
            .enumerate()
            .map(|(b, inst)| {
                let s = inst.n_spans();
                let base = b * s_max;
                let mut cat = Tensor::zeros(s, d);
                let mut scores = vec![0.0; s];
                let mut out = vec![0.0; dh];
                for (h, head) in ids.heads.iter().enumerate() {
                    let [q, k, v] = &projections[h];
                    let v_rows = v.slice_rows(base, base + s);
                    let rk = rel[b].matmul(self.value(head.w_kr));
                    let (u, vb) = (self.value(head.u).row(0), self.value(head.v).row(0));
                    for i in 0..s {
                        let qi = q.row(base + i);
                        let qu: Vec<f64> = qi.iter().zip(u).map(|(a, b)| a + b).collect();
                        let qv: Vec<f64> = qi.iter().zip(vb).map(|(a, b)| a + b).collect();
                        for (j, sc) in scores.iter_mut().enumerate() {
                            let mut a = dot(&qu, k.row(base + j));
                            a += dot(&qv, rk.row(i * s + j));
                            if let Some(f) = scale {
                                a *= f;
                            }
                            *sc = a;
                        }
                        let allowed = inst.mask.as_deref().map(|m| &m[i * s..(i + 1) * s]);
                        masked_softmax_in_place(&mut scores, allowed);
                        out.iter_mut().for_each(|x| *x = 0.0);
                        matmul_row(&scores, &v_rows, &mut out);
                        cat.row_mut(i)[h * dh..(h + 1) * dh].copy_from_slice(&out);
                    }
                }
                cat
            })
            .collect();

        let mut cat = Tensor::zeros(e.rows(), d);
        for (b, heads) in per_sentence.iter().enumerate() {
            for i in 0..heads.rows() {
                cat.row_mut(b * s_max + i).copy_from_slice(heads.row(i));
            }
        }
        let mut res = e;
        res.add_assign(&par_matmul(&cat, self.value(ids.w_o)));
        let x = layer_norm(&res, self.value(ids.ln1_gain), self.value(ids.ln1_bias));

        let mut h = par_matmul(&x, self.value(ids.ffn_w1));
        add_row_in_place(&mut h, self.value(ids.ffn_b1).row(0));
        let h = h.map(|v| v.max(0.0));
        let mut h = par_matmul(&h, self.value(ids.ffn_w2));
        add_row_in_place(&mut h, self.value(ids.ffn_b2).row(0));
        let mut res = x;
        res.add_assign(&h);
        layer_norm(&res, self.value(ids.ln2_gain), self.value(ids.ln2_bias))
    }

    /// Tag scores of each sentence, `n_chars x T`.
    pub fn emissions_batch(&self, batch: &[&Instance]) -> Result<Vec<Tensor>> {
        let ids = &self.model.ids;
        let (w, bias) = (self.value(ids.out_w), self.value(ids.out_b));
        let reps = self.encode_batch(batch)?;
        Ok(reps
            .into_par_iter()
            .map(|c| {
                let mut em = c.matmul(w);
                add_row_in_place(&mut em, bias.row(0));
                em
            })
            .collect())
    }

    /// Viterbi tag ids of each sentence.
    pub fn predict_batch(&self, batch: &[&Instance]) -> Result<Vec<Vec<usize>>> {
        let ids = &self.model.ids;
        let crf = Crf::new(
            self.value(ids.transitions),
            self.value(ids.start).row(0),
            self.value(ids.end).row(0),
        )?;
        let ems = self.emissions_batch(batch)?;
        ems.par_iter()
            .map(|em| {
                if em.rows() == 0 {
                    Ok(Vec::new())
                } else {
                    crf.viterbi(em).map(|(path, _)| path)
                }
            })
            .collect()
    }

    /// Predictions for `insts` in order, `batch_size` sentences at a time.
    pub fn predict_all(&self, insts: &[Instance], batch_size: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::with_capacity(insts.len());
        for chunk in insts.chunks(batch_size.max(1)) {
            let refs: Vec<&Instance> = chunk.iter().collect();
            out.extend(self.predict_batch(&refs)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Scheme, TaggedSentence, Vocab};
    use crate::lexicon::Trie;
    use crate::model::{MaskSpec, ModelConfig};
    use crate::numerics::Graph;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(mask: MaskSpec) -> FlatModel {
        let corpus = vec![TaggedSentence {
            chars: "重庆人和药店".chars().collect(),
            tags: ["B-GPE", "E-GPE", "O", "O", "B-ORG", "E-ORG"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }];
        let trie = Trie::build(&["重庆", "重庆人", "人和药店", "药店", "和药"]).unwrap();
        let vocab = Vocab::build(&corpus, &trie);
        let cfg = ModelConfig {
            d_model: 16,
            n_heads: 4,
            ffn_size: 20,
            char_dim: 6,
            word_dim: 5,
            mask,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = FlatModel::new(cfg, vocab, Scheme::Bmes, &mut rng).unwrap();
        for id in m.params.ids().collect::<Vec<_>>() {
            for v in m.params.value_mut(id).data_mut() {
                *v += rng.random_range(-0.5..0.5);
            }
        }
        m
    }

    fn sentences(m: &FlatModel) -> Vec<Instance> {
        ["重庆人和药店", "药店", "人和药店重庆", "", "和", "重庆重庆人和药店药"]
            .iter()
            .map(|s| m.featurize(&s.chars().collect::<Vec<_>>(), None).unwrap())
            .collect()
    }

    #[test]
    fn matches_graph_forward() {
        for mask in [MaskSpec::None, MaskSpec::SelfMatched, MaskSpec::long_distance(2)] {
            let m = model(mask);
            let insts = sentences(&m);
            let refs: Vec<&Instance> = insts.iter().collect();
            let reps = m.engine().encode_batch(&refs).unwrap();
            for (inst, rep) in insts.iter().zip(&reps) {
                if inst.n_spans() == 0 {
                    assert_eq!(rep.rows(), 0);
                    continue;
                }
                let mut g = Graph::new(&m.params);
                let c = m.encode(&mut g, inst).unwrap();
                assert_eq!(g.value(c), rep, "mask {mask}");
            }
        }
    }

    #[test]
    fn batched_equals_single() {
        let m = model(MaskSpec::None);
        let insts = sentences(&m);
        let engine = m.engine();
        let batched = engine.predict_all(&insts, 16).unwrap();
        let single = engine.predict_all(&insts, 1).unwrap();
        assert_eq!(batched, single);
        for (p, inst) in batched.iter().zip(&insts) {
            assert_eq!(p.len(), inst.n_chars());
        }
    }
}
