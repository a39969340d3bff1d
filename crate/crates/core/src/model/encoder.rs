//! Differentiable forward pass on a [`Graph`].

use super::flat::{FlatModel, HeadIds, Instance, LayerIds};
use crate::crf::nll_on_graph;
use crate::error::{Error, Result};
use crate::numerics::{Graph, ParamStore, Tensor, Var};
use crate::position::{DistanceMatrices, SinusoidTable};

pub(crate) const LN_EPS: f64 = 1e-5;

/// Row indices into the sinusoid table for each concatenated block, in
/// `(hh, th, ht, tt)` order.
pub(crate) fn offset_rows(dm: &DistanceMatrices, table: &SinusoidTable) -> [Vec<usize>; 4] {
    let idx = |m: &[i64]| m.iter().map(|&d| table.row_index(d)).collect::<Vec<_>>();
    [idx(&dm.hh), idx(&dm.th), idx(&dm.ht), idx(&dm.tt)]
}

impl FlatModel {
    /// Span embeddings, `S x d_model`: characters first, then words.
    pub fn embed(&self, g: &mut Graph, inst: &Instance) -> Result<Var> {
        let p = self.config.embed_dropout;
        let table = g.param(self.ids.char_table);
        let rows = g.gather_rows(table, inst.char_rows.clone())?;
        let rows = g.dropout(rows, p);
        let proj = g.param(self.ids.char_proj);
        let chars = g.matmul(rows, proj)?;
        if inst.word_rows.is_empty() {
            return Ok(chars);
        }
        let table = g.param(self.ids.word_table);
        let rows = g.gather_rows(table, inst.word_rows.clone())?;
        let rows = g.dropout(rows, p);
        let proj = g.param(self.ids.word_proj);
        let words = g.matmul(rows, proj)?;
        g.concat_rows(&[chars, words])
    }

    /// Fused relative position encoding as an `(S*S) x d_model` node.
    pub fn rel_pos(&self, g: &mut Graph, dm: &DistanceMatrices) -> Result<Var> {
        let d = self.config.d_model;
        let table = SinusoidTable::new(d, dm.max_abs())?;
        let rows = offset_rows(dm, &table);
        let sin = g.input(table.as_tensor().clone());
        let w_r = g.param(self.ids.w_r);
        let mut acc: Option<Var> = None;
        for (b, idx) in rows.into_iter().enumerate() {
            let block = g.slice_cols(w_r, b * d, (b + 1) * d)?;
            let proj = g.matmul_bt(sin, block)?;
            let part = g.gather_rows(proj, idx)?;
            acc = Some(match acc {
                None => part,
                Some(a) => g.add(a, part)?,
            });
        }
        Ok(g.relu(acc.expect("four blocks")))
    }

    /// Pre-softmax scores of one head, `S x S`, scaled when configured.
    pub(crate) fn head_scores(&self, g: &mut Graph, e: Var, r: Var, head: &HeadIds) -> Result<(Var, Var)> {
        let w_q = g.param(head.w_q);
        let w_ke = g.param(head.w_ke);
        let w_kr = g.param(head.w_kr);
        let u = g.param(head.u);
        let v = g.param(head.v);
        let q = g.matmul(e, w_q)?;
        let k = g.matmul(e, w_ke)?;
        let rk = g.matmul(r, w_kr)?;
        let qu = g.add_row(q, u)?;
        let qv = g.add_row(q, v)?;
        let content = g.matmul_bt(qu, k)?;
        let position = g.pair_dot(qv, rk)?;
        let mut a = g.add(content, position)?;
        if self.config.scale_attention {
            a = g.scale(a, 1.0 / (self.config.d_head() as f64).sqrt());
        }
        Ok((a, q))
    }

    fn layer(&self, g: &mut Graph, e: Var, r: Var, mask: Option<&[bool]>, ids: &LayerIds) -> Result<Var> {
        let mut heads = Vec::with_capacity(ids.heads.len());
        for head in &ids.heads {
            let (scores, _) = self.head_scores(g, e, r, head)?;
            let weights = g.softmax_rows(scores, mask)?;
            let w_v = g.param(head.w_v);
            let values = g.matmul(e, w_v)?;
            heads.push(g.matmul(weights, values)?);
        }
        let cat = g.concat_cols(&heads)?;
        let w_o = g.param(ids.w_o);
        let att = g.matmul(cat, w_o)?;
        let res = g.add(e, att)?;
        let (gain, bias) = (g.param(ids.ln1_gain), g.param(ids.ln1_bias));
        let x = g.layer_norm(res, gain, bias, LN_EPS)?;

        let (w1, b1) = (g.param(ids.ffn_w1), g.param(ids.ffn_b1));
        let (w2, b2) = (g.param(ids.ffn_w2), g.param(ids.ffn_b2));
        let h = g.matmul(x, w1)?;
        let h = g.add_row(h, b1)?;
        let h = g.relu(h);
        let h = g.matmul(h, w2)?;
        let h = g.add_row(h, b2)?;
        let res = g.add(x, h)?;
        let (gain, bias) = (g.param(ids.ln2_gain), g.param(ids.ln2_bias));
        g.layer_norm(res, gain, bias, LN_EPS)
    }

    /// Character representations, `n_chars x d_model`.
    pub fn encode(&self, g: &mut Graph, inst: &Instance) -> Result<Var> {
        let mut e = self.embed(g, inst)?;
        let r = self.rel_pos(g, &inst.dm)?;
        for ids in &self.ids.layers {
            e = self.layer(g, e, r, inst.mask.as_deref(), ids)?;
        }
        g.slice_rows(e, 0, inst.n_chars())
    }

    /// Tag scores, `n_chars x T`, after output dropout.
    pub fn emissions(&self, g: &mut Graph, inst: &Instance) -> Result<Var> {
        let c = self.encode(g, inst)?;
        let c = g.dropout(c, self.config.output_dropout);
        let w = g.param(self.ids.out_w);
        let b = g.param(self.ids.out_b);
        let em = g.matmul(c, w)?;
        g.add_row(em, b)
    }

    /// CRF negative log-likelihood of the instance's gold tags.
    pub fn loss(&self, g: &mut Graph, inst: &Instance) -> Result<Var> {
        let gold = inst
            .gold
            .as_deref()
            .ok_or_else(|| Error::Structural("instance has no gold tags".into()))?;
        let em = self.emissions(g, inst)?;
        let trans = g.param(self.ids.transitions);
        let start = g.param(self.ids.start);
        let end = g.param(self.ids.end);
        nll_on_graph(g, em, trans, start, end, gold)
    }
}

/// Scores `A*` of one head for given span embeddings `e` (`S x d_model`) and
/// fused encoding `r` (`(S*S) x d_model`), evaluated with `params`.
pub fn attention_scores(
    model: &FlatModel,
    params: &ParamStore,
    e: &Tensor,
    r: &Tensor,
    layer: usize,
    head: usize,
) -> Result<Tensor> {
    let ids = head_ids(model, layer, head)?;
    let mut g = Graph::new(params);
    let ev = g.input(e.clone());
    let rv = g.input(r.clone());
    let (a, _) = model.head_scores(&mut g, ev, rv, ids)?;
    Ok(g.value(a).clone())
}

fn head_ids(model: &FlatModel, layer: usize, head: usize) -> Result<&HeadIds> {
    let l = model.ids.layers.get(layer).ok_or(Error::IndexOutOfRange {
        index: layer,
        len: model.ids.layers.len(),
    })?;
    l.heads.get(head).ok_or(Error::IndexOutOfRange {
        index: head,
        len: l.heads.len(),
    })
}

/// Post-softmax weights of one head on `inst`, `S x S`, with dropout off and
/// the instance's mask applied.
pub fn attention_weights(model: &FlatModel, inst: &Instance, layer: usize, head: usize) -> Result<Tensor> {
    let ids = head_ids(model, layer, head)?;
    let mask = inst.mask.as_deref();
    let mut g = Graph::new(&model.params);
    let mut e = model.embed(&mut g, inst)?;
    let r = model.rel_pos(&mut g, &inst.dm)?;
    for l in &model.ids.layers[..layer] {
        e = model.layer(&mut g, e, r, mask, l)?;
    }
    let (scores, _) = model.head_scores(&mut g, e, r, ids)?;
    let w = g.softmax_rows(scores, mask)?;
    Ok(g.value(w).clone())
}
