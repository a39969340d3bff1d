use super::config::{DistanceMetric, MaskSpec};
use crate::lexicon::{FlatLattice, SpanKind};
use crate::position::DistanceMatrices;

/// Row-major `S x S` matrix of which attention entries may receive weight,
/// or `None` when nothing is masked.
pub fn attention_mask(flat: &FlatLattice, dm: &DistanceMatrices, spec: MaskSpec) -> Option<Vec<bool>> {
    let s = flat.n_spans();
    match spec {
        MaskSpec::None => None,
        MaskSpec::SelfMatched => {
            let mut allowed = vec![true; s * s];
            let spans = flat.spans();
            for i in 0..flat.n_chars() {
                for (j, w) in spans.iter().enumerate().skip(flat.n_chars()) {
                    debug_assert_eq!(w.kind, SpanKind::Word);
                    if w.contains(i) {
                        allowed[i * s + j] = false;
                    }
                }
            }
            Some(allowed)
        }
        MaskSpec::LongDistance { threshold, metric } => {
            let threshold = threshold as u64;
            let allowed = (0..s * s)
                .map(|k| {
                    let d = match metric {
                        DistanceMetric::HeadHead => dm.hh[k].unsigned_abs(),
                        DistanceMetric::TailTail => dm.tt[k].unsigned_abs(),
                        DistanceMetric::MinOfFour => [dm.hh[k], dm.ht[k], dm.th[k], dm.tt[k]]
                            .iter()
                            .map(|d| d.unsigned_abs())
                            .min()
                            .expect("four offsets"),
                    };
                    d <= threshold
                })
                .collect();
            Some(allowed)
        }
    }
}
