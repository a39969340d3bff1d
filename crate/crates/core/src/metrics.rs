//! Entity-level precision, recall, and F1, plus boundary-only F1 and the
//! share of boundary-correct predictions that also have the right type.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::data::Entity;

/// Match counts accumulated over one or more sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub gold: usize,
    pub pred: usize,
    /// Predictions matching a gold entity in type and boundaries.
    pub correct: usize,
    /// Predictions whose boundaries match some gold entity.
    pub span_correct_pred: usize,
    /// Gold entities whose boundaries match some prediction.
    pub span_correct_gold: usize,
}

fn prf(tp_pred: usize, tp_gold: usize, pred: usize, gold: usize) -> (f64, f64, f64) {
    if pred == 0 && gold == 0 {
        return (1.0, 1.0, 1.0);
    }
    let p = if pred == 0 { 0.0 } else { tp_pred as f64 / pred as f64 };
    let r = if gold == 0 { 0.0 } else { tp_gold as f64 / gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

impl Counts {
    /// Counts for one sentence. Duplicate entities are dropped first.
    pub fn of(gold: &[Entity], pred: &[Entity]) -> Self {
        let gold: BTreeSet<&Entity> = gold.iter().collect();
        let pred: BTreeSet<&Entity> = pred.iter().collect();
        let gold_spans: BTreeSet<(usize, usize)> = gold.iter().map(|e| (e.start, e.end)).collect();
        let pred_spans: BTreeSet<(usize, usize)> = pred.iter().map(|e| (e.start, e.end)).collect();
        Counts {
            gold: gold.len(),
            pred: pred.len(),
            correct: pred.intersection(&gold).count(),
            span_correct_pred: pred
                .iter()
                .filter(|e| gold_spans.contains(&(e.start, e.end)))
                .count(),
            span_correct_gold: gold
                .iter()
                .filter(|e| pred_spans.contains(&(e.start, e.end)))
                .count(),
        }
    }

    pub fn add(&mut self, other: Counts) {
        self.gold += other.gold;
        self.pred += other.pred;
        self.correct += other.correct;
        self.span_correct_pred += other.span_correct_pred;
        self.span_correct_gold += other.span_correct_gold;
    }

    /// Exact-match `(precision, recall, f1)`; all 1.0 when both sides are empty.
    pub fn prf(&self) -> (f64, f64, f64) {
        prf(self.correct, self.correct, self.pred, self.gold)
    }

    pub fn f1(&self) -> f64 {
        self.prf().2
    }

    /// F1 counting boundaries only.
    pub fn span_f(&self) -> f64 {
        prf(self.span_correct_pred, self.span_correct_gold, self.pred, self.gold).2
    }

    /// `correct / span_correct_pred`, or 1.0 when no prediction has correct
    /// boundaries.
    pub fn type_acc(&self) -> f64 {
        if self.span_correct_pred == 0 {
            1.0
        } else {
            self.correct as f64 / self.span_correct_pred as f64
        }
    }

    pub fn scores(&self) -> Scores {
        let (precision, recall, f1) = self.prf();
        Scores {
            precision,
            recall,
            f1,
            span_f: self.span_f(),
            type_acc: self.type_acc(),
            counts: *self,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub span_f: f64,
    pub type_acc: f64,
    pub counts: Counts,
}

impl fmt::Display for Scores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P={:.4} R={:.4} F1={:.4} SpanF={:.4} TypeAcc={:.4}",
            self.precision, self.recall, self.f1, self.span_f, self.type_acc
        )
    }
}

/// Exact-match `(precision, recall, f1)` of one entity set pair.
pub fn f1(gold: &[Entity], pred: &[Entity]) -> (f64, f64, f64) {
    Counts::of(gold, pred).prf()
}

pub fn span_f(gold: &[Entity], pred: &[Entity]) -> f64 {
    Counts::of(gold, pred).span_f()
}

pub fn type_acc(gold: &[Entity], pred: &[Entity]) -> f64 {
    Counts::of(gold, pred).type_acc()
}

/// Corpus-level scores over aligned `(gold, pred)` sentence pairs.
pub fn corpus_scores<'a>(pairs: impl IntoIterator<Item = (&'a [Entity], &'a [Entity])>) -> Scores {
    let mut total = Counts::default();
    for (g, p) in pairs {
        total.add(Counts::of(g, p));
    }
    total.scores()
}
