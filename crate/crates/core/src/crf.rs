//! Linear-chain CRF: path scores, log-partition, negative log-likelihood with
//! its gradients, and Viterbi decoding.
//!
//! A path `y` over `n` positions scores
//! `start[y0] + sum_t em[t][y_t] + sum_t trans[y_{t-1}][y_t] + end[y_{n-1}]`.
//! All recursions run in log space.

use crate::error::{Error, Result};
use crate::numerics::{log_sum_exp, Graph, Tensor, Var};

/// Borrowed view of CRF parameters for `T` tags.
#[derive(Debug, Clone, Copy)]
pub struct Crf<'a> {
    /// `T x T`, `transitions[a][b]` scores moving from tag `a` to tag `b`.
    pub transitions: &'a Tensor,
    pub start: &'a [f64],
    pub end: &'a [f64],
}

/// Loss value and its gradients with respect to every CRF input.
#[derive(Debug, Clone)]
pub struct NllGrads {
    pub nll: f64,
    pub emissions: Tensor,
    pub transitions: Tensor,
    pub start: Tensor,
    pub end: Tensor,
}

impl<'a> Crf<'a> {
    pub fn new(transitions: &'a Tensor, start: &'a [f64], end: &'a [f64]) -> Result<Self> {
        let t = transitions.rows();
        if transitions.cols() != t || start.len() != t || end.len() != t {
            return Err(Error::ShapeMismatch {
                op: "crf",
                left: transitions.shape().to_vec(),
                right: vec![start.len(), end.len()],
            });
        }
        Ok(Crf {
            transitions,
            start,
            end,
        })
    }

    pub fn n_tags(&self) -> usize {
        self.start.len()
    }

    fn check_emissions(&self, em: &Tensor) -> Result<()> {
        if em.rows() == 0 {
            return Err(Error::Structural("CRF needs at least one position".into()));
        }
        if em.cols() != self.n_tags() {
            return Err(Error::ShapeMismatch {
                op: "crf emissions",
                left: vec![em.rows(), self.n_tags()],
                right: em.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn check_path(&self, em: &Tensor, path: &[usize]) -> Result<()> {
        if path.len() != em.rows() {
            return Err(Error::Structural(format!(
                "path of length {} for {} positions",
                path.len(),
                em.rows()
            )));
        }
        if let Some(&tag) = path.iter().find(|&&t| t >= self.n_tags()) {
            return Err(Error::TagOutOfRange {
                tag,
                n_tags: self.n_tags(),
            });
        }
        Ok(())
    }

    /// Unnormalized log score of one tag path.
    pub fn path_score(&self, em: &Tensor, path: &[usize]) -> Result<f64> {
        self.check_emissions(em)?;
        self.check_path(em, path)?;
        let mut s = self.start[path[0]];
        for (t, &y) in path.iter().enumerate() {
            s += em.get(t, y);
            if t > 0 {
                s += self.transitions.get(path[t - 1], y);
            }
        }
        Ok(s + self.end[path[path.len() - 1]])
    }

    /// Forward log-messages, one row per position.
    fn alphas(&self, em: &Tensor) -> Tensor {
        let (n, k) = (em.rows(), self.n_tags());
        let mut alpha = Tensor::zeros(n, k);
        for y in 0..k {
            alpha.set(0, y, self.start[y] + em.get(0, y));
        }
        let mut buf = vec![0.0; k];
        for t in 1..n {
            for y in 0..k {
                for (a, b) in buf.iter_mut().enumerate() {
                    *b = alpha.get(t - 1, a) + self.transitions.get(a, y);
                }
                alpha.set(t, y, log_sum_exp(&buf) + em.get(t, y));
            }
        }
        alpha
    }

    /// Backward log-messages; row `t` excludes the emission at `t`.
    fn betas(&self, em: &Tensor) -> Tensor {
        let (n, k) = (em.rows(), self.n_tags());
        let mut beta = Tensor::zeros(n, k);
        beta.row_mut(n - 1).copy_from_slice(self.end);
        let mut buf = vec![0.0; k];
        for t in (0..n - 1).rev() {
            for a in 0..k {
                for (y, b) in buf.iter_mut().enumerate() {
                    *b = self.transitions.get(a, y) + em.get(t + 1, y) + beta.get(t + 1, y);
                }
                beta.set(t, a, log_sum_exp(&buf));
            }
        }
        beta
    }

    /// `log sum_y exp(score(y))` over all tag paths.
    pub fn log_partition(&self, em: &Tensor) -> Result<f64> {
        self.check_emissions(em)?;
        Ok(self.log_partition_unchecked(&self.alphas(em)))
    }

    fn log_partition_unchecked(&self, alpha: &Tensor) -> f64 {
        let last = alpha.rows() - 1;
        let terms: Vec<f64> = (0..self.n_tags())
            .map(|y| alpha.get(last, y) + self.end[y])
            .collect();
        log_sum_exp(&terms)
    }

    /// `log_partition - score(gold)`.
    pub fn nll(&self, em: &Tensor, gold: &[usize]) -> Result<f64> {
        self.check_path(em, gold)?;
        Ok(self.log_partition(em)? - self.path_score(em, gold)?)
    }

    /// Negative log-likelihood and its exact gradients from forward-backward
    /// marginals.
    pub fn nll_with_grads(&self, em: &Tensor, gold: &[usize]) -> Result<NllGrads> {
        self.check_emissions(em)?;
        self.check_path(em, gold)?;
        let (n, k) = (em.rows(), self.n_tags());
        let alpha = self.alphas(em);
        let beta = self.betas(em);
        let log_z = self.log_partition_unchecked(&alpha);
        let nll = log_z - self.path_score(em, gold)?;

        let mut d_em = Tensor::zeros(n, k);
        for t in 0..n {
            for y in 0..k {
                d_em.set(t, y, (alpha.get(t, y) + beta.get(t, y) - log_z).exp());
            }
        }
        let mut d_start = Tensor::row_vector(d_em.row(0).to_vec());
        let mut d_end = Tensor::row_vector(d_em.row(n - 1).to_vec());
        let mut d_trans = Tensor::zeros(k, k);
        for t in 1..n {
            for a in 0..k {
                for b in 0..k {
                    let lp = alpha.get(t - 1, a)
                        + self.transitions.get(a, b)
                        + em.get(t, b)
                        + beta.get(t, b)
                        - log_z;
                    d_trans.set(a, b, d_trans.get(a, b) + lp.exp());
                }
            }
        }
        for (t, &y) in gold.iter().enumerate() {
            d_em.set(t, y, d_em.get(t, y) - 1.0);
            if t > 0 {
                let a = gold[t - 1];
                d_trans.set(a, y, d_trans.get(a, y) - 1.0);
            }
        }
        d_start.data_mut()[gold[0]] -= 1.0;
        d_end.data_mut()[gold[n - 1]] -= 1.0;
        Ok(NllGrads {
            nll,
            emissions: d_em,
            transitions: d_trans,
            start: d_start,
            end: d_end,
        })
    }

    /// Best path and its score. Among equally scored paths the
    /// lexicographically smallest tag sequence wins.
    pub fn viterbi(&self, em: &Tensor) -> Result<(Vec<usize>, f64)> {
        self.check_emissions(em)?;
        let (n, k) = (em.rows(), self.n_tags());
        // best[t][a]: best score of positions t+1.. given tag a at t
        let mut best = Tensor::zeros(n, k);
        best.row_mut(n - 1).copy_from_slice(self.end);
        let mut next = vec![vec![0usize; k]; n];
        for t in (0..n - 1).rev() {
            for (a, next_a) in next[t].iter_mut().enumerate() {
                let mut arg = 0;
                let mut max = f64::NEG_INFINITY;
                for y in 0..k {
                    let s = self.transitions.get(a, y) + em.get(t + 1, y) + best.get(t + 1, y);
                    if s > max {
                        max = s;
                        arg = y;
                    }
                }
                best.set(t, a, max);
                *next_a = arg;
            }
        }
        let mut first = 0;
        let mut score = f64::NEG_INFINITY;
        for y in 0..k {
            let s = self.start[y] + em.get(0, y) + best.get(0, y);
            if s > score {
                score = s;
                first = y;
            }
        }
        let mut path = Vec::with_capacity(n);
        path.push(first);
        for t in 0..n - 1 {
            path.push(next[t][path[t]]);
        }
        Ok((path, score))
    }
}

/// Records the CRF negative log-likelihood on `graph`.
///
/// `start` and `end` are `1 x T` row vectors.
pub fn nll_on_graph(
    graph: &mut Graph,
    emissions: Var,
    transitions: Var,
    start: Var,
    end: Var,
    gold: &[usize],
) -> Result<Var> {
    let grads = {
        let crf = Crf::new(
            graph.value(transitions),
            graph.value(start).data(),
            graph.value(end).data(),
        )?;
        crf.nll_with_grads(graph.value(emissions), gold)?
    };
    graph.scalar_fn(
        &[emissions, transitions, start, end],
        grads.nll,
        vec![grads.emissions, grads.transitions, grads.start, grads.end],
    )
}
