//! Relative position encoding between spans.
//!
//! Two spans relate through four signed offsets between their heads and
//! tails. Each offset is embedded with a sinusoid, the four embeddings are
//! concatenated in `(hh, th, ht, tt)` order, and a bias-free linear map
//! followed by ReLU fuses them into one `d_model` vector per span pair.

use crate::error::{Error, Result};
use crate::lexicon::FlatLattice;
use crate::numerics::Tensor;

/// The four pairwise offsets, each stored as a row-major `S x S` matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrices {
    n: usize,
    pub hh: Vec<i64>,
    pub ht: Vec<i64>,
    pub th: Vec<i64>,
    pub tt: Vec<i64>,
}

impl DistanceMatrices {
    /// Offsets for arbitrary `(head, tail)` positions.
    pub fn from_positions(positions: &[(i64, i64)]) -> Self {
        let n = positions.len();
        let mut dm = DistanceMatrices {
            n,
            hh: Vec::with_capacity(n * n),
            ht: Vec::with_capacity(n * n),
            th: Vec::with_capacity(n * n),
            tt: Vec::with_capacity(n * n),
        };
        for &(hi, ti) in positions {
            for &(hj, tj) in positions {
                dm.hh.push(hi - hj);
                dm.ht.push(hi - tj);
                dm.th.push(ti - hj);
                dm.tt.push(ti - tj);
            }
        }
        dm
    }

    pub fn n_spans(&self) -> usize {
        self.n
    }

    /// `(hh, ht, th, tt)` for the pair `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> (i64, i64, i64, i64) {
        let k = i * self.n + j;
        (self.hh[k], self.ht[k], self.th[k], self.tt[k])
    }

    /// Largest absolute offset over all four matrices.
    pub fn max_abs(&self) -> usize {
        [&self.hh, &self.ht, &self.th, &self.tt]
            .iter()
            .flat_map(|m| m.iter())
            .map(|d| d.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

pub fn distances(flat: &FlatLattice) -> DistanceMatrices {
    let positions: Vec<(i64, i64)> = flat
        .spans()
        .iter()
        .map(|s| (s.head as i64, s.tail as i64))
        .collect();
    DistanceMatrices::from_positions(&positions)
}

pub(crate) fn check_dim(d_model: usize) -> Result<()> {
    if d_model < 2 || !d_model.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "position encoding width must be even and at least 2, got {d_model}"
        )));
    }
    Ok(())
}

/// Sinusoidal embedding of a signed offset: even components are
/// `sin(d / 10000^(2k/d_model))`, odd components the matching cosine.
pub fn sinusoid(d: i64, d_model: usize) -> Result<Vec<f64>> {
    check_dim(d_model)?;
    let mut out = vec![0.0; d_model];
    fill_sinusoid(d, &mut out);
    Ok(out)
}

fn fill_sinusoid(d: i64, out: &mut [f64]) {
    let d_model = out.len() as f64;
    for k in 0..out.len() / 2 {
        let angle = d as f64 / 10000f64.powf(2.0 * k as f64 / d_model);
        out[2 * k] = angle.sin();
        out[2 * k + 1] = angle.cos();
    }
}

/// Sinusoids for every offset in `[-max_abs, max_abs]`, one row per offset.
/// Row `d + max_abs` holds offset `d`.
#[derive(Debug, Clone)]
pub struct SinusoidTable {
    d_model: usize,
    max_abs: usize,
    rows: Tensor,
}

impl SinusoidTable {
    pub fn new(d_model: usize, max_abs: usize) -> Result<Self> {
        check_dim(d_model)?;
        let mut table = SinusoidTable {
            d_model,
            max_abs: 0,
            rows: Tensor::zeros(1, d_model),
        };
        fill_sinusoid(0, table.rows.row_mut(0));
        table.extend_to(max_abs);
        Ok(table)
    }

    /// Grows the table so it covers `[-max_abs, max_abs]`.
    pub fn extend_to(&mut self, max_abs: usize) {
        if max_abs <= self.max_abs {
            return;
        }
        let mut rows = Tensor::zeros(2 * max_abs + 1, self.d_model);
        for d in -(max_abs as i64)..=(max_abs as i64) {
            let r = (d + max_abs as i64) as usize;
            if d.unsigned_abs() as usize <= self.max_abs {
                let old = (d + self.max_abs as i64) as usize;
                rows.row_mut(r).copy_from_slice(self.rows.row(old));
            } else {
                fill_sinusoid(d, rows.row_mut(r));
            }
        }
        self.rows = rows;
        self.max_abs = max_abs;
    }

    pub fn max_abs(&self) -> usize {
        self.max_abs
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn row_index(&self, d: i64) -> usize {
        debug_assert!(d.unsigned_abs() as usize <= self.max_abs);
        (d + self.max_abs as i64) as usize
    }

    pub fn get(&self, d: i64) -> &[f64] {
        self.rows.row(self.row_index(d))
    }

    /// The whole table as a `(2 * max_abs + 1) x d_model` matrix.
    pub fn as_tensor(&self) -> &Tensor {
        &self.rows
    }
}

/// Fused relative encoding: `S x S` vectors of width `d_model`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelPosEncoding {
    n: usize,
    d_model: usize,
    data: Vec<f64>,
}

impl RelPosEncoding {
    pub fn n_spans(&self) -> usize {
        self.n
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.d_model;
        &self.data[start..start + self.d_model]
    }

    /// Pairs flattened row-major into an `(S*S) x d_model` matrix.
    pub fn into_tensor(self) -> Tensor {
        Tensor::from_vec(self.n * self.n, self.d_model, self.data)
            .expect("encoding buffer has pair-major layout")
    }
}

/// Per-offset projections of the four sinusoid blocks through `w_r`.
///
/// `w_r` is `d_model x 4*d_model`; block `b` (columns `b*d_model ..`) maps
/// the `b`-th concatenated sinusoid. Because the sinusoid depends only on
/// the scalar offset, each block is applied once per distinct offset.
pub(crate) struct OffsetProjections {
    max_abs: usize,
    // one (2*max_abs+1) x d_model matrix per block, in concat order hh, th, ht, tt
    blocks: [Tensor; 4],
}

impl OffsetProjections {
    pub(crate) fn new(table: &SinusoidTable, w_r: &Tensor) -> Result<Self> {
        let d = table.d_model();
        if w_r.rows() != d || w_r.cols() != 4 * d {
            return Err(Error::ShapeMismatch {
                op: "fuse",
                left: vec![d, 4 * d],
                right: w_r.shape().to_vec(),
            });
        }
        let blocks = std::array::from_fn(|b| {
            let block = w_r.slice_cols(b * d, (b + 1) * d);
            table.as_tensor().matmul_bt(&block)
        });
        Ok(OffsetProjections {
            max_abs: table.max_abs(),
            blocks,
        })
    }

    #[inline]
    fn row(&self, block: usize, d: i64) -> &[f64] {
        self.blocks[block].row((d + self.max_abs as i64) as usize)
    }

    /// Writes `ReLU(sum of the four projections)` for one pair into `out`.
    #[inline]
    pub(crate) fn fuse_into(&self, hh: i64, ht: i64, th: i64, tt: i64, out: &mut [f64]) {
        let (a, b, c, e) = (
            self.row(0, hh),
            self.row(1, th),
            self.row(2, ht),
            self.row(3, tt),
        );
        for k in 0..out.len() {
            out[k] = (a[k] + b[k] + c[k] + e[k]).max(0.0);
        }
    }
}

/// `R[i][j] = ReLU(W_r (p_hh ⊕ p_th ⊕ p_ht ⊕ p_tt))` for every span pair.
pub fn fuse(dm: &DistanceMatrices, w_r: &Tensor) -> Result<RelPosEncoding> {
    let d_model = w_r.rows();
    check_dim(d_model)?;
    let table = SinusoidTable::new(d_model, dm.max_abs())?;
    let proj = OffsetProjections::new(&table, w_r)?;
    let n = dm.n_spans();
    let mut data = vec![0.0; n * n * d_model];
    for (k, out) in data.chunks_exact_mut(d_model).enumerate() {
        proj.fuse_into(dm.hh[k], dm.ht[k], dm.th[k], dm.tt[k], out);
    }
    Ok(RelPosEncoding { n, d_model, data })
}
