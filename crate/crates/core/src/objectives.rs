//! Empirical reconstruction and masked losses, and the dictionary gradient
//! of a single sample's squared error with the code held fixed.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::decoder::{self, Mask, OmpOptions, SparseVector};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Omp,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    /// Mean of `per_sample`.
    pub total: f64,
    pub per_sample: Vec<f64>,
    pub decoder_used: DecoderKind,
}

impl LossReport {
    fn from_losses(per_sample: Vec<f64>, decoder_used: DecoderKind) -> Self {
        let total = if per_sample.is_empty() {
            0.0
        } else {
            per_sample.iter().sum::<f64>() / per_sample.len() as f64
        };
        Self {
            total,
            per_sample,
            decoder_used,
        }
    }
}

/// Rows on which a squared error is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum EvalRows<'a> {
    All,
    Subset(&'a [usize]),
}

/// `‖[y]_E − [B z]_E‖²`.
pub fn squared_error(y: &[f64], b: &Matrix, z: &SparseVector, rows: EvalRows<'_>) -> f64 {
    match rows {
        EvalRows::All => (0..b.rows()).map(|i| sq(y[i] - predict_row(b, z, i))).sum(),
        EvalRows::Subset(idx) => idx.iter().map(|&i| sq(y[i] - predict_row(b, z, i))).sum(),
    }
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

#[inline]
fn predict_row(b: &Matrix, z: &SparseVector, i: usize) -> f64 {
    z.iter().map(|(j, v)| b.get(i, j) * v).sum()
}

/// Mean over the batch of `min_{‖ẑ‖₀ ≤ k} ‖y − B ẑ‖²`, with `ẑ` from OMP or
/// the exhaustive decoder.
pub fn recon_loss(batch: &[&[f64]], b: &Matrix, k: usize, decoder: DecoderKind) -> Result<LossReport> {
    let mut losses = Vec::with_capacity(batch.len());
    for y in batch {
        let z = match decoder {
            DecoderKind::Omp => decoder::omp(y, b, k)?,
            DecoderKind::Exhaustive => decoder::exhaustive_decode(y, b, k)?,
        };
        losses.push(squared_error(y, b, &z, EvalRows::All));
    }
    Ok(LossReport::from_losses(losses, decoder))
}

/// Mean over the batch of the held-out error `‖[y]_{M^c} − [B ẑ]_{M^c}‖²`
/// where `ẑ = g_OMP([y]_M, P_M B, k)`.
pub fn masked_loss(batch: &[&[f64]], b: &Matrix, k: usize, mask: &Mask) -> Result<LossReport> {
    masked_loss_with(batch, b, k, mask, &OmpOptions::default())
}

pub fn masked_loss_with(
    batch: &[&[f64]],
    b: &Matrix,
    k: usize,
    mask: &Mask,
    opts: &OmpOptions,
) -> Result<LossReport> {
    if mask.is_full() {
        return Err(Error::contract("masked loss needs a non-empty held-out set"));
    }
    let held_out = mask.held_out();
    let mut losses = Vec::with_capacity(batch.len());
    for y in batch {
        let z = decoder::omp_masked_with(y, b, k, mask, opts)?;
        losses.push(squared_error(y, b, &z, EvalRows::Subset(&held_out)));
    }
    Ok(LossReport::from_losses(losses, DecoderKind::Omp))
}

/// Gradient of `‖[y]_E − [B z]_E‖²` with respect to `B`, `z` held constant:
/// `−2 ([y]_E − [B z]_E) zᵀ` on rows `E`, zero elsewhere.
pub fn loss_gradient(y: &[f64], b: &Matrix, z: &SparseVector, eval_rows: &[usize]) -> Result<Matrix> {
    if z.dim() != b.cols() {
        return Err(Error::DimensionMismatch {
            context: "gradient code",
            expected: b.cols(),
            found: z.dim(),
        });
    }
    if y.len() != b.rows() {
        return Err(Error::DimensionMismatch {
            context: "gradient measurement",
            expected: b.rows(),
            found: y.len(),
        });
    }
    if eval_rows.iter().any(|&i| i >= b.rows()) {
        return Err(Error::contract("evaluation row out of range"));
    }
    let mut g = Matrix::zeros(b.rows(), b.cols());
    accumulate_gradient(&mut g, y, b, z, EvalRows::Subset(eval_rows));
    if !g.is_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok(g)
}

/// Adds one sample's gradient into `grad` and returns its squared error.
/// Inputs are assumed dimension-checked.
pub(crate) fn accumulate_gradient(
    grad: &mut Matrix,
    y: &[f64],
    b: &Matrix,
    z: &SparseVector,
    rows: EvalRows<'_>,
) -> f64 {
    let mut loss = 0.0;
    let mut add_row = |grad: &mut Matrix, i: usize| {
        let r = y[i] - predict_row(b, z, i);
        loss += r * r;
        for (j, v) in z.iter() {
            let cell = grad.get(i, j) - 2.0 * r * v;
            grad.set(i, j, cell);
        }
    };
    match rows {
        EvalRows::All => (0..b.rows()).for_each(|i| add_row(grad, i)),
        EvalRows::Subset(idx) => idx.iter().for_each(|&i| add_row(grad, i)),
    }
    loss
}
