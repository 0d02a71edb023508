//! Recovery error, mutual coherence, restricted-isometry estimates and
//! support-recovery diagnostics.

use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::decoder::{self, Mask, OmpOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{draw_sample, GroundTruthModel};
use crate::rng::RngStream;
use crate::subsets::{binomial, Combinations};

/// Best match in `B` for one ground-truth atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomMatch {
    pub atom: usize,
    pub column: usize,
    /// `+1` or `-1`.
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub d_r_euclidean: f64,
    pub d_r_cosine: f64,
    pub per_atom_best_match: Vec<AtomMatch>,
}

/// Column-wise recovery error of `b` against the ground truth `a`.
///
/// The Euclidean form averages `min_{j, c = ±1} ‖A_i − c B_j‖²` over the raw
/// columns. The cosine form averages `1 − max_j |cos(A_i, B_j)|`, evaluated
/// as `min_{j, c} ½‖Â_i − c B̂_j‖²` on normalized copies so that identical
/// directions give exactly zero. With unit-norm inputs the Euclidean value is
/// twice the cosine value. The best match minimizes the cosine form, ties
/// going to the lowest column index.
pub fn recovery_error(a: &Matrix, b: &Matrix) -> Result<RecoveryReport> {
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            context: "recovery error",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    if b.cols() == 0 {
        return Err(Error::contract("recovery error needs at least one learned atom"));
    }
    let a_hat = linalg::normalize_columns(a)?;
    let b_hat = linalg::normalize_columns(b)?;
    let p = a.cols();
    let mut euclid = 0.0;
    let mut cosine = 0.0;
    let mut matches = Vec::with_capacity(p);
    for i in 0..p {
        let (ai, ai_hat) = (a.col(i), a_hat.col(i));
        let mut best = AtomMatch { atom: i, column: 0, sign: 1 };
        let mut best_cos = f64::INFINITY;
        let mut best_dist = f64::INFINITY;
        for j in 0..b.cols() {
            let (bj, bj_hat) = (b.col(j), b_hat.col(j));
            let (mut plus, mut minus) = (0.0, 0.0);
            for (x, y) in ai.iter().zip(bj) {
                plus += (x - y) * (x - y);
                minus += (x + y) * (x + y);
            }
            best_dist = best_dist.min(plus).min(minus);
            let (mut plus, mut minus) = (0.0, 0.0);
            for (x, y) in ai_hat.iter().zip(bj_hat) {
                plus += (x - y) * (x - y);
                minus += (x + y) * (x + y);
            }
            let c = 0.5 * plus.min(minus);
            if c < best_cos {
                best_cos = c;
                best = AtomMatch {
                    atom: i,
                    column: j,
                    sign: if minus < plus { -1 } else { 1 },
                };
            }
        }
        euclid += best_dist;
        cosine += best_cos;
        matches.push(best);
    }
    let scale = if p == 0 { 0.0 } else { 1.0 / p as f64 };
    Ok(RecoveryReport {
        d_r_euclidean: euclid * scale,
        d_r_cosine: (cosine * scale).min(1.0),
        per_atom_best_match: matches,
    })
}

/// `max_{i≠j} |⟨A_i, A_j⟩| / (‖A_i‖ ‖A_j‖)`; zero for fewer than two columns.
///
/// Columns are normalized on the fly so that row-restricted dictionaries
/// `P_M B` can be passed directly.
pub fn mutual_coherence(a: &Matrix) -> Result<f64> {
    let norms = a.column_norms();
    if let Some(j) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::DegenerateColumn { column: j });
    }
    let g = a.gram();
    let mut mu: f64 = 0.0;
    for i in 0..a.cols() {
        for j in i + 1..a.cols() {
            mu = mu.max((g.get(i, j) / (norms[i] * norms[j])).abs());
        }
    }
    Ok(mu.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipMode {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub delta: f64,
    pub is_lower_bound: bool,
    pub supports_checked: u128,
}

/// Restricted isometry constant `δ_s`: the largest `max(λ_max − 1, 1 − λ_min)`
/// over the Gram matrices of size-`s` column subsets.
///
/// `Exact` enumerates every subset and fails if there are more than `budget`.
/// `Sampled` draws `budget` uniformly random subsets and reports a lower
/// bound, unless the budget covers every subset, in which case it enumerates
/// them and the value is exact.
pub fn rip_delta(
    a: &Matrix,
    s: usize,
    mode: RipMode,
    budget: u128,
    rng: &mut RngStream,
) -> Result<RipEstimate> {
    let p = a.cols();
    if s == 0 || s > p {
        return Err(Error::contract(alloc::format!(
            "RIP order s = {s} must lie in 1..={p}"
        )));
    }
    let total = binomial(p, s);
    let enumerate = match mode {
        RipMode::Exact if total > budget => {
            return Err(Error::BudgetExceeded {
                required: total,
                budget,
            })
        }
        RipMode::Exact => true,
        RipMode::Sampled => budget >= total,
    };
    let gram = a.gram();
    let mut sub = Matrix::zeros(s, s);
    let mut worst = |support: &[usize]| -> Result<f64> {
        for (x, &i) in support.iter().enumerate() {
            for (y, &j) in support.iter().enumerate() {
                sub.set(x, y, gram.get(i, j));
            }
        }
        let ev = linalg::symmetric_eigenvalues(&sub)?;
        Ok((ev[s - 1] - 1.0).max(1.0 - ev[0]))
    };

    let mut delta: f64 = 0.0;
    if enumerate {
        let mut combos = Combinations::new(p, s);
        while let Some(support) = combos.next_subset() {
            delta = delta.max(worst(support)?);
        }
        Ok(RipEstimate {
            delta,
            is_lower_bound: false,
            supports_checked: total,
        })
    } else {
        let draws = u64::try_from(budget).unwrap_or(u64::MAX);
        for _ in 0..draws {
            let mut support = index::sample(rng, p, s).into_vec();
            support.sort_unstable();
            delta = delta.max(worst(&support)?);
        }
        Ok(RipEstimate {
            delta,
            is_lower_bound: true,
            supports_checked: budget,
        })
    }
}

/// `2σ √k √(2(1+η) log p) / (1 − (2k−1) μ)`; infinite when `(2k−1) μ ≥ 1`.
pub fn gamma_threshold(sigma: f64, k: usize, p: usize, mu: f64, eta: f64) -> f64 {
    let denom = 1.0 - (2.0 * k as f64 - 1.0) * mu;
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    let log_p = libm::log(p as f64);
    2.0 * sigma * libm::sqrt(k as f64) * libm::sqrt(2.0 * (1.0 + eta) * log_p) / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRecovery {
    pub rate: f64,
    /// Minimum coefficient magnitude above which OMP provably recovers the
    /// support, evaluated at `η = 0`.
    pub gamma_threshold: f64,
    /// Mutual coherence of the (row-restricted) decoding dictionary.
    pub coherence: f64,
    /// Whether `μ < 1/(2k−1)`, the regime where the threshold is meaningful.
    pub incoherent: bool,
}

/// Fraction of fresh samples from `model` whose OMP support, decoded with
/// `b` (restricted to `mask` rows if given), equals the true support.
///
/// OMP runs exactly `k` steps so that early stopping never shortens the
/// support; an all-zero observation decodes to the empty support.
pub fn support_recovery_rate(
    model: &GroundTruthModel,
    b: &Matrix,
    mask: Option<&Mask>,
    trials: usize,
    rng: &mut RngStream,
) -> Result<SupportRecovery> {
    if b.rows() != model.d() {
        return Err(Error::DimensionMismatch {
            context: "support recovery dictionary",
            expected: model.d(),
            found: b.rows(),
        });
    }
    let k = model.k();
    let coherence = match mask {
        Some(m) => mutual_coherence(&b.select_rows(m.observed()))?,
        None => mutual_coherence(b)?,
    };
    let opts = OmpOptions {
        force_k_steps: true,
        ..OmpOptions::default()
    };
    let mut hits = 0usize;
    for _ in 0..trials {
        let sample = draw_sample(rng, model);
        let z = match mask {
            Some(m) => decoder::omp_masked_with(&sample.y, b, k, m, &opts)?,
            None => decoder::omp_with(&sample.y, b, k, &opts)?,
        };
        if z.support() == sample.z_true.support() {
            hits += 1;
        }
    }
    let rate = if trials == 0 {
        0.0
    } else {
        hits as f64 / trials as f64
    };
    Ok(SupportRecovery {
        rate,
        gamma_threshold: gamma_threshold(model.noise_std(), k, b.cols(), coherence, 0.0),
        coherence,
        incoherent: coherence < 1.0 / (2.0 * k as f64 - 1.0),
    })
}
