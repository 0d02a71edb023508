//! Constructive checks of the two theoretical claims.
//!
//! *Overfitting of the reconstruction loss.* An adversarial dictionary `B`
//! whose columns form an `ε`-net of every set `V_S = {A x : supp(x) = S,
//! ‖A x‖ ≤ R}` with `|S| ≤ 2` fits noisy samples better than the ground truth
//! under exhaustive `k`-sparse decoding, while staying at positive distance
//! from `A`.
//!
//! *Optimality under the masked loss.* With observed rows `M`, the held-out
//! prediction risk of OMP approaches that of a least-squares predictor given
//! the true support as the code scale `σ_z` grows, and the ridge predictor
//! (the posterior mean given the support) lower-bounds both.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{self, Mask, SparseVector, SupportSearch, DEFAULT_EXHAUSTIVE_BUDGET};
use crate::error::{Error, Result};
use crate::linalg::{self, dot, Matrix, PivotedQr};
use crate::metrics::{mutual_coherence, recovery_error};
use crate::model::{draw_sample, sample_code, GroundTruthModel};
use crate::rng::RngStream;
use crate::subsets::binomial;

/// Monte-Carlo estimate of the `(1 − 1/d)` quantile of `‖z‖`:
/// `Λ(z) = inf{t : P(‖z‖ ≥ t) ≤ 1/d}`. Exactly 1 for normalized codes.
pub fn lambda_quantile(model: &GroundTruthModel, trials: usize, rng: &mut RngStream) -> Result<f64> {
    let d = model.d();
    if trials < 100 * d {
        return Err(Error::contract(format!(
            "lambda quantile needs at least 100 d = {} trials, got {trials}",
            100 * d
        )));
    }
    if model.normalize_codes() {
        return Ok(1.0);
    }
    let mut norms: Vec<f64> = (0..trials).map(|_| sample_code(rng, model).norm()).collect();
    norms.sort_by(f64::total_cmp);
    let n = trials as f64;
    // Smallest order statistic with at most n/d draws strictly above it.
    let rank = libm::ceil(n * (1.0 - 1.0 / d as f64)) as usize;
    Ok(norms[rank.clamp(1, trials) - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetParams {
    /// Radius multiplier: `R = γ₁ · max(σ √d, Λ(z))`.
    #[serde(default = "NetParams::default_gamma1")]
    pub gamma1: f64,
    /// Resolution multiplier: `ε = γ₂ σ²`.
    #[serde(default = "NetParams::default_gamma2")]
    pub gamma2: f64,
    /// Upper bound on the number of net points before deduplication.
    #[serde(default = "NetParams::default_max_columns")]
    pub max_columns: usize,
}

impl NetParams {
    fn default_gamma1() -> f64 {
        3.0
    }
    fn default_gamma2() -> f64 {
        0.5
    }
    fn default_max_columns() -> usize {
        2_000_000
    }
}

impl Default for NetParams {
    fn default() -> Self {
        Self {
            gamma1: Self::default_gamma1(),
            gamma2: Self::default_gamma2(),
            max_columns: Self::default_max_columns(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub epsilon: f64,
    pub radius: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Grid spacing in coefficient space.
    pub spacing: f64,
    /// Every singleton and pair of atoms; singletons are covered by the grids
    /// of the pairs that contain them.
    pub supports: Vec<Vec<usize>>,
    /// Net points generated before deduplication.
    pub candidates: usize,
    pub columns: usize,
}

/// Builds a dictionary whose columns form an `ε`-net (`ε = γ₂ σ²`) of every
/// `V_S` with `|S| ≤ 2`, radius `R = γ₁ max(σ √d, Λ(z))`.
///
/// For each pair `S` the net is the set of centers of a square grid of
/// spacing `h ≤ ε/√2` in the coefficient plane, mapped through `A_S`, keeping
/// every cell that can meet `V_S`. A point of the plane lies within `h/√2` of
/// a center, and `‖A_S‖ ≤ √2` for unit columns, so the image is within
/// `ε/√2` of a column. `1/h` is an integer, so `±A_i` sit on cell corners and
/// no column lies closer to them than half a cell diagonal. Points falling in
/// the same cube of diagonal `ε/4` are merged, which keeps the covering
/// radius below `ε`.
pub fn build_adversarial_dictionary(
    a: &Matrix,
    sigma: f64,
    lambda_z: f64,
    params: &NetParams,
) -> Result<(Matrix, NetSpec)> {
    let (d, p) = (a.rows(), a.cols());
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("net needs sigma > 0, got {sigma}")));
    }
    if !(params.gamma1 > 0.0 && params.gamma2 > 0.0) || !(lambda_z >= 0.0) {
        return Err(Error::InvalidConfig("net constants must be positive".into()));
    }
    if p < 2 {
        return Err(Error::InvalidConfig("net construction needs at least two atoms".into()));
    }
    let epsilon = params.gamma2 * sigma * sigma;
    let radius = params.gamma1 * (sigma * libm::sqrt(d as f64)).max(lambda_z);
    if epsilon >= radius {
        return Err(Error::InvalidConfig(format!(
            "net resolution {epsilon} must be below the radius {radius}"
        )));
    }
    let h = 1.0 / libm::ceil(core::f64::consts::SQRT_2 / epsilon);

    let mut pairs = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            pairs.push(PairGrid::new(a, i, j, radius, h)?);
        }
    }
    let candidates: usize = pairs.iter().map(|g| g.count()).sum();
    if candidates > params.max_columns {
        return Err(Error::BudgetExceeded {
            required: candidates as u128,
            budget: params.max_columns as u128,
        });
    }

    let side = epsilon / (4.0 * libm::sqrt(d as f64));
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut data = Vec::new();
    let mut point = vec![0.0; d];
    let mut columns = 0;
    for g in &pairs {
        g.for_each(|c1, c2| {
            for (r, v) in point.iter_mut().enumerate() {
                *v = c1 * a.get(r, g.i) + c2 * a.get(r, g.j);
            }
            let key: Vec<i64> = point.iter().map(|v| libm::round(v / side) as i64).collect();
            if seen.insert(key) {
                data.extend_from_slice(&point);
                columns += 1;
            }
        });
    }

    let mut supports: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
    supports.extend(pairs.iter().map(|g| vec![g.i, g.j]));
    let b = Matrix::from_col_major(d, columns, data)?;
    Ok((
        b,
        NetSpec {
            epsilon,
            radius,
            gamma1: params.gamma1,
            gamma2: params.gamma2,
            spacing: h,
            supports,
            candidates,
            columns,
        },
    ))
}

/// Cell-centered grid over the coefficients of one pair of atoms.
struct PairGrid {
    i: usize,
    j: usize,
    gii: f64,
    gjj: f64,
    gij: f64,
    h: f64,
    reach_sq: f64,
    half_extent: i64,
}

impl PairGrid {
    fn new(a: &Matrix, i: usize, j: usize, radius: f64, h: f64) -> Result<Self> {
        let gii = linalg::norm_sq(a.col(i));
        let gjj = linalg::norm_sq(a.col(j));
        let gij = dot(a.col(i), a.col(j));
        // Eigenvalues of the 2×2 Gram matrix.
        let mean = 0.5 * (gii + gjj);
        let spread = libm::sqrt(0.25 * (gii - gjj) * (gii - gjj) + gij * gij);
        let (lmax, lmin) = (mean + spread, mean - spread);
        if lmin <= 1e-12 * lmax {
            return Err(Error::RankDeficient { rank: 1, cols: 2 });
        }
        let reach = radius + libm::sqrt(lmax) * h / core::f64::consts::SQRT_2;
        let half_extent = libm::ceil(reach / libm::sqrt(lmin) / h) as i64;
        Ok(Self {
            i,
            j,
            gii,
            gjj,
            gij,
            h,
            reach_sq: reach * reach,
            half_extent,
        })
    }

    fn for_each(&self, mut f: impl FnMut(f64, f64)) {
        let n = self.half_extent;
        for u in -n..n {
            let c1 = self.h * (u as f64 + 0.5);
            for w in -n..n {
                let c2 = self.h * (w as f64 + 0.5);
                let q = c1 * c1 * self.gii + 2.0 * c1 * c2 * self.gij + c2 * c2 * self.gjj;
                if q <= self.reach_sq {
                    f(c1, c2);
                }
            }
        }
    }

    fn count(&self) -> usize {
        let mut n = 0;
        self.for_each(|_, _| n += 1);
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetAudit {
    pub samples: usize,
    pub epsilon: f64,
    pub max_distance: f64,
    pub mean_distance: f64,
    pub covered: bool,
}

/// Draws random points of the sets `V_S` (uniform over the disk of radius
/// `R` in the span of a random pair, or a random multiple of a single atom
/// for every fourth draw) and records the distance to the nearest column.
pub fn net_cover_audit(
    a: &Matrix,
    b: &Matrix,
    spec: &NetSpec,
    samples: usize,
    rng: &mut RngStream,
) -> Result<NetAudit> {
    let (d, p) = (a.rows(), a.cols());
    if b.rows() != d {
        return Err(Error::DimensionMismatch {
            context: "net audit",
            expected: d,
            found: b.rows(),
        });
    }
    if p < 2 || b.cols() == 0 {
        return Err(Error::contract("net audit needs two atoms and a non-empty net"));
    }
    let r = spec.radius;
    let mut worst: f64 = 0.0;
    let mut total = 0.0;
    let mut v = vec![0.0; d];
    for s in 0..samples {
        let i = rng.random_range(0..p);
        if s % 4 == 3 {
            let t = r * (2.0 * rng.random::<f64>() - 1.0);
            for (x, ai) in v.iter_mut().zip(a.col(i)) {
                *x = t * ai;
            }
        } else {
            let mut j = rng.random_range(0..p - 1);
            if j >= i {
                j += 1;
            }
            let (q1, q2) = orthonormal_pair(a.col(i), a.col(j))?;
            let rho = r * libm::sqrt(rng.random::<f64>());
            let theta = core::f64::consts::TAU * rng.random::<f64>();
            let (c, sn) = (rho * libm::cos(theta), rho * libm::sin(theta));
            for (x, (u, w)) in v.iter_mut().zip(q1.iter().zip(&q2)) {
                *x = c * u + sn * w;
            }
        }
        let dist = b
            .columns()
            .map(|col| col.iter().zip(&v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let dist = libm::sqrt(dist);
        worst = worst.max(dist);
        total += dist;
    }
    Ok(NetAudit {
        samples,
        epsilon: spec.epsilon,
        max_distance: worst,
        mean_distance: if samples == 0 { 0.0 } else { total / samples as f64 },
        covered: worst <= spec.epsilon,
    })
}

fn orthonormal_pair(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nx = linalg::norm(x);
    let q1: Vec<f64> = x.iter().map(|v| v / nx).collect();
    let c = dot(&q1, y);
    let mut q2: Vec<f64> = y.iter().zip(&q1).map(|(v, q)| v - c * q).collect();
    let n2 = linalg::norm(&q2);
    if n2 <= 1e-12 * linalg::norm(y) {
        return Err(Error::RankDeficient { rank: 1, cols: 2 });
    }
    q2.iter_mut().for_each(|v| *v /= n2);
    Ok((q1, q2))
}

/// Empirical reconstruction losses of two dictionaries on shared samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub loss_a: f64,
    pub loss_b: f64,
    /// `loss_a − loss_b`.
    pub gap: f64,
    /// Standard error of the paired per-sample difference.
    pub std_err: f64,
    pub n_eval: usize,
}

/// Draws `n_eval` fresh samples from `model` and compares the exhaustive
/// `k`-sparse reconstruction loss of the model's dictionary against `b`.
pub fn overfit_gap(
    b: &Matrix,
    model: &GroundTruthModel,
    n_eval: usize,
    rng: &mut RngStream,
) -> Result<GapEstimate> {
    let a = model.dictionary();
    let k = model.k();
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "overfit gap dictionary",
            expected: a.rows(),
            found: b.rows(),
        });
    }
    if n_eval < 2 {
        return Err(Error::contract("overfit gap needs at least two samples"));
    }
    for q in [a.cols(), b.cols()] {
        if k > q {
            return Err(Error::contract(format!("k = {k} exceeds atom count {q}")));
        }
        let required = binomial(q, k);
        if required > DEFAULT_EXHAUSTIVE_BUDGET {
            return Err(Error::BudgetExceeded {
                required,
                budget: DEFAULT_EXHAUSTIVE_BUDGET,
            });
        }
    }
    let mut search_a = SupportSearch::new(a);
    let mut search_b = SupportSearch::new(b);
    let (mut sa, mut sb) = (0.0, 0.0);
    let mut diffs = Vec::with_capacity(n_eval);
    for _ in 0..n_eval {
        let s = draw_sample(rng, model);
        let (_, la) = search_a.best_support_with_residual(&s.y, k);
        let (_, lb) = search_b.best_support_with_residual(&s.y, k);
        sa += la;
        sb += lb;
        diffs.push(la - lb);
    }
    let n = n_eval as f64;
    let (gap, std_err) = mean_and_std_err(&diffs);
    Ok(GapEstimate {
        loss_a: sa / n,
        loss_b: sb / n,
        gap,
        std_err,
        n_eval,
    })
}

fn mean_and_std_err(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitReport {
    #[serde(rename = "L_emp_A")]
    pub l_emp_a: f64,
    #[serde(rename = "L_emp_B")]
    pub l_emp_b: f64,
    pub gap: f64,
    pub gap_std_err: f64,
    /// Euclidean recovery error of the raw net columns.
    #[serde(rename = "d_R_AB")]
    pub d_r_ab: f64,
    /// Cosine recovery error (direction only) of the net columns.
    pub d_r_ab_cosine: f64,
    pub lambda_z: f64,
    /// `σ_min²(A)`, reported alongside `p/d` for the conditioning requirement.
    pub sigma_min_sq: f64,
    pub p_over_d: f64,
    pub net: NetSpec,
    pub audit: NetAudit,
    pub n_eval: usize,
    /// `gap > 0` and `d_R(A, B) > 0`.
    pub directional_pass: bool,
    /// `gap` exceeds three standard errors.
    pub significant: bool,
}

/// Number of audit points drawn per constructed net.
pub const NET_AUDIT_SAMPLES: usize = 1000;

/// Builds the adversarial net for `model` and compares reconstruction losses
/// against the ground truth on `n_eval` fresh samples.
pub fn verify_theorem_overfit(
    model: &GroundTruthModel,
    net: &NetParams,
    n_eval: usize,
    rng: &mut RngStream,
) -> Result<OverfitReport> {
    let a = model.dictionary();
    let d = model.d();
    let lambda_z = lambda_quantile(model, 1000 * d, &mut rng.child(0))?;
    let (b, spec) = build_adversarial_dictionary(a, model.noise_std(), lambda_z, net)?;
    let audit = net_cover_audit(a, &b, &spec, NET_AUDIT_SAMPLES, &mut rng.child(1))?;
    let est = overfit_gap(&b, model, n_eval, &mut rng.child(2))?;
    let d_r = recovery_error(a, &b)?;
    let sv = linalg::singular_values(a)?;
    let smin = sv.get(a.cols().min(a.rows()).saturating_sub(1)).copied().unwrap_or(0.0);
    Ok(OverfitReport {
        l_emp_a: est.loss_a,
        l_emp_b: est.loss_b,
        gap: est.gap,
        gap_std_err: est.std_err,
        d_r_ab: d_r.d_r_euclidean,
        d_r_ab_cosine: d_r.d_r_cosine,
        lambda_z,
        sigma_min_sq: smin * smin,
        p_over_d: a.cols() as f64 / d as f64,
        net: spec,
        audit,
        n_eval,
        directional_pass: est.gap > 0.0 && d_r.d_r_euclidean > 0.0,
        significant: est.gap > 3.0 * est.std_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Ridge,
    LeastSquares,
}

/// Held-out predictor with access to the true support.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimator {
    kind: OracleKind,
    a: Matrix,
    mask: Mask,
    sigma_z: f64,
    sigma: f64,
    held_out: Vec<usize>,
}

impl OracleEstimator {
    pub fn new(kind: OracleKind, a: Matrix, mask: Mask, sigma_z: f64, sigma: f64) -> Result<Self> {
        if mask.dim() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "oracle mask",
                expected: a.rows(),
                found: mask.dim(),
            });
        }
        if kind == OracleKind::Ridge && !(sigma_z > 0.0) {
            return Err(Error::InvalidConfig("ridge oracle needs sigma_z > 0".into()));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise level must be finite and >= 0".into()));
        }
        let held_out = mask.held_out();
        Ok(Self {
            kind,
            a,
            mask,
            sigma_z,
            sigma,
            held_out,
        })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }
}

/// Predicts the held-out coordinates from the observed ones given the support
/// `s_star`, with `Λ = P_M A_{S*}`:
///
/// * least squares: `P_{M^c} A_{S*} Λ⁺ y_M`;
/// * ridge: `P_{M^c} A_{S*} (ΛᵀΛ + (σ²/σ_z²) I)⁻¹ Λᵀ y_M`, the posterior mean
///   of the held-out signal when `z_{S*} ~ N(0, σ_z² I)` and the noise is
///   `N(0, σ² I)`.
pub fn oracle_predict(est: &OracleEstimator, y_observed: &[f64], s_star: &[usize]) -> Result<Vec<f64>> {
    let m = est.mask.len();
    if y_observed.len() != m {
        return Err(Error::DimensionMismatch {
            context: "oracle observation",
            expected: m,
            found: y_observed.len(),
        });
    }
    if s_star.iter().any(|&j| j >= est.a.cols()) {
        return Err(Error::contract("support index out of range"));
    }
    let k = s_star.len();
    let lambda = Matrix::from_fn(m, k, |r, c| est.a.get(est.mask.observed()[r], s_star[c]))?;
    let w = match est.kind {
        OracleKind::LeastSquares => {
            let qr = PivotedQr::new(&lambda);
            if !qr.is_full_column_rank() {
                return Err(Error::RankDeficient {
                    rank: qr.rank(),
                    cols: k,
                });
            }
            qr.solve(y_observed)
        }
        OracleKind::Ridge => {
            let reg = (est.sigma * est.sigma) / (est.sigma_z * est.sigma_z);
            let mut g = lambda.gram().into_col_major();
            for i in 0..k {
                g[i * k + i] += reg;
            }
            let mut rhs = lambda.tr_mul_vec(y_observed)?;
            if linalg::cholesky_solve(&mut g, k, &mut rhs).is_none() {
                // Only reachable with σ = 0 and a singular Λ; fall back to the
                // minimum-norm least-squares fit.
                rhs = linalg::least_squares(&lambda, y_observed)?;
            }
            rhs
        }
    };
    Ok(est
        .held_out
        .iter()
        .map(|&r| s_star.iter().zip(&w).map(|(&j, wj)| est.a.get(r, j) * wj).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predictor {
    Omp,
    LsOracle,
    RidgeOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    fn of(xs: &[f64]) -> Self {
        let (mean, std_err) = mean_and_std_err(xs);
        Self { mean, std_err }
    }
}

/// Held-out prediction risks of the three predictors on shared draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskedRisks {
    pub omp: Estimate,
    pub ls_oracle: Estimate,
    pub ridge_oracle: Estimate,
    /// Paired `omp − ls_oracle`.
    pub omp_minus_ls: Estimate,
    /// Paired `ridge_oracle − ls_oracle`.
    pub ridge_minus_ls: Estimate,
    pub support_recovery_rate: f64,
    pub trials: usize,
}

/// Per-trial values, kept so that differences across settings can be paired.
struct RiskTrials {
    omp: Vec<f64>,
    ls: Vec<f64>,
    ridge: Vec<f64>,
    recovered: Vec<f64>,
}

impl RiskTrials {
    fn summary(&self) -> MaskedRisks {
        let paired = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a - b).collect() };
        MaskedRisks {
            omp: Estimate::of(&self.omp),
            ls_oracle: Estimate::of(&self.ls),
            ridge_oracle: Estimate::of(&self.ridge),
            omp_minus_ls: Estimate::of(&paired(&self.omp, &self.ls)),
            ridge_minus_ls: Estimate::of(&paired(&self.ridge, &self.ls)),
            support_recovery_rate: Estimate::of(&self.recovered).mean,
            trials: self.omp.len(),
        }
    }
}

/// Minimum trial count for masked-risk estimates.
pub const MIN_RISK_TRIALS: usize = 1000;

fn risk_trials(model: &GroundTruthModel, mask: &Mask, trials: usize, rng: &mut RngStream) -> Result<RiskTrials> {
    if trials < MIN_RISK_TRIALS {
        return Err(Error::contract(format!(
            "masked risk needs at least {MIN_RISK_TRIALS} trials, got {trials}"
        )));
    }
    let a = model.dictionary();
    if mask.dim() != a.rows() || mask.is_full() {
        return Err(Error::contract("mask must match the model and hold out a coordinate"));
    }
    let sigma = model.noise_std();
    let ls = OracleEstimator::new(OracleKind::LeastSquares, a.clone(), mask.clone(), model.sigma_z(), sigma)?;
    let ridge = if model.sigma_z() > 0.0 {
        Some(OracleEstimator::new(OracleKind::Ridge, a.clone(), mask.clone(), model.sigma_z(), sigma)?)
    } else {
        None
    };
    let held_out = mask.held_out();
    let mut out = RiskTrials {
        omp: Vec::with_capacity(trials),
        ls: Vec::with_capacity(trials),
        ridge: Vec::with_capacity(trials),
        recovered: Vec::with_capacity(trials),
    };
    let sq_err = |target: &[f64], pred: &[f64]| -> f64 {
        target.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum()
    };
    for _ in 0..trials {
        let s = draw_sample(rng, model);
        let signal = s.z_true.synthesize(a)?;
        let target: Vec<f64> = held_out.iter().map(|&r| signal[r]).collect();
        let y_m = mask.restrict(&s.y);
        let support = s.z_true.support();

        let z_hat = decoder::omp_masked(&s.y, a, model.k(), mask)?;
        let pred_omp: Vec<f64> = held_out.iter().map(|&r| predict_row(a, &z_hat, r)).collect();
        out.omp.push(sq_err(&target, &pred_omp));
        out.recovered.push(if z_hat.support() == support { 1.0 } else { 0.0 });

        let pred_ls = oracle_predict(&ls, &y_m, support)?;
        out.ls.push(sq_err(&target, &pred_ls));
        // With σ_z = 0 the posterior mean is exactly zero.
        let pred_ridge = match &ridge {
            Some(est) => oracle_predict(est, &y_m, support)?,
            None => vec![0.0; held_out.len()],
        };
        out.ridge.push(sq_err(&target, &pred_ridge));
    }
    Ok(out)
}

fn predict_row(a: &Matrix, z: &SparseVector, r: usize) -> f64 {
    z.iter().map(|(j, v)| a.get(r, j) * v).sum()
}

/// Monte-Carlo estimate of `E‖[A z]_{M^c} − ŷ‖²` for one predictor.
pub fn masked_risk(
    model: &GroundTruthModel,
    predictor: Predictor,
    mask: &Mask,
    trials: usize,
    rng: &mut RngStream,
) -> Result<Estimate> {
    let r = masked_risks(model, mask, trials, rng)?;
    Ok(match predictor {
        Predictor::Omp => r.omp,
        Predictor::LsOracle => r.ls_oracle,
        Predictor::RidgeOracle => r.ridge_oracle,
    })
}

/// All three predictor risks on shared draws.
pub fn masked_risks(model: &GroundTruthModel, mask: &Mask, trials: usize, rng: &mut RngStream) -> Result<MaskedRisks> {
    Ok(risk_trials(model, mask, trials, rng)?.summary())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingPoint {
    pub sigma_z: f64,
    pub risk_omp: f64,
    pub risk_ls_oracle: f64,
    pub risk_ridge_oracle: f64,
    /// `risk_omp − risk_ls_oracle`.
    pub gap: f64,
    pub gap_std_err: f64,
    pub ridge_minus_ls: f64,
    pub ridge_minus_ls_std_err: f64,
    pub support_recovery_rate: f64,
    /// Ridge risk does not exceed LS risk beyond two paired standard errors.
    pub ridge_dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingStep {
    pub from_sigma_z: f64,
    pub to_sigma_z: f64,
    /// Paired change of the gap between consecutive grid points.
    pub gap_change: f64,
    pub gap_change_std_err: f64,
    pub rate_change: f64,
    pub rate_change_std_err: f64,
    pub gap_non_increasing: bool,
    pub rate_non_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingReport {
    pub coherence: f64,
    pub coherence_bound: f64,
    /// `μ(P_M A) < 1/(2k−1)`.
    pub incoherent: bool,
    pub coherence_margin: f64,
    pub trials: usize,
    pub points: Vec<MaskingPoint>,
    pub steps: Vec<MaskingStep>,
    pub gap_non_increasing: bool,
    pub rate_non_decreasing: bool,
    pub ridge_dominates: bool,
    /// Last grid point's gap is below the first one's (always true for a
    /// single-point grid).
    pub gap_shrinks: bool,
    pub passed: bool,
}

/// Tolerance, in paired standard errors, for the directional assertions.
pub const MASKING_TOLERANCE_SE: f64 = 2.0;

/// Evaluates the three predictor risks along a grid of code scales.
///
/// Every grid point replays the same random stream, so the supports, the
/// standardized code values and the noise are shared across the grid and
/// across predictors; comparisons are made on paired differences. In strict
/// mode an observed dictionary `P_M A` outside the OMP guarantee regime is an
/// error; otherwise it is reported.
pub fn verify_theorem_masking(
    model_base: &GroundTruthModel,
    mask: &Mask,
    sigma_z_grid: &[f64],
    trials: usize,
    rng: &RngStream,
    strict: bool,
) -> Result<MaskingReport> {
    if sigma_z_grid.is_empty() {
        return Err(Error::InvalidConfig("sigma_z grid must be non-empty".into()));
    }
    let a = model_base.dictionary();
    if mask.dim() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "masking mask",
            expected: a.rows(),
            found: mask.dim(),
        });
    }
    let k = model_base.k();
    let coherence = mutual_coherence(&a.select_rows(mask.observed()))?;
    let bound = 1.0 / (2.0 * k as f64 - 1.0);
    let incoherent = coherence < bound;
    if strict && !incoherent {
        return Err(Error::Incoherence { coherence, bound });
    }

    let mut runs = Vec::with_capacity(sigma_z_grid.len());
    for &sz in sigma_z_grid {
        let model = model_base.with_sigma_z(sz)?;
        runs.push(risk_trials(&model, mask, trials, &mut rng.clone())?);
    }
    let tol = MASKING_TOLERANCE_SE;
    let points: Vec<MaskingPoint> = sigma_z_grid
        .iter()
        .zip(&runs)
        .map(|(&sz, t)| {
            let s = t.summary();
            MaskingPoint {
                sigma_z: sz,
                risk_omp: s.omp.mean,
                risk_ls_oracle: s.ls_oracle.mean,
                risk_ridge_oracle: s.ridge_oracle.mean,
                gap: s.omp_minus_ls.mean,
                gap_std_err: s.omp_minus_ls.std_err,
                ridge_minus_ls: s.ridge_minus_ls.mean,
                ridge_minus_ls_std_err: s.ridge_minus_ls.std_err,
                support_recovery_rate: s.support_recovery_rate,
                ridge_dominates: s.ridge_minus_ls.mean <= tol * s.ridge_minus_ls.std_err,
            }
        })
        .collect();

    let steps: Vec<MaskingStep> = runs
        .windows(2)
        .zip(sigma_z_grid.windows(2))
        .map(|(w, sz)| {
            let gap_diff: Vec<f64> = (0..trials)
                .map(|t| (w[1].omp[t] - w[1].ls[t]) - (w[0].omp[t] - w[0].ls[t]))
                .collect();
            let rate_diff: Vec<f64> = (0..trials).map(|t| w[1].recovered[t] - w[0].recovered[t]).collect();
            let g = Estimate::of(&gap_diff);
            let r = Estimate::of(&rate_diff);
            MaskingStep {
                from_sigma_z: sz[0],
                to_sigma_z: sz[1],
                gap_change: g.mean,
                gap_change_std_err: g.std_err,
                rate_change: r.mean,
                rate_change_std_err: r.std_err,
                gap_non_increasing: g.mean <= tol * g.std_err,
                rate_non_decreasing: r.mean >= -tol * r.std_err,
            }
        })
        .collect();

    let gap_non_increasing = steps.iter().all(|s| s.gap_non_increasing);
    let rate_non_decreasing = steps.iter().all(|s| s.rate_non_decreasing);
    let ridge_dominates = points.iter().all(|p| p.ridge_dominates);
    let gap_shrinks = points.len() < 2 || points[points.len() - 1].gap < points[0].gap;
    Ok(MaskingReport {
        coherence,
        coherence_bound: bound,
        incoherent,
        coherence_margin: bound - coherence,
        trials,
        passed: gap_non_increasing && rate_non_decreasing && ridge_dominates && gap_shrinks,
        points,
        steps,
        gap_non_increasing,
        rate_non_decreasing,
        ridge_dominates,
        gap_shrinks,
    })
}

/// Draws a mask whose observed rows keep `P_M A` within the OMP guarantee
/// regime, trying up to `attempts` random masks. Returns the first success
/// or the least coherent mask seen.
pub fn incoherent_mask(
    a: &Matrix,
    k: usize,
    size: usize,
    attempts: usize,
    rng: &mut RngStream,
) -> Result<(Mask, f64)> {
    let bound = 1.0 / (2.0 * k as f64 - 1.0);
    let mut best: Option<(Mask, f64)> = None;
    for _ in 0..attempts.max(1) {
        let m = Mask::random(rng, a.rows(), size)?;
        let mu = mutual_coherence(&a.select_rows(m.observed()))?;
        let better = best.as_ref().is_none_or(|(_, b)| mu < *b);
        if better {
            best = Some((m, mu));
        }
        if mu < bound {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}
