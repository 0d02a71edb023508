//! Batched Adam training of a dictionary under either the reconstruction
//! objective (baseline) or the masked objective, with column renormalization
//! after every step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decoder::{Mask, OmpOptions, OmpWorkspace, SparseVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::metrics::recovery_error;
use crate::model::{Dataset, Observations};
use crate::objectives::{accumulate_gradient, EvalRows};
use crate::rng::RngStream;

/// Stream id under which a run's randomness (shuffling, masks) is drawn.
pub const TRAIN_STREAM: u64 = 0x7472_6169_6e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Baseline,
    Masked,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Masked => "masked",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Normalized holdout samples.
    Samples,
    /// The ground truth followed by normalized holdout samples.
    Local,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::Samples => "samples",
            InitKind::Local => "local",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskScope {
    /// One mask per iteration, shared by the whole batch.
    #[default]
    PerBatch,
    /// An independent mask for every sample in the batch.
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub p_prime: usize,
    #[serde(default = "defaults::epochs")]
    pub epochs: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::lr")]
    pub lr: f64,
    #[serde(default = "defaults::beta1")]
    pub beta1: f64,
    #[serde(default = "defaults::beta2")]
    pub beta2: f64,
    #[serde(default = "defaults::adam_eps")]
    pub adam_eps: f64,
    /// Size of the observed set; `None` means `d − ⌊d/10⌋`.
    #[serde(default)]
    pub mask_size: Option<usize>,
    #[serde(default = "defaults::init")]
    pub init: InitKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::shuffle")]
    pub shuffle: bool,
    #[serde(default)]
    pub mask_scope: MaskScope,
    #[serde(default)]
    pub omp: OmpOptions,
}

mod defaults {
    use super::InitKind;

    pub fn epochs() -> usize {
        500
    }
    pub fn batch_size() -> usize {
        200
    }
    pub fn lr() -> f64 {
        1e-3
    }
    pub fn beta1() -> f64 {
        0.9
    }
    pub fn beta2() -> f64 {
        0.999
    }
    pub fn adam_eps() -> f64 {
        1e-8
    }
    pub fn init() -> InitKind {
        InitKind::Samples
    }
    pub fn shuffle() -> bool {
        true
    }
}

/// Default observed-set size `d − ⌊d/10⌋`.
pub fn default_mask_size(d: usize) -> usize {
    d - d / 10
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, k: usize, p_prime: usize) -> Self {
        Self {
            algorithm,
            k,
            p_prime,
            epochs: defaults::epochs(),
            batch_size: defaults::batch_size(),
            lr: defaults::lr(),
            beta1: defaults::beta1(),
            beta2: defaults::beta2(),
            adam_eps: defaults::adam_eps(),
            mask_size: None,
            init: defaults::init(),
            seed: 0,
            shuffle: defaults::shuffle(),
            mask_scope: MaskScope::default(),
            omp: OmpOptions::default(),
        }
    }

    pub fn resolved_mask_size(&self, d: usize) -> usize {
        self.mask_size.unwrap_or_else(|| default_mask_size(d))
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
        }
    }

    /// Checks the configuration against a dataset of dimension `d` with `n`
    /// training samples.
    pub fn validate(&self, d: usize, n: usize) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.k > self.p_prime {
            return bad(format!(
                "k = {} must satisfy 1 <= k <= p_prime = {}",
                self.k, self.p_prime
            ));
        }
        if self.k > d {
            return bad(format!("k = {} exceeds the dimension d = {d}", self.k));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return bad(format!(
                "batch_size = {} must satisfy 1 <= batch_size <= n = {n}",
                self.batch_size
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            return bad("Adam epsilon must be positive".into());
        }
        if self.algorithm == Algorithm::Masked {
            let m = self.resolved_mask_size(d);
            if m < self.k || m >= d {
                return bad(format!(
                    "mask size {m} must satisfy k = {} <= mask_size < d = {d}",
                    self.k
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Matrix,
    pub second_moment: Matrix,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            first_moment: Matrix::zeros(rows, cols),
            second_moment: Matrix::zeros(rows, cols),
            step_count: 0,
        }
    }

    /// One bias-corrected Adam step on `b`, without renormalization.
    pub fn update_raw(&mut self, grad: &Matrix, b: &mut Matrix, hp: &AdamParams) -> Result<()> {
        let shape = (b.rows(), b.cols());
        if (grad.rows(), grad.cols()) != shape || (self.first_moment.rows(), self.first_moment.cols()) != shape {
            return Err(Error::DimensionMismatch {
                context: "Adam update",
                expected: shape.0 * shape.1,
                found: grad.rows() * grad.cols(),
            });
        }
        if !grad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let c1 = 1.0 - libm::pow(hp.beta1, t);
        let c2 = 1.0 - libm::pow(hp.beta2, t);
        let m = self.first_moment.data_mut();
        let v = self.second_moment.data_mut();
        for (((bi, &g), mi), vi) in b.data_mut().iter_mut().zip(grad.as_col_major()).zip(m).zip(v) {
            *mi = hp.beta1 * *mi + (1.0 - hp.beta1) * g;
            *vi = hp.beta2 * *vi + (1.0 - hp.beta2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *bi -= hp.lr * m_hat / (libm::sqrt(v_hat) + hp.eps);
        }
        Ok(())
    }

    /// Adam step followed by projection of every column onto the unit sphere.
    /// The moments are left untouched by the projection.
    pub fn update(&mut self, grad: &Matrix, b: &mut Matrix, hp: &AdamParams) -> Result<()> {
        self.update_raw(grad, b, hp)?;
        if !b.is_finite() {
            return Err(Error::NonFinite("dictionary"));
        }
        linalg::normalize_columns_in_place(b)
    }
}

/// Functional form of [`AdamState::update`].
pub fn adam_step(
    state: &AdamState,
    grad: &Matrix,
    b: &Matrix,
    cfg: &TrainConfig,
) -> Result<(Matrix, AdamState)> {
    let mut state = state.clone();
    let mut b = b.clone();
    state.update(grad, &mut b, &cfg.adam())?;
    Ok((b, state))
}

/// Initial dictionary with `p_prime` unit-norm columns.
///
/// `Samples` uses the first `p_prime` holdout measurements, normalized.
/// `Local` uses the columns of `a_opt` followed by the first `p_prime − p`
/// normalized holdout measurements.
pub fn init_dictionary(
    init: InitKind,
    holdout: Observations<'_>,
    a_opt: Option<&Matrix>,
    p_prime: usize,
) -> Result<Matrix> {
    let (prefix, from_holdout): (Vec<&[f64]>, usize) = match init {
        InitKind::Samples => (Vec::new(), p_prime),
        InitKind::Local => {
            let a = a_opt.ok_or(Error::MissingGroundTruth)?;
            if a.cols() > p_prime {
                return Err(Error::InvalidConfig(format!(
                    "local initialization needs p_prime >= p = {}, got {p_prime}",
                    a.cols()
                )));
            }
            (a.columns().collect(), p_prime - a.cols())
        }
    };
    if holdout.len() < from_holdout {
        return Err(Error::InsufficientHoldout {
            needed: from_holdout,
            available: holdout.len(),
        });
    }
    if p_prime == 0 {
        return Err(Error::InvalidConfig("p_prime must be at least 1".into()));
    }
    let d = match (prefix.first(), holdout.iter().next()) {
        (Some(c), _) => c.len(),
        (None, Some(y)) => y.len(),
        (None, None) => return Err(Error::InvalidConfig("no initialization data".into())),
    };
    let mut cols: Vec<&[f64]> = prefix;
    cols.extend(holdout.iter().take(from_holdout));
    let mut b = Matrix::from_columns(d, &cols)?;
    let a_cols = p_prime - from_holdout;
    // Ground-truth columns are already unit-norm and are kept bit-exact.
    for j in a_cols..p_prime {
        let n = linalg::norm(b.col(j));
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateColumn { column: j });
        }
        b.col_mut(j).iter_mut().for_each(|v| *v /= n);
    }
    Ok(b)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistory {
    pub cosine: Vec<f64>,
    pub euclidean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub final_dictionary: Matrix,
    /// `d_R(A, B)` at initialization and after every epoch.
    pub error_history: ErrorHistory,
    /// Objective at initialization, then the mean training loss of each epoch.
    pub loss_history: Vec<f64>,
    pub config: TrainConfig,
}

impl RunResult {
    pub fn final_d_r_cosine(&self) -> f64 {
        *self.error_history.cosine.last().expect("history includes initialization")
    }

    pub fn final_d_r_euclidean(&self) -> f64 {
        *self.error_history.euclidean.last().expect("history includes initialization")
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().expect("history includes initialization")
    }
}

/// What the trainer exposes to an observer after each optimizer step.
pub struct StepEvent<'a> {
    pub epoch: usize,
    pub iteration: usize,
    /// Masks used in this iteration: none for the baseline, one per batch or
    /// one per sample for the masked objective.
    pub masks: &'a [Mask],
    /// Mean gradient over the batch, before the Adam update.
    pub gradient: &'a Matrix,
    /// Dictionary after the update and projection.
    pub dictionary: &'a Matrix,
}

/// Runs the configured algorithm on the training measurements of `dataset`.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<RunResult> {
    train_with_observer(dataset, cfg, |_| {})
}

/// [`train`] with a callback invoked after every optimizer step.
pub fn train_with_observer(
    dataset: &Dataset,
    cfg: &TrainConfig,
    observer: impl FnMut(&StepEvent<'_>),
) -> Result<RunResult> {
    let policy = match cfg.algorithm {
        Algorithm::Baseline => MaskPolicy::None,
        Algorithm::Masked => MaskPolicy::Random,
    };
    run(dataset, cfg, policy, observer)
}

/// Runs the masked code path with every coordinate observed and evaluated.
/// This reproduces the baseline run bit for bit and exists as an internal
/// consistency check of the two code paths.
pub fn train_masked_path_full_mask(dataset: &Dataset, cfg: &TrainConfig) -> Result<RunResult> {
    let mut cfg = cfg.clone();
    cfg.algorithm = Algorithm::Baseline;
    run(dataset, &cfg, MaskPolicy::Full, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MaskPolicy {
    None,
    Random,
    Full,
}

fn run(
    dataset: &Dataset,
    cfg: &TrainConfig,
    policy: MaskPolicy,
    mut observer: impl FnMut(&StepEvent<'_>),
) -> Result<RunResult> {
    let data = dataset.observations();
    let d = dataset.model().d();
    let n = data.len();
    cfg.validate(d, n)?;
    let a = dataset.model().dictionary();

    let mut b = init_dictionary(cfg.init, dataset.holdout_observations(), Some(a), cfg.p_prime)?;
    let mut adam = AdamState::new(d, cfg.p_prime);
    let hp = cfg.adam();
    let root = RngStream::new(cfg.seed, TRAIN_STREAM);
    let mut shuffle_rng = root.child(0);
    let mut mask_rng = root.child(1);
    let mut eval_rng = root.child(2);
    let mask_size = cfg.resolved_mask_size(d);

    let mut step = StepBuffers::new(d, cfg.p_prime);
    let mut errors = ErrorHistory::default();
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    let record = |errors: &mut ErrorHistory, b: &Matrix| -> Result<()> {
        let r = recovery_error(a, b)?;
        errors.cosine.push(r.d_r_cosine);
        errors.euclidean.push(r.d_r_euclidean);
        Ok(())
    };

    record(&mut errors, &b)?;
    let mut order: Vec<usize> = (0..n).collect();
    let initial_loss = {
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let masks = draw_masks(policy, cfg.mask_scope, &mut eval_rng, d, mask_size, chunk.len())?;
            total += step
                .batch(&data, chunk, &b, cfg, &masks, false)
                .map_err(|e| training_error(0, 0, e))?;
        }
        total / n as f64
    };
    losses.push(initial_loss);

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        for (iteration, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let ctx = |e| training_error(epoch, iteration, e);
            let masks = draw_masks(policy, cfg.mask_scope, &mut mask_rng, d, mask_size, chunk.len())
                .map_err(ctx)?;
            let loss = step.batch(&data, chunk, &b, cfg, &masks, true).map_err(ctx)?;
            if !loss.is_finite() {
                return Err(ctx(Error::NonFinite("training loss")));
            }
            epoch_loss += loss;
            adam.update(&step.grad, &mut b, &hp).map_err(ctx)?;
            observer(&StepEvent {
                epoch,
                iteration,
                masks: &masks,
                gradient: &step.grad,
                dictionary: &b,
            });
        }
        losses.push(epoch_loss / n as f64);
        record(&mut errors, &b).map_err(|e| training_error(epoch, 0, e))?;
    }

    Ok(RunResult {
        final_dictionary: b,
        error_history: errors,
        loss_history: losses,
        config: cfg.clone(),
    })
}

fn training_error(epoch: usize, iteration: usize, source: Error) -> Error {
    match source {
        e @ Error::Training { .. } => e,
        e => Error::Training {
            epoch,
            iteration,
            source: alloc::boxed::Box::new(e),
        },
    }
}

fn draw_masks(
    policy: MaskPolicy,
    scope: MaskScope,
    rng: &mut RngStream,
    d: usize,
    size: usize,
    batch: usize,
) -> Result<Vec<Mask>> {
    Ok(match (policy, scope) {
        (MaskPolicy::None, _) => Vec::new(),
        (MaskPolicy::Full, _) => vec![Mask::full(d)],
        (MaskPolicy::Random, MaskScope::PerBatch) => vec![Mask::random(rng, d, size)?],
        (MaskPolicy::Random, MaskScope::PerSample) => {
            (0..batch).map(|_| Mask::random(rng, d, size)).collect::<Result<_>>()?
        }
    })
}

/// Per-iteration scratch space reused across the run.
struct StepBuffers {
    grad: Matrix,
    restricted: Matrix,
    norms: Vec<f64>,
    y_obs: Vec<f64>,
    held_out: Vec<usize>,
    ws: OmpWorkspace,
}

impl StepBuffers {
    fn new(d: usize, p: usize) -> Self {
        Self {
            grad: Matrix::zeros(d, p),
            restricted: Matrix::zeros(0, p),
            norms: Vec::new(),
            y_obs: Vec::new(),
            held_out: Vec::new(),
            ws: OmpWorkspace::default(),
        }
    }

    /// Decodes every sample of the batch and returns the summed loss. With
    /// `with_grad`, leaves the mean gradient over the batch in `self.grad`.
    ///
    /// `masks` is empty (decode and evaluate on all rows), a single mask
    /// shared by the batch, or one mask per sample.
    fn batch(
        &mut self,
        data: &Observations<'_>,
        chunk: &[usize],
        b: &Matrix,
        cfg: &TrainConfig,
        masks: &[Mask],
        with_grad: bool,
    ) -> Result<f64> {
        if with_grad {
            self.grad.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let mut loss = 0.0;
        if masks.is_empty() {
            self.norms = column_norms_checked(b)?;
        }
        for (pos, &i) in chunk.iter().enumerate() {
            let y = data.get(i);
            let mask = match masks.len() {
                0 => None,
                1 => Some(&masks[0]),
                _ => Some(&masks[pos]),
            };
            let z = match mask {
                None => self.decode_full(y, b, cfg)?,
                Some(mask) => {
                    if pos == 0 || masks.len() > 1 {
                        self.prepare_mask(b, mask);
                    }
                    self.decode_masked(y, b, cfg, mask)?
                }
            };
            let rows = match mask {
                None => EvalRows::All,
                Some(m) if m.is_full() => EvalRows::Subset(m.observed()),
                Some(_) => EvalRows::Subset(&self.held_out),
            };
            if with_grad {
                loss += accumulate_gradient(&mut self.grad, y, b, &z, rows);
            } else {
                loss += crate::objectives::squared_error(y, b, &z, rows);
            }
        }
        if with_grad {
            let scale = 1.0 / chunk.len() as f64;
            self.grad.data_mut().iter_mut().for_each(|v| *v *= scale);
        }
        Ok(loss)
    }

    fn prepare_mask(&mut self, b: &Matrix, mask: &Mask) {
        if self.restricted.rows() != mask.len() {
            self.restricted = Matrix::zeros(mask.len(), b.cols());
        }
        b.select_rows_into(mask.observed(), &mut self.restricted);
        // Atoms vanishing on the observed rows are skipped by OMP.
        self.norms = self.restricted.column_norms();
        self.held_out = mask.held_out();
    }

    fn decode_full(&mut self, y: &[f64], b: &Matrix, cfg: &TrainConfig) -> Result<SparseVector> {
        self.ws.run(y, b, &self.norms, cfg.k, &cfg.omp)?;
        self.ws.code(b.cols(), y, b)
    }

    fn decode_masked(
        &mut self,
        y: &[f64],
        b: &Matrix,
        cfg: &TrainConfig,
        mask: &Mask,
    ) -> Result<SparseVector> {
        self.y_obs.clear();
        self.y_obs.extend(mask.observed().iter().map(|&i| y[i]));
        self.ws.run(&self.y_obs, &self.restricted, &self.norms, cfg.k, &cfg.omp)?;
        self.ws.code(b.cols(), &self.y_obs, &self.restricted)
    }
}

fn column_norms_checked(b: &Matrix) -> Result<Vec<f64>> {
    let norms = b.column_norms();
    match norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        Some(j) => Err(Error::DegenerateColumn { column: j }),
        None => Ok(norms),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use crate::model::{generate_dataset, GroundTruthModel};

    fn small_dataset(noise_var: f64, n: usize, holdout: usize) -> Dataset {
        let mut rng = RngStream::new(11, 0);
        let a = gaussian_matrix(&mut rng, 20, 10, true);
        let model = GroundTruthModel::new(a, 2, 1.0, false, noise_var).unwrap();
        generate_dataset(&mut rng, &model, n, holdout).unwrap()
    }

    #[test]
    fn two_step_adam_by_hand() {
        // Constant gradient g: m̂ = g and v̂ = g² at every step, so each step
        // moves by lr · g / (|g| + eps).
        let hp = AdamParams { lr: 0.1, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
        let mut b = Matrix::from_col_major(1, 1, vec![1.0]).unwrap();
        let g = Matrix::from_col_major(1, 1, vec![0.5]).unwrap();
        let mut st = AdamState::new(1, 1);
        st.update_raw(&g, &mut b, &hp).unwrap();
        let step = 0.1 * 0.5 / (0.5 + 1e-8);
        assert!((b.get(0, 0) - (1.0 - step)).abs() < 1e-15);
        assert!((st.first_moment.get(0, 0) - 0.05).abs() < 1e-15);
        assert!((st.second_moment.get(0, 0) - 0.00025).abs() < 1e-18);
        st.update_raw(&g, &mut b, &hp).unwrap();
        // m = 0.9·0.05 + 0.1·0.5 = 0.095, m̂ = 0.095 / 0.19 = 0.5.
        // v = 0.999·0.00025 + 0.001·0.25 = 0.00049975, v̂ = v / 0.001999 = 0.25.
        assert!((st.first_moment.get(0, 0) - 0.095).abs() < 1e-15);
        assert!((st.second_moment.get(0, 0) - 0.000_499_75).abs() < 1e-18);
        assert!((b.get(0, 0) - (1.0 - 2.0 * step)).abs() < 1e-14);
        assert_eq!(st.step_count, 2);
    }

    #[test]
    fn zero_gradient_keeps_unit_dictionary() {
        let mut rng = RngStream::new(1, 0);
        let b = gaussian_matrix(&mut rng, 5, 4, true);
        let cfg = TrainConfig::new(Algorithm::Baseline, 1, 4);
        let (b2, st) = adam_step(&AdamState::new(5, 4), &Matrix::zeros(5, 4), &b, &cfg).unwrap();
        assert_eq!(st.step_count, 1);
        for (x, y) in b.as_col_major().iter().zip(b2.as_col_major()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut st = AdamState::new(1, 1);
        let mut b = Matrix::from_col_major(1, 1, vec![1.0]).unwrap();
        let g = Matrix::from_col_major(1, 1, vec![0.0]).unwrap();
        let mut g = g;
        g.set(0, 0, f64::NAN);
        let hp = TrainConfig::new(Algorithm::Baseline, 1, 1).adam();
        assert_eq!(st.update(&g, &mut b, &hp), Err(Error::NonFinite("gradient")));
    }

    #[test]
    fn init_recipes() {
        let ds = small_dataset(0.01, 30, 5);
        let h = ds.holdout_observations();
        let b = init_dictionary(InitKind::Samples, h, None, 3).unwrap();
        for j in 0..3 {
            let y = h.get(j);
            let n = linalg::norm(y);
            for i in 0..20 {
                assert_eq!(b.get(i, j), y[i] / n);
            }
        }
        let a = ds.model().dictionary();
        let local = init_dictionary(InitKind::Local, h, Some(a), 12).unwrap();
        assert_eq!(&local.as_col_major()[..200], a.as_col_major());
        assert_eq!(recovery_error(a, &local).unwrap().d_r_cosine, 0.0);
        assert!(matches!(
            init_dictionary(InitKind::Samples, h, None, 6),
            Err(Error::InsufficientHoldout { needed: 6, available: 5 })
        ));
        assert_eq!(
            init_dictionary(InitKind::Local, h, None, 12),
            Err(Error::MissingGroundTruth)
        );
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(Algorithm::Masked, 2, 10);
        cfg.batch_size = 10;
        assert!(cfg.validate(20, 30).is_ok());
        assert_eq!(cfg.resolved_mask_size(20), 18);
        cfg.mask_size = Some(20);
        assert!(cfg.validate(20, 30).is_err());
        cfg.mask_size = Some(1);
        assert!(cfg.validate(20, 30).is_err());
        cfg.mask_size = None;
        cfg.batch_size = 31;
        assert!(cfg.validate(20, 30).is_err());
    }

    #[test]
    fn history_lengths_and_unit_columns() {
        let ds = small_dataset(0.01, 40, 10);
        let mut cfg = TrainConfig::new(Algorithm::Masked, 2, 10);
        cfg.epochs = 3;
        cfg.batch_size = 15;
        let mut steps = 0;
        let r = train_with_observer(&ds, &cfg, |ev| {
            steps += 1;
            for c in ev.dictionary.columns() {
                assert!((linalg::norm(c) - 1.0).abs() < 1e-10);
            }
            let m = &ev.masks[0];
            for &i in m.observed() {
                for j in 0..ev.gradient.cols() {
                    assert_eq!(ev.gradient.get(i, j), 0.0);
                }
            }
        })
        .unwrap();
        assert_eq!(steps, 3 * 3);
        assert_eq!(r.error_history.cosine.len(), 4);
        assert_eq!(r.error_history.euclidean.len(), 4);
        assert_eq!(r.loss_history.len(), 4);
    }

    #[test]
    fn nan_measurement_reports_epoch() {
        let mut ds = small_dataset(0.01, 20, 10);
        ds.samples[7].y[3] = f64::NAN;
        let mut cfg = TrainConfig::new(Algorithm::Baseline, 2, 10);
        cfg.epochs = 2;
        cfg.batch_size = 10;
        cfg.init = InitKind::Local;
        match train(&ds, &cfg) {
            Err(Error::Training { epoch, .. }) => assert_eq!(epoch, 0),
            other => panic!("expected a training error, got {other:?}"),
        }
    }
}
