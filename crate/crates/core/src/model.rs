//! The data-generating process `y = A z + ε` and in-memory datasets.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decoder::SparseVector;
use crate::error::{Error, Result};
use crate::linalg::{norm, Matrix};
use crate::rng::RngStream;

/// Unit-norm tolerance for ground-truth atoms.
pub const UNIT_COLUMN_TOL: f64 = 1e-10;

/// Law of the support of `z`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportDist {
    /// Uniform over all size-`k` subsets of `[p]`.
    #[default]
    Uniform,
}

/// Ground-truth dictionary plus the code and noise distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct GroundTruthModel {
    dictionary: Matrix,
    k: usize,
    sigma_z: f64,
    normalize_codes: bool,
    noise_var: f64,
    support_dist: SupportDist,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dictionary: Matrix,
    k: usize,
    sigma_z: f64,
    normalize_codes: bool,
    noise_var: f64,
    #[serde(default)]
    support_dist: SupportDist,
}

impl TryFrom<RawModel> for GroundTruthModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let m = Self {
            dictionary: raw.dictionary,
            k: raw.k,
            sigma_z: raw.sigma_z,
            normalize_codes: raw.normalize_codes,
            noise_var: raw.noise_var,
            support_dist: raw.support_dist,
        };
        m.validate()?;
        Ok(m)
    }
}

impl GroundTruthModel {
    pub fn new(
        dictionary: Matrix,
        k: usize,
        sigma_z: f64,
        normalize_codes: bool,
        noise_var: f64,
    ) -> Result<Self> {
        let m = Self {
            dictionary,
            k,
            sigma_z,
            normalize_codes,
            noise_var,
            support_dist: SupportDist::Uniform,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dictionary.cols();
        if self.dictionary.rows() == 0 || p == 0 {
            return Err(Error::InvalidModel("dictionary must be non-empty".into()));
        }
        if self.k == 0 || self.k > p {
            return Err(Error::InvalidModel(format!(
                "sparsity k = {} must satisfy 1 <= k <= p = {p}",
                self.k
            )));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "noise variance must be finite and >= 0, got {}",
                self.noise_var
            )));
        }
        if !(self.sigma_z >= 0.0 && self.sigma_z.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "code scale must be finite and >= 0, got {}",
                self.sigma_z
            )));
        }
        if self.normalize_codes && self.sigma_z == 0.0 {
            return Err(Error::InvalidModel(
                "normalized codes need a positive code scale".into(),
            ));
        }
        self.dictionary
            .check_unit_columns(UNIT_COLUMN_TOL)
            .map_err(|e| Error::InvalidModel(format!("{e}")))
    }

    pub fn dictionary(&self) -> &Matrix {
        &self.dictionary
    }

    pub fn d(&self) -> usize {
        self.dictionary.rows()
    }

    pub fn p(&self) -> usize {
        self.dictionary.cols()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z
    }

    pub fn normalize_codes(&self) -> bool {
        self.normalize_codes
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn noise_std(&self) -> f64 {
        libm::sqrt(self.noise_var)
    }

    pub fn support_dist(&self) -> SupportDist {
        self.support_dist
    }

    pub fn with_sigma_z(&self, sigma_z: f64) -> Result<Self> {
        let mut m = self.clone();
        m.sigma_z = sigma_z;
        m.validate()?;
        Ok(m)
    }

    pub fn with_noise_var(&self, noise_var: f64) -> Result<Self> {
        let mut m = self.clone();
        m.noise_var = noise_var;
        m.validate()?;
        Ok(m)
    }

    pub fn with_dictionary(&self, dictionary: Matrix) -> Result<Self> {
        let mut m = self.clone();
        m.dictionary = dictionary;
        m.validate()?;
        Ok(m)
    }
}

/// One measurement with the latents that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub y: Vec<f64>,
    pub z_true: SparseVector,
    pub eps_true: Vec<f64>,
}

/// Draws a `k`-sparse code: uniform support, i.i.d. `N(0, σ_z²)` values in
/// increasing support order, rescaled to unit norm if the model asks for it.
pub fn sample_code(rng: &mut RngStream, model: &GroundTruthModel) -> SparseVector {
    let p = model.p();
    let k = model.k();
    let mut support = match model.support_dist() {
        SupportDist::Uniform => index::sample(rng, p, k).into_vec(),
    };
    support.sort_unstable();
    let mut values: Vec<f64> = (0..k)
        .map(|_| model.sigma_z() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    if model.normalize_codes() {
        let n = norm(&values);
        // σ_z > 0 is enforced for normalized codes; n = 0 has probability zero.
        if n > 0.0 {
            values.iter_mut().for_each(|v| *v /= n);
        }
    }
    SparseVector::new(p, support, values).expect("sampled code is a valid sparse vector")
}

/// Draws one sample: code, then `d` standard normals scaled by the noise
/// standard deviation (drawn even when the variance is zero, so that streams
/// stay aligned across noise levels), then `y = A z + ε`.
pub fn draw_sample(rng: &mut RngStream, model: &GroundTruthModel) -> Sample {
    let z_true = sample_code(rng, model);
    let sd = model.noise_std();
    let eps_true: Vec<f64> = (0..model.d())
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut y = z_true
        .synthesize(model.dictionary())
        .expect("code dimension matches the dictionary");
    for (yi, e) in y.iter_mut().zip(&eps_true) {
        *yi += e;
    }
    Sample {
        y,
        z_true,
        eps_true,
    }
}

/// Generated measurements plus a holdout set used for initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDataset")]
pub struct Dataset {
    pub(crate) model: GroundTruthModel,
    pub(crate) samples: Vec<Sample>,
    pub(crate) holdout: Vec<Sample>,
    pub(crate) seed: u64,
    pub(crate) stream: u64,
}

#[derive(Deserialize)]
struct RawDataset {
    model: GroundTruthModel,
    samples: Vec<Sample>,
    holdout: Vec<Sample>,
    seed: u64,
    stream: u64,
}

impl TryFrom<RawDataset> for Dataset {
    type Error = Error;

    fn try_from(raw: RawDataset) -> Result<Self> {
        Dataset::from_parts(raw.model, raw.samples, raw.holdout, raw.seed, raw.stream)
    }
}

/// Draws `n` samples followed by `n_holdout` holdout samples from one stream.
pub fn generate_dataset(
    rng: &mut RngStream,
    model: &GroundTruthModel,
    n: usize,
    n_holdout: usize,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset needs at least one sample".into()));
    }
    model.validate()?;
    let (seed, stream) = (rng.seed(), rng.stream());
    let samples = (0..n).map(|_| draw_sample(rng, model)).collect();
    let holdout = (0..n_holdout).map(|_| draw_sample(rng, model)).collect();
    Ok(Dataset {
        model: model.clone(),
        samples,
        holdout,
        seed,
        stream,
    })
}

impl Dataset {
    /// Reassembles a dataset from stored parts (used by file loaders).
    pub fn from_parts(
        model: GroundTruthModel,
        samples: Vec<Sample>,
        holdout: Vec<Sample>,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        model.validate()?;
        if samples.is_empty() {
            return Err(Error::InvalidModel("dataset has no samples".into()));
        }
        let (d, p) = (model.d(), model.p());
        for s in samples.iter().chain(&holdout) {
            if s.y.len() != d || s.eps_true.len() != d || s.z_true.dim() != p {
                return Err(Error::InvalidModel(
                    "sample dimensions disagree with the model".into(),
                ));
            }
        }
        Ok(Self {
            model,
            samples,
            holdout,
            seed,
            stream,
        })
    }

    pub fn model(&self) -> &GroundTruthModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn holdout_len(&self) -> usize {
        self.holdout.len()
    }

    /// Full samples including latents. Diagnostics only.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn holdout(&self) -> &[Sample] {
        &self.holdout
    }

    /// Measurement-only view for training code.
    pub fn observations(&self) -> Observations<'_> {
        Observations(&self.samples)
    }

    pub fn holdout_observations(&self) -> Observations<'_> {
        Observations(&self.holdout)
    }
}

/// Read-only view exposing only the measurements `y`.
#[derive(Debug, Clone, Copy)]
pub struct Observations<'a>(&'a [Sample]);

impl<'a> Observations<'a> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &'a [f64] {
        &self.0[i].y
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &'a [f64]> + 'a {
        self.0.iter().map(|s| s.y.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gaussian_matrix, singular_values};
    use alloc::vec;

    fn model(d: usize, p: usize, k: usize, normalize: bool, noise_var: f64) -> GroundTruthModel {
        let mut rng = RngStream::new(100, 0);
        let a = gaussian_matrix(&mut rng, d, p, true);
        GroundTruthModel::new(a, k, 1.0, normalize, noise_var).unwrap()
    }

    #[test]
    fn full_support_normalized_code_is_dense_unit() {
        let m = model(6, 5, 5, true, 0.0);
        let mut rng = RngStream::new(1, 1);
        let z = sample_code(&mut rng, &m);
        assert_eq!(z.support(), &[0, 1, 2, 3, 4]);
        assert!((z.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn normalized_codes_have_unit_norm() {
        let m = model(10, 20, 3, true, 0.1);
        let mut rng = RngStream::new(2, 1);
        for _ in 0..1000 {
            assert!((sample_code(&mut rng, &m).norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn support_frequencies_are_uniform() {
        // Per-index counts are Binomial(N, k/p).
        let m = model(10, 200, 5, false, 0.0);
        let mut rng = RngStream::new(3, 1);
        let draws = 100_000;
        let mut counts = [0usize; 200];
        for _ in 0..draws {
            for &i in sample_code(&mut rng, &m).support() {
                counts[i] += 1;
            }
        }
        let q = 5.0 / 200.0;
        let mean = draws as f64 * q;
        let sd = libm::sqrt(draws as f64 * q * (1.0 - q));
        let within_3sd = counts
            .iter()
            .filter(|&&c| (c as f64 - mean).abs() <= 3.0 * sd)
            .count();
        // P(|X - μ| > 3σ) ≈ 0.0027, so ~0.5 of 200 indices expected outside.
        assert!(within_3sd >= 197, "{within_3sd}");
        assert!(counts.iter().all(|&c| (c as f64 - mean).abs() <= 4.5 * sd));
    }

    #[test]
    fn noiseless_samples_are_exact() {
        let m = model(8, 12, 2, true, 0.0);
        let mut rng = RngStream::new(4, 0);
        let ds = generate_dataset(&mut rng, &m, 50, 5).unwrap();
        for s in ds.samples() {
            assert_eq!(s.y, s.z_true.synthesize(m.dictionary()).unwrap());
        }
    }

    #[test]
    fn latents_reproduce_measurements_exactly() {
        let m = model(8, 12, 2, true, 0.3);
        let mut rng = RngStream::new(5, 0);
        let ds = generate_dataset(&mut rng, &m, 50, 10).unwrap();
        for s in ds.samples().iter().chain(ds.holdout()) {
            let mut az = s.z_true.synthesize(m.dictionary()).unwrap();
            for (a, e) in az.iter_mut().zip(&s.eps_true) {
                *a += e;
            }
            assert_eq!(az, s.y);
        }
    }

    #[test]
    fn noise_energy_matches_variance() {
        let d = 100;
        let m = model(d, 200, 5, true, 1.0 / d as f64);
        let mut rng = RngStream::new(6, 0);
        let ds = generate_dataset(&mut rng, &m, 1000, 0).unwrap();
        let mean: f64 = ds
            .samples()
            .iter()
            .map(|s| crate::linalg::norm_sq(&s.eps_true))
            .sum::<f64>()
            / 1000.0;
        // ‖ε‖² ~ χ²_d / d: mean 1, sd of the average sqrt(2/d)/sqrt(1000).
        assert!((mean - 1.0).abs() <= 0.1, "{mean}");
    }

    #[test]
    fn second_moment_of_measurements() {
        let d = 30;
        let m = model(d, 40, 3, true, 0.5 / d as f64);
        let sv = singular_values(m.dictionary()).unwrap();
        let (smax2, smin2) = (sv[0] * sv[0], sv[sv.len() - 1] * sv[sv.len() - 1]);
        let mut rng = RngStream::new(7, 0);
        let ds = generate_dataset(&mut rng, &m, 20_000, 0).unwrap();
        let n = ds.len() as f64;
        let signal: f64 = ds
            .samples()
            .iter()
            .map(|s| crate::linalg::norm_sq(&s.z_true.synthesize(m.dictionary()).unwrap()))
            .sum::<f64>()
            / n;
        assert!(signal >= smin2 && signal <= smax2, "{smin2} {signal} {smax2}");
        let total: f64 = ds.samples().iter().map(|s| crate::linalg::norm_sq(&s.y)).sum::<f64>() / n;
        let expected = signal + d as f64 * m.noise_var();
        assert!((total - expected).abs() <= 0.02 * expected, "{total} vs {expected}");
    }

    #[test]
    fn regeneration_is_identical() {
        let m = model(8, 12, 2, true, 0.1);
        let a = generate_dataset(&mut RngStream::new(9, 2), &m, 30, 4).unwrap();
        let b = generate_dataset(&mut RngStream::new(9, 2), &m, 30, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed(), 9);
        assert_eq!(a.stream(), 2);
    }

    #[test]
    fn model_validation() {
        let a = Matrix::identity(3);
        assert!(GroundTruthModel::new(a.clone(), 4, 1.0, true, 0.0).is_err());
        assert!(GroundTruthModel::new(a.clone(), 1, 1.0, true, -1.0).is_err());
        assert!(GroundTruthModel::new(a.clone(), 1, 0.0, true, 0.0).is_err());
        assert!(GroundTruthModel::new(a.clone(), 1, 0.0, false, 0.0).is_ok());
        let b = Matrix::from_col_major(2, 1, vec![1.0, 1.0]).unwrap();
        assert!(GroundTruthModel::new(b, 1, 1.0, false, 0.0).is_err());
    }

    #[test]
    fn deserialization_revalidates() {
        let m = model(4, 3, 2, true, 0.1);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<GroundTruthModel>(&text).unwrap(), m);
        let bad = text.replace("\"k\":2", "\"k\":9");
        assert!(serde_json::from_str::<GroundTruthModel>(&bad).is_err());

        let ds = generate_dataset(&mut RngStream::new(1, 0), &m, 3, 1).unwrap();
        let text = serde_json::to_string(&ds).unwrap();
        assert_eq!(serde_json::from_str::<Dataset>(&text).unwrap(), ds);
    }
}
