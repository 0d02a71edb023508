//! JSON configuration files. Every struct rejects unknown keys.

use std::path::Path;

use maskdict::linalg::{gaussian_matrix, orthonormal_matrix};
use maskdict::trainer::{Algorithm, InitKind, MaskScope};
use maskdict::verify::NetParams;
use maskdict::{GroundTruthModel, OmpOptions, RngStream, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    })
}

/// How the ground-truth dictionary is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    /// I.i.d. Gaussian entries, columns normalized.
    #[default]
    Gaussian,
    /// Orthonormal columns (needs `p ≤ d`).
    Orthonormal,
}

impl DictionaryKind {
    pub fn draw(self, rng: &mut RngStream, d: usize, p: usize) -> CliResult<maskdict::Matrix> {
        if d == 0 || p == 0 {
            return Err(CliError::config("dictionary dimensions must be positive"));
        }
        match self {
            DictionaryKind::Gaussian => Ok(gaussian_matrix(rng, d, p, true)),
            DictionaryKind::Orthonormal => {
                if p > d {
                    return Err(CliError::config(format!(
                        "an orthonormal dictionary needs p <= d, got p = {p}, d = {d}"
                    )));
                }
                Ok(orthonormal_matrix(rng, d, p)?)
            }
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d: usize,
    pub p: usize,
    pub k: usize,
    pub noise_var: f64,
    #[serde(default = "one")]
    pub sigma_z: f64,
    #[serde(default = "yes")]
    pub normalize_codes: bool,
    #[serde(default)]
    pub dictionary: DictionaryKind,
}

impl ModelConfig {
    /// Draws the dictionary from `rng` and validates the model.
    pub fn build(&self, rng: &mut RngStream) -> CliResult<GroundTruthModel> {
        if self.k == 0 || self.k > self.p {
            return Err(CliError::config(format!(
                "k = {} must satisfy 1 <= k <= p = {}",
                self.k, self.p
            )));
        }
        let a = self.dictionary.draw(rng, self.d, self.p)?;
        Ok(GroundTruthModel::new(
            a,
            self.k,
            self.sigma_z,
            self.normalize_codes,
            self.noise_var,
        )?)
    }
}

/// Stream ids under the user seed for `gen`.
pub const GEN_DICTIONARY_STREAM: u64 = 0x6469_6374;
pub const GEN_DATA_STREAM: u64 = 0x6461_7461;

/// Input of `maskdict gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub model: ModelConfig,
    pub n: usize,
    pub n_holdout: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Axis: `p′`, everything else fixed.
    ScaleOverrealization,
    /// Axis: `d`, with `p = 2d`, `k = max(1, ⌊d/20⌋)`, `p′ = 2p`, noise
    /// variance `1/d`.
    ScaleAll,
    /// Axis: noise standard deviation; `p′` comes from `train.p_prime`.
    NoiseSweep,
    /// Axis meaning given by `axis_kind`.
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::ScaleOverrealization => "scale_overrealization",
            ExperimentKind::ScaleAll => "scale_all",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    PPrime,
    D,
    NoiseStd,
    NoiseVar,
    MaskSize,
}

/// Base model of a sweep. Fields derived from the axis must be left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
    #[serde(default = "one")]
    pub sigma_z: f64,
    #[serde(default = "yes")]
    pub normalize_codes: bool,
}

/// Training settings applied to every cell of a sweep.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_prime: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adam_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_scope: Option<MaskScope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omp: Option<OmpOptions>,
}

impl TrainOverrides {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    cfg.$f = v;
                }
            )*};
        }
        set!(epochs, batch_size, lr, beta1, beta2, adam_eps, shuffle, mask_scope, omp);
        if self.mask_size.is_some() {
            cfg.mask_size = self.mask_size;
        }
    }
}

fn default_dictionary() -> DictionaryKind {
    DictionaryKind::Gaussian
}

/// Input of `maskdict sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_kind: Option<AxisKind>,
    pub axis: Vec<f64>,
    #[serde(default)]
    pub model: BaseModel,
    #[serde(default = "default_dictionary")]
    pub dictionary: DictionaryKind,
    pub n: usize,
    pub algorithms: Vec<Algorithm>,
    pub inits: Vec<InitKind>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub train: TrainOverrides,
    /// Write measured wall times; when off the column holds 0 and the CSV is
    /// byte-reproducible.
    #[serde(default = "yes")]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// The axis meaning after resolving the experiment tag.
    pub fn resolved_axis(&self) -> CliResult<AxisKind> {
        let fixed = match self.experiment {
            ExperimentKind::ScaleOverrealization => Some(AxisKind::PPrime),
            ExperimentKind::ScaleAll => Some(AxisKind::D),
            ExperimentKind::NoiseSweep => Some(AxisKind::NoiseStd),
            ExperimentKind::Custom => None,
        };
        match (fixed, self.axis_kind) {
            (Some(f), None) => Ok(f),
            (Some(f), Some(given)) if f == given => Ok(f),
            (Some(f), Some(given)) => Err(CliError::config(format!(
                "experiment {} sweeps {f:?}, not {given:?}",
                self.experiment.as_str()
            ))),
            (None, Some(AxisKind::D)) => Err(CliError::config(
                "a dimension axis is only available through the scale_all experiment",
            )),
            (None, Some(given)) => Ok(given),
            (None, None) => Err(CliError::config("custom experiments need axis_kind")),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let axis = self.resolved_axis()?;
        if self.axis.is_empty() {
            return Err(CliError::config("sweep axis must be non-empty"));
        }
        if self.algorithms.is_empty() || self.inits.is_empty() || self.seeds.is_empty() {
            return Err(CliError::config("algorithms, inits and seeds must be non-empty"));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::config("seeds must be distinct"));
        }
        if has_duplicates(&self.algorithms) || has_duplicates(&self.inits) {
            return Err(CliError::config("algorithms and inits must not repeat"));
        }
        if self.axis.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("axis values must be finite"));
        }
        let integral = matches!(axis, AxisKind::PPrime | AxisKind::D | AxisKind::MaskSize);
        if integral && self.axis.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            return Err(CliError::config("axis values must be positive integers"));
        }
        if matches!(axis, AxisKind::NoiseStd | AxisKind::NoiseVar) && self.axis.iter().any(|&v| v < 0.0) {
            return Err(CliError::config("noise axis values must be >= 0"));
        }
        let m = &self.model;
        let need = |name: &str, present: bool, wanted: bool| -> CliResult<()> {
            match (present, wanted) {
                (false, true) => Err(CliError::config(format!("model.{name} is required"))),
                (true, false) => Err(CliError::config(format!(
                    "model.{name} is derived from the {axis:?} axis and must be omitted"
                ))),
                _ => Ok(()),
            }
        };
        let d_axis = axis == AxisKind::D;
        need("d", m.d.is_some(), !d_axis)?;
        need("p", m.p.is_some(), !d_axis)?;
        need("k", m.k.is_some(), !d_axis)?;
        need(
            "noise_var",
            m.noise_var.is_some(),
            !matches!(axis, AxisKind::D | AxisKind::NoiseStd | AxisKind::NoiseVar),
        )?;
        let p_prime_fixed = !matches!(axis, AxisKind::PPrime | AxisKind::D);
        match (self.train.p_prime.is_some(), p_prime_fixed) {
            (false, true) => return Err(CliError::config("train.p_prime is required")),
            (true, false) => {
                return Err(CliError::config(
                    "train.p_prime is set by the sweep axis and must be omitted",
                ))
            }
            _ => {}
        }
        if axis == AxisKind::MaskSize && self.train.mask_size.is_some() {
            return Err(CliError::config("train.mask_size is set by the sweep axis"));
        }
        if self.n == 0 {
            return Err(CliError::config("n must be positive"));
        }
        Ok(())
    }
}

fn has_duplicates<T: PartialEq>(xs: &[T]) -> bool {
    xs.iter().enumerate().any(|(i, x)| xs[..i].contains(x))
}

/// Named sweep presets. Reduced presets run on a laptop in minutes; the
/// paper-scale versions take hours.
pub fn preset(name: &str, paper_scale: bool) -> CliResult<ExperimentConfig> {
    let both_algs = vec![Algorithm::Baseline, Algorithm::Masked];
    let both_inits = vec![InitKind::Samples, InitKind::Local];
    let seeds: Vec<u64> = (0..5).collect();
    let (d, p, k, n, epochs) = if paper_scale {
        (100usize, 200usize, 5usize, 1000usize, 500usize)
    } else {
        (50, 100, 3, 500, 100)
    };
    let train = TrainOverrides {
        epochs: Some(epochs),
        ..TrainOverrides::default()
    };
    let base = |kind, axis: Vec<f64>| ExperimentConfig {
        experiment: kind,
        axis_kind: None,
        axis,
        model: BaseModel {
            d: Some(d),
            p: Some(p),
            k: Some(k),
            noise_var: Some(1.0 / d as f64),
            sigma_z: 1.0,
            normalize_codes: true,
        },
        dictionary: DictionaryKind::Gaussian,
        n,
        algorithms: both_algs.clone(),
        inits: both_inits.clone(),
        seeds: seeds.clone(),
        master_seed: 0,
        train: train.clone(),
        record_timing: true,
    };
    let cfg = match name {
        "scale_overrealization" => {
            let axis = if paper_scale {
                vec![200.0, 400.0, 600.0, 800.0, 1000.0]
            } else {
                vec![100.0, 200.0, 400.0]
            };
            base(ExperimentKind::ScaleOverrealization, axis)
        }
        "scale_all" => {
            let axis = if paper_scale {
                vec![100.0, 150.0, 200.0, 250.0]
            } else {
                vec![40.0, 60.0, 80.0]
            };
            let mut c = base(ExperimentKind::ScaleAll, axis);
            c.model = BaseModel {
                sigma_z: 1.0,
                normalize_codes: true,
                ..BaseModel::default()
            };
            c
        }
        "noise_sweep" => {
            // Standard deviations evenly spaced from 1/d to 1/√d.
            let (lo, hi) = (1.0 / d as f64, 1.0 / (d as f64).sqrt());
            let axis = if paper_scale {
                vec![0.01, 0.0325, 0.055, 0.0775, 0.1]
            } else {
                (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
            };
            let mut c = base(ExperimentKind::NoiseSweep, axis);
            c.model.noise_var = None;
            c.train.p_prime = Some(if paper_scale { 1000 } else { 400 });
            c
        }
        other => {
            return Err(CliError::config(format!(
                "unknown preset {other:?} (expected scale_overrealization, scale_all or noise_sweep)"
            )))
        }
    };
    Ok(cfg)
}

/// Parameters of `maskdict verify overfit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverfitConfig {
    #[serde(default = "OverfitConfig::default_model")]
    pub model: ModelConfig,
    #[serde(default = "OverfitConfig::default_n_eval")]
    pub n_eval: usize,
    #[serde(default)]
    pub net: NetParams,
    #[serde(default)]
    pub seed: u64,
}

impl OverfitConfig {
    fn default_model() -> ModelConfig {
        ModelConfig {
            d: 8,
            p: 4,
            k: 1,
            noise_var: 0.05,
            sigma_z: 1.0,
            normalize_codes: true,
            dictionary: DictionaryKind::Gaussian,
        }
    }

    fn default_n_eval() -> usize {
        2000
    }

    /// Desk-scale limits: the net grows like `p² (R/ε)²`.
    pub fn validate(&self) -> CliResult<()> {
        let m = &self.model;
        if m.k != 1 {
            return Err(CliError::config(
                "the adversarial net covers supports of size <= 2, so k must be 1",
            ));
        }
        if m.d > 32 || m.p > 16 || m.p < 2 {
            return Err(CliError::config("overfit verification needs 2 <= p <= 16 and d <= 32"));
        }
        if !(m.noise_var > 0.0) {
            return Err(CliError::config("overfit verification needs noise_var > 0"));
        }
        if self.n_eval < 2 || self.n_eval > 1_000_000 {
            return Err(CliError::config("n_eval must lie in 2..=1000000"));
        }
        Ok(())
    }
}

impl Default for OverfitConfig {
    fn default() -> Self {
        Self {
            model: Self::default_model(),
            n_eval: Self::default_n_eval(),
            net: NetParams::default(),
            seed: 0,
        }
    }
}

/// Parameters of `maskdict verify masking`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskingConfig {
    #[serde(default = "MaskingConfig::default_model")]
    pub model: ModelConfig,
    #[serde(default = "MaskingConfig::default_mask_size")]
    pub mask_size: usize,
    #[serde(default = "MaskingConfig::default_grid")]
    pub sigma_z_grid: Vec<f64>,
    #[serde(default = "MaskingConfig::default_trials")]
    pub trials: usize,
    /// Random masks tried when looking for an incoherent observed set.
    #[serde(default = "MaskingConfig::default_attempts")]
    pub mask_attempts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl MaskingConfig {
    fn default_model() -> ModelConfig {
        ModelConfig {
            d: 60,
            p: 30,
            k: 3,
            noise_var: 1.0 / 60.0,
            sigma_z: 1.0,
            normalize_codes: false,
            dictionary: DictionaryKind::Orthonormal,
        }
    }

    fn default_mask_size() -> usize {
        54
    }

    fn default_grid() -> Vec<f64> {
        vec![1.0, 4.0, 16.0, 64.0]
    }

    fn default_trials() -> usize {
        5000
    }

    fn default_attempts() -> usize {
        200
    }

    pub fn validate(&self) -> CliResult<()> {
        let m = &self.model;
        if m.d > 1000 || m.p > 1000 {
            return Err(CliError::config("masking verification is limited to d, p <= 1000"));
        }
        if self.mask_size < m.k || self.mask_size >= m.d {
            return Err(CliError::config(format!(
                "mask_size = {} must satisfy k <= mask_size < d",
                self.mask_size
            )));
        }
        if self.trials > 1_000_000 {
            return Err(CliError::config("trials must not exceed 1000000"));
        }
        if self.sigma_z_grid.is_empty() || self.sigma_z_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(CliError::config("sigma_z_grid must be non-empty and positive"));
        }
        if self.sigma_z_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config("sigma_z_grid must be strictly increasing"));
        }
        if self.mask_attempts == 0 {
            return Err(CliError::config("mask_attempts must be positive"));
        }
        Ok(())
    }
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self {
            model: Self::default_model(),
            mask_size: Self::default_mask_size(),
            sigma_z_grid: Self::default_grid(),
            trials: Self::default_trials(),
            mask_attempts: Self::default_attempts(),
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in ["scale_overrealization", "scale_all", "noise_sweep"] {
            for paper in [false, true] {
                preset(name, paper).unwrap().validate().unwrap();
            }
        }
        assert!(preset("nope", false).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"experiment":"scale_overrealization","axis":[10],"n":20,
            "model":{"d":5,"p":6,"k":1,"noise_var":0.1},
            "algorithms":["baseline"],"inits":["samples"],"seeds":[0],"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(text).is_err());
        let ok = text.replace(r#","bogus":1"#, "");
        serde_json::from_str::<ExperimentConfig>(&ok).unwrap().validate().unwrap();
    }

    #[test]
    fn derived_fields_must_be_omitted() {
        let mut c = preset("scale_all", false).unwrap();
        c.model.p = Some(10);
        assert!(c.validate().is_err());
        let mut c = preset("noise_sweep", false).unwrap();
        c.model.noise_var = Some(0.1);
        assert!(c.validate().is_err());
        let mut c = preset("scale_overrealization", false).unwrap();
        c.train.p_prime = Some(10);
        assert!(c.validate().is_err());
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let mut c = preset("scale_overrealization", false).unwrap();
        c.seeds = vec![1, 2, 1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn reduced_noise_axis_spans_one_over_d_to_one_over_root_d() {
        let c = preset("noise_sweep", false).unwrap();
        assert!((c.axis[0] - 0.02).abs() < 1e-15);
        assert!((c.axis[4] - 1.0 / 50f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = TrainConfig::new(Algorithm::Masked, 2, 10);
        TrainOverrides {
            epochs: Some(3),
            mask_size: Some(7),
            ..TrainOverrides::default()
        }
        .apply(&mut cfg);
        assert_eq!((cfg.epochs, cfg.mask_size), (3, Some(7)));
    }

    #[test]
    fn verify_guards() {
        OverfitConfig::default().validate().unwrap();
        MaskingConfig::default().validate().unwrap();
        let mut o = OverfitConfig::default();
        o.model.k = 2;
        assert!(o.validate().is_err());
        let mut m = MaskingConfig::default();
        m.mask_size = 60;
        assert!(m.validate().is_err());
    }
}
