//! The work behind each subcommand, independent of argument parsing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use maskdict::metrics::{self, RecoveryReport, RipEstimate, RipMode};
use maskdict::model::generate_dataset;
use maskdict::verify::{self, MaskingReport, OverfitReport};
use maskdict::{Dataset, Error as CoreError, Matrix, RngStream, RunResult, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::{GenConfig, MaskingConfig, OverfitConfig, GEN_DATA_STREAM, GEN_DICTIONARY_STREAM};
use crate::dataset_file::{self, DatasetHeader, MAGIC};
use crate::error::{CliError, CliResult};
use crate::sweep::{self, SweepResult};

pub const DATASET_FILE: &str = "dataset.mdds";
pub const RUN_FILE: &str = "run.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "aggregate.json";
pub const METRICS_FILE: &str = "metrics.json";

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Draws the dictionary and then the samples, each from its own stream
/// under `cfg.seed`.
pub fn generate(cfg: &GenConfig) -> CliResult<Dataset> {
    if cfg.n == 0 {
        return Err(CliError::config("n must be positive"));
    }
    let model = cfg.model.build(&mut RngStream::new(cfg.seed, GEN_DICTIONARY_STREAM))?;
    let mut rng = RngStream::new(cfg.seed, GEN_DATA_STREAM);
    Ok(generate_dataset(&mut rng, &model, cfg.n, cfg.n_holdout)?)
}

pub fn cmd_gen(mut cfg: GenConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<PathBuf> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let ds = generate(&cfg)?;
    ensure_dir(out_dir)?;
    let path = out_dir.join(DATASET_FILE);
    dataset_file::save_dataset(&ds, &path)?;
    log::info!("wrote {} ({} + {} samples)", path.display(), ds.len(), ds.holdout_len());
    Ok(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    pub seed: u64,
    pub dataset_path: PathBuf,
    pub dataset: DatasetHeader,
    pub wall_time_s: f64,
    pub result: RunResult,
}

pub fn cmd_train(dataset_path: &Path, mut cfg: TrainConfig, seed: Option<u64>, out_dir: &Path) -> CliResult<RunFile> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let ds = dataset_file::load_dataset(dataset_path)?;
    cfg.validate(ds.model().d(), ds.len())?;
    let start = Instant::now();
    let result = maskdict::trainer::train(&ds, &cfg)?;
    let run = RunFile {
        seed: cfg.seed,
        dataset_path: dataset_path.to_path_buf(),
        dataset: DatasetHeader::of(&ds),
        wall_time_s: start.elapsed().as_secs_f64(),
        result,
    };
    ensure_dir(out_dir)?;
    write_file(&out_dir.join(RUN_FILE), &serde_json::to_string_pretty(&run)?)?;
    write_file(&out_dir.join(HISTORY_FILE), &history_csv(&run)?)?;
    Ok(run)
}

/// Per-epoch CSV; row 0 is the initialization.
pub fn history_csv(run: &RunFile) -> CliResult<String> {
    let r = &run.result;
    let mut out = String::new();
    writeln!(out, "# seed: {}", run.seed).unwrap();
    writeln!(out, "# config: {}", serde_json::to_string(&r.config)?).unwrap();
    writeln!(out, "epoch,d_r_cosine,d_r_euclidean,loss").unwrap();
    for (e, ((c, u), l)) in r
        .error_history
        .cosine
        .iter()
        .zip(&r.error_history.euclidean)
        .zip(&r.loss_history)
        .enumerate()
    {
        writeln!(out, "{e},{c},{u},{l}").unwrap();
    }
    Ok(out)
}

pub fn cmd_sweep(cfg: &crate::config::ExperimentConfig, threads: Option<usize>, out_dir: &Path) -> CliResult<SweepResult> {
    let result = sweep::run_sweep(cfg, threads)?;
    ensure_dir(out_dir)?;
    write_file(&out_dir.join(SWEEP_CSV), &result.to_csv()?)?;
    write_file(&out_dir.join(SWEEP_JSON), &result.aggregate_json()?)?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Overfit,
    Masking,
}

impl Theorem {
    pub fn as_str(self) -> &'static str {
        match self {
            Theorem::Overfit => "overfit",
            Theorem::Masking => "masking",
        }
    }

    pub fn report_file(self) -> String {
        format!("verify_{}.json", self.as_str())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TheoremReport {
    Overfit(Box<OverfitReport>),
    Masking(Box<MaskingReport>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub theorem: Theorem,
    pub master_seed: u64,
    pub strict: bool,
    pub config: serde_json::Value,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precondition_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<TheoremReport>,
}

pub fn verify_overfit(cfg: &OverfitConfig, strict: bool) -> CliResult<VerifyReport> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed, GEN_DICTIONARY_STREAM);
    let model = cfg.model.build(&mut root.child(0))?;
    let report = verify::verify_theorem_overfit(&model, &cfg.net, cfg.n_eval, &mut root.child(1))?;
    let passed = report.directional_pass && report.significant && (!strict || report.audit.covered);
    Ok(VerifyReport {
        theorem: Theorem::Overfit,
        master_seed: cfg.seed,
        strict,
        config: serde_json::to_value(cfg)?,
        passed,
        precondition_error: None,
        mask: None,
        report: Some(TheoremReport::Overfit(Box::new(report))),
    })
}

pub fn verify_masking(cfg: &MaskingConfig, strict: bool) -> CliResult<VerifyReport> {
    cfg.validate()?;
    let root = RngStream::new(cfg.seed, GEN_DICTIONARY_STREAM);
    let model = cfg.model.build(&mut root.child(0))?;
    let (mask, _) = verify::incoherent_mask(
        model.dictionary(),
        model.k(),
        cfg.mask_size,
        cfg.mask_attempts,
        &mut root.child(1),
    )?;
    let outcome = verify::verify_theorem_masking(&model, &mask, &cfg.sigma_z_grid, cfg.trials, &root.child(2), strict);
    let mut out = VerifyReport {
        theorem: Theorem::Masking,
        master_seed: cfg.seed,
        strict,
        config: serde_json::to_value(cfg)?,
        passed: false,
        precondition_error: None,
        mask: Some(mask.observed().to_vec()),
        report: None,
    };
    match outcome {
        Ok(r) => {
            out.passed = r.passed;
            out.report = Some(TheoremReport::Masking(Box::new(r)));
        }
        Err(e @ CoreError::Incoherence { .. }) => out.precondition_error = Some(e.to_string()),
        Err(e) => return Err(e.into()),
    }
    Ok(out)
}

/// Runs a verification and writes its report; the caller maps `passed` to
/// the exit status.
pub fn cmd_verify(theorem: Theorem, config: Option<&Path>, seed: Option<u64>, strict: bool, out_dir: &Path) -> CliResult<VerifyReport> {
    let report = match theorem {
        Theorem::Overfit => {
            let mut cfg: OverfitConfig = match config {
                Some(p) => crate::config::read_json(p)?,
                None => OverfitConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            verify_overfit(&cfg, strict)?
        }
        Theorem::Masking => {
            let mut cfg: MaskingConfig = match config {
                Some(p) => crate::config::read_json(p)?,
                None => MaskingConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            verify_masking(&cfg, strict)?
        }
    };
    ensure_dir(out_dir)?;
    write_file(&out_dir.join(theorem.report_file()), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Loads a matrix from a dataset file (its ground truth), a run file (its
/// final dictionary) or a plain `{rows, cols, data}` JSON matrix.
pub fn load_matrix(path: &Path) -> CliResult<Matrix> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        let ds = dataset_file::read_dataset(bytes.as_slice()).map_err(|source| CliError::DatasetFile {
            path: path.to_path_buf(),
            source,
        })?;
        return Ok(ds.model().dictionary().clone());
    }
    let parse_err = |source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(parse_err)?;
    let matrix = value
        .get("result")
        .and_then(|r| r.get("final_dictionary"))
        .or_else(|| value.get("final_dictionary"))
        .unwrap_or(&value);
    serde_json::from_value(matrix.clone()).map_err(parse_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub a_path: PathBuf,
    pub b_path: PathBuf,
    pub recovery: RecoveryReport,
    pub coherence_a: f64,
    pub coherence_b: f64,
    pub rip_order: usize,
    pub rip_a: RipEstimate,
    pub rip_b: RipEstimate,
    pub seed: u64,
}

pub fn cmd_metrics(a_path: &Path, b_path: &Path, s: usize, rip_budget: u64, seed: u64, out_dir: Option<&Path>) -> CliResult<MetricsReport> {
    let a = load_matrix(a_path)?;
    let b = load_matrix(b_path)?;
    let rng = RngStream::new(seed, GEN_DICTIONARY_STREAM);
    let rip = |m: &Matrix, i| {
        if s == 0 || s > m.cols() {
            return Err(CliError::config(format!("RIP order {s} must lie in 1..={}", m.cols())));
        }
        Ok(metrics::rip_delta(m, s, RipMode::Sampled, rip_budget as u128, &mut rng.child(i))?)
    };
    let report = MetricsReport {
        a_path: a_path.to_path_buf(),
        b_path: b_path.to_path_buf(),
        recovery: metrics::recovery_error(&a, &b)?,
        coherence_a: metrics::mutual_coherence(&a)?,
        coherence_b: metrics::mutual_coherence(&b)?,
        rip_order: s,
        rip_a: rip(&a, 0)?,
        rip_b: rip(&b, 1)?,
        seed,
    };
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_file(&dir.join(METRICS_FILE), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}
