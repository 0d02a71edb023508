//! Multi-seed training sweeps.
//!
//! A sweep enumerates cells in the fixed order axis value → algorithm →
//! init → seed. For every seed and model the ground-truth dictionary and the
//! dataset are generated once and shared by all cells that use them:
//!
//! * the dictionary stream depends on `(master_seed, seed, d, p)`,
//! * the sample stream depends on `(master_seed, seed, d, p)` as well, so
//!   different noise levels see the same codes and the same standardized
//!   noise draws,
//! * the training seed depends on `(master_seed, seed)` only.
//!
//! Cells run in parallel on a rayon pool; results are collected in
//! enumeration order, so the output never depends on scheduling.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use maskdict::model::generate_dataset;
use maskdict::rng::mix64;
use maskdict::trainer::{self, Algorithm, InitKind};
use maskdict::{Dataset, GroundTruthModel, RngStream, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AxisKind, ExperimentConfig};
use crate::error::{CliError, CliResult};

const DICTIONARY_TAG: u64 = 0x5357_4545_505f_4449;
const DATA_TAG: u64 = 0x5357_4545_505f_4441;
const TRAIN_TAG: u64 = 0x5357_4545_505f_5452;

pub const CSV_COLUMNS: [&str; 9] = [
    "experiment",
    "axis_value",
    "algorithm",
    "init",
    "seed",
    "final_d_r_cosine",
    "final_d_r_euclidean",
    "final_loss",
    "wall_time_s",
];

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellModel {
    d: usize,
    p: usize,
    k: usize,
    noise_var: f64,
}

#[derive(Debug, Clone)]
struct DataSpec {
    seed: u64,
    model: CellModel,
    n_holdout: usize,
}

#[derive(Debug, Clone)]
struct Cell {
    axis_value: f64,
    algorithm: Algorithm,
    init: InitKind,
    seed: u64,
    data: usize,
    train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub experiment: String,
    pub axis_value: f64,
    pub algorithm: Algorithm,
    pub init: InitKind,
    pub seed: u64,
    pub final_d_r_cosine: f64,
    pub final_d_r_euclidean: f64,
    pub final_loss: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single run.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

/// Mean ± one standard deviation over seeds for one (axis value, algorithm,
/// init) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub axis_value: f64,
    pub algorithm: Algorithm,
    pub init: InitKind,
    pub count: usize,
    pub seeds: Vec<u64>,
    pub final_d_r_cosine: MeanStd,
    pub final_d_r_euclidean: MeanStd,
    pub final_loss: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
}

fn cell_model(cfg: &ExperimentConfig, axis: AxisKind, v: f64) -> CellModel {
    let m = &cfg.model;
    match axis {
        AxisKind::D => {
            let d = v as usize;
            CellModel {
                d,
                p: 2 * d,
                k: (d / 20).max(1),
                noise_var: 1.0 / d as f64,
            }
        }
        _ => CellModel {
            d: m.d.unwrap_or_default(),
            p: m.p.unwrap_or_default(),
            k: m.k.unwrap_or_default(),
            noise_var: match axis {
                AxisKind::NoiseStd => v * v,
                AxisKind::NoiseVar => v,
                _ => m.noise_var.unwrap_or_default(),
            },
        },
    }
}

fn plan(cfg: &ExperimentConfig) -> CliResult<(Vec<Cell>, Vec<DataSpec>)> {
    cfg.validate()?;
    let axis = cfg.resolved_axis()?;
    let mut cells = Vec::new();
    let mut specs: Vec<DataSpec> = Vec::new();
    for &v in &cfg.axis {
        let model = cell_model(cfg, axis, v);
        let p_prime = match axis {
            AxisKind::PPrime => v as usize,
            AxisKind::D => 2 * model.p,
            _ => cfg.train.p_prime.unwrap_or_default(),
        };
        for &algorithm in &cfg.algorithms {
            for &init in &cfg.inits {
                for &seed in &cfg.seeds {
                    let mut train = TrainConfig::new(algorithm, model.k, p_prime);
                    cfg.train.apply(&mut train);
                    if axis == AxisKind::MaskSize {
                        train.mask_size = Some(v as usize);
                    }
                    train.init = init;
                    train.seed = mix64(mix64(cfg.master_seed, TRAIN_TAG), seed);
                    let needed = match init {
                        InitKind::Samples => p_prime,
                        InitKind::Local => p_prime.saturating_sub(model.p),
                    };
                    let data = match specs
                        .iter()
                        .position(|s| s.seed == seed && s.model == model)
                    {
                        Some(i) => {
                            specs[i].n_holdout = specs[i].n_holdout.max(needed);
                            i
                        }
                        None => {
                            specs.push(DataSpec {
                                seed,
                                model,
                                n_holdout: needed,
                            });
                            specs.len() - 1
                        }
                    };
                    cells.push(Cell {
                        axis_value: v,
                        algorithm,
                        init,
                        seed,
                        data,
                        train,
                    });
                }
            }
        }
    }
    for c in &cells {
        let m = specs[c.data].model;
        if c.init == InitKind::Local && c.train.p_prime < m.p {
            return Err(CliError::config(format!(
                "local init needs p_prime >= p = {}, got {}",
                m.p, c.train.p_prime
            )));
        }
        c.train
            .validate(m.d, cfg.n)
            .map_err(|e| CliError::config(format!("cell at axis value {}: {e}", c.axis_value)))?;
    }
    Ok((cells, specs))
}

fn build_dataset(cfg: &ExperimentConfig, spec: &DataSpec) -> CliResult<Dataset> {
    let m = spec.model;
    let key = mix64(mix64(spec.seed, m.d as u64), m.p as u64);
    let mut dict_rng = RngStream::new(cfg.master_seed, mix64(DICTIONARY_TAG, key));
    let a = cfg.dictionary.draw(&mut dict_rng, m.d, m.p)?;
    let model = GroundTruthModel::new(
        a,
        m.k,
        cfg.model.sigma_z,
        cfg.model.normalize_codes,
        m.noise_var,
    )?;
    let mut data_rng = RngStream::new(cfg.master_seed, mix64(DATA_TAG, key));
    Ok(generate_dataset(&mut data_rng, &model, cfg.n, spec.n_holdout)?)
}

/// Number of rows a configuration produces.
pub fn cell_count(cfg: &ExperimentConfig) -> usize {
    cfg.axis.len() * cfg.algorithms.len() * cfg.inits.len() * cfg.seeds.len()
}

/// Runs every cell of `cfg`. `threads = None` uses rayon's default.
pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> CliResult<SweepResult> {
    let (cells, specs) = plan(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()?;
    log::info!(
        "sweep {}: {} cells, {} datasets, {} threads",
        cfg.experiment.as_str(),
        cells.len(),
        specs.len(),
        pool.current_num_threads()
    );
    let rows = pool.install(|| -> CliResult<Vec<SweepRow>> {
        let datasets: Vec<Arc<Dataset>> = specs
            .par_iter()
            .map(|s| build_dataset(cfg, s).map(Arc::new))
            .collect::<CliResult<_>>()?;
        cells
            .par_iter()
            .map(|c| run_cell(cfg, c, &datasets[c.data]))
            .collect()
    })?;
    let aggregates = aggregate(&rows);
    Ok(SweepResult {
        config: cfg.clone(),
        rows,
        aggregates,
    })
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell, ds: &Dataset) -> CliResult<SweepRow> {
    let start = Instant::now();
    let result = trainer::train(ds, &cell.train)?;
    let elapsed = start.elapsed().as_secs_f64();
    log::debug!(
        "axis {} {} {} seed {}: d_R {:.4} in {:.2}s",
        cell.axis_value,
        cell.algorithm.as_str(),
        cell.init.as_str(),
        cell.seed,
        result.final_d_r_cosine(),
        elapsed
    );
    Ok(SweepRow {
        experiment: cfg.experiment.as_str().to_string(),
        axis_value: cell.axis_value,
        algorithm: cell.algorithm,
        init: cell.init,
        seed: cell.seed,
        final_d_r_cosine: result.final_d_r_cosine(),
        final_d_r_euclidean: result.final_d_r_euclidean(),
        final_loss: result.final_loss(),
        wall_time_s: if cfg.record_timing { elapsed } else { 0.0 },
    })
}

/// Groups rows by (axis value, algorithm, init) in first-appearance order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<Aggregate> {
    let mut order: Vec<(u64, Algorithm, InitKind)> = Vec::new();
    let mut groups: HashMap<(u64, Algorithm, InitKind), Vec<&SweepRow>> = HashMap::new();
    for r in rows {
        let key = (r.axis_value.to_bits(), r.algorithm, r.init);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let col = |f: fn(&SweepRow) -> f64| MeanStd::of(&g.iter().map(|r| f(r)).collect::<Vec<_>>());
            Aggregate {
                axis_value: g[0].axis_value,
                algorithm: key.1,
                init: key.2,
                count: g.len(),
                seeds: g.iter().map(|r| r.seed).collect(),
                final_d_r_cosine: col(|r| r.final_d_r_cosine),
                final_d_r_euclidean: col(|r| r.final_d_r_euclidean),
                final_loss: col(|r| r.final_loss),
            }
        })
        .collect()
}

impl SweepResult {
    /// CSV text: `#` comment lines with the master seed and the resolved
    /// configuration, a header row, then one row per cell. Floats use the
    /// shortest representation that round-trips.
    pub fn to_csv(&self) -> CliResult<String> {
        let mut out = String::new();
        writeln!(out, "# master_seed: {}", self.config.master_seed).unwrap();
        writeln!(out, "# config: {}", serde_json::to_string(&self.config)?).unwrap();
        writeln!(out, "{}", CSV_COLUMNS.join(",")).unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.axis_value,
                r.algorithm.as_str(),
                r.init.as_str(),
                r.seed,
                r.final_d_r_cosine,
                r.final_d_r_euclidean,
                r.final_loss,
                r.wall_time_s
            )
            .unwrap();
        }
        Ok(out)
    }

    /// Aggregate JSON: master seed, configuration and per-cell mean ± std.
    pub fn aggregate_json(&self) -> CliResult<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            master_seed: u64,
            config: &'a ExperimentConfig,
            aggregates: &'a [Aggregate],
        }
        Ok(serde_json::to_string_pretty(&Out {
            master_seed: self.config.master_seed,
            config: &self.config,
            aggregates: &self.aggregates,
        })?)
    }

    pub fn aggregate_for(&self, axis_value: f64, algorithm: Algorithm, init: InitKind) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.axis_value == axis_value && a.algorithm == algorithm && a.init == init)
    }
}

/// Parses sweep CSV text back into rows, skipping comment lines.
pub fn parse_csv(text: &str) -> CliResult<Vec<SweepRow>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| CliError::config("empty CSV"))?;
    if header != CSV_COLUMNS.join(",") {
        return Err(CliError::config(format!("unexpected CSV header {header:?}")));
    }
    let bad = |l: &str| CliError::config(format!("malformed CSV row {l:?}"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != CSV_COLUMNS.len() {
                return Err(bad(l));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok(SweepRow {
                experiment: f[0].to_string(),
                axis_value: num(f[1])?,
                algorithm: parse_tag(f[2]).ok_or_else(|| bad(l))?,
                init: parse_tag(f[3]).ok_or_else(|| bad(l))?,
                seed: f[4].parse().map_err(|_| bad(l))?,
                final_d_r_cosine: num(f[5])?,
                final_d_r_euclidean: num(f[6])?,
                final_loss: num(f[7])?,
                wall_time_s: num(f[8])?,
            })
        })
        .collect()
}

fn parse_tag<T: serde::de::DeserializeOwned>(s: &str) -> Option<T> {
    serde_json::from_value(serde_json::Value::String(s.into())).ok()
}
