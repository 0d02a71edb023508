mod common;

use maskdict::linalg::gaussian_matrix;
use maskdict::model::generate_dataset;
use maskdict::trainer::{train, train_masked_path_full_mask, train_with_observer, Algorithm, InitKind, MaskScope};
use maskdict::{Dataset, GroundTruthModel, RngStream, TrainConfig};
use std::collections::BTreeSet;

fn dataset(seed: u64, d: usize, p: usize, k: usize, noise_var: f64, n: usize) -> Dataset {
    let mut rng = RngStream::new(seed, 0);
    let a = loop {
        let a = gaussian_matrix(&mut rng, d, p, true);
        if common::coherence(&a) < 1.0 / (2.0 * k as f64 - 1.0) {
            break a;
        }
    };
    let model = GroundTruthModel::new(a, k, 1.0, true, noise_var).unwrap();
    generate_dataset(&mut RngStream::new(seed, 1), &model, n, 64).unwrap()
}

fn config(algorithm: Algorithm, k: usize, p_prime: usize, epochs: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(algorithm, k, p_prime);
    cfg.epochs = epochs;
    cfg.batch_size = 50;
    cfg.seed = 11;
    cfg
}

#[test]
fn runs_are_reproducible_to_the_byte() {
    for alg in [Algorithm::Baseline, Algorithm::Masked] {
        let ds = dataset(1, 16, 8, 2, 1.0 / 16.0, 200);
        let cfg = config(alg, 2, 12, 5);
        let a = serde_json::to_vec(&train(&ds, &cfg).unwrap()).unwrap();
        let ds2 = dataset(1, 16, 8, 2, 1.0 / 16.0, 200);
        let b = serde_json::to_vec(&train(&ds2, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn noiseless_ground_truth_is_a_fixed_point() {
    let ds = dataset(2, 20, 10, 2, 0.0, 400);
    for alg in [Algorithm::Baseline, Algorithm::Masked] {
        let mut cfg = config(alg, 2, 10, 50);
        cfg.init = InitKind::Local;
        let r = train(&ds, &cfg).unwrap();
        assert_eq!(r.error_history.cosine[0], 0.0);
        assert!(r.final_d_r_cosine() < 1e-4, "{alg:?}: {}", r.final_d_r_cosine());
        assert!(r.final_d_r_euclidean() < 1e-4, "{alg:?}: {}", r.final_d_r_euclidean());
    }
}

#[test]
fn full_mask_masked_path_equals_baseline_bitwise() {
    let ds = dataset(3, 16, 8, 2, 1.0 / 16.0, 200);
    let cfg = config(Algorithm::Baseline, 2, 12, 4);
    let base = train(&ds, &cfg).unwrap();
    let full = train_masked_path_full_mask(&ds, &cfg).unwrap();
    let bits = |r: &maskdict::RunResult| r.final_dictionary.as_col_major().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&base), bits(&full));
    assert_eq!(base.loss_history.len(), full.loss_history.len());
    for (x, y) in base.loss_history.iter().zip(&full.loss_history) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
}

#[test]
fn masked_training_draws_fresh_masks_and_keeps_unit_columns() {
    let ds = dataset(4, 20, 10, 2, 1.0 / 20.0, 500);
    let mut cfg = config(Algorithm::Masked, 2, 15, 5);
    cfg.batch_size = 50;
    let mut masks = BTreeSet::new();
    let mut steps = 0;
    train_with_observer(&ds, &cfg, |ev| {
        steps += 1;
        assert_eq!(ev.masks.len(), 1);
        let m = &ev.masks[0];
        assert_eq!(m.len(), 18);
        if steps <= 50 {
            masks.insert(m.observed().to_vec());
        }
        for n in ev.dictionary.column_norms() {
            assert!((n - 1.0).abs() <= 1e-12, "{n}");
        }
        // Rows that are observed receive no gradient.
        for &r in m.observed() {
            for c in 0..ev.gradient.cols() {
                assert_eq!(ev.gradient.get(r, c), 0.0);
            }
        }
    })
    .unwrap();
    assert_eq!(steps, 50);
    assert!(masks.len() >= 2);
}

#[test]
fn per_sample_scope_gives_one_mask_per_sample() {
    let ds = dataset(5, 20, 10, 2, 1.0 / 20.0, 100);
    let mut cfg = config(Algorithm::Masked, 2, 10, 1);
    cfg.mask_scope = MaskScope::PerSample;
    cfg.batch_size = 25;
    let mut sizes = Vec::new();
    train_with_observer(&ds, &cfg, |ev| {
        sizes.push(ev.masks.len());
        let distinct: BTreeSet<_> = ev.masks.iter().map(|m| m.observed().to_vec()).collect();
        assert!(distinct.len() > 1);
    })
    .unwrap();
    assert_eq!(sizes, vec![25; 4]);
}

#[test]
fn baseline_reports_no_masks() {
    let ds = dataset(6, 12, 6, 1, 0.01, 60);
    let cfg = config(Algorithm::Baseline, 1, 6, 1);
    train_with_observer(&ds, &cfg, |ev| assert!(ev.masks.is_empty())).unwrap();
}

#[test]
fn histories_include_initialization() {
    let ds = dataset(7, 12, 6, 1, 0.01, 60);
    let cfg = config(Algorithm::Masked, 1, 8, 3);
    let r = train(&ds, &cfg).unwrap();
    assert_eq!(r.error_history.cosine.len(), 4);
    assert_eq!(r.error_history.euclidean.len(), 4);
    assert_eq!(r.loss_history.len(), 4);
    assert_eq!(r.final_dictionary.cols(), 8);
}
