mod common;

use maskdict::decoder::Mask;
use maskdict::linalg::gaussian_matrix;
use maskdict::model::generate_dataset;
use maskdict::objectives::{loss_gradient, masked_loss, recon_loss, DecoderKind};
use maskdict::{GroundTruthModel, Matrix, RngStream, SparseVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// `‖[y]_E − [B z]_E‖²` written out directly.
fn loss(y: &[f64], b: &Matrix, z: &SparseVector, rows: &[usize]) -> f64 {
    rows.iter()
        .map(|&i| {
            let fit: f64 = z.iter().map(|(j, v)| b.get(i, j) * v).sum();
            (y[i] - fit).powi(2)
        })
        .sum()
}

fn with_entry(b: &Matrix, i: usize, j: usize, delta: f64) -> Matrix {
    Matrix::from_fn(b.rows(), b.cols(), |r, c| b.get(r, c) + if (r, c) == (i, j) { delta } else { 0.0 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), d in 1usize..31, p in 1usize..21, k in 1usize..5, frac in 0.1f64..1.0) {
        let mut rng = RngStream::new(seed, 3);
        let k = k.min(p);
        let b = gaussian_matrix(&mut rng, d, p, true);
        let mut support = rand::seq::index::sample(&mut rng, p, k).into_vec();
        support.sort_unstable();
        let values = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let z = SparseVector::new(p, support, values).unwrap();
        let y: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n_rows = ((d as f64 * frac).ceil() as usize).clamp(1, d);
        let mut rows = rand::seq::index::sample(&mut rng, d, n_rows).into_vec();
        rows.sort_unstable();

        let g = loss_gradient(&y, &b, &z, &rows).unwrap();
        let h = 1e-5;
        for i in 0..d {
            for j in 0..p {
                let analytic = g.get(i, j);
                if !rows.contains(&i) || !z.support().contains(&j) {
                    prop_assert_eq!(analytic, 0.0);
                    continue;
                }
                let fd = (loss(&y, &with_entry(&b, i, j, h), &z, &rows)
                    - loss(&y, &with_entry(&b, i, j, -h), &z, &rows))
                    / (2.0 * h);
                let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(1e-6);
                prop_assert!(rel < 1e-5, "entry ({}, {}): {} vs {}", i, j, analytic, fd);
            }
        }
    }

    #[test]
    fn exhaustive_loss_is_below_omp_loss_per_sample(seed in any::<u64>(), d in 2usize..9, p in 2usize..8) {
        let mut rng = RngStream::new(seed, 4);
        let b = gaussian_matrix(&mut rng, d, p, true);
        let ys: Vec<Vec<f64>> = (0..5).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let batch: Vec<&[f64]> = ys.iter().map(|y| y.as_slice()).collect();
        let ex = recon_loss(&batch, &b, 2, DecoderKind::Exhaustive).unwrap();
        let om = recon_loss(&batch, &b, 2, DecoderKind::Omp).unwrap();
        prop_assert_eq!(ex.decoder_used, DecoderKind::Exhaustive);
        for (e, o) in ex.per_sample.iter().zip(&om.per_sample) {
            prop_assert!(*e <= o + 1e-12);
        }
    }
}

fn incoherent_model(seed: u64, d: usize, p: usize, k: usize, sigma_z: f64, normalize: bool, noise_var: f64) -> GroundTruthModel {
    let mut rng = RngStream::new(seed, 0);
    loop {
        let a = gaussian_matrix(&mut rng, d, p, true);
        if common::coherence(&a) < 1.0 / (2.0 * k as f64 - 1.0) {
            return GroundTruthModel::new(a, k, sigma_z, normalize, noise_var).unwrap();
        }
    }
}

#[test]
fn noiseless_losses_vanish_at_ground_truth() {
    let m = incoherent_model(1, 40, 10, 2, 1.0, true, 0.0);
    let ds = generate_dataset(&mut RngStream::new(2, 0), &m, 200, 0).unwrap();
    let batch: Vec<&[f64]> = ds.observations().iter().collect();
    let r = recon_loss(&batch, m.dictionary(), 2, DecoderKind::Omp).unwrap();
    assert!(r.per_sample.iter().all(|&l| l <= 1e-16), "{}", r.total);

    let mut rng = RngStream::new(3, 0);
    let mask = loop {
        let mask = Mask::random(&mut rng, 40, 36).unwrap();
        if common::coherence(&m.dictionary().select_rows(mask.observed())) < 1.0 / 3.0 {
            break mask;
        }
    };
    let r = masked_loss(&batch, m.dictionary(), 2, &mask).unwrap();
    assert!(r.total <= 1e-16, "{}", r.total);
}

#[test]
fn reconstruction_loss_at_ground_truth_is_noise_outside_support() {
    // ‖P⊥_S ε‖² has mean (d − k) σ² and variance 2 (d − k) σ⁴.
    let (d, k, noise_var) = (50, 2, 1e-6);
    let m = incoherent_model(4, d, 20, k, 1.0, false, noise_var);
    let n = 20_000;
    let ds = generate_dataset(&mut RngStream::new(5, 0), &m, n, 0).unwrap();
    let batch: Vec<&[f64]> = ds.observations().iter().collect();
    let r = recon_loss(&batch, m.dictionary(), k, DecoderKind::Omp).unwrap();
    let expected = (d - k) as f64 * noise_var;
    let se = (2.0 * (d - k) as f64).sqrt() * noise_var / (n as f64).sqrt();
    assert!((r.total - expected).abs() <= 4.0 * se, "{} vs {expected} (se {se})", r.total);
}

#[test]
fn masked_loss_matches_support_oracle_risk() {
    // With the support recovered, the held-out error is the held-out noise
    // plus the observed noise propagated through the least-squares fit:
    // (d − m) σ² + σ² E_S tr(A_{M^c,S} (Λ_Sᵀ Λ_S)⁻¹ A_{M^c,S}ᵀ), Λ_S = P_M A_S.
    let (d, p, k, m_size, noise_var) = (40, 10, 2, 36, 1e-4);
    let model = incoherent_model(6, d, p, k, 1.0, false, noise_var);
    let a = model.dictionary();
    let mut rng = RngStream::new(7, 0);
    let mask = loop {
        let mask = Mask::random(&mut rng, d, m_size).unwrap();
        if common::coherence(&a.select_rows(mask.observed())) < 1.0 / 3.0 {
            break mask;
        }
    };
    let held = mask.held_out();
    let obs = mask.observed();

    let supports = common::subsets(p, k);
    let lambda = a.select_rows(obs);
    let mut trace_sum = 0.0;
    for s in &supports {
        // tr(H G⁻¹ Hᵀ) = Σ over held-out rows h of h G⁻¹ hᵀ, G = Λ_SᵀΛ_S.
        let g = Matrix::from_fn(k, k, |r, c| lambda.col(s[r]).iter().zip(lambda.col(s[c])).map(|(x, y)| x * y).sum()).unwrap();
        for &i in &held {
            let h: Vec<f64> = s.iter().map(|&j| a.get(i, j)).collect();
            let x = solve_2x2(&g, &h);
            trace_sum += h.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>();
        }
    }
    let expected = (d - m_size) as f64 * noise_var + noise_var * trace_sum / supports.len() as f64;
    let approx = (d - m_size) as f64 * noise_var * (1.0 + k as f64 / m_size as f64);
    assert!((expected - approx).abs() <= 0.25 * approx, "{expected} vs {approx}");

    let n = 20_000;
    let ds = generate_dataset(&mut RngStream::new(8, 0), &model, n, 0).unwrap();
    let batch: Vec<&[f64]> = ds.observations().iter().collect();
    let r = masked_loss(&batch, a, k, &mask).unwrap();
    let mean = r.total;
    let var = r.per_sample.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - expected).abs() <= 4.0 * se, "{mean} vs {expected} (se {se})");
}

fn solve_2x2(g: &Matrix, h: &[f64]) -> Vec<f64> {
    let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
    vec![
        (g.get(1, 1) * h[0] - g.get(0, 1) * h[1]) / det,
        (g.get(0, 0) * h[1] - g.get(1, 0) * h[0]) / det,
    ]
}
