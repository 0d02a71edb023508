mod common;

use maskdict::linalg::{gaussian_matrix, orthonormal_matrix};
use maskdict::metrics::{mutual_coherence, recovery_error, rip_delta, support_recovery_rate, RipMode};
use maskdict::{GroundTruthModel, Matrix, RngStream};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Mean over atoms of the best `1 − |cos|` and of the best squared distance
/// up to sign.
fn d_r_oracle(a: &Matrix, b: &Matrix) -> (f64, f64) {
    let p = a.cols() as f64;
    let (mut cos, mut euc) = (0.0, 0.0);
    for i in 0..a.cols() {
        let ai = a.col(i);
        let ua = unit(ai);
        let mut best_c = f64::INFINITY;
        let mut best_e = f64::INFINITY;
        for j in 0..b.cols() {
            let bj = b.col(j);
            let ub = unit(bj);
            let ip: f64 = ua.iter().zip(&ub).map(|(x, y)| x * y).sum();
            best_c = best_c.min(1.0 - ip.abs());
            let plus: f64 = ai.iter().zip(bj).map(|(x, y)| (x - y).powi(2)).sum();
            let minus: f64 = ai.iter().zip(bj).map(|(x, y)| (x + y).powi(2)).sum();
            best_e = best_e.min(plus.min(minus));
        }
        cos += best_c;
        euc += best_e;
    }
    (cos / p, euc / p)
}

fn shuffled_signed(rng: &mut RngStream, b: &Matrix) -> Matrix {
    let mut order: Vec<usize> = (0..b.cols()).collect();
    order.shuffle(rng);
    let signs: Vec<f64> = (0..b.cols()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    Matrix::from_fn(b.rows(), b.cols(), |r, c| signs[c] * b.get(r, order[c])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recovery_error_matches_oracle_and_invariances(seed in any::<u64>(), d in 2usize..12, p in 1usize..8, q in 1usize..10) {
        let mut rng = RngStream::new(seed, 0);
        let a = gaussian_matrix(&mut rng, d, p, true);
        let b = gaussian_matrix(&mut rng, d, q, true);
        let r = recovery_error(&a, &b).unwrap();
        let (c, e) = d_r_oracle(&a, &b);
        prop_assert!((r.d_r_cosine - c).abs() <= 1e-12);
        prop_assert!((r.d_r_euclidean - e).abs() <= 1e-12);
        // Unit columns: Euclidean is twice the cosine value.
        prop_assert!((r.d_r_euclidean - 2.0 * r.d_r_cosine).abs() <= 1e-12);

        let b2 = shuffled_signed(&mut rng, &b);
        let r2 = recovery_error(&a, &b2).unwrap();
        prop_assert!((r.d_r_cosine - r2.d_r_cosine).abs() <= 1e-12);
        prop_assert!((r.d_r_euclidean - r2.d_r_euclidean).abs() <= 1e-12);

        let extra = gaussian_matrix(&mut rng, d, 3, true);
        let r3 = recovery_error(&a, &b.hstack(&extra).unwrap()).unwrap();
        prop_assert!(r3.d_r_cosine <= r.d_r_cosine + 1e-15);
        prop_assert!(r3.d_r_euclidean <= r.d_r_euclidean + 1e-15);

        let self_err = recovery_error(&a, &shuffled_signed(&mut rng, &a)).unwrap();
        prop_assert!(self_err.d_r_cosine <= 1e-15 && self_err.d_r_euclidean <= 1e-15);
    }

    #[test]
    fn coherence_matches_oracle_and_ignores_scale_sign_order(seed in any::<u64>(), d in 2usize..15, p in 2usize..12) {
        let mut rng = RngStream::new(seed, 1);
        let a = gaussian_matrix(&mut rng, d, p, false);
        let mu = mutual_coherence(&a).unwrap();
        prop_assert!((mu - common::coherence(&a).min(1.0)).abs() <= 1e-12);
        let scales: Vec<f64> = (0..p).map(|_| rng.random_range(0.1..10.0)).collect();
        let scaled = Matrix::from_fn(d, p, |r, c| scales[c] * a.get(r, c)).unwrap();
        let moved = shuffled_signed(&mut rng, &scaled);
        prop_assert!((mutual_coherence(&moved).unwrap() - mu).abs() <= 1e-12);
    }
}

#[test]
fn gaussian_dictionaries_are_incoherent() {
    let good = (0..100)
        .filter(|&s| {
            let a = gaussian_matrix(&mut RngStream::new(s, 0), 100, 200, true);
            mutual_coherence(&a).unwrap() < 0.6
        })
        .count();
    assert!(good >= 99, "{good}/100");
}

#[test]
fn sampled_rip_is_a_lower_bound_of_exact() {
    for seed in 0..5 {
        let mut rng = RngStream::new(seed, 2);
        let a = gaussian_matrix(&mut rng, 12, 10, true);
        let exact = rip_delta(&a, 3, RipMode::Exact, 1000, &mut rng).unwrap();
        assert!(!exact.is_lower_bound);
        assert_eq!(exact.supports_checked, 120);
        let sampled = rip_delta(&a, 3, RipMode::Sampled, 40, &mut rng).unwrap();
        assert!(sampled.is_lower_bound);
        assert!(sampled.delta <= exact.delta + 1e-12);
    }
    let q = orthonormal_matrix(&mut RngStream::new(9, 0), 10, 6).unwrap();
    let r = rip_delta(&q, 4, RipMode::Exact, 1000, &mut RngStream::new(0, 0)).unwrap();
    assert!(r.delta <= 1e-12, "{}", r.delta);
}

#[test]
fn support_recovery_improves_with_code_scale() {
    let a = orthonormal_matrix(&mut RngStream::new(3, 0), 30, 20).unwrap();
    let base = GroundTruthModel::new(a.clone(), 3, 1.0, false, 0.01).unwrap();
    let rng = RngStream::new(4, 0);
    let mut rates = Vec::new();
    for sz in [0.02, 0.1, 0.5, 2.0, 20.0] {
        let model = base.with_sigma_z(sz).unwrap();
        let r = support_recovery_rate(&model, &a, None, 2000, &mut rng.clone()).unwrap();
        assert!(r.incoherent);
        rates.push(r.rate);
    }
    for w in rates.windows(2) {
        assert!(w[1] >= w[0] - 0.01, "{rates:?}");
    }
    assert!(rates[4] > 0.95 && rates[0] < 0.5, "{rates:?}");
}
