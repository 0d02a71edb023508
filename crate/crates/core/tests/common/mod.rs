//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use maskdict::Matrix;

/// Solves the normal equations `(AᵀA) x = Aᵀ y` for the columns `cols` of
/// `a` by Gaussian elimination with partial pivoting.
pub fn normal_equations(a: &Matrix, cols: &[usize], y: &[f64]) -> Vec<f64> {
    let n = cols.len();
    let mut m = vec![vec![0.0; n + 1]; n];
    for (r, &i) in cols.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            m[r][c] = (0..a.rows()).map(|t| a.get(t, i) * a.get(t, j)).sum();
        }
        m[r][n] = (0..a.rows()).map(|t| a.get(t, i) * y[t]).sum();
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..=n {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    (0..n).map(|r| m[r][n] / m[r][r]).collect()
}

pub fn residual_sq(a: &Matrix, cols: &[usize], x: &[f64], y: &[f64]) -> f64 {
    (0..a.rows())
        .map(|t| {
            let fit: f64 = cols.iter().zip(x).map(|(&j, v)| a.get(t, j) * v).sum();
            (y[t] - fit).powi(2)
        })
        .sum()
}

/// All size-`k` subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best `k`-sparse least-squares fit by enumeration; the first support in
/// lexicographic order wins ties.
pub fn brute_force_decode(a: &Matrix, y: &[f64], k: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    for s in subsets(a.cols(), k) {
        let x = normal_equations(a, &s, y);
        let r = residual_sq(a, &s, &x, y);
        if best.as_ref().is_none_or(|b| r < b.2) {
            best = Some((s, x, r));
        }
    }
    best.unwrap()
}

/// Mutual coherence by direct pairwise inner products of normalized columns.
pub fn coherence(a: &Matrix) -> f64 {
    let norms: Vec<f64> = (0..a.cols())
        .map(|j| a.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut mu: f64 = 0.0;
    for i in 0..a.cols() {
        for j in i + 1..a.cols() {
            let ip: f64 = a.col(i).iter().zip(a.col(j)).map(|(x, y)| x * y).sum();
            mu = mu.max((ip / (norms[i] * norms[j])).abs());
        }
    }
    mu
}
