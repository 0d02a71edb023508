//! Dense column-major matrices and the handful of factorizations the rest of
//! the crate needs: Householder QR (optionally column-pivoted) for least
//! squares, and a Jacobi eigen-solver for small symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Relative tolerance used when certifying least-squares solutions.
pub const SOLVE_RTOL: f64 = 1e-8;
/// Tolerance on unit column norms.
pub const NORM_TOL: f64 = 1e-12;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// Dense real matrix in column-major order. Entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_col_major(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "matrix storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "matrix column",
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), data)
    }

    /// Builds a matrix from `f(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::from_col_major(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_col_major(self) -> Vec<f64> {
        self.data
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("matrix-vector product", self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (o, a) in out.iter_mut().zip(self.col(j)) {
                    *o += a * xj;
                }
            }
        }
        Ok(out)
    }

    /// `Aᵀ r`.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len("transposed product", self.rows, r.len())?;
        Ok(self.columns().map(|c| dot(c, r)).collect())
    }

    /// `Aᵀ A`.
    pub fn gram(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.col(i), self.col(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn select_columns(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    /// `P_S A`: keeps the rows listed in `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        self.select_rows_into(idx, &mut out);
        out
    }

    pub(crate) fn select_rows_into(&self, idx: &[usize], out: &mut Matrix) {
        out.rows = idx.len();
        out.cols = self.cols;
        out.data.clear();
        out.data.reserve(idx.len() * self.cols);
        for j in 0..self.cols {
            let c = self.col(j);
            out.data.extend(idx.iter().map(|&i| c[i]));
        }
    }

    pub fn column_norms(&self) -> Vec<f64> {
        self.columns().map(norm).collect()
    }

    /// Concatenates `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        check_len("horizontal concatenation", self.rows, other.rows)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    /// Fails unless every column has unit norm within `tol`.
    pub fn check_unit_columns(&self, tol: f64) -> Result<()> {
        for (j, c) in self.columns().enumerate() {
            let n = norm(c);
            if (n - 1.0).abs() > tol {
                return Err(Error::NotUnitNorm { column: j, norm: n });
            }
        }
        Ok(())
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    } else {
        Ok(())
    }
}

/// Divides every column by its Euclidean norm.
pub fn normalize_columns(b: &Matrix) -> Result<Matrix> {
    let mut out = b.clone();
    normalize_columns_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn normalize_columns_in_place(b: &mut Matrix) -> Result<()> {
    for j in 0..b.cols() {
        let c = b.col_mut(j);
        let n = norm(c);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateColumn { column: j });
        }
        for v in c.iter_mut() {
            *v /= n;
        }
    }
    Ok(())
}

/// Fills a `d × p` matrix with i.i.d. standard normal entries, column by
/// column, optionally scaling each column to unit norm.
pub fn gaussian_matrix(rng: &mut RngStream, d: usize, p: usize, normalize_cols: bool) -> Matrix {
    let data: Vec<f64> = (0..d * p).map(|_| rng.sample(StandardNormal)).collect();
    let mut m = Matrix {
        rows: d,
        cols: p,
        data,
    };
    if normalize_cols {
        // A Gaussian column is zero with probability zero.
        normalize_columns_in_place(&mut m).expect("gaussian column with zero norm");
    }
    m
}

/// Random `d × p` matrix with orthonormal columns (`p ≤ d`), obtained from
/// the QR factorization of a Gaussian matrix.
pub fn orthonormal_matrix(rng: &mut RngStream, d: usize, p: usize) -> Result<Matrix> {
    if p > d {
        return Err(Error::contract("orthonormal columns need p <= d"));
    }
    let g = gaussian_matrix(rng, d, p, false);
    let qr = Householder::factor(&g, false);
    Ok(qr.thin_q())
}

/// Minimum-norm minimizer of `‖y − A x‖²` via column-pivoted QR.
pub fn least_squares(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    check_len("least squares right-hand side", a.rows(), y.len())?;
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::contract("least squares needs a non-empty matrix"));
    }
    Ok(PivotedQr::new(a).solve(y))
}

/// Column-pivoted Householder QR, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    inner: Householder,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: &Matrix) -> Self {
        let inner = Householder::factor(a, true);
        let rank = inner.numerical_rank();
        Self { inner, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_column_rank(&self) -> bool {
        self.rank == self.inner.cols
    }

    /// Minimum-norm least-squares solution. Directions whose pivot falls
    /// below the rank tolerance are treated as exactly dependent.
    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let h = &self.inner;
        let (m, n, r) = (h.rows, h.cols, self.rank);
        let mut c = y.to_vec();
        h.apply_qt(&mut c);
        let mut xp = vec![0.0; n];
        if r == n {
            back_substitute(&h.qr, m, n, &c[..n], &mut xp);
        } else if r > 0 {
            // Solve the r × n trapezoidal system [R11 R12] x = c with minimum
            // norm: QR of its transpose turns it into a triangular solve.
            let mut tt = Matrix::zeros(n, r);
            for i in 0..r {
                for j in i..n {
                    tt.set(j, i, h.qr[j * m + i]);
                }
            }
            let q2 = Householder::factor(&tt, false);
            // R2ᵀ w = c[..r], forward substitution.
            let mut w = vec![0.0; n];
            for i in 0..r {
                let mut s = c[i];
                for k in 0..i {
                    s -= q2.qr[i * n + k] * w[k];
                }
                w[i] = s / q2.qr[i * n + i];
            }
            q2.apply_q(&mut w);
            xp = w;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in h.perm.iter().enumerate() {
            x[p] = xp[i];
        }
        x
    }
}

fn back_substitute(qr: &[f64], m: usize, n: usize, c: &[f64], x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = c[i];
        for k in i + 1..n {
            s -= qr[k * m + i] * x[k];
        }
        x[i] = s / qr[i * m + i];
    }
}

/// Compact Householder QR. Column `k` below the diagonal holds the
/// reflector with an implicit unit leading entry.
#[derive(Debug, Clone)]
struct Householder {
    rows: usize,
    cols: usize,
    qr: Vec<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl Householder {
    fn factor(a: &Matrix, pivot: bool) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.as_col_major().to_vec();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..steps {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..n {
                    let s = norm_sq(&qr[j * m + k..(j + 1) * m]);
                    if s > best_norm {
                        best_norm = s;
                        best = j;
                    }
                }
                if best != k {
                    for i in 0..m {
                        qr.swap(k * m + i, best * m + i);
                    }
                    perm.swap(k, best);
                }
            }
            let col = &mut qr[k * m + k..(k + 1) * m];
            let alpha = col[0];
            let xnorm = norm(col);
            if xnorm == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let beta = if alpha >= 0.0 { -xnorm } else { xnorm };
            let scale = 1.0 / (alpha - beta);
            for v in col[1..].iter_mut() {
                *v *= scale;
            }
            col[0] = beta;
            let t = (beta - alpha) / beta;
            tau[k] = t;
            for j in k + 1..n {
                let (left, right) = qr.split_at_mut(j * m);
                let v = &left[k * m + k..(k + 1) * m];
                let c = &mut right[k..m];
                let mut w = c[0];
                for i in 1..m - k {
                    w += v[i] * c[i];
                }
                w *= t;
                c[0] -= w;
                for i in 1..m - k {
                    c[i] -= w * v[i];
                }
            }
        }
        Self {
            rows: m,
            cols: n,
            qr,
            tau,
            perm,
        }
    }

    fn numerical_rank(&self) -> usize {
        let steps = self.rows.min(self.cols);
        if steps == 0 {
            return 0;
        }
        let r00 = self.qr[0].abs();
        if r00 == 0.0 {
            return 0;
        }
        let tol = r00 * (self.rows.max(self.cols) as f64) * f64::EPSILON;
        (0..steps)
            .take_while(|&i| self.qr[i * self.rows + i].abs() > tol)
            .count()
    }

    /// `y ← Qᵀ y`.
    fn apply_qt(&self, y: &mut [f64]) {
        let m = self.rows;
        for k in 0..self.tau.len() {
            self.reflect(k, &mut y[k..m]);
        }
    }

    /// `y ← Q y`.
    fn apply_q(&self, y: &mut [f64]) {
        let m = self.rows;
        for k in (0..self.tau.len()).rev() {
            self.reflect(k, &mut y[k..m]);
        }
    }

    fn reflect(&self, k: usize, y: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let m = self.rows;
        let v = &self.qr[k * m + k..(k + 1) * m];
        let mut w = y[0];
        for i in 1..y.len() {
            w += v[i] * y[i];
        }
        w *= t;
        y[0] -= w;
        for i in 1..y.len() {
            y[i] -= w * v[i];
        }
    }

    fn thin_q(&self) -> Matrix {
        let (m, n) = (self.rows, self.cols.min(self.rows));
        let mut q = Matrix::zeros(m, n);
        for j in 0..n {
            let c = q.col_mut(j);
            c[j] = 1.0;
            self.apply_q(c);
        }
        q
    }
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric eigenvalues",
            expected: n,
            found: a.cols(),
        });
    }
    let mut w = a.as_col_major().to_vec();
    let at = |w: &[f64], i: usize, j: usize| w[j * n + i];
    let total: f64 = w.iter().map(|v| v * v).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for j in 0..n {
            for i in 0..j {
                off += at(&w, i, j) * at(&w, i, j);
            }
        }
        if off <= 1e-30 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = at(&w, p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = at(&w, p, p);
                let aqq = at(&w, q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(theta * theta + 1.0))
                } else {
                    -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
                };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = w[p * n + k];
                    let akq = w[q * n + k];
                    w[p * n + k] = c * akp - s * akq;
                    w[q * n + k] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = w[k * n + p];
                    let aqk = w[k * n + q];
                    w[k * n + p] = c * apk - s * aqk;
                    w[k * n + q] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| w[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Singular values in descending order.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let g = if a.rows() < a.cols() {
        a.transpose().gram()
    } else {
        a.gram()
    };
    let mut sv: Vec<f64> = symmetric_eigenvalues(&g)?
        .into_iter()
        .map(|e| libm::sqrt(e.max(0.0)))
        .collect();
    sv.reverse();
    Ok(sv)
}

/// Solves the symmetric positive-definite system `G x = b` by Cholesky.
/// Returns `None` if `G` is not numerically positive definite.
pub(crate) fn cholesky_solve(g: &mut [f64], n: usize, b: &mut [f64]) -> Option<()> {
    // Lower factor stored in place (column-major, lower triangle).
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= g[k * n + j] * g[k * n + j];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let l = libm::sqrt(d);
        g[j * n + j] = l;
        for i in j + 1..n {
            let mut s = g[j * n + i];
            for k in 0..j {
                s -= g[k * n + i] * g[k * n + j];
            }
            g[j * n + i] = s / l;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= g[k * n + i] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= g[i * n + k] * b[k];
        }
        b[i] = s / g[i * n + i];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    /// Normal equations solved by Gauss-Jordan elimination with partial pivoting.
    fn normal_equations(a: &Matrix, y: &[f64]) -> Vec<f64> {
        let n = a.cols();
        let g = a.gram();
        let b = a.tr_mul_vec(y).unwrap();
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..n).map(|j| g.get(i, j)).collect();
                row.push(b[i]);
                row
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))
                .unwrap();
            aug.swap(c, p);
            for r in 0..n {
                if r != c {
                    let f = aug[r][c] / aug[c][c];
                    for k in c..=n {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
        (0..n).map(|i| aug[i][n] / aug[i][i]).collect()
    }

    #[test]
    fn identity_least_squares() {
        let x = least_squares(&Matrix::identity(2), &[3.0, -1.0]).unwrap();
        approx(&x, &[3.0, -1.0], 1e-15);
    }

    #[test]
    fn one_dimensional_projection() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let a = Matrix::from_col_major(2, 1, vec![s, s]).unwrap();
        let x = least_squares(&a, &[1.0, 0.0]).unwrap();
        approx(&x, &[s], 1e-15);
    }

    #[test]
    fn matches_normal_equations_on_gaussian() {
        let mut rng = RngStream::new(42, 0);
        for _ in 0..20 {
            let a = gaussian_matrix(&mut rng, 6, 3, false);
            let y: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
            let x = least_squares(&a, &y).unwrap();
            approx(&x, &normal_equations(&a, &y), 1e-8);
        }
    }

    #[test]
    fn residual_is_orthogonal() {
        let mut rng = RngStream::new(5, 1);
        let a = gaussian_matrix(&mut rng, 30, 8, true);
        let y: Vec<f64> = (0..30).map(|_| rng.sample(StandardNormal)).collect();
        let x = least_squares(&a, &y).unwrap();
        let ax = a.mul_vec(&x).unwrap();
        let r: Vec<f64> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        for c in a.columns() {
            assert!(dot(c, &r).abs() <= 1e-8 * norm(&y) * norm(c));
        }
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // Two identical columns: the minimum-norm solution splits the weight.
        let a = Matrix::from_col_major(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let qr = PivotedQr::new(&a);
        assert_eq!(qr.rank(), 1);
        let x = qr.solve(&[2.0, 1.0, 0.0]);
        approx(&x, &[1.0, 1.0], 1e-14);
    }

    #[test]
    fn underdetermined_minimum_norm() {
        let a = Matrix::from_col_major(1, 2, vec![3.0, 4.0]).unwrap();
        let x = least_squares(&a, &[5.0]).unwrap();
        approx(&x, &[0.6, 0.8], 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let a = Matrix::identity(2);
        assert!(matches!(
            least_squares(&a, &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normalize_columns_cases() {
        let m = Matrix::from_col_major(2, 1, vec![3.0, 4.0]).unwrap();
        approx(normalize_columns(&m).unwrap().col(0), &[0.6, 0.8], 1e-15);

        let mut rng = RngStream::new(1, 1);
        let u = gaussian_matrix(&mut rng, 5, 4, true);
        let again = normalize_columns(&u).unwrap();
        approx(again.as_col_major(), u.as_col_major(), 1e-15);

        let z = Matrix::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(normalize_columns(&z), Err(Error::DegenerateColumn { column: 1 }));
    }

    #[test]
    fn gaussian_matrix_contracts() {
        let mut a = RngStream::new(9, 2);
        let mut b = RngStream::new(9, 2);
        let m1 = gaussian_matrix(&mut a, 17, 23, true);
        let m2 = gaussian_matrix(&mut b, 17, 23, true);
        assert_eq!(m1, m2);
        for n in m1.column_norms() {
            assert!((n - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Matrix::from_col_major(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn orthonormal_columns() {
        let mut rng = RngStream::new(3, 3);
        let q = orthonormal_matrix(&mut rng, 10, 4).unwrap();
        let g = q.gram();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues() {
        let m = Matrix::from_col_major(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        approx(&symmetric_eigenvalues(&m).unwrap(), &[1.0, 3.0], 1e-12);
        let s = singular_values(&Matrix::from_col_major(2, 1, vec![3.0, 4.0]).unwrap()).unwrap();
        approx(&s, &[5.0], 1e-12);
    }

    #[test]
    fn cholesky_small_system() {
        let mut g = vec![4.0, 2.0, 2.0, 3.0];
        let mut b = vec![2.0, 1.0];
        cholesky_solve(&mut g, 2, &mut b).unwrap();
        approx(&b, &[0.5, 0.0], 1e-14);
    }
}
