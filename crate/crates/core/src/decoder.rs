//! Sparse decoders: orthogonal matching pursuit (on all rows or on the rows
//! of an observation mask) and an exhaustive search over supports.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, Matrix};
use crate::rng::RngStream;
use crate::subsets::{binomial, Combinations};

/// OMP stops once `‖r‖ < EARLY_STOP_RTOL · ‖y‖`.
pub const EARLY_STOP_RTOL: f64 = 1e-10;
/// Default cap on the number of supports `exhaustive_decode` may visit.
pub const DEFAULT_EXHAUSTIVE_BUDGET: u128 = 1_000_000;
/// A newly selected atom whose component orthogonal to the current span is
/// below this fraction of its norm is treated as linearly dependent.
const DEPENDENT_ATOM_RTOL: f64 = 1e-12;

/// A sparse vector stored as strictly increasing support indices and the
/// matching values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSparse")]
pub struct SparseVector {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSparse {
    dim: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawSparse> for SparseVector {
    type Error = Error;

    fn try_from(raw: RawSparse) -> Result<Self> {
        SparseVector::new(raw.dim, raw.support, raw.values)
    }
}

impl SparseVector {
    pub fn new(dim: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                context: "sparse vector values",
                expected: support.len(),
                found: values.len(),
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("sparse support must be strictly increasing"));
        }
        if support.last().is_some_and(|&i| i >= dim) {
            return Err(Error::contract("sparse support index out of range"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sparse vector values"));
        }
        Ok(Self {
            dim,
            support,
            values,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unsorted `(index, value)` pairs with distinct indices.
    pub(crate) fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        let (support, values) = pairs.into_iter().unzip();
        Self::new(dim, support, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// `B z`, summing atoms in increasing support order.
    pub fn synthesize(&self, b: &Matrix) -> Result<Vec<f64>> {
        if b.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "synthesis",
                expected: self.dim,
                found: b.cols(),
            });
        }
        let mut out = vec![0.0; b.rows()];
        for (j, v) in self.iter() {
            for (o, a) in out.iter_mut().zip(b.col(j)) {
                *o += a * v;
            }
        }
        Ok(out)
    }
}

/// Observed coordinate set `M ⊂ [d]`; its complement is held out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMask")]
pub struct Mask {
    dim: usize,
    observed: Vec<usize>,
}

#[derive(Deserialize)]
struct RawMask {
    dim: usize,
    observed: Vec<usize>,
}

impl TryFrom<RawMask> for Mask {
    type Error = Error;

    fn try_from(raw: RawMask) -> Result<Self> {
        if raw.observed.len() == raw.dim {
            let m = Mask::full(raw.dim);
            if m.observed == raw.observed {
                return Ok(m);
            }
        }
        Mask::new(raw.dim, raw.observed)
    }
}

impl Mask {
    /// A proper mask: at least one observed and one held-out coordinate.
    pub fn new(dim: usize, mut observed: Vec<usize>) -> Result<Self> {
        observed.sort_unstable();
        if observed.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::contract("mask has duplicate coordinates"));
        }
        if observed.last().is_some_and(|&i| i >= dim) {
            return Err(Error::contract("mask coordinate out of range"));
        }
        if observed.is_empty() || observed.len() >= dim {
            return Err(Error::contract(alloc::format!(
                "mask must observe between 1 and {} of {dim} coordinates, got {}",
                dim.saturating_sub(1),
                observed.len()
            )));
        }
        Ok(Self { dim, observed })
    }

    /// Observes every coordinate. Only meaningful for baseline paths: the
    /// held-out set is empty, so masked losses reject it.
    pub fn full(dim: usize) -> Self {
        Self {
            dim,
            observed: (0..dim).collect(),
        }
    }

    /// Uniformly random observed set of the given size.
    pub fn random(rng: &mut RngStream, dim: usize, size: usize) -> Result<Self> {
        if size == 0 || size >= dim {
            return Err(Error::contract(alloc::format!(
                "random mask size must be in 1..{dim}, got {size}"
            )));
        }
        let mut observed = index::sample(rng, dim, size).into_vec();
        observed.sort_unstable();
        Ok(Self { dim, observed })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.observed.len() == self.dim
    }

    /// `[d] \ M` in increasing order.
    pub fn held_out(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim - self.observed.len());
        let mut it = self.observed.iter().peekable();
        for i in 0..self.dim {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    /// `[y]_M`.
    pub fn restrict(&self, y: &[f64]) -> Vec<f64> {
        self.observed.iter().map(|&i| y[i]).collect()
    }
}

/// Knobs for OMP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmpOptions {
    /// Run exactly `k` selection steps, disabling the residual early stop.
    pub force_k_steps: bool,
    /// Rank atoms by correlation with unit-rescaled columns. Restricted
    /// columns `P_M B` are not unit norm even when `B` is.
    pub normalize_selection: bool,
}

impl Default for OmpOptions {
    fn default() -> Self {
        Self {
            force_k_steps: false,
            normalize_selection: true,
        }
    }
}

/// OMP output together with its per-step history.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpTrace {
    pub code: SparseVector,
    /// Atoms in the order they were selected.
    pub selected: Vec<usize>,
    /// `‖r_t‖` for `t = 0..=steps`, starting with `‖y‖`.
    pub residual_norms: Vec<f64>,
    pub residual: Vec<f64>,
}

/// `g_OMP(y, B, k)` with default options.
pub fn omp(y: &[f64], b: &Matrix, k: usize) -> Result<SparseVector> {
    omp_with(y, b, k, &OmpOptions::default())
}

pub fn omp_with(y: &[f64], b: &Matrix, k: usize, opts: &OmpOptions) -> Result<SparseVector> {
    Ok(omp_trace(y, b, k, opts)?.code)
}

pub fn omp_trace(y: &[f64], b: &Matrix, k: usize, opts: &OmpOptions) -> Result<OmpTrace> {
    trace_impl(y, b, k, opts, false)
}

fn trace_impl(
    y: &[f64],
    b: &Matrix,
    k: usize,
    opts: &OmpOptions,
    allow_zero_columns: bool,
) -> Result<OmpTrace> {
    let norms = check_omp_inputs(y, b, k, allow_zero_columns)?;
    let mut ws = OmpWorkspace::default();
    ws.run(y, b, &norms, k, opts)?;
    Ok(OmpTrace {
        code: ws.code(b.cols(), y, b)?,
        selected: ws.selected.clone(),
        residual_norms: ws.history.clone(),
        residual: ws.residual.clone(),
    })
}

/// `g_OMP([y]_M, P_M B, k)`; the code lives in `R^{p′}` and reconstructs
/// with the full `B`.
pub fn omp_masked(y: &[f64], b: &Matrix, k: usize, mask: &Mask) -> Result<SparseVector> {
    omp_masked_with(y, b, k, mask, &OmpOptions::default())
}

pub fn omp_masked_with(
    y: &[f64],
    b: &Matrix,
    k: usize,
    mask: &Mask,
    opts: &OmpOptions,
) -> Result<SparseVector> {
    if y.len() != b.rows() || mask.dim() != b.rows() {
        return Err(Error::DimensionMismatch {
            context: "masked OMP",
            expected: b.rows(),
            found: if y.len() != b.rows() { y.len() } else { mask.dim() },
        });
    }
    if mask.len() < k {
        return Err(Error::contract(alloc::format!(
            "mask observes {} coordinates, fewer than k = {k}",
            mask.len()
        )));
    }
    // Atoms that vanish on the observed rows are simply never selected.
    let restricted = b.select_rows(mask.observed());
    Ok(trace_impl(&mask.restrict(y), &restricted, k, opts, true)?.code)
}

/// Validates OMP inputs and returns the column norms.
pub(crate) fn check_omp_inputs(
    y: &[f64],
    b: &Matrix,
    k: usize,
    allow_zero_columns: bool,
) -> Result<Vec<f64>> {
    if y.len() != b.rows() {
        return Err(Error::DimensionMismatch {
            context: "OMP measurement",
            expected: b.rows(),
            found: y.len(),
        });
    }
    if k > b.rows().min(b.cols()) {
        return Err(Error::contract(alloc::format!(
            "OMP sparsity k = {k} exceeds min(rows, atoms) = {}",
            b.rows().min(b.cols())
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement"));
    }
    let norms = b.column_norms();
    if norms.iter().any(|n| !n.is_finite()) {
        return Err(Error::NonFinite("dictionary"));
    }
    if !allow_zero_columns {
        if let Some(j) = norms.iter().position(|&n| n == 0.0) {
            return Err(Error::DegenerateColumn { column: j });
        }
    }
    Ok(norms)
}

/// Reusable buffers for repeated OMP calls against same-sized problems.
///
/// Least squares on the selected atoms is maintained as an incremental QR
/// factorization (modified Gram-Schmidt with one reorthogonalization pass),
/// so each step costs one pass over the dictionary for correlations plus
/// `O(m t)` for the update.
#[derive(Debug, Default, Clone)]
pub(crate) struct OmpWorkspace {
    q: Vec<f64>,
    r: Vec<f64>,
    qty: Vec<f64>,
    residual: Vec<f64>,
    selected: Vec<usize>,
    used: Vec<bool>,
    history: Vec<f64>,
    dependent: bool,
    k: usize,
}

impl OmpWorkspace {
    /// Runs OMP, leaving the selection in the workspace. Inputs must already
    /// have passed `check_omp_inputs`; `norms` are the column norms of `b`.
    pub(crate) fn run(
        &mut self,
        y: &[f64],
        b: &Matrix,
        norms: &[f64],
        k: usize,
        opts: &OmpOptions,
    ) -> Result<()> {
        let m = b.rows();
        let p = b.cols();
        self.q.clear();
        self.q.resize(m * k, 0.0);
        self.r.clear();
        self.r.resize(k * k, 0.0);
        self.qty.clear();
        self.residual.clear();
        self.residual.extend_from_slice(y);
        self.selected.clear();
        self.used.clear();
        self.used.resize(p, false);
        self.history.clear();
        self.dependent = false;
        self.k = k;

        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement"));
        }
        let y_norm = norm(y);
        self.history.push(y_norm);
        if y_norm == 0.0 {
            return Ok(());
        }
        let stop = EARLY_STOP_RTOL * y_norm;

        for t in 0..k {
            // Greedy selection; strict `>` keeps the lowest index on ties.
            let mut best = usize::MAX;
            let mut best_score = f64::NEG_INFINITY;
            for j in 0..p {
                if self.used[j] || norms[j] == 0.0 {
                    continue;
                }
                let mut s = dot(b.col(j), &self.residual).abs();
                if opts.normalize_selection {
                    s /= norms[j];
                }
                if s > best_score {
                    best_score = s;
                    best = j;
                }
            }
            if best == usize::MAX {
                break;
            }
            self.used[best] = true;
            self.selected.push(best);

            // Orthogonalize the new atom against the current basis, twice.
            let nb = self.qty.len();
            let atom = b.col(best);
            let (done, rest) = self.q.split_at_mut(nb * m);
            let w = &mut rest[..m];
            w.copy_from_slice(atom);
            let col = &mut self.r[nb * k..(nb + 1) * k];
            col.iter_mut().for_each(|v| *v = 0.0);
            for _pass in 0..2 {
                for i in 0..nb {
                    let qi = &done[i * m..(i + 1) * m];
                    let h = dot(qi, w);
                    col[i] += h;
                    for (wv, qv) in w.iter_mut().zip(qi) {
                        *wv -= h * qv;
                    }
                }
            }
            let rho = norm(w);
            if rho <= DEPENDENT_ATOM_RTOL * norms[best] {
                // Already in the span: the residual does not change and the
                // final coefficients come from a min-norm solve.
                self.dependent = true;
            } else {
                col[nb] = rho;
                w.iter_mut().for_each(|v| *v /= rho);
                let c = dot(w, &self.residual);
                self.qty.push(c);
                for (rv, qv) in self.residual.iter_mut().zip(w.iter()) {
                    *rv -= c * qv;
                }
            }
            let r_norm = norm(&self.residual);
            debug_assert!(
                r_norm <= self.history[t] * (1.0 + 1e-12) + 1e-300,
                "OMP residual increased"
            );
            self.history.push(r_norm);
            if !opts.force_k_steps && r_norm < stop {
                break;
            }
        }
        Ok(())
    }

    /// Least-squares coefficients of the selected atoms as a sparse code.
    pub(crate) fn code(&self, dim: usize, y: &[f64], b: &Matrix) -> Result<SparseVector> {
        let t = self.selected.len();
        let coef = if self.dependent {
            let sub = b.select_columns(&self.selected);
            linalg::least_squares(&sub, y)?
        } else {
            let k = self.k;
            let mut x = vec![0.0; t];
            for i in (0..t).rev() {
                let mut s = self.qty[i];
                for j in i + 1..t {
                    s -= self.r[j * k + i] * x[j];
                }
                x[i] = s / self.r[i * k + i];
            }
            x
        };
        SparseVector::from_pairs(dim, self.selected.iter().copied().zip(coef).collect())
    }
}

/// Globally optimal `k`-sparse least-squares code, default budget.
pub fn exhaustive_decode(y: &[f64], b: &Matrix, k: usize) -> Result<SparseVector> {
    exhaustive_decode_with_budget(y, b, k, DEFAULT_EXHAUSTIVE_BUDGET)
}

/// Minimizes `‖y − B ẑ‖²` over every size-`k` support, visiting supports in
/// lexicographic order and keeping the first strict minimum.
pub fn exhaustive_decode_with_budget(
    y: &[f64],
    b: &Matrix,
    k: usize,
    budget: u128,
) -> Result<SparseVector> {
    let (m, p) = (b.rows(), b.cols());
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            context: "exhaustive decode measurement",
            expected: m,
            found: y.len(),
        });
    }
    if k > p {
        return Err(Error::contract(alloc::format!(
            "support size k = {k} exceeds atom count {p}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("measurement"));
    }
    let required = binomial(p, k);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if k == 0 {
        return Ok(SparseVector::zeros(p));
    }
    let mut search = SupportSearch::new(b);
    let best = search.best_support(y, k);
    let sub = b.select_columns(&best);
    let values = linalg::least_squares(&sub, y)?;
    SparseVector::new(p, best, values)
}

/// Scratch state for support enumeration against one dictionary.
pub(crate) struct SupportSearch<'a> {
    b: &'a Matrix,
    norms_sq: Vec<f64>,
    by: Vec<f64>,
    gram: Vec<f64>,
    coef: Vec<f64>,
}

impl<'a> SupportSearch<'a> {
    pub(crate) fn new(b: &'a Matrix) -> Self {
        Self {
            b,
            norms_sq: b.columns().map(linalg::norm_sq).collect(),
            by: vec![0.0; b.cols()],
            gram: Vec::new(),
            coef: Vec::new(),
        }
    }

    /// Lexicographically first support attaining the minimum residual, and
    /// that residual's squared norm.
    pub(crate) fn best_support(&mut self, y: &[f64], k: usize) -> Vec<usize> {
        self.best_support_with_residual(y, k).0
    }

    pub(crate) fn best_support_with_residual(&mut self, y: &[f64], k: usize) -> (Vec<usize>, f64) {
        let b = self.b;
        for (j, c) in b.columns().enumerate() {
            self.by[j] = dot(c, y);
        }
        let yy = linalg::norm_sq(y);
        let mut best: Vec<usize> = (0..k).collect();
        let mut best_res = f64::INFINITY;

        if k == 1 {
            // Projection onto a single atom: ‖y‖² − ⟨b, y⟩² / ‖b‖².
            for j in 0..b.cols() {
                let nn = self.norms_sq[j];
                let res = if nn > 0.0 {
                    (yy - self.by[j] * self.by[j] / nn).max(0.0)
                } else {
                    yy
                };
                if res < best_res {
                    best_res = res;
                    best[0] = j;
                }
            }
            return (best, best_res);
        }

        let mut combos = Combinations::new(b.cols(), k);
        while let Some(s) = combos.next_subset() {
            let res = self.support_residual(y, s);
            if res < best_res {
                best_res = res;
                best.copy_from_slice(s);
            }
        }
        (best, best_res)
    }

    /// Squared residual of the least-squares fit on `support`.
    fn support_residual(&mut self, y: &[f64], support: &[usize]) -> f64 {
        let b = self.b;
        let k = support.len();
        self.gram.clear();
        self.gram.resize(k * k, 0.0);
        for (a, &i) in support.iter().enumerate() {
            self.gram[a * k + a] = self.norms_sq[i];
            for (c, &j) in support.iter().enumerate().skip(a + 1) {
                let g = dot(b.col(i), b.col(j));
                self.gram[a * k + c] = g;
                self.gram[c * k + a] = g;
            }
        }
        self.coef.clear();
        self.coef.extend(support.iter().map(|&i| self.by[i]));
        let coef: Vec<f64> = if linalg::cholesky_solve(&mut self.gram, k, &mut self.coef).is_some()
        {
            self.coef.clone()
        } else {
            // Singular Gram matrix: fall back to the min-norm QR solve.
            let sub = b.select_columns(support);
            linalg::least_squares(&sub, y).unwrap_or_else(|_| vec![0.0; k])
        };
        let mut res = 0.0;
        for (r, &yr) in y.iter().enumerate() {
            let mut fit = 0.0;
            for (&i, &c) in support.iter().zip(&coef) {
                fit += b.get(r, i) * c;
            }
            let e = yr - fit;
            res += e * e;
        }
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use crate::metrics::mutual_coherence;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn omp_on_identity_picks_largest_coordinate() {
        let b = Matrix::identity(3);
        let tr = omp_trace(&[3.0, 0.0, 1.0], &b, 1, &OmpOptions::default()).unwrap();
        assert_eq!(tr.code.support(), &[0]);
        close(tr.code.values(), &[3.0], 1e-15);
        close(&tr.residual, &[0.0, 0.0, 1.0], 1e-15);
    }

    #[test]
    fn omp_exact_atom() {
        let mut rng = RngStream::new(1, 0);
        let b = gaussian_matrix(&mut rng, 30, 10, true);
        for j in 0..10 {
            let z = omp(b.col(j), &b, 1).unwrap();
            assert_eq!(z.support(), &[j]);
            close(z.values(), &[1.0], 1e-12);
        }
    }

    #[test]
    fn omp_recovers_two_sparse_under_incoherence() {
        let mut rng = RngStream::new(2, 0);
        let mut tested = 0;
        while tested < 20 {
            let b = gaussian_matrix(&mut rng, 20, 8, true);
            if mutual_coherence(&b).unwrap() >= 1.0 / 3.0 {
                continue;
            }
            tested += 1;
            let mut s = index::sample(&mut rng, 8, 2).into_vec();
            s.sort_unstable();
            let v: Vec<f64> = (0..2).map(|_| rng.sample(StandardNormal)).collect();
            let z = SparseVector::new(8, s, v).unwrap();
            let y = z.synthesize(&b).unwrap();
            let zh = omp(&y, &b, 2).unwrap();
            assert_eq!(zh.support(), z.support());
            close(zh.values(), z.values(), 1e-8);
        }
    }

    #[test]
    fn omp_contract_errors() {
        let b = Matrix::identity(3);
        assert!(matches!(omp(&[1.0, 2.0, 3.0], &b, 4), Err(Error::Contract(_))));
        assert!(matches!(omp(&[1.0, 2.0], &b, 1), Err(Error::DimensionMismatch { .. })));
        let z = Matrix::from_col_major(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(omp(&[1.0, 1.0], &z, 1), Err(Error::DegenerateColumn { column: 1 }));
        assert_eq!(
            omp(&[f64::NAN, 0.0, 0.0], &b, 1),
            Err(Error::NonFinite("measurement"))
        );
    }

    #[test]
    fn omp_zero_input_is_empty() {
        let b = Matrix::identity(3);
        assert_eq!(omp(&[0.0; 3], &b, 2).unwrap(), SparseVector::zeros(3));
    }

    #[test]
    fn omp_stops_early_on_exact_fit() {
        let b = Matrix::identity(4);
        let z = omp(&[0.0, 2.0, 0.0, 0.0], &b, 3).unwrap();
        assert_eq!(z.support(), &[1]);
        let forced = omp_with(
            &[0.0, 2.0, 0.0, 0.0],
            &b,
            3,
            &OmpOptions {
                force_k_steps: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(forced.nnz(), 3);
        close(&forced.to_dense(), &[0.0, 2.0, 0.0, 0.0], 1e-15);
    }

    #[test]
    fn full_mask_matches_plain_omp_bitwise() {
        let mut rng = RngStream::new(3, 0);
        let b = gaussian_matrix(&mut rng, 12, 20, true);
        let y: Vec<f64> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
        let a = omp(&y, &b, 3).unwrap();
        let m = omp_masked(&y, &b, 3, &Mask::full(12)).unwrap();
        assert_eq!(a.support(), m.support());
        for (x, z) in a.values().iter().zip(m.values()) {
            assert_eq!(x.to_bits(), z.to_bits());
        }
    }

    #[test]
    fn masked_zero_observation_gives_empty_code() {
        let b = Matrix::identity(4);
        let mask = Mask::new(4, vec![0, 1]).unwrap();
        let z = omp_masked(&[0.0, 0.0, 5.0, -1.0], &b, 1, &mask).unwrap();
        assert_eq!(z.nnz(), 0);
        assert_eq!(z.dim(), 4);
    }

    #[test]
    fn masked_needs_enough_rows() {
        let b = Matrix::identity(4);
        let mask = Mask::new(4, vec![0]).unwrap();
        assert!(matches!(
            omp_masked(&[1.0; 4], &b, 2, &mask),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn mask_invariants() {
        assert!(Mask::new(4, vec![]).is_err());
        assert!(Mask::new(4, vec![0, 1, 2, 3]).is_err());
        assert!(Mask::new(4, vec![1, 1]).is_err());
        assert!(Mask::new(4, vec![4]).is_err());
        let m = Mask::new(5, vec![3, 0]).unwrap();
        assert_eq!(m.observed(), &[0, 3]);
        assert_eq!(m.held_out(), vec![1, 2, 4]);
        assert!(Mask::full(3).held_out().is_empty());
        let mut rng = RngStream::new(0, 0);
        let r = Mask::random(&mut rng, 10, 9).unwrap();
        assert_eq!(r.len(), 9);
        assert!(Mask::random(&mut rng, 10, 10).is_err());
    }

    #[test]
    fn exhaustive_on_identity() {
        let b = Matrix::identity(3);
        let z = exhaustive_decode(&[3.0, 0.0, 1.0], &b, 2).unwrap();
        assert_eq!(z.support(), &[0, 2]);
        close(z.values(), &[3.0, 1.0], 1e-15);
    }

    #[test]
    fn exhaustive_budget() {
        let b = Matrix::identity(30);
        assert_eq!(
            exhaustive_decode_with_budget(&[1.0; 30], &b, 3, 100),
            Err(Error::BudgetExceeded {
                required: 4060,
                budget: 100
            })
        );
    }

    #[test]
    fn exhaustive_tie_breaks_lexicographically() {
        // Every single atom explains y equally well.
        let b = Matrix::identity(3);
        let z = exhaustive_decode(&[1.0, 1.0, 1.0], &b, 1).unwrap();
        assert_eq!(z.support(), &[0]);
        let z = exhaustive_decode(&[1.0, 1.0, 1.0], &b, 2).unwrap();
        assert_eq!(z.support(), &[0, 1]);
    }

    #[test]
    fn exhaustive_handles_duplicate_atoms() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let b = Matrix::from_col_major(2, 3, vec![1.0, 0.0, 1.0, 0.0, s, s]).unwrap();
        let z = exhaustive_decode(&[1.0, 1.0], &b, 2).unwrap();
        let fit = z.synthesize(&b).unwrap();
        close(&fit, &[1.0, 1.0], 1e-12);
    }

    #[test]
    fn sparse_vector_invariants() {
        assert!(SparseVector::new(3, vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseVector::new(3, vec![3], vec![1.0]).is_err());
        assert!(SparseVector::new(3, vec![0], vec![f64::INFINITY]).is_err());
        let v = SparseVector::new(3, vec![0, 2], vec![1.0, -2.0]).unwrap();
        assert_eq!(v.to_dense(), vec![1.0, 0.0, -2.0]);
    }
}
