//! Rank-(2,2,1) expansion of (1,2)-symmetric tensors.
//!
//! Each step approximates the current residual by `(U, U, w)·F`, turns the
//! rank-2 matrix `B = U F̂ Uᵀ` into a sparse `B̂` by thresholding, and
//! subtracts `w ∘ B̂` lazily: the residual is never formed, only its action
//! on narrow blocks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dense::{dot, norm2, DenseMatrix, DenseTensor3};
use crate::error::{Result, TensError};
use crate::exec::{map_ordered, Execution};
use crate::linalg::{column_sign, fix_column_signs, sym2_eigen, vector_sign};
use crate::lowrank::{hooi_symmetric, symmetry_tolerance, SolverConfig};
use crate::operator::TensorOperator;
use crate::preprocess::LabelTable;
use crate::tensor::{Entry, Mode, SparseTensor3};

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from triplets; duplicates are summed and zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
            return Err(TensError::IndexOutOfRange(format!("({i}, {j}) in a {rows}×{cols} matrix")));
        }
        if triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(TensError::NonFinite("matrix entry"));
        }
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for t in triplets {
            match merged.last_mut() {
                Some(last) if (last.0, last.1) == (t.0, t.1) => last.2 += t.2,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Ok(Self::from_sorted(rows, cols, merged))
    }

    fn from_sorted(rows: usize, cols: usize, sorted: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0; rows + 1];
        for &(i, _, _) in &sorted {
            row_ptr[i + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            rows,
            cols,
            row_ptr,
            col_idx: sorted.iter().map(|t| t.1).collect(),
            values: sorted.iter().map(|t| t.2).collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sorted(rows, cols, Vec::new())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    /// All `(i, j, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi]
            .binary_search(&j)
            .map_or(0.0, |p| self.values[lo + p])
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.values)
    }

    /// `⟨self, other⟩` by a merge over matching rows.
    pub fn inner(&self, other: &SparseMatrix) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(TensError::mismatch("inner product of differently shaped matrices"));
        }
        let mut s = 0.0;
        for i in 0..self.rows {
            let mut b = other.row(i).peekable();
            for (j, v) in self.row(i) {
                while b.next_if(|&(c, _)| c < j).is_some() {}
                if let Some(&(c, w)) = b.peek() {
                    if c == j {
                        s += v * w;
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// `self · x`.
    pub fn mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, x.rows(), "sparse product shape");
        let mut y = DenseMatrix::zeros(self.rows, x.cols());
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let src = x.row(j);
                for (o, &s) in y.row_mut(i).iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        y
    }

    /// `selfᵀ · x`.
    pub fn t_mul_dense(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, x.rows(), "sparse product shape");
        let mut y = DenseMatrix::zeros(self.cols, x.cols());
        for i in 0..self.rows {
            let src = x.row(i).to_vec();
            for (j, v) in self.row(i) {
                for (o, &s) in y.row_mut(j).iter_mut().zip(&src) {
                    *o += v * s;
                }
            }
        }
        y
    }

    /// Dense `self · other`.
    pub fn mul_sparse(&self, other: &SparseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "sparse product shape");
        let mut y = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                for (c, w) in other.row(j) {
                    y[(i, c)] += v * w;
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        SparseMatrix::from_triplets(self.cols, self.rows, t).expect("valid by construction")
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}

/// `Σ_k w_k A(:, :, k)` as a sparse matrix.
pub fn slice_combination(t: &SparseTensor3, w: &[f64]) -> SparseMatrix {
    let [l, m, _] = t.dims();
    let triplets = t
        .entries()
        .iter()
        .filter(|e| w[e.k] != 0.0)
        .map(|e| (e.i, e.j, w[e.k] * e.value))
        .collect();
    SparseMatrix::from_triplets(l, m, triplets).expect("indices within extents")
}

/// The symmetric rank-2 matrix `U F̂ Uᵀ`, evaluated entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTwoSymmetric {
    pub u: DenseMatrix,
    pub f: [[f64; 2]; 2],
}

impl RankTwoSymmetric {
    pub fn size(&self) -> usize {
        self.u.rows()
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.u.row(i), self.u.row(j));
        a[0] * (self.f[0][0] * b[0] + self.f[0][1] * b[1]) + a[1] * (self.f[1][0] * b[0] + self.f[1][1] * b[1])
    }

    /// `‖B‖ = ‖F̂‖` for orthonormal `U`.
    pub fn frobenius_norm(&self) -> f64 {
        self.f.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.size();
        DenseMatrix::from_fn(n, n, |i, j| self.value(i, j))
    }

    /// Largest and smallest entry.
    pub fn extremes(&self, exec: Execution) -> (f64, f64) {
        let n = self.size();
        let rows: Vec<usize> = (0..n).collect();
        map_ordered(exec, &rows, |&i| {
            (i..n).fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), j| {
                let v = self.value(i, j);
                (hi.max(v), lo.min(v))
            })
        })
        .into_iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), (h, l)| (hi.max(h), lo.min(l)))
    }
}

/// `B = (U, U)·F` for a `2 × 2 × 1` core, as a rank-2 evaluator.
pub fn form_b(u: &DenseMatrix, core: &DenseTensor3) -> Result<RankTwoSymmetric> {
    if u.cols() != 2 || core.dims() != [2, 2, 1] {
        return Err(TensError::mismatch(format!(
            "rank-(2,2,1) term needs a 2-column factor and a 2×2×1 core, got {} columns and {:?}",
            u.cols(),
            core.dims()
        )));
    }
    let f = [
        [core.get(0, 0, 0), core.get(0, 1, 0)],
        [core.get(1, 0, 0), core.get(1, 1, 0)],
    ];
    Ok(RankTwoSymmetric { u: u.clone(), f })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Keep `b > θ · max b`.
    #[default]
    Positive,
    /// Keep `|b| > θ · max |b|`.
    Absolute,
}

/// Sparse `B̂`: the entries of `b` that pass the threshold. Entries are
/// decided on the upper triangle and mirrored, so `B̂` is exactly symmetric.
pub fn threshold_b(b: &RankTwoSymmetric, theta: f64, mode: ThresholdMode, exec: Execution) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(TensError::InvalidArgument(format!("θ must lie in [0, 1], got {theta}")));
    }
    let n = b.size();
    let (hi, lo) = b.extremes(exec);
    let keep = |v: f64| match mode {
        ThresholdMode::Positive => v > 0.0 && v > theta * hi,
        ThresholdMode::Absolute => v != 0.0 && v.abs() > theta * hi.abs().max(lo.abs()),
    };
    let rows: Vec<usize> = (0..n).collect();
    let upper: Vec<Vec<(usize, f64)>> = map_ordered(exec, &rows, |&i| {
        (i..n)
            .filter_map(|j| {
                let v = b.value(i, j);
                keep(v).then_some((j, v))
            })
            .collect()
    });
    let mut triplets = Vec::new();
    for (i, row) in upper.iter().enumerate() {
        for &(j, v) in row {
            triplets.push((i, j, v));
            if i != j {
                triplets.push((j, i, v));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// `base − Σ_t w_t ∘ B_t`, applied without forming the difference.
#[derive(Debug, Clone)]
pub struct DeflatedOperator {
    base: Arc<SparseTensor3>,
    terms: Vec<(Vec<f64>, SparseMatrix)>,
    exec: Execution,
}

/// Above this many term entries `norm_sq` switches from exact
/// materialization to the expanded inner-product formula.
const MATERIALIZE_LIMIT: usize = 1 << 23;

impl DeflatedOperator {
    pub fn new(base: Arc<SparseTensor3>, exec: Execution) -> Self {
        Self {
            base,
            terms: Vec::new(),
            exec,
        }
    }

    pub fn base(&self) -> &SparseTensor3 {
        &self.base
    }

    pub fn terms(&self) -> &[(Vec<f64>, SparseMatrix)] {
        &self.terms
    }

    /// `self − w ∘ B̂` as a new operator; the base tensor is shared.
    pub fn deflate(&self, w: &[f64], b_hat: &SparseMatrix) -> Result<Self> {
        let [l, m, n] = self.base.dims();
        if w.len() != n || b_hat.shape() != (l, m) {
            return Err(TensError::mismatch(format!(
                "term of shape {:?} with {} weights for a {:?} tensor",
                b_hat.shape(),
                w.len(),
                [l, m, n]
            )));
        }
        let mut out = self.clone();
        out.terms.push((w.to_vec(), b_hat.clone()));
        Ok(out)
    }

    fn term_support(&self) -> usize {
        self.terms
            .iter()
            .map(|(w, b)| b.nnz() * w.iter().filter(|&&x| x != 0.0).count())
            .sum()
    }

    /// The deflated tensor as an explicit sparse tensor.
    pub fn materialize(&self) -> SparseTensor3 {
        if self.terms.is_empty() {
            return (*self.base).clone();
        }
        let mut raw: Vec<Entry> = self.base.entries().to_vec();
        raw.reserve(self.term_support());
        for (w, b) in &self.terms {
            for (k, &wk) in w.iter().enumerate().filter(|(_, &x)| x != 0.0) {
                raw.extend(b.triplets().map(|(i, j, v)| Entry {
                    i,
                    j,
                    k,
                    value: -wk * v,
                }));
            }
        }
        SparseTensor3::from_raw(self.base.dims(), raw)
    }

    /// `⟨A(:, :, k), B⟩` for every slice `k`.
    fn slice_inners(&self, b: &SparseMatrix) -> Vec<f64> {
        let mut p = vec![0.0; self.base.dims()[2]];
        for e in self.base.entries() {
            p[e.k] += e.value * b.get(e.i, e.j);
        }
        p
    }

    fn gram_correction(&self, mode: Mode) -> DenseMatrix {
        let dims = self.base.dims();
        let size = dims[mode.axis()];
        let mut g = DenseMatrix::zeros(size, size);
        match mode {
            Mode::Three => {
                let p: Vec<Vec<f64>> = self.terms.iter().map(|(_, b)| self.slice_inners(b)).collect();
                for (t, (wt, bt)) in self.terms.iter().enumerate() {
                    for k in 0..size {
                        for k2 in 0..size {
                            g[(k, k2)] -= wt[k2] * p[t][k] + wt[k] * p[t][k2];
                        }
                    }
                    for (ws, bs) in &self.terms {
                        let c = bt.inner(bs).expect("equal shapes");
                        for k in 0..size {
                            for k2 in 0..size {
                                g[(k, k2)] += c * wt[k] * ws[k2];
                            }
                        }
                    }
                }
            }
            Mode::One | Mode::Two => {
                for (wt, bt) in &self.terms {
                    let aw = slice_combination(&self.base, wt);
                    let cross = match mode {
                        Mode::One => aw.mul_sparse(&bt.transpose()),
                        _ => aw.transpose().mul_sparse(bt),
                    };
                    for i in 0..size {
                        for j in 0..size {
                            g[(i, j)] -= cross[(i, j)] + cross[(j, i)];
                        }
                    }
                    for (ws, bs) in &self.terms {
                        let c = dot(wt, ws);
                        let prod = match mode {
                            Mode::One => bt.mul_sparse(&bs.transpose()),
                            _ => bt.transpose().mul_sparse(bs),
                        };
                        for i in 0..size {
                            for j in 0..size {
                                g[(i, j)] += c * prod[(i, j)];
                            }
                        }
                    }
                }
            }
        }
        g
    }
}

impl TensorOperator for DeflatedOperator {
    fn dims(&self) -> [usize; 3] {
        self.base.dims()
    }

    fn contract_except(&self, free: Mode, a: &DenseMatrix, b: &DenseMatrix) -> DenseTensor3 {
        let mut out = self.base.contract_except(self.exec, free, a, b);
        for (w, bm) in &self.terms {
            match free {
                Mode::Three => {
                    let core = a.t_matmul(&bm.mul_dense(b)).expect("factor shapes");
                    let [p, q, n] = out.dims();
                    for (k, &wk) in w.iter().enumerate().take(n) {
                        for y in 0..q {
                            for x in 0..p {
                                out[(x, y, k)] -= core[(x, y)] * wk;
                            }
                        }
                    }
                }
                Mode::One => {
                    let left = bm.mul_dense(a);
                    let cw = b.t_matmul(&DenseMatrix::from_fn(w.len(), 1, |k, _| w[k])).expect("factor shapes");
                    let [l, q, s] = out.dims();
                    for g in 0..s {
                        for y in 0..q {
                            for i in 0..l {
                                out[(i, y, g)] -= left[(i, y)] * cw[(g, 0)];
                            }
                        }
                    }
                }
                Mode::Two => {
                    let right = bm.t_mul_dense(a);
                    let cw = b.t_matmul(&DenseMatrix::from_fn(w.len(), 1, |k, _| w[k])).expect("factor shapes");
                    let [p, m, s] = out.dims();
                    for g in 0..s {
                        for j in 0..m {
                            for x in 0..p {
                                out[(x, j, g)] -= right[(j, x)] * cw[(g, 0)];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn norm_sq(&self) -> f64 {
        if self.terms.is_empty() {
            return self.base.norm_sq();
        }
        if self.term_support() <= MATERIALIZE_LIMIT {
            return self.materialize().norm_sq();
        }
        let mut s = self.base.norm_sq();
        for (wt, bt) in &self.terms {
            s -= 2.0 * dot(wt, &self.slice_inners(bt));
            for (ws, bs) in &self.terms {
                s += dot(wt, ws) * bt.inner(bs).expect("equal shapes");
            }
        }
        s.max(0.0)
    }

    fn unfolding_gram(&self, mode: Mode) -> DenseMatrix {
        let mut g = self.base.unfolding_gram(mode);
        if !self.terms.is_empty() {
            let c = self.gram_correction(mode);
            let (r, cols) = g.shape();
            g = DenseMatrix::from_fn(r, cols, |i, j| g[(i, j)] + c[(i, j)]);
        }
        g
    }

    fn gram_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix {
        let base = self.base.unfold_apply(mode, &self.base.unfold_t_apply(mode, x));
        if self.terms.is_empty() {
            return base;
        }
        if mode == Mode::Three {
            let c = self.gram_correction(mode).matmul(x).expect("shapes");
            return DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| base[(i, j)] + c[(i, j)]);
        }
        // G x = A Aᵀx − Σ (A_w Bᵀ + B A_wᵀ) x + Σ (w_t·w_s) B_t B_sᵀ x, with the
        // roles of rows and columns swapped for mode 2.
        let mut y = base;
        let sub = |y: &mut DenseMatrix, z: &DenseMatrix, c: f64| {
            for i in 0..y.rows() {
                for j in 0..y.cols() {
                    y[(i, j)] += c * z[(i, j)];
                }
            }
        };
        for (wt, bt) in &self.terms {
            let aw = slice_combination(&self.base, wt);
            let (aw, bt_rows) = match mode {
                Mode::One => (aw, bt.clone()),
                _ => (aw.transpose(), bt.transpose()),
            };
            sub(&mut y, &aw.mul_dense(&bt_rows.t_mul_dense(x)), -1.0);
            sub(&mut y, &bt_rows.mul_dense(&aw.t_mul_dense(x)), -1.0);
            for (ws, bs) in &self.terms {
                let bs_rows = match mode {
                    Mode::One => bs.clone(),
                    _ => bs.transpose(),
                };
                sub(&mut y, &bt_rows.mul_dense(&bs_rows.t_mul_dense(x)), dot(wt, ws));
            }
        }
        y
    }

    fn is_12_symmetric(&self, tol: f64) -> bool {
        self.base.is_12_symmetric(tol) && self.terms.iter().all(|(_, b)| b.is_symmetric())
    }

    fn scale_hint(&self) -> f64 {
        self.base.max_abs()
    }
}

/// Factors of one rank-(2,2,1) step in balanced form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank221 {
    pub u: DenseMatrix,
    pub w: Vec<f64>,
    pub core: DenseTensor3,
    /// Eigenvalues of `F̂`, largest first.
    pub eigenvalues: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
    pub restarts_disagree: bool,
}

/// Best rank-(2,2,1) approximation of a (1,2)-symmetric operator.
///
/// The two columns of `U` are only determined up to a rotation when the
/// eigenvalues of `F̂` have equal magnitude. They are rotated to the
/// balanced basis `(ê1 − ê2)/√2, (ê1 + ê2)/√2` of the eigenvectors of `F̂`,
/// in which `F̂` has equal diagonal entries; for a block term `(0 C; C' 0)`
/// this basis separates the two blocks and `F̂` is anti-diagonal. Columns
/// then get the usual sign convention, and the column whose largest entry
/// comes later is put first, giving the layout `(0 u; v 0)`. `w` is signed so
/// that its largest entry is positive.
pub fn rank221_term<O: TensorOperator + ?Sized>(op: &O, cfg: &SolverConfig) -> Result<Rank221> {
    let approx = hooi_symmetric(op, [2, 2, 1], cfg)?;
    let mut w = approx.w.column(0);
    let s = vector_sign(&w);
    w.iter_mut().for_each(|x| *x *= s);
    let f = [
        [s * approx.core.get(0, 0, 0), s * approx.core.get(0, 1, 0)],
        [s * approx.core.get(1, 0, 0), s * approx.core.get(1, 1, 0)],
    ];
    let sym = 0.5 * (f[0][1] + f[1][0]);
    let (eigenvalues, e) = sym2_eigen(f[0][0], sym, f[1][1]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // columns (ê1 − ê2)/√2 and (ê1 + ê2)/√2 in the coordinates of U
    let mut q = [
        [h * (e[0][0] - e[0][1]), h * (e[0][0] + e[0][1])],
        [h * (e[1][0] - e[1][1]), h * (e[1][0] + e[1][1])],
    ];
    let qm = DenseMatrix::from_fn(2, 2, |i, j| q[i][j]);
    let mut u = approx.u.matmul(&qm)?;
    for c in 0..2 {
        if column_sign(&u, c) < 0.0 {
            q[0][c] = -q[0][c];
            q[1][c] = -q[1][c];
        }
    }
    fix_column_signs(&mut u);
    let peak = |c: usize| {
        (0..u.rows())
            .max_by(|&a, &b| u[(a, c)].abs().total_cmp(&u[(b, c)].abs()).then(b.cmp(&a)))
            .unwrap_or(0)
    };
    if peak(0) < peak(1) {
        u = DenseMatrix::from_fn(u.rows(), 2, |r, c| u[(r, 1 - c)]);
        q = [[q[0][1], q[0][0]], [q[1][1], q[1][0]]];
    }
    // F' = Qᵀ F Q
    let mut core = DenseTensor3::zeros([2, 2, 1]);
    for a in 0..2 {
        for b in 0..2 {
            let mut v = 0.0;
            for x in 0..2 {
                for y in 0..2 {
                    v += q[x][a] * f[x][y] * q[y][b];
                }
            }
            core[(a, b, 0)] = v;
        }
    }
    Ok(Rank221 {
        u,
        w,
        core,
        eigenvalues,
        converged: approx.converged,
        iterations: approx.iterations,
        restarts_disagree: approx.restarts_disagree,
    })
}

/// Eigenvalues of opposite sign and nearly equal magnitude.
pub fn has_block_structure(eigenvalues: [f64; 2], margin: f64) -> bool {
    let [l1, l2] = eigenvalues;
    l1 * l2 < 0.0 && (l1 + l2).abs() <= margin * l1.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpansionConfig {
    pub terms: usize,
    pub theta: f64,
    pub threshold_mode: ThresholdMode,
    /// Relative margin for [`has_block_structure`].
    pub structure_margin: f64,
    pub solver: SolverConfig,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self {
            terms: 1,
            theta: 0.0,
            threshold_mode: ThresholdMode::Absolute,
            structure_margin: 0.05,
            solver: SolverConfig {
                symmetric: true,
                ..SolverConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub u: DenseMatrix,
    pub w: Vec<f64>,
    pub core: DenseTensor3,
    pub eigenvalues: [f64; 2],
    pub core_norm: f64,
    pub b_raw_norm: f64,
    pub b_raw_max: f64,
    pub b_raw_min: f64,
    #[serde(skip_serializing)]
    pub b_hat: SparseMatrix,
    pub b_hat_nnz: usize,
    pub b_hat_norm: f64,
    pub structured: bool,
    /// Smallest entry of the sign-normalized `w`; negative values are kept.
    pub w_min: f64,
    pub residual_norm_before: f64,
    pub residual_norm_after: f64,
    pub converged: bool,
    pub iterations: usize,
    pub restarts_disagree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    pub terms: Vec<ExpansionTerm>,
    /// `‖R⁽¹⁾‖, ‖R⁽²⁾‖, ...`, one more than the number of terms.
    pub residual_norms: Vec<f64>,
    /// Cosines between the `B̂` of all terms; absent when some `B̂` is empty.
    pub overlap: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
    /// Set when the solver failed and the expansion stopped early.
    pub stopped_early: Option<String>,
}

impl Expansion {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| TensError::Serialization(e.to_string()))
    }

    pub fn all_converged(&self) -> bool {
        self.terms.iter().all(|t| t.converged)
    }
}

/// Runs `cfg.terms` steps of compute, threshold, deflate.
pub fn expand(t: Arc<SparseTensor3>, cfg: &ExpansionConfig) -> Result<Expansion> {
    if cfg.terms == 0 {
        return Err(TensError::InvalidArgument("at least one term is required".into()));
    }
    if !t.is_12_symmetric(symmetry_tolerance(t.max_abs())) {
        return Err(TensError::Asymmetric("expansion needs symmetric slices".into()));
    }
    cfg.solver.validate()?;
    let exec = cfg.solver.execution;
    let mut op = DeflatedOperator::new(t, exec);
    let mut terms = Vec::with_capacity(cfg.terms);
    let mut residual_norms = vec![op.norm_sq().sqrt()];
    let mut warnings = Vec::new();
    let mut stopped_early = None;
    for nu in 0..cfg.terms {
        let step = match rank221_term(&op, &cfg.solver) {
            Ok(s) => s,
            Err(e) => {
                stopped_early = Some(format!("term {}: {e}", nu + 1));
                break;
            }
        };
        let b = form_b(&step.u, &step.core)?;
        let (b_raw_max, b_raw_min) = b.extremes(exec);
        let b_hat = threshold_b(&b, cfg.theta, cfg.threshold_mode, exec)?;
        if b_hat.nnz() == 0 {
            warnings.push(format!("term {}: thresholding removed every entry of B", nu + 1));
        }
        if !step.converged {
            warnings.push(format!("term {}: solver did not converge", nu + 1));
        }
        op = op.deflate(&step.w, &b_hat)?;
        let after = op.norm_sq().sqrt();
        residual_norms.push(after);
        terms.push(ExpansionTerm {
            core_norm: step.core.frobenius_norm(),
            b_raw_norm: b.frobenius_norm(),
            b_raw_max,
            b_raw_min,
            b_hat_nnz: b_hat.nnz(),
            b_hat_norm: b_hat.frobenius_norm(),
            b_hat,
            structured: has_block_structure(step.eigenvalues, cfg.structure_margin),
            w_min: step.w.iter().copied().fold(f64::INFINITY, f64::min),
            residual_norm_before: residual_norms[nu],
            residual_norm_after: after,
            converged: step.converged,
            iterations: step.iterations,
            restarts_disagree: step.restarts_disagree,
            eigenvalues: step.eigenvalues,
            u: step.u,
            w: step.w,
            core: step.core,
        });
    }
    let overlap = if terms.is_empty() {
        None
    } else {
        overlap_cosines(&terms.iter().map(|t| &t.b_hat).collect::<Vec<_>>()).ok()
    };
    Ok(Expansion {
        terms,
        residual_norms,
        overlap,
        warnings,
        stopped_early,
    })
}

/// `⟨B̂_a, B̂_b⟩ / (‖B̂_a‖ ‖B̂_b‖)` for all pairs.
pub fn overlap_cosines(terms: &[&SparseMatrix]) -> Result<Vec<Vec<f64>>> {
    if terms.is_empty() {
        return Err(TensError::InvalidArgument("no terms".into()));
    }
    // squared norms keep the diagonal and identical pairs at exactly 1
    let norms: Vec<f64> = terms.iter().map(|b| b.values.iter().map(|v| v * v).sum()).collect();
    if let Some(p) = norms.iter().position(|&x| x == 0.0) {
        return Err(TensError::ZeroNormTerm(p));
    }
    let q = terms.len();
    let mut c = vec![vec![0.0; q]; q];
    for a in 0..q {
        c[a][a] = 1.0;
        for b in 0..a {
            let v = (terms[a].inner(terms[b])? / (norms[a] * norms[b]).sqrt()).clamp(-1.0, 1.0);
            c[a][b] = v;
            c[b][a] = v;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    /// `(index, label)` of every vertex touched by an edge, in index order.
    pub vertices: Vec<(usize, String)>,
    /// Undirected edges `(i, j, weight)` with `i ≤ j`.
    pub edges: Vec<(usize, usize, f64)>,
    pub w: Vec<f64>,
}

impl Subgraph {
    /// `src dst weight` lines with labels; whitespace inside labels becomes `_`.
    pub fn edge_list(&self) -> String {
        let name: std::collections::HashMap<usize, String> = self
            .vertices
            .iter()
            .map(|(i, l)| (*i, l.split_whitespace().collect::<Vec<_>>().join("_")))
            .collect();
        self.edges
            .iter()
            .map(|(i, j, v)| format!("{} {} {v:?}\n", name[i], name[j]))
            .collect()
    }

    /// `slice_index,value` CSV of the temporal profile, slices 1-based.
    pub fn w_csv(&self) -> String {
        let mut s = String::from("slice_index,value\n");
        for (k, v) in self.w.iter().enumerate() {
            s.push_str(&format!("{},{v:?}\n", k + 1));
        }
        s
    }
}

pub fn subgraph_export(term: &ExpansionTerm, labels: &LabelTable) -> Result<Subgraph> {
    labels.check_extent(term.b_hat.shape().0)?;
    let edges: Vec<(usize, usize, f64)> = term.b_hat.triplets().filter(|&(i, j, _)| i <= j).collect();
    let mut touched: Vec<usize> = edges.iter().flat_map(|&(i, j, _)| [i, j]).collect();
    touched.sort_unstable();
    touched.dedup();
    Ok(Subgraph {
        vertices: touched.into_iter().map(|i| (i, labels.get(i).to_string())).collect(),
        edges,
        w: term.w.clone(),
    })
}
