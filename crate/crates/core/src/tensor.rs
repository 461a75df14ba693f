//! Coordinate-format sparse 3-tensors and their multilinear products.
//!
//! Entries are kept sorted by `(k, i, j)` so that every frontal slice is a
//! contiguous run. All indices are 0-based; the on-disk `.tns` format is
//! 1-based and converted in [`crate::io`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dense::{DenseMatrix, DenseTensor3};
use crate::error::{Result, TensError};
use crate::exec::{chunked_reduce, Execution};

/// Mode-1 products whose matrix has at most this many rows produce a dense result.
pub const DEFAULT_DENSE_THRESHOLD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// 0-based axis.
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// Parses the 1-based mode number.
    pub fn from_number(n: usize) -> Result<Mode> {
        match n {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            _ => Err(TensError::InvalidArgument(format!("mode {n} is not 1, 2 or 3"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.axis() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub value: f64,
}

impl Entry {
    #[inline]
    fn key(&self) -> (usize, usize, usize) {
        (self.k, self.i, self.j)
    }

    #[inline]
    fn index(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.i,
            Mode::Two => self.j,
            Mode::Three => self.k,
        }
    }
}

/// A bijection on `0..n`, stored as `map[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &m in &map {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return Err(TensError::InvalidPermutation(format!(
                    "{m} repeated or outside 0..{n}"
                )));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Builds the permutation that moves `order[p]` to position `p`.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        Ok(Self::new(order.to_vec())?.inverse())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// New position of old index `old`.
    pub fn apply(&self, old: usize) -> usize {
        self.map[old]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Old indices listed in their new order.
    pub fn order(&self) -> Vec<usize> {
        self.inverse().map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (old, &new) in self.map.iter().enumerate() {
            inv[new] = old;
        }
        Self { map: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(a, &b)| a == b)
    }
}

/// Result of a single-mode product.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeProduct {
    Dense(DenseTensor3),
    Sparse(SparseTensor3),
}

impl ModeProduct {
    pub fn dims(&self) -> [usize; 3] {
        match self {
            ModeProduct::Dense(d) => d.dims(),
            ModeProduct::Sparse(s) => s.dims(),
        }
    }

    pub fn into_dense(self) -> DenseTensor3 {
        match self {
            ModeProduct::Dense(d) => d,
            ModeProduct::Sparse(s) => s.to_dense(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            ModeProduct::Dense(d) => d.frobenius_norm(),
            ModeProduct::Sparse(s) => s.frobenius_norm(),
        }
    }
}

/// Sparse real `l × m × n` tensor in canonical coordinate format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTensor3 {
    dims: [usize; 3],
    entries: Vec<Entry>,
}

impl SparseTensor3 {
    /// Builds a tensor from `(i, j, k, value)` tuples. Duplicates are summed
    /// in input order and zero results are dropped.
    pub fn new(
        dims: [usize; 3],
        entries: impl IntoIterator<Item = (usize, usize, usize, f64)>,
    ) -> Result<Self> {
        if dims.contains(&0) {
            return Err(TensError::InvalidArgument(format!(
                "extents must be positive, got {dims:?}"
            )));
        }
        let mut raw = Vec::new();
        for (i, j, k, value) in entries {
            if i >= dims[0] || j >= dims[1] || k >= dims[2] {
                return Err(TensError::IndexOutOfRange(format!(
                    "({i}, {j}, {k}) in a {dims:?} tensor"
                )));
            }
            if !value.is_finite() {
                return Err(TensError::NonFinite("tensor entry"));
            }
            raw.push(Entry { i, j, k, value });
        }
        Ok(Self::from_raw(dims, raw))
    }

    pub fn empty(dims: [usize; 3]) -> Result<Self> {
        Self::new(dims, std::iter::empty())
    }

    /// Canonicalizes already validated entries.
    pub(crate) fn from_raw(dims: [usize; 3], mut raw: Vec<Entry>) -> Self {
        raw.sort_by_key(Entry::key);
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.key() == e.key() => last.value += e.value,
                _ => {
                    if entries.last().is_some_and(|l| l.value == 0.0) {
                        entries.pop();
                    }
                    entries.push(e);
                }
            }
        }
        if entries.last().is_some_and(|l| l.value == 0.0) {
            entries.pop();
        }
        Self { dims, entries }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries
            .binary_search_by(|e| e.key().cmp(&(k, i, j)))
            .map_or(0.0, |p| self.entries[p].value)
    }

    /// Entries of frontal slice `k`.
    pub fn slice_entries(&self, k: usize) -> &[Entry] {
        let lo = self.entries.partition_point(|e| e.k < k);
        let hi = self.entries.partition_point(|e| e.k <= k);
        &self.entries[lo..hi]
    }

    /// Non-empty frontal slices in order.
    pub fn slices(&self) -> impl Iterator<Item = (usize, &[Entry])> {
        self.entries
            .chunk_by(|a, b| a.k == b.k)
            .map(|run| (run[0].k, run))
    }

    /// Applies `f` to every value; zero results are dropped.
    pub fn map_values(&self, mut f: impl FnMut(&Entry) -> f64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| Entry { value: f(e), ..*e })
            .filter(|e| e.value != 0.0)
            .collect();
        Self {
            dims: self.dims,
            entries,
        }
    }

    /// Sum of squares, taken in ascending order so the result depends only
    /// on the multiset of values (relabeling indices leaves it bit-identical).
    pub fn norm_sq(&self) -> f64 {
        let mut sq: Vec<f64> = self.entries.iter().map(|e| e.value * e.value).collect();
        sq.sort_unstable_by(f64::total_cmp);
        sq.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.value.abs()).fold(0.0, f64::max)
    }

    /// Inner product with another sparse tensor, summed in canonical order.
    pub fn inner(&self, other: &SparseTensor3) -> Result<f64> {
        self.check_same_dims(other.dims)?;
        let (a, b) = (&self.entries, &other.entries);
        let (mut p, mut q) = (0, 0);
        let mut acc = 0.0;
        while p < a.len() && q < b.len() {
            match a[p].key().cmp(&b[q].key()) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[p].value * b[q].value;
                    p += 1;
                    q += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Inner product with a dense tensor of the same shape.
    pub fn inner_dense(&self, other: &DenseTensor3) -> Result<f64> {
        self.check_same_dims(other.dims())?;
        Ok(self
            .entries
            .iter()
            .map(|e| e.value * other.get(e.i, e.j, e.k))
            .sum())
    }

    fn check_same_dims(&self, dims: [usize; 3]) -> Result<()> {
        if self.dims != dims {
            return Err(TensError::mismatch(format!("{:?} vs {:?}", self.dims, dims)));
        }
        Ok(())
    }

    /// Multiplies every fiber in `mode` by `m` (`p × extent`), i.e. the
    /// product `b_{ijk} = Σ_α m_{iα} a_{αjk}` for mode 1 and its analogues.
    /// The result is dense when `m` has at most [`DEFAULT_DENSE_THRESHOLD`] rows.
    pub fn mode_multiply(&self, m: &DenseMatrix, mode: Mode) -> Result<ModeProduct> {
        self.mode_multiply_with(m, mode, DEFAULT_DENSE_THRESHOLD)
    }

    pub fn mode_multiply_with(
        &self,
        m: &DenseMatrix,
        mode: Mode,
        dense_threshold: usize,
    ) -> Result<ModeProduct> {
        let axis = mode.axis();
        if m.cols() != self.dims[axis] {
            return Err(TensError::mismatch(format!(
                "mode-{mode} extent {} vs matrix with {} columns",
                self.dims[axis],
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(TensError::NonFinite("mode-product matrix"));
        }
        let mut dims = self.dims;
        dims[axis] = m.rows();
        if dims.contains(&0) {
            return Err(TensError::mismatch("matrix has no rows"));
        }
        let target = |e: &Entry, s: usize| match mode {
            Mode::One => (s, e.j, e.k),
            Mode::Two => (e.i, s, e.k),
            Mode::Three => (e.i, e.j, s),
        };
        if m.rows() <= dense_threshold {
            let mut out = DenseTensor3::zeros(dims);
            for e in &self.entries {
                let src = e.index(mode);
                for s in 0..m.rows() {
                    let (a, b, c) = target(e, s);
                    out[(a, b, c)] += m[(s, src)] * e.value;
                }
            }
            Ok(ModeProduct::Dense(out))
        } else {
            let mut raw = Vec::with_capacity(self.entries.len() * m.rows());
            for e in &self.entries {
                let src = e.index(mode);
                for s in 0..m.rows() {
                    let value = m[(s, src)] * e.value;
                    if value != 0.0 {
                        let (i, j, k) = target(e, s);
                        raw.push(Entry { i, j, k, value });
                    }
                }
            }
            Ok(ModeProduct::Sparse(Self::from_raw(dims, raw)))
        }
    }

    /// All-mode contraction `A·(X, Y, Z)`: `f_{abc} = Σ a_{ijk} x_{ia} y_{jb} z_{kc}`.
    /// `X`, `Y`, `Z` have `l`, `m`, `n` rows respectively.
    pub fn multi_multiply(
        &self,
        x: &DenseMatrix,
        y: &DenseMatrix,
        z: &DenseMatrix,
    ) -> Result<DenseTensor3> {
        self.multi_multiply_with(Execution::Sequential, x, y, z)
    }

    pub fn multi_multiply_with(
        &self,
        exec: Execution,
        x: &DenseMatrix,
        y: &DenseMatrix,
        z: &DenseMatrix,
    ) -> Result<DenseTensor3> {
        self.check_factor_rows(Mode::One, x)?;
        self.check_factor_rows(Mode::Two, y)?;
        self.check_factor_rows(Mode::Three, z)?;
        self.contract_except(exec, Mode::Three, x, y)
            .contract_mode(Mode::Three, z)
    }

    pub(crate) fn check_factor_rows(&self, mode: Mode, m: &DenseMatrix) -> Result<()> {
        if m.rows() != self.dims[mode.axis()] {
            return Err(TensError::mismatch(format!(
                "mode-{mode} extent {} vs factor with {} rows",
                self.dims[mode.axis()],
                m.rows()
            )));
        }
        if !m.is_finite() {
            return Err(TensError::NonFinite("factor matrix"));
        }
        Ok(())
    }

    /// Contracts the two modes other than `free` with the columns of `a` and
    /// `b` (in increasing mode order). Mode `free` keeps its full extent.
    ///
    /// Panics if the factor row counts do not match the contracted extents.
    pub fn contract_except(
        &self,
        exec: Execution,
        free: Mode,
        a: &DenseMatrix,
        b: &DenseMatrix,
    ) -> DenseTensor3 {
        let [l, m, n] = self.dims;
        let (ra, rb) = (a.cols(), b.cols());
        let dims = match free {
            Mode::One => {
                assert!(a.rows() == m && b.rows() == n, "factor shapes");
                [l, ra, rb]
            }
            Mode::Two => {
                assert!(a.rows() == l && b.rows() == n, "factor shapes");
                [ra, m, rb]
            }
            Mode::Three => {
                assert!(a.rows() == l && b.rows() == m, "factor shapes");
                [ra, rb, n]
            }
        };
        chunked_reduce(
            exec,
            &self.entries,
            || DenseTensor3::zeros(dims),
            |out, chunk| accumulate_except(out, chunk, free, a, b),
            |acc, part| {
                for (x, y) in acc.values_mut().iter_mut().zip(part.values()) {
                    *x += y;
                }
            },
        )
    }

    /// `unfold(mode)ᵀ · x`; rows follow the column layout of
    /// [`DenseTensor3::unfold`].
    pub(crate) fn unfold_t_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix {
        let r = x.cols();
        let rows = self.other_extent_product(mode);
        let mut z = DenseMatrix::zeros(rows, r);
        for e in &self.entries {
            let (row, col) = self.unfold_position(e, mode);
            let src = x.row(row);
            for (o, &s) in z.row_mut(col).iter_mut().zip(src) {
                *o += e.value * s;
            }
        }
        z
    }

    /// `unfold(mode) · z`.
    pub(crate) fn unfold_apply(&self, mode: Mode, z: &DenseMatrix) -> DenseMatrix {
        let r = z.cols();
        let mut y = DenseMatrix::zeros(self.dims[mode.axis()], r);
        for e in &self.entries {
            let (row, col) = self.unfold_position(e, mode);
            let src = z.row(col);
            for (o, &s) in y.row_mut(row).iter_mut().zip(src) {
                *o += e.value * s;
            }
        }
        y
    }

    /// Explicit Gram matrix `unfold(mode) · unfold(mode)ᵀ`.
    pub(crate) fn unfolding_gram(&self, mode: Mode) -> DenseMatrix {
        let extent = self.dims[mode.axis()];
        let mut keyed: Vec<(usize, usize, f64)> = self
            .entries
            .iter()
            .map(|e| {
                let (row, col) = self.unfold_position(e, mode);
                (col, row, e.value)
            })
            .collect();
        keyed.sort_by_key(|&(col, row, _)| (col, row));
        let mut g = DenseMatrix::zeros(extent, extent);
        for fiber in keyed.chunk_by(|a, b| a.0 == b.0) {
            for (p, &(_, ra, va)) in fiber.iter().enumerate() {
                for &(_, rb, vb) in &fiber[p..] {
                    g[(ra, rb)] += va * vb;
                }
            }
        }
        for a in 0..extent {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    fn other_extent_product(&self, mode: Mode) -> usize {
        let [l, m, n] = self.dims;
        match mode {
            Mode::One => m * n,
            Mode::Two => l * n,
            Mode::Three => l * m,
        }
    }

    #[inline]
    fn unfold_position(&self, e: &Entry, mode: Mode) -> (usize, usize) {
        let [l, m, _] = self.dims;
        match mode {
            Mode::One => (e.i, e.j + m * e.k),
            Mode::Two => (e.j, e.i + l * e.k),
            Mode::Three => (e.k, e.i + l * e.j),
        }
    }

    /// True iff every frontal slice is symmetric: `|a_{ijk} − a_{jik}| ≤ tol`.
    pub fn is_12_symmetric(&self, tol: f64) -> bool {
        if self.dims[0] != self.dims[1] {
            return false;
        }
        self.entries
            .iter()
            .all(|e| (e.value - self.get(e.j, e.i, e.k)).abs() <= tol)
    }

    /// Tensor whose frontal slices are the transposes of this tensor's slices.
    pub fn transpose_slices(&self) -> Self {
        let [l, m, n] = self.dims;
        let raw = self
            .entries
            .iter()
            .map(|e| Entry {
                i: e.j,
                j: e.i,
                ..*e
            })
            .collect();
        Self::from_raw([m, l, n], raw)
    }

    /// Embeds an `l × m × n` tensor as the (1,2)-symmetric block tensor
    /// `(0 A; A' 0)` of size `(l+m) × (l+m) × n`.
    pub fn symmetric_embed(&self) -> Self {
        let [l, m, n] = self.dims;
        let mut raw = Vec::with_capacity(2 * self.entries.len());
        for e in &self.entries {
            raw.push(Entry { j: l + e.j, ..*e });
            raw.push(Entry {
                i: l + e.j,
                j: e.i,
                ..*e
            });
        }
        Self::from_raw([l + m, l + m, n], raw)
    }

    /// Relabels indices of `mode` so that old index `x` becomes `perm.apply(x)`.
    pub fn permute_mode(&self, perm: &Permutation, mode: Mode) -> Result<Self> {
        let extent = self.dims[mode.axis()];
        if perm.len() != extent {
            return Err(TensError::InvalidPermutation(format!(
                "length {} for mode-{mode} extent {extent}",
                perm.len()
            )));
        }
        let raw = self
            .entries
            .iter()
            .map(|e| {
                let mut out = *e;
                match mode {
                    Mode::One => out.i = perm.apply(e.i),
                    Mode::Two => out.j = perm.apply(e.j),
                    Mode::Three => out.k = perm.apply(e.k),
                }
                out
            })
            .collect();
        Ok(Self::from_raw(self.dims, raw))
    }

    /// Block `A(I, J, K)` for sorted index sets, reindexed densely.
    pub fn subtensor(&self, rows: &[usize], cols: &[usize], slices: &[usize]) -> Result<Self> {
        let maps = [
            index_map(rows, self.dims[0], Mode::One)?,
            index_map(cols, self.dims[1], Mode::Two)?,
            index_map(slices, self.dims[2], Mode::Three)?,
        ];
        let dims = [rows.len(), cols.len(), slices.len()];
        if dims.contains(&0) {
            return Err(TensError::EmptySubtensor);
        }
        let raw = self
            .entries
            .iter()
            .filter_map(|e| {
                Some(Entry {
                    i: maps[0][e.i]?,
                    j: maps[1][e.j]?,
                    k: maps[2][e.k]?,
                    value: e.value,
                })
            })
            .collect();
        Ok(Self::from_raw(dims, raw))
    }

    pub fn to_dense(&self) -> DenseTensor3 {
        let mut d = DenseTensor3::zeros(self.dims);
        for e in &self.entries {
            d[(e.i, e.j, e.k)] = e.value;
        }
        d
    }

    /// Sparse tensor holding the nonzeros of a dense tensor.
    pub fn from_dense(d: &DenseTensor3) -> Self {
        let [p, q, r] = d.dims();
        let mut raw = Vec::new();
        for k in 0..r {
            for i in 0..p {
                for j in 0..q {
                    let value = d.get(i, j, k);
                    if value != 0.0 {
                        raw.push(Entry { i, j, k, value });
                    }
                }
            }
        }
        Self {
            dims: d.dims(),
            entries: raw,
        }
    }

    /// Elementwise sum `self + other`.
    pub fn add(&self, other: &SparseTensor3) -> Result<Self> {
        self.check_same_dims(other.dims)?;
        let raw = self
            .entries
            .iter()
            .chain(&other.entries)
            .copied()
            .collect();
        Ok(Self::from_raw(self.dims, raw))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_values(|e| e.value * factor)
    }
}

fn index_map(set: &[usize], extent: usize, mode: Mode) -> Result<Vec<Option<usize>>> {
    let mut map = vec![None; extent];
    let mut prev: Option<usize> = None;
    for (new, &old) in set.iter().enumerate() {
        if old >= extent {
            return Err(TensError::IndexOutOfRange(format!(
                "mode-{mode} index {old} with extent {extent}"
            )));
        }
        if prev.is_some_and(|p| p >= old) {
            return Err(TensError::InvalidArgument(format!(
                "mode-{mode} index set is not strictly increasing"
            )));
        }
        prev = Some(old);
        map[old] = Some(new);
    }
    Ok(map)
}

fn accumulate_except(
    out: &mut DenseTensor3,
    entries: &[Entry],
    free: Mode,
    a: &DenseMatrix,
    b: &DenseMatrix,
) {
    let [d0, d1, _] = out.dims();
    let vals = out.values_mut();
    for e in entries {
        match free {
            Mode::One => {
                let (ar, br) = (a.row(e.j), b.row(e.k));
                for (g, &bg) in br.iter().enumerate() {
                    let s = e.value * bg;
                    for (al, &av) in ar.iter().enumerate() {
                        vals[e.i + d0 * (al + d1 * g)] += s * av;
                    }
                }
            }
            Mode::Two => {
                let (ar, br) = (a.row(e.i), b.row(e.k));
                for (g, &bg) in br.iter().enumerate() {
                    let s = e.value * bg;
                    for (al, &av) in ar.iter().enumerate() {
                        vals[al + d0 * (e.j + d1 * g)] += s * av;
                    }
                }
            }
            Mode::Three => {
                let (ar, br) = (a.row(e.i), b.row(e.j));
                for (be, &bv) in br.iter().enumerate() {
                    let s = e.value * bv;
                    for (al, &av) in ar.iter().enumerate() {
                        vals[al + d0 * (be + d1 * e.k)] += s * av;
                    }
                }
            }
        }
    }
}
