//! Test fixtures and independent oracles. Nothing here calls the solver or
//! contraction code under test; dense loops and nalgebra are used instead.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tenspart::{DenseMatrix, DenseTensor3, SparseTensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain dense 3-tensor, first index fastest.
#[derive(Clone, Debug)]
pub struct Dense3 {
    pub dims: [usize; 3],
    pub v: Vec<f64>,
}

impl Dense3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Self {
            dims,
            v: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.v[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut f64 {
        let p = i + self.dims[0] * (j + self.dims[1] * k);
        &mut self.v[p]
    }

    pub fn from_sparse(t: &SparseTensor3) -> Self {
        let mut d = Self::zeros(t.dims());
        for e in t.entries() {
            *d.at_mut(e.i, e.j, e.k) = e.value;
        }
        d
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `b_{..α..} = Σ_x m[α][x] a_{..x..}` along `mode` (0-based), by loops.
    pub fn mode_product(&self, m: &[Vec<f64>], mode: usize) -> Self {
        let mut dims = self.dims;
        dims[mode] = m.len();
        let mut out = Self::zeros(dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let idx = [i, j, k];
                    let mut s = 0.0;
                    for x in 0..self.dims[mode] {
                        let mut src = idx;
                        src[mode] = x;
                        s += m[idx[mode]][x] * self.at(src[0], src[1], src[2]);
                    }
                    *out.at_mut(i, j, k) = s;
                }
            }
        }
        out
    }

    /// Mode unfolding as an nalgebra matrix (columns ordered by the
    /// remaining indices, lower mode fastest).
    pub fn unfold(&self, mode: usize) -> DMatrix<f64> {
        let [p, q, r] = self.dims;
        let rows = self.dims[mode];
        let cols = p * q * r / rows;
        let mut m = DMatrix::zeros(rows, cols);
        for k in 0..r {
            for j in 0..q {
                for i in 0..p {
                    let (row, col) = match mode {
                        0 => (i, j + q * k),
                        1 => (j, i + p * k),
                        _ => (k, i + p * j),
                    };
                    m[(row, col)] = self.at(i, j, k);
                }
            }
        }
        m
    }

    pub fn max_diff(&self, other: &DenseTensor3) -> f64 {
        assert_eq!(self.dims, other.dims());
        let mut worst: f64 = 0.0;
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    worst = worst.max((self.at(i, j, k) - other.get(i, j, k)).abs());
                }
            }
        }
        worst
    }
}

pub fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn transpose_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// `A·(X, Y, Z)` by three loop contractions.
pub fn brute_multi(t: &Dense3, x: &DenseMatrix, y: &DenseMatrix, z: &DenseMatrix) -> Dense3 {
    t.mode_product(&transpose_rows(x), 0)
        .mode_product(&transpose_rows(y), 1)
        .mode_product(&transpose_rows(z), 2)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Modified Gram–Schmidt on a Gaussian matrix.
pub fn gs_orthonormal(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut cs: Vec<Vec<f64>> = Vec::new();
    while cs.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for c in &cs {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            cs.push(v);
        }
    }
    DenseMatrix::from_fn(rows, cols, |i, j| cs[j][i])
}

/// Random sparse tensor with roughly `density` of the entries set.
pub fn random_sparse(rng: &mut impl Rng, dims: [usize; 3], density: f64) -> SparseTensor3 {
    let mut raw = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                if rng.random::<f64>() < density {
                    raw.push((i, j, k, gaussian(rng)));
                }
            }
        }
    }
    SparseTensor3::new(dims, raw).unwrap()
}

/// Random (1,2)-symmetric tensor.
pub fn random_symmetric(rng: &mut impl Rng, m: usize, n: usize, density: f64) -> SparseTensor3 {
    let mut raw = Vec::new();
    for k in 0..n {
        for i in 0..m {
            for j in i..m {
                if rng.random::<f64>() < density {
                    let v = gaussian(rng);
                    raw.push((i, j, k, v));
                    if i != j {
                        raw.push((j, i, k, v));
                    }
                }
            }
        }
    }
    SparseTensor3::new([m, m, n], raw).unwrap()
}

pub fn dense_as_sparse(rng: &mut impl Rng, dims: [usize; 3]) -> SparseTensor3 {
    random_sparse(rng, dims, 1.1)
}

/// Sine of the largest principal angle, via the projector residual.
pub fn angle(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let (a, b) = (to_na(a), to_na(b));
    let r = &b - &a * (a.transpose() * &b);
    r.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn column_matrix(v: &[f64]) -> DenseMatrix {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    DenseMatrix::from_fn(v.len(), 1, |i, _| v[i] / n)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// Leading `r` left singular vectors by nalgebra SVD.
pub fn svd_left(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(m.nrows(), r, |i, c| u[(i, idx[c])])
}

/// Reference HOOI on a dense tensor: explicit unfoldings and SVDs.
/// Returns the final objective and its history.
pub fn oracle_hooi(
    t: &Dense3,
    ranks: [usize; 3],
    start: [DMatrix<f64>; 3],
    iters: usize,
    tol: f64,
) -> (f64, Vec<f64>) {
    let [mut u, mut v, mut w] = start;
    let obj = |u: &DMatrix<f64>, v: &DMatrix<f64>, w: &DMatrix<f64>| {
        brute_multi(t, &from_na(u), &from_na(v), &from_na(w)).norm()
    };
    let mut hist = vec![obj(&u, &v, &w)];
    for _ in 0..iters {
        let c = t
            .mode_product(&transpose_rows(&from_na(&v)), 1)
            .mode_product(&transpose_rows(&from_na(&w)), 2);
        u = svd_left(&c.unfold(0), ranks[0]);
        let c = t
            .mode_product(&transpose_rows(&from_na(&u)), 0)
            .mode_product(&transpose_rows(&from_na(&w)), 2);
        v = svd_left(&c.unfold(1), ranks[1]);
        let c = t
            .mode_product(&transpose_rows(&from_na(&u)), 0)
            .mode_product(&transpose_rows(&from_na(&v)), 1);
        w = svd_left(&c.unfold(2), ranks[2]);
        let o = obj(&u, &v, &w);
        let prev = *hist.last().unwrap();
        hist.push(o);
        if (o - prev).abs() <= tol * o {
            break;
        }
    }
    (*hist.last().unwrap(), hist)
}

/// Best objective of `starts` random-start reference HOOI runs.
pub fn best_of_restarts(t: &Dense3, ranks: [usize; 3], starts: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    (0..starts)
        .map(|_| {
            let s = [
                to_na(&gs_orthonormal(&mut r, t.dims[0], ranks[0])),
                to_na(&gs_orthonormal(&mut r, t.dims[1], ranks[1])),
                to_na(&gs_orthonormal(&mut r, t.dims[2], ranks[2])),
            ];
            oracle_hooi(t, ranks, s, 5000, 1e-15).0
        })
        .fold(0.0, f64::max)
}

/// Zachary karate club, 1-based edge list.
pub const KARATE_EDGES: [(usize, usize); 78] = [
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9), (1, 11), (1, 12),
    (1, 13), (1, 14), (1, 18), (1, 20), (1, 22), (1, 32), (2, 3), (2, 4), (2, 8), (2, 14),
    (2, 18), (2, 20), (2, 22), (2, 31), (3, 4), (3, 8), (3, 9), (3, 10), (3, 14), (3, 28),
    (3, 29), (3, 33), (4, 8), (4, 13), (4, 14), (5, 7), (5, 11), (6, 7), (6, 11), (6, 17),
    (7, 17), (9, 31), (9, 33), (9, 34), (10, 34), (14, 34), (15, 33), (15, 34), (16, 33), (16, 34),
    (19, 33), (19, 34), (20, 34), (21, 33), (21, 34), (23, 33), (23, 34), (24, 26), (24, 28), (24, 30),
    (24, 33), (24, 34), (25, 26), (25, 28), (25, 32), (26, 32), (27, 30), (27, 34), (28, 34), (29, 32),
    (29, 34), (30, 33), (30, 34), (31, 33), (31, 34), (32, 33), (32, 34), (33, 34),
];

/// Normalized karate adjacency `D^{-1/2} A D^{-1/2}`, computed densely.
pub fn karate_normalized() -> DMatrix<f64> {
    let n = 34;
    let mut a = DMatrix::zeros(n, n);
    for &(x, y) in &KARATE_EDGES {
        a[(x - 1, y - 1)] = 1.0;
        a[(y - 1, x - 1)] = 1.0;
    }
    let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] / (d[i] * d[j]).sqrt())
}

/// Raw (0/1) karate adjacency replicated in `slices` identical slices.
pub fn karate_tensor(slices: usize) -> SparseTensor3 {
    let mut raw = Vec::new();
    for k in 0..slices {
        for &(x, y) in &KARATE_EDGES {
            raw.push((x - 1, y - 1, k, 1.0));
            raw.push((y - 1, x - 1, k, 1.0));
        }
    }
    SparseTensor3::new([34, 34, slices], raw).unwrap()
}

/// Eigenpairs of a symmetric matrix, eigenvalues in decreasing order.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..m.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&p| eig.eigenvalues[p]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), m.ncols(), |i, c| eig.eigenvectors[(i, idx[c])]);
    (vals, vecs)
}

/// Random nonnegative unit vector with every entry at least `floor`.
pub fn positive_unit(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>()).collect();
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

/// A block term `(0 C; C' 0)` with `C = τ u ∘ v ∘ w`, embedded at `offset`
/// in an `size × size × n` tensor. Returns raw entries.
pub fn block_term_entries(
    u: &[f64],
    v: &[f64],
    w: &[f64],
    tau: f64,
    offset: usize,
) -> Vec<(usize, usize, usize, f64)> {
    let m1 = u.len();
    let mut raw = Vec::new();
    for (k, &wk) in w.iter().enumerate() {
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                let x = tau * ui * vj * wk;
                if x != 0.0 {
                    raw.push((offset + i, offset + m1 + j, k, x));
                    raw.push((offset + m1 + j, offset + i, k, x));
                }
            }
        }
    }
    raw
}

pub struct BlockTerm {
    pub tensor: SparseTensor3,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub tau: f64,
}

impl BlockTerm {
    /// `(0 u; v 0)` as an `(m1+m2) × 2` matrix.
    pub fn u_struct(&self) -> DenseMatrix {
        let m1 = self.u.len();
        DenseMatrix::from_fn(m1 + self.v.len(), 2, |i, c| match (c, i < m1) {
            (0, false) => self.v[i - m1],
            (1, true) => self.u[i],
            _ => 0.0,
        })
    }
}

pub fn block_term(rng: &mut impl Rng, m1: usize, m2: usize, n: usize, tau: f64) -> BlockTerm {
    let u = positive_unit(rng, m1, 0.05);
    let v = positive_unit(rng, m2, 0.05);
    let w = positive_unit(rng, n, 0.05);
    let tensor = SparseTensor3::new([m1 + m2, m1 + m2, n], block_term_entries(&u, &v, &w, tau, 0)).unwrap();
    BlockTerm { tensor, u, v, w, tau }
}

/// Symmetric Gaussian noise on `count` random positions per slice, scaled
/// to Frobenius norm `norm`.
pub fn symmetric_noise(rng: &mut impl Rng, m: usize, n: usize, count: usize, norm: f64) -> SparseTensor3 {
    let mut cells: HashMap<(usize, usize, usize), f64> = HashMap::new();
    for k in 0..n {
        for _ in 0..count {
            let (i, j) = (rng.random_range(0..m), rng.random_range(0..m));
            let (i, j) = (i.min(j), i.max(j));
            *cells.entry((i, j, k)).or_insert(0.0) += gaussian(rng);
        }
    }
    let mut raw = Vec::new();
    for (&(i, j, k), &v) in &cells {
        raw.push((i, j, k, v));
        if i != j {
            raw.push((j, i, k, v));
        }
    }
    let t = SparseTensor3::new([m, m, n], raw).unwrap();
    let s = norm / t.frobenius_norm();
    t.scale(s)
}

/// Planted two-block tensor: blocks of `half` vertices with intra-block
/// edge probability `p`, `cross` weak edges of weight `weak` per slice, each
/// slice normalized, then symmetric noise of relative norm `noise`, then a
/// random relabeling. Returns the tensor and the block of every vertex.
pub fn planted_two_block(
    rng: &mut impl Rng,
    half: usize,
    n: usize,
    p: f64,
    cross: usize,
    weak: f64,
    noise: f64,
) -> (SparseTensor3, Vec<bool>) {
    let m = 2 * half;
    let mut raw = Vec::new();
    for k in 0..n {
        for i in 0..m {
            for j in (i + 1)..m {
                if (i < half) == (j < half) && rng.random::<f64>() < p {
                    raw.push((i, j, k, 1.0));
                    raw.push((j, i, k, 1.0));
                }
            }
        }
        for _ in 0..cross {
            let (i, j) = (rng.random_range(0..half), half + rng.random_range(0..half));
            raw.push((i, j, k, weak));
            raw.push((j, i, k, weak));
        }
    }
    let t = SparseTensor3::new([m, m, n], raw).unwrap();
    let t = tenspart::preprocess::normalize_slices_adjacency(&t).unwrap();
    let t = if noise > 0.0 {
        let e = symmetric_noise(rng, m, n, 2 * m, noise * t.frobenius_norm());
        t.add(&e).unwrap()
    } else {
        t
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    // vertex `old` moves to position order[old]
    let perm = tenspart::Permutation::new(order.clone()).unwrap();
    let t = t
        .permute_mode(&perm, tenspart::Mode::One)
        .unwrap()
        .permute_mode(&perm, tenspart::Mode::Two)
        .unwrap();
    let mut block = vec![false; m];
    for old in 0..m {
        block[order[old]] = old < half;
    }
    (t, block)
}

/// Fraction of vertices whose group agrees with `truth`, maximized over the
/// two labelings of the groups.
pub fn membership_accuracy(found: &[bool], truth: &[bool]) -> f64 {
    let agree = found.iter().zip(truth).filter(|(a, b)| a == b).count();
    let n = truth.len();
    agree.max(n - agree) as f64 / n as f64
}
