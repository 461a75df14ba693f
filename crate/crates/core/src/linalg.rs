//! Dense subspace routines: leading singular/eigen subspaces with a fixed
//! sign convention, orthonormalization helpers and subspace distances.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dense::DenseMatrix;
use crate::error::{Result, TensError};

/// Orthonormal basis of a leading subspace.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub basis: DenseMatrix,
    /// Singular values (or eigenvalues for Gram inputs) of the kept directions,
    /// nonincreasing; padded directions report 0.
    pub spectrum: Vec<f64>,
    /// Set when fewer than the requested directions carry signal and the
    /// basis was completed with an orthonormal complement.
    pub rank_deficient: bool,
}

/// Orthonormal basis of the `r` leading left singular directions of `m`.
///
/// In each column the entry of largest magnitude is made positive, the lowest
/// index winning ties.
pub fn dominant_subspace(m: &DenseMatrix, r: usize) -> Result<Subspace> {
    let limit = m.rows().min(m.cols());
    if r == 0 || r > limit {
        return Err(TensError::RankOutOfRange {
            rank: r,
            extent: limit,
        });
    }
    if !m.is_finite() {
        return Err(TensError::NonFinite("subspace input"));
    }
    Ok(leading_left_subspace(m, r))
}

/// Like [`dominant_subspace`] but allows `r` up to `m.rows()`, padding with
/// an orthonormal complement beyond the column rank.
pub(crate) fn leading_left_subspace(m: &DenseMatrix, r: usize) -> Subspace {
    debug_assert!(r <= m.rows());
    let svd = m.to_nalgebra().svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let sigma = svd.singular_values;
    let mut idx: Vec<usize> = (0..sigma.len()).collect();
    idx.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let smax = idx.first().map_or(0.0, |&p| sigma[p]);
    let tol = smax * (m.rows().max(m.cols()) as f64) * f64::EPSILON;
    let mut columns = Vec::with_capacity(r);
    let mut spectrum = Vec::with_capacity(r);
    for &p in idx.iter().take(r) {
        if sigma[p] <= tol || smax == 0.0 {
            break;
        }
        columns.push(u.column(p).iter().copied().collect::<Vec<f64>>());
        spectrum.push(sigma[p]);
    }
    finish(m.rows(), r, columns, spectrum)
}

/// Leading `r` eigenvectors of a symmetric positive semidefinite matrix.
pub(crate) fn leading_eigen_subspace(g: &DenseMatrix, r: usize) -> Subspace {
    let n = g.rows();
    debug_assert!(r <= n && g.cols() == n);
    let eig = SymmetricEigen::new(g.to_nalgebra());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let lmax = idx.first().map_or(0.0, |&p| eig.eigenvalues[p]);
    let tol = lmax * (n as f64) * 10.0 * f64::EPSILON;
    let mut columns = Vec::with_capacity(r);
    let mut spectrum = Vec::with_capacity(r);
    for &p in idx.iter().take(r) {
        let lambda = eig.eigenvalues[p];
        if lambda <= tol || lmax <= 0.0 {
            break;
        }
        columns.push(eig.eigenvectors.column(p).iter().copied().collect());
        spectrum.push(lambda);
    }
    finish(n, r, columns, spectrum)
}

/// Leading `r`-dimensional invariant subspace of a symmetric positive
/// semidefinite operator given only through its action on blocks.
pub(crate) fn subspace_iteration(
    n: usize,
    r: usize,
    apply: impl Fn(&DenseMatrix) -> DenseMatrix,
    tol: f64,
    max_iters: usize,
) -> Subspace {
    let width = (r + 4).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut x = random_orthonormal(n, width, &mut rng);
    let mut ritz: Vec<f64> = Vec::new();
    for _ in 0..max_iters {
        let y = apply(&x);
        let q = orthonormalize(&y);
        let gq = apply(&q);
        let h = q.t_matmul(&gq).expect("block shapes");
        let eig = SymmetricEigen::new(symmetrize(h.to_nalgebra()));
        let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let rot = DenseMatrix::from_fn(width, width, |i, j| eig.eigenvectors[(i, idx[j])]);
        x = q.matmul(&rot).expect("rotation shapes");
        let new_ritz: Vec<f64> = idx.iter().map(|&p| eig.eigenvalues[p]).collect();
        let scale = new_ritz.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        let gx = gq.matmul(&rot).expect("rotation shapes");
        let residual = (0..r)
            .map(|c| {
                let mut s = 0.0;
                for i in 0..n {
                    let d = gx[(i, c)] - new_ritz[c] * x[(i, c)];
                    s += d * d;
                }
                s.sqrt()
            })
            .fold(0.0, f64::max);
        ritz = new_ritz;
        if residual <= tol * scale {
            break;
        }
    }
    let lmax = ritz.first().copied().unwrap_or(0.0);
    let cutoff = lmax * (n as f64) * 10.0 * f64::EPSILON;
    let mut columns = Vec::with_capacity(r);
    let mut spectrum = Vec::with_capacity(r);
    for c in 0..r {
        if ritz[c] <= cutoff || lmax <= 0.0 {
            break;
        }
        columns.push(x.column(c));
        spectrum.push(ritz[c]);
    }
    finish(n, r, columns, spectrum)
}

fn symmetrize(mut h: DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

fn finish(rows: usize, r: usize, mut columns: Vec<Vec<f64>>, mut spectrum: Vec<f64>) -> Subspace {
    let rank_deficient = columns.len() < r;
    if rank_deficient {
        complete_basis(rows, r, &mut columns);
        spectrum.resize(r, 0.0);
    }
    let mut basis = DenseMatrix::from_columns(&columns).unwrap_or_else(|_| DenseMatrix::zeros(rows, 0));
    if basis.rows() != rows {
        basis = DenseMatrix::zeros(rows, 0);
    }
    fix_column_signs(&mut basis);
    Subspace {
        basis,
        spectrum,
        rank_deficient,
    }
}

/// Extends orthonormal `columns` to `r` vectors using standard basis vectors.
fn complete_basis(rows: usize, r: usize, columns: &mut Vec<Vec<f64>>) {
    let mut p = 0;
    while columns.len() < r && p < rows {
        let mut v = vec![0.0; rows];
        v[p] = 1.0;
        for _ in 0..2 {
            for c in columns.iter() {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= d * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            columns.push(v);
        }
        p += 1;
    }
}

/// Flips columns so that their largest-magnitude entry is positive.
pub fn fix_column_signs(m: &mut DenseMatrix) {
    for c in 0..m.cols() {
        if column_sign(m, c) < 0.0 {
            for r in 0..m.rows() {
                m[(r, c)] = -m[(r, c)];
            }
        }
    }
}

/// Sign (+1 or −1) of the largest-magnitude entry of column `c`.
pub(crate) fn column_sign(m: &DenseMatrix, c: usize) -> f64 {
    let mut best = 0.0f64;
    for r in 0..m.rows() {
        let v = m[(r, c)];
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Sign of the largest-magnitude entry of `v` (lowest index on ties).
pub fn vector_sign(v: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &x in v {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Orthonormal basis for the column space of `m` (thin QR), completed with
/// standard basis directions when `m` is column-rank deficient.
pub fn orthonormalize(m: &DenseMatrix) -> DenseMatrix {
    let cols = m.cols().min(m.rows());
    let qr = m.to_nalgebra().qr();
    let q = qr.q();
    let r = qr.r();
    let rmax = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let mut columns = Vec::with_capacity(cols);
    for c in 0..cols {
        if r[(c, c)].abs() > rmax * 1e-12 {
            columns.push(q.column(c).iter().copied().collect::<Vec<f64>>());
        }
    }
    complete_basis(m.rows(), cols, &mut columns);
    DenseMatrix::from_columns(&columns).expect("equal column lengths")
}

/// Gaussian random matrix with orthonormalized columns.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let g = DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    orthonormalize(&g)
}

/// Sine of the largest principal angle between the column spaces of two
/// matrices with orthonormal columns and equal column counts.
pub fn subspace_distance(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "subspaces of different shape");
    // ‖(I − AAᵀ)B‖₂ avoids the cancellation in √(1 − cos²).
    let proj = a.matmul(&a.t_matmul(b).expect("shapes checked")).expect("shapes checked");
    let resid = DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| b[(i, j)] - proj[(i, j)]);
    resid
        .to_nalgebra()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .min(1.0)
}

/// Eigenvalues of a symmetric 2×2 matrix, largest first, and the matching
/// unit eigenvectors as columns.
pub fn sym2_eigen(a: f64, b: f64, d: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = half.hypot(b);
    let (l1, l2) = (mean + rad, mean - rad);
    // angle of the first eigenvector
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = theta.sin_cos();
    ([l1, l2], [[c, -s], [s, c]])
}
