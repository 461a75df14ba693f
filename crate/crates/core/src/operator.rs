//! The tensor interface used by the low-rank solvers.
//!
//! Solvers only ever touch a tensor through products with narrow blocks of
//! vectors, so anything that can provide those products (a plain sparse
//! tensor, or a sparse tensor minus a few low-rank terms) can be
//! approximated without being materialized.

use crate::dense::{DenseMatrix, DenseTensor3};
use crate::exec::Execution;
use crate::tensor::{Mode, SparseTensor3};

pub trait TensorOperator: Sync {
    fn dims(&self) -> [usize; 3];

    /// Contracts the two modes other than `free` with the columns of `a`
    /// and `b`, taken in increasing mode order.
    fn contract_except(&self, free: Mode, a: &DenseMatrix, b: &DenseMatrix) -> DenseTensor3;

    /// Squared Frobenius norm.
    fn norm_sq(&self) -> f64;

    /// `unfold(mode) · unfold(mode)ᵀ` as an explicit matrix.
    fn unfolding_gram(&self, mode: Mode) -> DenseMatrix;

    /// `unfold(mode) · unfold(mode)ᵀ · x`.
    fn gram_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix;

    fn is_12_symmetric(&self, tol: f64) -> bool;

    /// Largest magnitude among the explicitly stored values, used to scale
    /// symmetry tolerances.
    fn scale_hint(&self) -> f64;

    /// `A·(X, Y, Z)`.
    fn contract_all(&self, x: &DenseMatrix, y: &DenseMatrix, z: &DenseMatrix) -> DenseTensor3 {
        self.contract_except(Mode::Three, x, y)
            .contract_mode(Mode::Three, z)
            .expect("factor shapes checked by caller")
    }
}

impl TensorOperator for SparseTensor3 {
    fn dims(&self) -> [usize; 3] {
        SparseTensor3::dims(self)
    }

    fn contract_except(&self, free: Mode, a: &DenseMatrix, b: &DenseMatrix) -> DenseTensor3 {
        SparseTensor3::contract_except(self, Execution::Sequential, free, a, b)
    }

    fn norm_sq(&self) -> f64 {
        SparseTensor3::norm_sq(self)
    }

    fn unfolding_gram(&self, mode: Mode) -> DenseMatrix {
        SparseTensor3::unfolding_gram(self, mode)
    }

    fn gram_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix {
        self.unfold_apply(mode, &self.unfold_t_apply(mode, x))
    }

    fn is_12_symmetric(&self, tol: f64) -> bool {
        SparseTensor3::is_12_symmetric(self, tol)
    }

    fn scale_hint(&self) -> f64 {
        self.max_abs()
    }
}

/// Runs the entry loops of a sparse tensor on the chunked parallel path.
#[derive(Debug, Clone, Copy)]
pub struct Parallel<'a>(pub &'a SparseTensor3);

impl TensorOperator for Parallel<'_> {
    fn dims(&self) -> [usize; 3] {
        self.0.dims()
    }

    fn contract_except(&self, free: Mode, a: &DenseMatrix, b: &DenseMatrix) -> DenseTensor3 {
        self.0.contract_except(Execution::Parallel, free, a, b)
    }

    fn norm_sq(&self) -> f64 {
        self.0.norm_sq()
    }

    fn unfolding_gram(&self, mode: Mode) -> DenseMatrix {
        self.0.unfolding_gram(mode)
    }

    fn gram_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix {
        self.0.unfold_apply(mode, &self.0.unfold_t_apply(mode, x))
    }

    fn is_12_symmetric(&self, tol: f64) -> bool {
        self.0.is_12_symmetric(tol)
    }

    fn scale_hint(&self) -> f64 {
        self.0.max_abs()
    }
}

/// Sequential or parallel view of a sparse tensor.
pub enum TensorView<'a> {
    Sequential(&'a SparseTensor3),
    Parallel(Parallel<'a>),
}

impl<'a> TensorView<'a> {
    pub fn new(tensor: &'a SparseTensor3, exec: Execution) -> Self {
        match exec {
            Execution::Sequential => TensorView::Sequential(tensor),
            Execution::Parallel => TensorView::Parallel(Parallel(tensor)),
        }
    }

    fn op(&self) -> &dyn TensorOperator {
        match self {
            TensorView::Sequential(t) => *t,
            TensorView::Parallel(p) => p,
        }
    }
}

impl TensorOperator for TensorView<'_> {
    fn dims(&self) -> [usize; 3] {
        self.op().dims()
    }

    fn contract_except(&self, free: Mode, a: &DenseMatrix, b: &DenseMatrix) -> DenseTensor3 {
        self.op().contract_except(free, a, b)
    }

    fn norm_sq(&self) -> f64 {
        self.op().norm_sq()
    }

    fn unfolding_gram(&self, mode: Mode) -> DenseMatrix {
        self.op().unfolding_gram(mode)
    }

    fn gram_apply(&self, mode: Mode, x: &DenseMatrix) -> DenseMatrix {
        self.op().gram_apply(mode, x)
    }

    fn is_12_symmetric(&self, tol: f64) -> bool {
        self.op().is_12_symmetric(tol)
    }

    fn scale_hint(&self) -> f64 {
        self.op().scale_hint()
    }
}
