//! Sparse 3-tensor analytics: best rank-(r1, r2, r3) approximation,
//! reordering-based tensor partitioning and rank-(2,2,1) expansions.
//!
//! Indices are 0-based everywhere in the API. File formats are 1-based.

pub mod dense;
pub mod error;
pub mod exec;
pub mod expansion;
pub mod linalg;
pub mod lowrank;
pub mod operator;
pub mod partition;
pub mod preprocess;
pub mod tensor;

pub use dense::{DenseMatrix, DenseTensor3};
pub use error::{Result, TensError};
pub use exec::{init_thread_pool, Execution};
pub use lowrank::{RankApproximation, SolverConfig};
pub use operator::{TensorOperator, TensorView};
pub use tensor::{Entry, Mode, Permutation, SparseTensor3};
pub use expansion::{DeflatedOperator, Expansion, ExpansionConfig, ExpansionTerm, SparseMatrix, ThresholdMode};
pub use partition::{PartitionOptions, PartitionReport};
pub use preprocess::{LabelTable, Normalization, RecordLog};
