//! Dense real linear algebra: the matrix carrier, Kronecker products and
//! vectorization, norms, decompositions and singular-value shrinkage.

pub(crate) mod backend;
mod decomp;
pub mod io;
mod kron;
mod matrix;
mod norms;
mod shrink;

pub use backend::{set_threads, LARGE_DIM};
pub use decomp::{
    singular_values, svd, symmetric_eigen, symmetric_eigenvalues, Svd, SymmetricEigen,
    SYMMETRY_TOL,
};
pub use kron::{kron, unvec, vec};
pub use matrix::DenseMatrix;
pub use norms::{frobenius_norm, nuclear_norm, operator_norm, trace};
pub use shrink::{hard_threshold, hard_threshold_svd, soft_threshold, soft_threshold_svd, Shrunk};

/// Dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
