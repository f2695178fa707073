use super::{decomp, DenseMatrix};
use crate::error::{Error, Result};

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn operator_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(decomp::singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(decomp::singular_values(m)?.iter().sum())
}

pub fn trace(m: &DenseMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "trace of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok((0..m.rows()).map(|i| m[(i, i)]).sum())
}
