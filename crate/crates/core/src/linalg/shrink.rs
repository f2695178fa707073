//! Singular-value shrinkage: the proximal map of `λ‖·‖_*` and rank-k
//! truncation.

use super::backend::LARGE_DIM;
use super::decomp::{self, GramSide};
use super::DenseMatrix;
use crate::error::{Error, Result};

/// A shrunk matrix together with the spectrum it was computed from.
#[derive(Clone, Debug)]
pub struct Shrunk {
    pub matrix: DenseMatrix,
    /// Singular values of the input, non-increasing.
    pub singular_values: Vec<f64>,
    /// Number of components with a nonzero shrunk singular value.
    pub retained: usize,
}

/// `Σⱼ (σⱼ − λ/2)₊ uⱼ vⱼᵀ`, the minimizer of `‖R − m‖²_F + λ‖R‖_*`.
///
/// ```
/// use kroncov::linalg::{soft_threshold_svd, DenseMatrix};
///
/// let m = DenseMatrix::from_diag(&[3.0, 1.0]).unwrap();
/// let r = soft_threshold_svd(&m, 4.0).unwrap();
/// assert!((r[(0, 0)] - 1.0).abs() < 1e-12);
/// assert!(r[(1, 1)].abs() < 1e-12);
/// ```
pub fn soft_threshold_svd(m: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(m.clone());
    }
    Ok(soft_threshold(m, lambda)?.matrix)
}

/// [`soft_threshold_svd`] that also reports the input spectrum.
///
/// A zero threshold returns the input unchanged, bit for bit.
pub fn soft_threshold(m: &DenseMatrix, lambda: f64) -> Result<Shrunk> {
    check_lambda(lambda)?;
    let half = 0.5 * lambda;
    let weight = |_: usize, s: f64| if s > half { s - half } else { 0.0 };
    if lambda == 0.0 {
        let singular_values = decomp::singular_values(m)?;
        let retained = singular_values.iter().filter(|&&s| s > 0.0).count();
        return Ok(Shrunk {
            matrix: m.clone(),
            singular_values,
            retained,
        });
    }
    shrink(m, weight)
}

/// Best rank-`k` Frobenius approximation `Σⱼ≤k σⱼ uⱼ vⱼᵀ`.
pub fn hard_threshold_svd(m: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    Ok(hard_threshold(m, k)?.matrix)
}

pub fn hard_threshold(m: &DenseMatrix, k: usize) -> Result<Shrunk> {
    let cap = m.rows().min(m.cols());
    if k > cap {
        return Err(Error::Contract(format!(
            "rank {k} exceeds min(rows, cols) = {cap}"
        )));
    }
    if k == cap {
        let singular_values = decomp::singular_values(m)?;
        return Ok(Shrunk {
            matrix: m.clone(),
            singular_values,
            retained: k,
        });
    }
    shrink(m, |j, s| if j < k { s } else { 0.0 })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Contract(format!(
            "threshold must be finite and non-negative, got {lambda}"
        )));
    }
    Ok(())
}

/// Replaces each singular value `σⱼ` (index `j` in non-increasing order) by
/// `weight(j, σⱼ)`.
fn shrink(m: &DenseMatrix, weight: impl Fn(usize, f64) -> f64) -> Result<Shrunk> {
    if m.rows().min(m.cols()) >= LARGE_DIM {
        return shrink_via_gram(m, weight);
    }
    let d = decomp::svd(m)?;
    let w: Vec<f64> = d
        .singular_values
        .iter()
        .enumerate()
        .map(|(j, &s)| weight(j, s))
        .collect();
    let retained = w.iter().filter(|&&x| x > 0.0).count();
    Ok(Shrunk {
        matrix: d.reconstruct_with(&w),
        singular_values: d.singular_values,
        retained,
    })
}

/// Large-input route: with `mᵀm = W diag(σ²) Wᵀ`, the shrunk matrix is
/// `m · W diag(w(σ)/σ) Wᵀ` restricted to the retained columns, which needs
/// only a symmetric eigensolver on the smaller side.
fn shrink_via_gram(m: &DenseMatrix, weight: impl Fn(usize, f64) -> f64) -> Result<Shrunk> {
    let spec = decomp::gram_spectrum(m, true)?;
    let vectors = spec.vectors.as_ref().expect("requested eigenvectors");
    let n = vectors.rows();
    let floor = spec.sigma.first().copied().unwrap_or(0.0) * f64::EPSILON * n as f64;

    let mut cols = Vec::new();
    let mut coeff = Vec::new();
    for (j, &s) in spec.sigma.iter().enumerate() {
        let w = weight(j, s);
        if w > 0.0 && s > floor {
            cols.push(j);
            coeff.push(w / s);
        }
    }
    let retained = cols.len();
    if retained == 0 {
        return Ok(Shrunk {
            matrix: DenseMatrix::zeros(m.rows(), m.cols()),
            singular_values: spec.sigma,
            retained,
        });
    }
    let basis = DenseMatrix::from_fn(n, retained, |i, c| vectors[(i, cols[c])]);
    let scaled = DenseMatrix::from_fn(n, retained, |i, c| basis[(i, c)] * coeff[c]);
    let matrix = match spec.side {
        GramSide::Right => m.matmul(&scaled)?.matmul(&basis.transpose())?,
        GramSide::Left => scaled.matmul(&basis.transpose().matmul(m)?)?,
    };
    Ok(Shrunk {
        matrix,
        singular_values: spec.sigma,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frobenius_norm;

    fn sample(rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| ((i * 7 + j * 11) % 13) as f64 / 13.0 - 0.4 + 0.01 * (i * j) as f64)
    }

    #[test]
    fn zero_threshold_is_identity() {
        let m = sample(6, 8);
        assert_eq!(soft_threshold_svd(&m, 0.0).unwrap(), m);
    }

    #[test]
    fn diagonal_soft_threshold() {
        let m = DenseMatrix::from_diag(&[3.0, 1.0]).unwrap();
        let s = soft_threshold(&m, 4.0).unwrap();
        assert_eq!(s.retained, 1);
        let expected = DenseMatrix::from_diag(&[1.0, 0.0]).unwrap();
        assert!(frobenius_norm(&(&s.matrix - &expected)) < 1e-12);
    }

    #[test]
    fn negative_threshold_rejected() {
        assert!(matches!(
            soft_threshold_svd(&DenseMatrix::identity(2), -1.0),
            Err(Error::Contract(_))
        ));
        assert!(soft_threshold_svd(&DenseMatrix::identity(2), f64::NAN).is_err());
    }

    #[test]
    fn hard_threshold_edges() {
        let m = sample(4, 5);
        assert_eq!(hard_threshold_svd(&m, 4).unwrap(), m);
        assert_eq!(hard_threshold_svd(&m, 0).unwrap(), DenseMatrix::zeros(4, 5));
        assert!(matches!(hard_threshold_svd(&m, 5), Err(Error::Contract(_))));
    }

    #[test]
    fn gram_route_agrees_with_direct_route() {
        for m in [sample(9, 6), sample(6, 9)] {
            let direct = shrink(&m, |_, s| (s - 0.3).max(0.0)).unwrap();
            let gram = shrink_via_gram(&m, |_, s| (s - 0.3).max(0.0)).unwrap();
            assert_eq!(direct.retained, gram.retained);
            assert!(frobenius_norm(&(&direct.matrix - &gram.matrix)) < 1e-10);
            let direct = shrink(&m, |j, s| if j < 2 { s } else { 0.0 }).unwrap();
            let gram = shrink_via_gram(&m, |j, s| if j < 2 { s } else { 0.0 }).unwrap();
            assert!(frobenius_norm(&(&direct.matrix - &gram.matrix)) < 1e-10);
        }
    }
}
