use super::sample::{sample_covariance, SampleSet};
use super::{numerical_rank, EstimateReport, Method};
use crate::error::{Error, Result};
use crate::linalg::{hard_threshold, singular_values, soft_threshold, DenseMatrix};
use crate::rearrange::{rearrange, rearrange_inverse, BlockShape};

fn check_dim(data: &SampleSet, shape: BlockShape) -> Result<()> {
    if data.d() != shape.dim() {
        return Err(Error::Shape(format!(
            "observations have dimension {}, but p·q = {}·{} = {}",
            data.d(),
            shape.p(),
            shape.q(),
            shape.dim()
        )));
    }
    Ok(())
}

/// The sample covariance, reported with the spectrum of its rearrangement.
pub fn sample_estimate(data: &SampleSet, shape: BlockShape) -> Result<EstimateReport> {
    check_dim(data, shape)?;
    sample_from_covariance(sample_covariance(data), shape, data.n())
}

pub fn sample_from_covariance(
    cov: DenseMatrix,
    shape: BlockShape,
    n: usize,
) -> Result<EstimateReport> {
    let r = rearrange(&cov, shape)?;
    let s = singular_values(&r)?;
    let rank = numerical_rank(&s, r.rows(), r.cols());
    Ok(EstimateReport::new(cov, Method::Sample, None, s, rank, n))
}

/// `Σ̃ = ℛ⁻¹(Σⱼ (σⱼ − λ/2)₊ uⱼ vⱼᵀ)` where `Σⱼ σⱼ uⱼ vⱼᵀ` is the SVD of
/// `ℛ(Σ̂)`.
///
/// `lambda = 0` returns the sample covariance exactly.
pub fn pls_estimate(data: &SampleSet, shape: BlockShape, lambda: f64) -> Result<EstimateReport> {
    check_dim(data, shape)?;
    pls_from_covariance(&sample_covariance(data), shape, lambda, data.n())
}

/// [`pls_estimate`] from a precomputed sample covariance of `n` observations.
pub fn pls_from_covariance(
    cov: &DenseMatrix,
    shape: BlockShape,
    lambda: f64,
    n: usize,
) -> Result<EstimateReport> {
    let r = rearrange(cov, shape)?;
    let shrunk = soft_threshold(&r, lambda)?;
    let estimate = rearrange_inverse(&shrunk.matrix, shape)?;
    Ok(EstimateReport::new(
        estimate,
        Method::PlsSoft,
        Some(lambda),
        shrunk.singular_values,
        shrunk.retained,
        n,
    ))
}

/// `Σ̌ = ℛ⁻¹(Σⱼ≤k σⱼ uⱼ vⱼᵀ)`, the top `k` rearranged components of `Σ̂`.
pub fn hard_threshold_estimate(
    data: &SampleSet,
    shape: BlockShape,
    k: usize,
) -> Result<EstimateReport> {
    check_dim(data, shape)?;
    hard_threshold_from_covariance(&sample_covariance(data), shape, k, data.n())
}

pub fn hard_threshold_from_covariance(
    cov: &DenseMatrix,
    shape: BlockShape,
    k: usize,
    n: usize,
) -> Result<EstimateReport> {
    let cap = shape.max_kronecker_rank();
    if k == 0 || k > cap {
        return Err(Error::Contract(format!(
            "hard-threshold rank must lie in 1..={cap}, got {k}"
        )));
    }
    let r = rearrange(cov, shape)?;
    let shrunk = hard_threshold(&r, k)?;
    let estimate = rearrange_inverse(&shrunk.matrix, shape)?;
    let retained = shrunk.retained.min(numerical_rank(&shrunk.singular_values, r.rows(), r.cols()));
    Ok(EstimateReport::new(
        estimate,
        Method::PcaHard,
        None,
        shrunk.singular_values,
        retained,
        n,
    ))
}
