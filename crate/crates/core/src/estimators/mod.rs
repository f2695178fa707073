//! Covariance estimators: the sample covariance, the soft-thresholded
//! (nuclear-norm penalized) estimate, the hard-thresholded estimate and the
//! Kronecker rank-one estimate, together with λ selection and factor
//! extraction.

mod factors;
mod rank_one;
mod sample;
mod select;
mod threshold;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, operator_norm, DenseMatrix};

pub use factors::{extract_factors, Factors};
pub use rank_one::{rank_one_estimate, rank_one_factors};
pub use sample::{sample_covariance, SampleSet};
pub use select::{lambda_grid, select_lambda, LambdaSelection, SplitConfig};
pub use threshold::{
    hard_threshold_estimate, hard_threshold_from_covariance, pls_estimate,
    pls_from_covariance, sample_estimate, sample_from_covariance,
};

/// Maximum relative asymmetry `‖E − Eᵀ‖_F / (2‖E‖_F)` an estimate may carry.
pub const SYMMETRY_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sample,
    PlsSoft,
    PcaHard,
    RankOne,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Sample, Method::PlsSoft, Method::PcaHard, Method::RankOne];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Sample => "sample",
            Method::PlsSoft => "pls_soft",
            Method::PcaHard => "pca_hard",
            Method::RankOne => "rank_one",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the canonical names plus `pls`, `hard` and dashed spellings.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sample" => Ok(Method::Sample),
            "pls" | "pls_soft" | "soft" => Ok(Method::PlsSoft),
            "pca" | "pca_hard" | "hard" => Ok(Method::PcaHard),
            "rank_one" | "rank1" => Ok(Method::RankOne),
            other => Err(Error::Spec(format!(
                "unknown estimator '{other}' (expected sample, pls_soft, pca_hard or rank_one)"
            ))),
        }
    }
}

/// An estimate together with its diagnostics.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub estimate: DenseMatrix,
    pub method: Method,
    /// Present exactly for [`Method::PlsSoft`].
    pub lambda_used: Option<f64>,
    /// Spectrum of the rearranged matrix the estimate was built from, before
    /// any shrinkage. For the rank-one estimate this is the (single nonzero)
    /// spectrum of the rearranged estimate itself.
    pub singular_values: Vec<f64>,
    /// Number of retained rearranged components.
    pub effective_rank_estimate: usize,
    pub frobenius_error: Option<f64>,
    pub operator_error: Option<f64>,
    pub n: usize,
    /// `‖E − Eᵀ‖_F / (2‖E‖_F)`, zero for the zero matrix.
    pub symmetry_residual: f64,
}

impl EstimateReport {
    pub(crate) fn new(
        estimate: DenseMatrix,
        method: Method,
        lambda_used: Option<f64>,
        singular_values: Vec<f64>,
        effective_rank_estimate: usize,
        n: usize,
    ) -> Self {
        let symmetry_residual = symmetry_residual(&estimate);
        EstimateReport {
            estimate,
            method,
            lambda_used,
            singular_values,
            effective_rank_estimate,
            frobenius_error: None,
            operator_error: None,
            n,
            symmetry_residual,
        }
    }

    /// Fills in the Frobenius error against `truth`.
    pub fn with_frobenius_error(mut self, truth: &DenseMatrix) -> Result<Self> {
        let diff = self.estimate.try_sub(truth)?;
        self.frobenius_error = Some(frobenius_norm(&diff));
        Ok(self)
    }

    /// Fills in both error norms against `truth`. The operator norm needs a
    /// full spectrum, so this is markedly slower than
    /// [`with_frobenius_error`](Self::with_frobenius_error) at large `d`.
    pub fn with_truth(mut self, truth: &DenseMatrix) -> Result<Self> {
        let diff = self.estimate.try_sub(truth)?;
        self.frobenius_error = Some(frobenius_norm(&diff));
        self.operator_error = Some(operator_norm(&diff)?);
        Ok(self)
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            method: self.method,
            n: self.n,
            d: self.estimate.rows(),
            lambda_used: self.lambda_used,
            effective_rank_estimate: self.effective_rank_estimate,
            singular_values: self.singular_values.clone(),
            frobenius_error: self.frobenius_error,
            operator_error: self.operator_error,
            symmetry_residual: self.symmetry_residual,
        }
    }
}

/// The serializable part of an [`EstimateReport`] (everything but the matrix).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub lambda_used: Option<f64>,
    pub effective_rank_estimate: usize,
    pub singular_values: Vec<f64>,
    pub frobenius_error: Option<f64>,
    pub operator_error: Option<f64>,
    pub symmetry_residual: f64,
}

pub(crate) fn symmetry_residual(m: &DenseMatrix) -> f64 {
    let norm = frobenius_norm(m);
    if norm == 0.0 {
        return 0.0;
    }
    let n = m.rows();
    let mut acc = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            let d = m[(i, j)] - m[(j, i)];
            acc += 2.0 * d * d;
        }
    }
    acc.sqrt() / (2.0 * norm)
}

/// Number of singular values above `σ₁ · ε · max(rows, cols)`.
pub(crate) fn numerical_rank(singular_values: &[f64], rows: usize, cols: usize) -> usize {
    let top = singular_values.first().copied().unwrap_or(0.0);
    let tol = top * f64::EPSILON * rows.max(cols) as f64;
    singular_values.iter().filter(|&&s| s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert_eq!("pls".parse::<Method>().unwrap(), Method::PlsSoft);
        assert_eq!("rank-one".parse::<Method>().unwrap(), Method::RankOne);
        assert!("mle".parse::<Method>().is_err());
    }

    #[test]
    fn symmetry_residual_values() {
        assert_eq!(symmetry_residual(&DenseMatrix::zeros(3, 3)), 0.0);
        assert_eq!(symmetry_residual(&DenseMatrix::identity(3)), 0.0);
        // [[0,1],[0,0]]: ‖E − Eᵀ‖ = √2, ‖E‖ = 1.
        let e = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!((symmetry_residual(&e) - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }
}
