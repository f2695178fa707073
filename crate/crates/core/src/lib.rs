//! Estimation of covariance matrices that are sums of Kronecker products.
//!
//! A `pq × pq` covariance `Σ = Σⱼ Φⱼ ⊗ Ψⱼ` with `K` terms becomes a rank-`K`
//! `p² × q²` matrix under the [rearrangement operator](rearrange). The
//! crate estimates `Σ` by shrinking the singular values of the rearranged
//! sample covariance, and provides the baselines, theoretical bound
//! evaluators, synthetic data generators and Monte Carlo harness needed to
//! check how those estimators behave.
//!
//! * [`linalg`]: dense matrices, Kronecker products, SVD and shrinkage.
//! * [`rearrange`]: the operator `ℛ` and its inverse.
//! * [`estimators`]: sample covariance, nuclear-norm penalized permuted
//!   least squares, hard thresholding, the Kronecker rank-one estimator,
//!   `λ` selection and factor extraction.
//! * [`model`]: ground-truth models, samplers, effective rank and bounds.
//! * [`experiment`]: the Monte Carlo runner and its summaries.
//! * [`verify`]: a battery of numerical self-checks.

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod rearrange;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use rearrange::BlockShape;
