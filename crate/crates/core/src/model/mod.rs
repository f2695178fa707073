//! Ground-truth Kronecker-sum models, the matrix-model sampler, effective
//! ranks and the closed-form bounds.

mod bounds;
mod covariance;
mod factor;
mod file;
mod sampler;

pub use bounds::{
    baseline_bound_rate, theorem1_error_bound, BoundInputs, ERROR_BOUND_CONSTANT,
    ORACLE_CONSTANT,
};
pub use covariance::{assemble_sigma, effective_rank, FactorPair, KronSumCovariance, FACTOR_TOL};
pub use factor::{random_psd_factor, spectrum_for_effective_rank, Spectrum};
pub use file::{ModelFile, TermSpec, MODEL_SCHEMA_VERSION};
pub use sampler::{
    factorize_for_sampling, psd_sqrt, sample_matrix_model, MatrixModel, Noise, SamplingTerm,
    SQRT_CLIP,
};
