//! Closed-form deviation bounds for the rearranged sample covariance and the
//! soft-threshold estimate.

use serde::{Deserialize, Serialize};

use super::covariance::{effective_rank, KronSumCovariance};
use crate::error::{Error, Result};
use crate::linalg::operator_norm;

/// `(1 + √2)²/4 = (3 + 2√2)/4`, the constant of the oracle inequality.
pub const ORACLE_CONSTANT: f64 = (3.0 + 2.0 * std::f64::consts::SQRT_2) / 4.0;

/// The constant of the stated error bound, `3/2`.
pub const ERROR_BOUND_CONSTANT: f64 = 1.5;

/// Everything the bound evaluators need about a model, plus the sample size,
/// confidence level and the distribution constant `ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub omega: f64,
    pub n: usize,
    pub delta: f64,
    /// `maxⱼ r(Φⱼ)`.
    pub max_rank_phi: f64,
    /// `maxⱼ r(Ψⱼ)`.
    pub max_rank_psi: f64,
    /// `Σⱼ ‖Φⱼ‖ ‖Ψⱼ‖`.
    pub norm_sum: f64,
    /// `Tr(Σ)`.
    pub trace_sigma: f64,
}

impl BoundInputs {
    /// Checks `ω > 0`, `n ≥ 1` and `δ ∈ (0, 4)`, the range on which
    /// `log(4/δ)` is positive. Callers wanting a probability should keep
    /// `δ < 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Contract(format!("ω must be positive, got {}", self.omega)));
        }
        if self.n == 0 {
            return Err(Error::Contract("n must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 4.0) {
            return Err(Error::Contract(format!(
                "δ must lie in (0, 4), got {}",
                self.delta
            )));
        }
        for (name, v) in [
            ("max r(Φ)", self.max_rank_phi),
            ("max r(Ψ)", self.max_rank_psi),
            ("Σ‖Φ‖‖Ψ‖", self.norm_sum),
            ("Tr(Σ)", self.trace_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Contract(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Derives the model quantities from `cov`.
    pub fn from_model(cov: &KronSumCovariance, omega: f64, n: usize, delta: f64) -> Result<Self> {
        let mut max_rank_phi: f64 = 0.0;
        let mut max_rank_psi: f64 = 0.0;
        let mut norm_sum = 0.0;
        for t in cov.terms() {
            max_rank_phi = max_rank_phi.max(effective_rank(&t.phi)?);
            max_rank_psi = max_rank_psi.max(effective_rank(&t.psi)?);
            norm_sum += operator_norm(&t.phi)? * operator_norm(&t.psi)?;
        }
        let inputs = BoundInputs {
            omega,
            n,
            delta,
            max_rank_phi,
            max_rank_psi,
            norm_sum,
            trace_sigma: cov.trace(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn with_n(self, n: usize) -> Self {
        BoundInputs { n, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        BoundInputs { omega, ..self }
    }

    fn rank_term(&self) -> f64 {
        self.max_rank_phi.powi(2) + self.max_rank_psi.powi(2)
    }

    fn log_term(&self) -> f64 {
        (4.0 / self.delta).ln()
    }

    /// `(1/2n)(max r(Φⱼ)² + max r(Ψⱼ)²) + log(4/δ)/n`.
    pub fn delta_condition_lhs(&self) -> f64 {
        let n = self.n as f64;
        self.rank_term() / (2.0 * n) + self.log_term() / n
    }

    /// Whether the left side is at most 1 (equality holds).
    pub fn delta_condition_holds(&self) -> bool {
        self.delta_condition_lhs() <= 1.0
    }

    /// `ω (Σⱼ‖Φⱼ‖‖Ψⱼ‖) √(13/(2n)·(max r(Φⱼ)² + max r(Ψⱼ)²) + 13 log(4/δ)/n)`,
    /// a `(1 − δ)` bound on `‖ℛ(Σ̂ − Σ)‖`.
    pub fn lemma1_bound(&self) -> Result<f64> {
        self.validate()?;
        let lhs = self.delta_condition_lhs();
        if lhs > 1.0 {
            return Err(Error::DeltaCondition { lhs });
        }
        let n = self.n as f64;
        let inner = 13.0 / (2.0 * n) * self.rank_term() + 13.0 * self.log_term() / n;
        Ok(self.omega * self.norm_sum * inner.sqrt())
    }

    /// The smallest admissible threshold, `2 ×` [`lemma1_bound`](Self::lemma1_bound).
    pub fn theorem1_lambda(&self) -> Result<f64> {
        Ok(2.0 * self.lemma1_bound()?)
    }
}

/// `3λ²K/2`, the bound on `‖Σ̃ − Σ‖²_F` at a threshold `λ` that dominates
/// twice the rearranged deviation.
pub fn theorem1_error_bound(lambda: f64, k_rank: usize) -> f64 {
    ERROR_BOUND_CONSTANT * lambda * lambda * k_rank as f64
}

/// `Tr(Σ) · max(√(log(2/δ)/n), log(2/δ)/n)`: the dimension-free rate for the
/// unstructured sample covariance, with the unknown absolute constant set to
/// 1. It is a rate for comparisons, not a certified bound.
pub fn baseline_bound_rate(trace_sigma: f64, n: usize, delta: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Contract("n must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Contract(format!("δ must lie in (0, 1), got {delta}")));
    }
    let t = (2.0 / delta).ln() / n as f64;
    Ok(trace_sigma * t.sqrt().max(t))
}
