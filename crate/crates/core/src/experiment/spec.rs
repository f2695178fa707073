use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Method, SplitConfig};
use crate::model::{BoundInputs, Spectrum};
use crate::rearrange::BlockShape;

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

/// Default number of halvings in a λ grid.
pub const DEFAULT_GRID_STEPS: u32 = 12;

/// How the soft-threshold estimator picks λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaPolicy {
    /// `λ = 2 ×` the Lemma-1 deviation bound at the experiment's `ω`.
    /// `omega` here overrides the experiment-level value.
    Theorem1 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega: Option<f64>,
    },
    /// Random-split selection over `λ₀ · 2^{−m}`, `m = 0..=steps`. Without
    /// `lambda0`, the grid starts at `2σ̂₁`, the smallest λ that zeroes the
    /// estimate on the full sample.
    GridSelect {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda0: Option<f64>,
        #[serde(default = "default_steps")]
        steps: u32,
        #[serde(default = "default_split")]
        split_fraction: f64,
        #[serde(default = "default_reps")]
        repetitions: usize,
    },
    Fixed { lambda: f64 },
}

fn default_steps() -> u32 {
    DEFAULT_GRID_STEPS
}

fn default_split() -> f64 {
    SplitConfig::default().split_fraction
}

fn default_reps() -> usize {
    SplitConfig::default().repetitions
}

/// Pilot run used to calibrate `ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub trials: usize,
    pub n: usize,
}

/// A Monte Carlo experiment, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    pub p: usize,
    pub q: usize,
    pub k_rank: usize,
    /// Target `r(Φⱼ)`, one per term or a single value for all terms.
    pub phi_effective_ranks: Vec<f64>,
    pub psi_effective_ranks: Vec<f64>,
    #[serde(default)]
    pub spectrum: Spectrum,
    pub n_grid: Vec<usize>,
    pub delta: f64,
    pub estimators: Vec<Method>,
    pub lambda_policy: LambdaPolicy,
    pub trials: usize,
    pub seed: u64,
    /// Reuse one model for every trial instead of drawing a fresh one.
    #[serde(default)]
    pub fixed_model: bool,
    /// `ω` for the bound columns (and the theorem1 policy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
    /// Rank kept by the hard-threshold estimator; defaults to `k_rank`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hard_rank: Option<usize>,
}

fn default_name() -> String {
    "experiment".to_string()
}

impl ExperimentSpec {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::parse(origin, e.message()))?;
        if spec.schema_version != EXPERIMENT_SCHEMA_VERSION {
            return Err(Error::parse(
                origin,
                format!(
                    "unsupported schema_version {} (this build reads {EXPERIMENT_SCHEMA_VERSION})",
                    spec.schema_version
                ),
            ));
        }
        Ok(spec)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    pub fn shape(&self) -> Result<BlockShape> {
        BlockShape::new(self.p, self.q)
    }

    pub fn hard_rank(&self) -> usize {
        self.hard_rank.unwrap_or(self.k_rank)
    }

    /// Target `(r(Φⱼ), r(Ψⱼ))` for term `j`.
    pub fn term_ranks(&self, j: usize) -> (f64, f64) {
        let pick = |v: &[f64]| if v.len() == 1 { v[0] } else { v[j] };
        (pick(&self.phi_effective_ranks), pick(&self.psi_effective_ranks))
    }

    /// The `ω` used when the spec is run with `omega_override` and an
    /// optional calibrated value: override, then calibration, then the
    /// theorem1 policy's own value, then the spec-level value.
    pub fn resolve_omega(&self, omega_override: Option<f64>, calibrated: Option<f64>) -> Option<f64> {
        let policy = match self.lambda_policy {
            LambdaPolicy::Theorem1 { omega } => omega,
            _ => None,
        };
        omega_override.or(calibrated).or(policy).or(self.omega)
    }

    /// Checks every invariant that can be checked before sampling.
    pub fn validate(&self) -> Result<()> {
        let shape = self.shape()?;
        let bad = |msg: String| Err(Error::Spec(msg));
        if self.k_rank == 0 {
            return bad("k_rank must be at least 1".into());
        }
        for (name, ranks, dim) in [
            ("phi_effective_ranks", &self.phi_effective_ranks, shape.p()),
            ("psi_effective_ranks", &self.psi_effective_ranks, shape.q()),
        ] {
            if ranks.len() != 1 && ranks.len() != self.k_rank {
                return bad(format!(
                    "{name} needs 1 or k_rank = {} entries, got {}",
                    self.k_rank,
                    ranks.len()
                ));
            }
            if let Some(r) = ranks.iter().find(|&&r| !(r >= 1.0 && r <= dim as f64)) {
                return bad(format!("{name}: {r} is outside [1, {dim}]"));
            }
        }
        if self.n_grid.is_empty() {
            return bad("n_grid is empty".into());
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_grid must be positive and strictly increasing".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.estimators.is_empty() {
            return bad("no estimators listed".into());
        }
        if self.estimators.iter().collect::<BTreeSet<_>>().len() != self.estimators.len() {
            return bad("estimators are listed more than once".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(w) = self.omega {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("omega must be positive, got {w}"));
            }
        }
        let hard = self.hard_rank();
        if self.estimators.contains(&Method::PcaHard)
            && (hard == 0 || hard > shape.max_kronecker_rank())
        {
            return bad(format!(
                "hard_rank {hard} is outside 1..={}",
                shape.max_kronecker_rank()
            ));
        }
        if let Some(c) = self.calibration {
            if c.trials == 0 || c.n == 0 {
                return bad("calibration needs trials >= 1 and n >= 1".into());
            }
        }
        match &self.lambda_policy {
            LambdaPolicy::Theorem1 { omega } => {
                if let Some(w) = omega {
                    if !(*w > 0.0 && w.is_finite()) {
                        return bad(format!("theorem1 omega must be positive, got {w}"));
                    }
                }
                if omega.is_none() && self.omega.is_none() && self.calibration.is_none() {
                    return bad(
                        "the theorem1 policy needs omega (in the policy, at top level, or via calibration)"
                            .into(),
                    );
                }
                self.check_delta_condition()?;
            }
            LambdaPolicy::GridSelect {
                lambda0,
                split_fraction,
                repetitions,
                ..
            } => {
                if let Some(l) = lambda0 {
                    if !(*l > 0.0 && l.is_finite()) {
                        return bad(format!("lambda0 must be positive, got {l}"));
                    }
                }
                SplitConfig {
                    split_fraction: *split_fraction,
                    repetitions: *repetitions,
                }
                .validate()
                .map_err(|e| Error::Spec(e.to_string()))?;
                if self.n_grid[0] < 2 {
                    return bad("grid selection needs n >= 2 at every grid point".into());
                }
            }
            LambdaPolicy::Fixed { lambda } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("fixed lambda must be non-negative, got {lambda}"));
                }
            }
        }
        Ok(())
    }

    /// Fails if the delta condition is violated at some `n` for the target
    /// effective ranks.
    pub fn check_delta_condition(&self) -> Result<()> {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        for &n in &self.n_grid {
            let inputs = BoundInputs {
                omega: 1.0,
                n,
                delta: self.delta,
                max_rank_phi: max(&self.phi_effective_ranks),
                max_rank_psi: max(&self.psi_effective_ranks),
                norm_sum: 1.0,
                trace_sigma: 1.0,
            };
            if !inputs.delta_condition_holds() {
                return Err(Error::Spec(format!(
                    "delta condition fails at n = {n} (left side {:.4} > 1)",
                    inputs.delta_condition_lhs()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
p = 4
q = 4
k_rank = 1
phi_effective_ranks = [2.0]
psi_effective_ranks = [2.0]
n_grid = [32, 64]
delta = 0.05
estimators = ["sample", "pls_soft"]
trials = 2
seed = 1

[lambda_policy]
kind = "grid_select"
"#;

    #[test]
    fn parses_with_defaults() {
        let s = ExperimentSpec::parse(BASE, "base").unwrap();
        s.validate().unwrap();
        assert_eq!(
            s.lambda_policy,
            LambdaPolicy::GridSelect {
                lambda0: None,
                steps: DEFAULT_GRID_STEPS,
                split_fraction: 0.5,
                repetitions: 5
            }
        );
        assert_eq!(s.name, "experiment");
        assert_eq!(ExperimentSpec::parse(&s.to_toml(), "again").unwrap(), s);
    }

    #[test]
    fn invariant_failures() {
        let cases = [
            ("n_grid = [32, 64]", "n_grid = [64, 32]"),
            ("trials = 2", "trials = 0"),
            ("delta = 0.05", "delta = 1.5"),
            ("psi_effective_ranks = [2.0]", "psi_effective_ranks = [5.0]"),
            ("estimators = [\"sample\", \"pls_soft\"]", "estimators = [\"sample\", \"sample\"]"),
            ("kind = \"grid_select\"", "kind = \"theorem1\""),
        ];
        for (from, to) in cases {
            let s = ExperimentSpec::parse(&BASE.replace(from, to), "t").unwrap();
            assert!(matches!(s.validate(), Err(Error::Spec(_))), "{to}");
        }
    }

    #[test]
    fn theorem1_checks_delta_condition() {
        let text = BASE
            .replace("kind = \"grid_select\"", "kind = \"theorem1\"\nomega = 1.0")
            .replace("n_grid = [32, 64]", "n_grid = [2, 64]");
        let s = ExperimentSpec::parse(&text, "t").unwrap();
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("n = 2"), "{err}");
    }

    #[test]
    fn schema_version_and_unknown_fields() {
        assert!(ExperimentSpec::parse(&BASE.replace("schema_version = 1", "schema_version = 9"), "t").is_err());
        assert!(ExperimentSpec::parse(&format!("bogus = 1\n{BASE}"), "t").is_err());
    }
}
