use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{CalibrationSpec, ExperimentSpec, LambdaPolicy};
use crate::error::{Error, Result};
use crate::estimators::{
    hard_threshold_from_covariance, lambda_grid, pls_from_covariance, rank_one_estimate,
    sample_covariance, sample_from_covariance, select_lambda, EstimateReport, Method, SampleSet,
    SplitConfig,
};
use crate::linalg::{singular_values, DenseMatrix};
use crate::model::{
    assemble_sigma, factorize_for_sampling, random_psd_factor, sample_matrix_model,
    theorem1_error_bound, BoundInputs, FactorPair, KronSumCovariance,
};
use crate::rearrange::{rearrange, rearranged_deviation_norm, BlockShape};
use crate::rng::{derive_seed, TAG_DATA, TAG_MODEL, TAG_PILOT, TAG_SELECT, TAG_TERM, TAG_TRIAL};

/// One estimator run on one trial at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub p: usize,
    pub q: usize,
    pub k_rank: usize,
    pub trial: usize,
    pub estimator: Method,
    pub n: usize,
    pub lambda_used: Option<f64>,
    pub frobenius_error: f64,
    pub squared_frobenius_error: f64,
    /// `‖ℛ(Σ̂ − Σ)‖`, shared by all estimators of a trial and sample size.
    pub operator_error_rearranged: f64,
    /// `3λ²K/2` at `λ = 2 × lemma1_bound_value`.
    pub theorem1_bound_value: Option<f64>,
    pub lemma1_bound_value: Option<f64>,
    pub retained_rank: usize,
    /// Seconds spent in the estimator call. Not part of the deterministic
    /// record file.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads for trials; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Replaces every other source of `ω`.
    pub omega_override: Option<f64>,
}

/// Result of a pilot run: the smallest `ω` for which the deviation bound
/// holds on every pilot trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub omega: f64,
    pub trials: usize,
    pub n: usize,
    /// Median of `‖ℛ(Σ̂ − Σ)‖ / bound(ω = 1)` over the pilot.
    pub median_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentRun {
    /// Sorted by `(trial, n, estimator)`.
    pub records: Vec<TrialRecord>,
    pub omega: Option<f64>,
    pub calibration: Option<Calibration>,
}

/// Draws the model for a trial: factor `j` of term `Φ`/`Ψ` is a random PSD
/// matrix with unit operator norm and the spec's target effective rank.
pub fn build_model(spec: &ExperimentSpec, model_seed: u64) -> Result<KronSumCovariance> {
    let shape = spec.shape()?;
    let terms = (0..spec.k_rank)
        .map(|j| {
            let (rp, rq) = spec.term_ranks(j);
            Ok(FactorPair {
                phi: random_psd_factor(
                    shape.p(),
                    rp,
                    spec.spectrum,
                    derive_seed(model_seed, &[TAG_TERM, j as u64, 0]),
                )?,
                psi: random_psd_factor(
                    shape.q(),
                    rq,
                    spec.spectrum,
                    derive_seed(model_seed, &[TAG_TERM, j as u64, 1]),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KronSumCovariance::new(shape, terms)
}

fn model_seed(spec: &ExperimentSpec, trial_seed: u64) -> u64 {
    if spec.fixed_model {
        derive_seed(spec.seed, &[TAG_MODEL])
    } else {
        derive_seed(trial_seed, &[TAG_MODEL])
    }
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Contract(format!("cannot start {t} worker threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

struct TrialSetup {
    shape: BlockShape,
    cov: KronSumCovariance,
    sigma: DenseMatrix,
    data: SampleSet,
}

/// Model and nested samples for one trial: the sample for `n` is the first
/// `n` observations of the sample for the largest `n`.
fn setup_trial(spec: &ExperimentSpec, trial_seed: u64, n_max: usize) -> Result<TrialSetup> {
    let cov = build_model(spec, model_seed(spec, trial_seed))?;
    let sigma = assemble_sigma(&cov);
    let sampler = factorize_for_sampling(&cov)?;
    let data = sample_matrix_model(&sampler, n_max, derive_seed(trial_seed, &[TAG_DATA]))?;
    Ok(TrialSetup {
        shape: cov.shape(),
        cov,
        sigma,
        data,
    })
}

/// Runs the pilot and returns the calibrated `ω`.
pub fn calibrate_omega(
    spec: &ExperimentSpec,
    pilot: CalibrationSpec,
    threads: Option<usize>,
) -> Result<Calibration> {
    spec.validate()?;
    let ratios: Vec<f64> = in_pool(threads, || {
        (0..pilot.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(spec.seed, &[TAG_PILOT, t as u64]);
                let setup = setup_trial(spec, seed, pilot.n)?;
                let bound = BoundInputs::from_model(&setup.cov, 1.0, pilot.n, spec.delta)?
                    .lemma1_bound()?;
                let dev = rearranged_deviation_norm(
                    &sample_covariance(&setup.data),
                    &setup.sigma,
                    setup.shape,
                )?;
                Ok(dev / bound)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let omega = ratios.iter().copied().fold(0.0, f64::max);
    if !(omega > 0.0) {
        return Err(Error::Degenerate(
            "every pilot deviation was zero; ω cannot be calibrated".into(),
        ));
    }
    Ok(Calibration {
        omega,
        trials: pilot.trials,
        n: pilot.n,
        median_ratio: super::analysis::median(&ratios),
    })
}

/// Runs every `(trial, n, estimator)` combination of `spec`.
pub fn run_experiment(spec: &ExperimentSpec, options: RunOptions) -> Result<ExperimentRun> {
    spec.validate()?;
    let calibration = match (options.omega_override, spec.calibration) {
        (None, Some(pilot)) => Some(calibrate_omega(spec, pilot, options.threads)?),
        _ => None,
    };
    let omega = spec.resolve_omega(options.omega_override, calibration.as_ref().map(|c| c.omega));
    if matches!(spec.lambda_policy, LambdaPolicy::Theorem1 { .. }) && omega.is_none() {
        return Err(Error::Spec("the theorem1 policy needs a value of ω".into()));
    }
    let n_max = *spec.n_grid.last().expect("validated non-empty");

    let per_trial: Vec<Vec<TrialRecord>> = in_pool(options.threads, || {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, t, n_max, omega))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.trial, a.n, a.estimator).cmp(&(b.trial, b.n, b.estimator)));
    Ok(ExperimentRun {
        records,
        omega,
        calibration,
    })
}

fn run_trial(
    spec: &ExperimentSpec,
    trial: usize,
    n_max: usize,
    omega: Option<f64>,
) -> Result<Vec<TrialRecord>> {
    let trial_seed = derive_seed(spec.seed, &[TAG_TRIAL, trial as u64]);
    let setup = setup_trial(spec, trial_seed, n_max)?;
    let shape = setup.shape;
    let mut out = Vec::with_capacity(spec.n_grid.len() * spec.estimators.len());
    for &n in &spec.n_grid {
        let data = if n == n_max {
            setup.data.clone()
        } else {
            setup.data.subset(&(0..n).collect::<Vec<_>>())?
        };
        let cov_hat = sample_covariance(&data);
        let deviation = rearranged_deviation_norm(&cov_hat, &setup.sigma, shape)?;
        let lemma1 = match omega {
            Some(w) => {
                let inputs = BoundInputs::from_model(&setup.cov, w, n, spec.delta)?;
                if inputs.delta_condition_holds() {
                    Some(inputs.lemma1_bound()?)
                } else {
                    None
                }
            }
            None => None,
        };
        let theorem1_lambda = lemma1.map(|b| 2.0 * b);
        for &method in &spec.estimators {
            let start = Instant::now();
            let report = match method {
                Method::Sample => sample_from_covariance(cov_hat.clone(), shape, n)?,
                Method::PlsSoft => {
                    let lambda = match &spec.lambda_policy {
                        LambdaPolicy::Theorem1 { .. } => theorem1_lambda.ok_or_else(|| {
                            Error::Spec(format!("delta condition fails at n = {n}"))
                        })?,
                        LambdaPolicy::Fixed { lambda } => *lambda,
                        LambdaPolicy::GridSelect {
                            lambda0,
                            steps,
                            split_fraction,
                            repetitions,
                        } => {
                            let start = match lambda0 {
                                Some(l) => *l,
                                None => default_lambda0(&cov_hat, shape)?,
                            };
                            let grid = lambda_grid(start, *steps)?;
                            let config = SplitConfig {
                                split_fraction: *split_fraction,
                                repetitions: *repetitions,
                            };
                            let seed = derive_seed(trial_seed, &[TAG_SELECT, n as u64]);
                            select_lambda(&data, shape, &grid, config, seed)?.lambda
                        }
                    };
                    pls_from_covariance(&cov_hat, shape, lambda, n)?
                }
                Method::PcaHard => {
                    hard_threshold_from_covariance(&cov_hat, shape, spec.hard_rank(), n)?
                }
                Method::RankOne => rank_one_estimate(&data, shape)?,
            };
            let wall_time = start.elapsed().as_secs_f64();
            out.push(record(
                spec,
                trial,
                n,
                &report,
                &setup.sigma,
                deviation,
                lemma1,
                theorem1_lambda.map(|l| theorem1_error_bound(l, spec.k_rank)),
                wall_time,
            )?);
        }
    }
    Ok(out)
}

/// `2σ̂₁` of `ℛ(Σ̂)`: the smallest threshold that zeroes the estimate.
fn default_lambda0(cov_hat: &DenseMatrix, shape: BlockShape) -> Result<f64> {
    let top = singular_values(&rearrange(cov_hat, shape)?)?
        .first()
        .copied()
        .unwrap_or(0.0);
    if top > 0.0 {
        Ok(2.0 * top)
    } else {
        Err(Error::Degenerate("sample covariance is zero".into()))
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    spec: &ExperimentSpec,
    trial: usize,
    n: usize,
    report: &EstimateReport,
    sigma: &DenseMatrix,
    deviation: f64,
    lemma1: Option<f64>,
    theorem1: Option<f64>,
    wall_time: f64,
) -> Result<TrialRecord> {
    let diff = report.estimate.try_sub(sigma)?;
    let squared: f64 = diff.as_slice().iter().map(|x| x * x).sum();
    Ok(TrialRecord {
        experiment: spec.name.clone(),
        p: spec.p,
        q: spec.q,
        k_rank: spec.k_rank,
        trial,
        estimator: report.method,
        n,
        lambda_used: report.lambda_used,
        frobenius_error: squared.sqrt(),
        squared_frobenius_error: squared,
        operator_error_rearranged: deviation,
        theorem1_bound_value: theorem1,
        lemma1_bound_value: lemma1,
        retained_rank: report.effective_rank_estimate,
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPEC: &str = r#"
schema_version = 1
p = 3
q = 3
k_rank = 1
phi_effective_ranks = [1.5]
psi_effective_ranks = [2.0]
n_grid = [20, 40]
delta = 0.1
estimators = ["sample", "pls_soft", "pca_hard", "rank_one"]
trials = 3
seed = 11
omega = 1.0

[lambda_policy]
kind = "grid_select"
steps = 6
"#;

    #[test]
    fn record_count_order_and_determinism() {
        let spec = ExperimentSpec::parse(SPEC, "t").unwrap();
        let a = run_experiment(&spec, RunOptions::default()).unwrap();
        assert_eq!(a.records.len(), 3 * 2 * 4);
        let keys: Vec<_> = a.records.iter().map(|r| (r.trial, r.n, r.estimator)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let b = run_experiment(
            &spec,
            RunOptions {
                threads: Some(2),
                omega_override: None,
            },
        )
        .unwrap();
        let strip = |r: &TrialRecord| TrialRecord { wall_time: 0.0, ..r.clone() };
        assert!(a.records.iter().map(strip).eq(b.records.iter().map(strip)));
        for r in &a.records {
            assert!(r.frobenius_error >= 0.0);
            let sq = r.frobenius_error * r.frobenius_error;
            assert!((sq - r.squared_frobenius_error).abs() <= 1e-12 * sq.max(f64::MIN_POSITIVE));
            assert_eq!(r.lambda_used.is_some(), r.estimator == Method::PlsSoft);
            assert!(r.lemma1_bound_value.is_some());
        }
    }

    #[test]
    fn single_record() {
        let text = SPEC
            .replace("n_grid = [20, 40]", "n_grid = [30]")
            .replace("trials = 3", "trials = 1")
            .replace(
                "estimators = [\"sample\", \"pls_soft\", \"pca_hard\", \"rank_one\"]",
                "estimators = [\"rank_one\"]",
            );
        let spec = ExperimentSpec::parse(&text, "t").unwrap();
        assert_eq!(run_experiment(&spec, RunOptions::default()).unwrap().records.len(), 1);
    }

    #[test]
    fn fixed_model_is_shared() {
        let spec = ExperimentSpec::parse(&format!("fixed_model = true\n{SPEC}"), "t").unwrap();
        let a = build_model(&spec, model_seed(&spec, 1)).unwrap();
        let b = build_model(&spec, model_seed(&spec, 2)).unwrap();
        assert_eq!(assemble_sigma(&a), assemble_sigma(&b));
    }

    #[test]
    fn calibration_feeds_theorem1_policy() {
        let text = SPEC
            .replace("kind = \"grid_select\"\nsteps = 6", "kind = \"theorem1\"")
            .replace("omega = 1.0", "[calibration]\ntrials = 10\nn = 40")
            .replace("n_grid = [20, 40]", "n_grid = [40]");
        let spec = ExperimentSpec::parse(&text, "t").unwrap();
        let run = run_experiment(&spec, RunOptions::default()).unwrap();
        let cal = run.calibration.unwrap();
        assert_eq!(run.omega, Some(cal.omega));
        assert!(cal.omega > 0.0);
        let r = &run.records.iter().find(|r| r.estimator == Method::PlsSoft).unwrap();
        assert!((r.lambda_used.unwrap() - 2.0 * r.lemma1_bound_value.unwrap()).abs() < 1e-12);
    }
}
