use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runner::TrialRecord;
use crate::error::{Error, Result};
use crate::estimators::Method;

/// Which per-record error a summary is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorField {
    FrobeniusError,
    SquaredFrobeniusError,
    OperatorErrorRearranged,
}

impl ErrorField {
    pub fn get(&self, r: &TrialRecord) -> f64 {
        match self {
            ErrorField::FrobeniusError => r.frobenius_error,
            ErrorField::SquaredFrobeniusError => r.squared_frobenius_error,
            ErrorField::OperatorErrorRearranged => r.operator_error_rearranged,
        }
    }
}

/// Least-squares line through `(log n, log median error)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of a non-empty slice.
pub fn quantile(values: &[f64], prob: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = prob.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Per-`n` values of `field` for one estimator.
pub fn group_by_n(records: &[TrialRecord], estimator: Method, field: ErrorField) -> BTreeMap<usize, Vec<f64>> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.estimator == estimator) {
        groups.entry(r.n).or_default().push(field.get(r));
    }
    groups
}

/// Slope of `log(median error)` against `log n`.
pub fn rate_slope(records: &[TrialRecord], estimator: Method, field: ErrorField) -> Result<RateFit> {
    let groups = group_by_n(records, estimator, field);
    if groups.len() < 3 {
        return Err(Error::Degenerate(format!(
            "a rate fit needs at least 3 distinct n for {estimator}, found {}",
            groups.len()
        )));
    }
    let mut xs = Vec::with_capacity(groups.len());
    let mut ys = Vec::with_capacity(groups.len());
    for (n, values) in &groups {
        let m = median(values);
        if !(m > 0.0) {
            return Err(Error::Degenerate(format!(
                "median error at n = {n} is {m}; its logarithm is undefined"
            )));
        }
        xs.push((*n as f64).ln());
        ys.push(m.ln());
    }
    Ok(ols(&xs, &ys))
}

fn ols(xs: &[f64], ys: &[f64]) -> RateFit {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    RateFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    }
}

/// Empirical frequency with which the two high-probability bounds hold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Fraction with `operator_error_rearranged ≤ lemma1_bound_value`.
    pub lemma1_coverage: f64,
    /// Fraction with `squared_frobenius_error < theorem1_bound_value`.
    pub theorem1_coverage: f64,
    pub records: usize,
    /// `1 − δ`.
    pub target: f64,
}

impl CoverageReport {
    pub fn lemma1_meets_target(&self) -> bool {
        self.lemma1_coverage >= self.target
    }

    pub fn theorem1_meets_target(&self) -> bool {
        self.theorem1_coverage >= self.target
    }
}

/// Coverage over `records`, all of which must carry both bound values.
pub fn coverage_report(records: &[TrialRecord], delta: f64) -> Result<CoverageReport> {
    if records.is_empty() {
        return Err(Error::Degenerate("coverage of an empty record set".into()));
    }
    let mut lemma = 0usize;
    let mut theorem = 0usize;
    for r in records {
        let (Some(l), Some(t)) = (r.lemma1_bound_value, r.theorem1_bound_value) else {
            return Err(Error::Contract(format!(
                "record (trial {}, n {}, {}) carries no bound values",
                r.trial, r.n, r.estimator
            )));
        };
        lemma += (r.operator_error_rearranged <= l) as usize;
        theorem += (r.squared_frobenius_error < t) as usize;
    }
    let total = records.len() as f64;
    Ok(CoverageReport {
        lemma1_coverage: lemma as f64 / total,
        theorem1_coverage: theorem as f64 / total,
        records: records.len(),
        target: 1.0 - delta,
    })
}

/// One row of the error-versus-`n` curve file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub estimator: Method,
    pub n: usize,
    pub trials: usize,
    pub median_frobenius_error: f64,
    pub q25_frobenius_error: f64,
    pub q75_frobenius_error: f64,
    pub mean_frobenius_error: f64,
    pub median_operator_error_rearranged: f64,
}

/// Summary statistics of the Frobenius error per `(estimator, n)`.
pub fn error_curves(records: &[TrialRecord]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(Method, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.estimator, r.n)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((estimator, n), rs)| {
            let fro: Vec<f64> = rs.iter().map(|r| r.frobenius_error).collect();
            let op: Vec<f64> = rs.iter().map(|r| r.operator_error_rearranged).collect();
            CurvePoint {
                estimator,
                n,
                trials: rs.len(),
                median_frobenius_error: median(&fro),
                q25_frobenius_error: quantile(&fro, 0.25),
                q75_frobenius_error: quantile(&fro, 0.75),
                mean_frobenius_error: fro.iter().sum::<f64>() / fro.len() as f64,
                median_operator_error_rearranged: median(&op),
            }
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn synthetic(estimator: Method, n: usize, trial: usize, err: f64) -> TrialRecord {
        TrialRecord {
            experiment: "synthetic".into(),
            p: 2,
            q: 2,
            k_rank: 1,
            trial,
            estimator,
            n,
            lambda_used: None,
            frobenius_error: err,
            squared_frobenius_error: err * err,
            operator_error_rearranged: err,
            theorem1_bound_value: Some(1.0),
            lemma1_bound_value: Some(1.0),
            retained_rank: 1,
            wall_time: 0.0,
        }
    }

    #[test]
    fn exact_inverse_square_root() {
        let records: Vec<_> = [16, 64, 256, 1024]
            .iter()
            .flat_map(|&n| (0..3).map(move |t| synthetic(Method::PlsSoft, n, t, 3.0 / (n as f64).sqrt())))
            .collect();
        let fit = rate_slope(&records, Method::PlsSoft, ErrorField::FrobeniusError).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_error_has_zero_slope() {
        let records: Vec<_> = [10, 20, 40]
            .iter()
            .map(|&n| synthetic(Method::Sample, n, 0, 0.7))
            .collect();
        let fit = rate_slope(&records, Method::Sample, ErrorField::FrobeniusError).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn too_few_sample_sizes() {
        let records = vec![synthetic(Method::Sample, 10, 0, 1.0), synthetic(Method::Sample, 20, 0, 1.0)];
        assert!(rate_slope(&records, Method::Sample, ErrorField::FrobeniusError).is_err());
    }

    #[test]
    fn coverage_extremes() {
        let all_fail: Vec<_> = (0..4).map(|t| synthetic(Method::PlsSoft, 10, t, 2.0)).collect();
        let c = coverage_report(&all_fail, 0.05).unwrap();
        assert_eq!((c.lemma1_coverage, c.theorem1_coverage), (0.0, 0.0));
        let all_pass: Vec<_> = (0..4).map(|t| synthetic(Method::PlsSoft, 10, t, 0.5)).collect();
        let c = coverage_report(&all_pass, 0.05).unwrap();
        assert_eq!((c.lemma1_coverage, c.theorem1_coverage), (1.0, 1.0));
        assert!(c.lemma1_meets_target() && c.theorem1_meets_target());
        let mut missing = all_pass.clone();
        missing[2].lemma1_bound_value = None;
        assert!(coverage_report(&missing, 0.05).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(quantile(&[0.0, 10.0], 0.25), 2.5);
    }
}
