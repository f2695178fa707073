use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analysis::{coverage_report, error_curves, rate_slope, CoverageReport, CurvePoint, ErrorField, RateFit};
use super::runner::{Calibration, ExperimentRun, TrialRecord};
use super::spec::{ExperimentSpec, LambdaPolicy};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::model::baseline_bound_rate;

pub const RECORDS_FILE: &str = "records.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const PLOT_FILE: &str = "curves.svg";

/// Column order of the record file.
pub const RECORD_HEADER: &str = "experiment,p,q,k_rank,trial,estimator,n,lambda_used,frobenius_error,squared_frobenius_error,operator_error_rearranged,theorem1_bound_value,lemma1_bound_value,retained_rank";

pub fn write_records<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(RECORD_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

#[derive(Serialize)]
struct TimingRow<'a> {
    trial: usize,
    n: usize,
    estimator: &'a str,
    wall_time_seconds: f64,
}

/// Wall times, kept apart from the records so the record file stays
/// byte-identical across runs.
pub fn write_timings<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(TimingRow {
            trial: r.trial,
            n: r.n,
            estimator: r.estimator.as_str(),
            wall_time_seconds: r.wall_time,
        })?;
    }
    w.flush().map_err(|e| Error::io("<timings>", e))?;
    Ok(())
}

pub fn write_curves<W: Write>(writer: W, curves: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for c in curves {
        w.serialize(c)?;
    }
    w.flush().map_err(|e| Error::io("<curves>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRate {
    pub estimator: Method,
    pub fit: RateFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRate {
    pub n: usize,
    /// `Tr(Σ) · max(√(log(2/δ)/n), log(2/δ)/n)` with constant 1: a rate,
    /// not a certified bound.
    pub rate: f64,
}

/// Aggregate view of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub records: usize,
    pub omega: Option<f64>,
    pub calibration: Option<Calibration>,
    /// Log-log slopes of the median Frobenius error, for estimators with at
    /// least three sample sizes.
    pub rate_slopes: Vec<EstimatorRate>,
    /// Coverage over the soft-threshold records; present under the
    /// theorem1 policy.
    pub coverage: Option<CoverageReport>,
    pub baseline_rates: Vec<BaselineRate>,
}

pub fn summarize(spec: &ExperimentSpec, run: &ExperimentRun) -> Result<ExperimentSummary> {
    let mut rate_slopes = Vec::new();
    if spec.n_grid.len() >= 3 {
        for &estimator in &spec.estimators {
            match rate_slope(&run.records, estimator, ErrorField::FrobeniusError) {
                Ok(fit) => rate_slopes.push(EstimatorRate { estimator, fit }),
                // Zero medians (e.g. an all-zero estimate) have no log slope.
                Err(Error::Degenerate(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let coverage = if matches!(spec.lambda_policy, LambdaPolicy::Theorem1 { .. }) {
        let pls: Vec<TrialRecord> = run
            .records
            .iter()
            .filter(|r| r.estimator == Method::PlsSoft)
            .cloned()
            .collect();
        if pls.is_empty() {
            None
        } else {
            Some(coverage_report(&pls, spec.delta)?)
        }
    } else {
        None
    };
    // Factors have unit operator norm, so Tr(Φⱼ) = r(Φⱼ).
    let trace: f64 = (0..spec.k_rank)
        .map(|j| {
            let (a, b) = spec.term_ranks(j);
            a * b
        })
        .sum();
    let baseline_rates = spec
        .n_grid
        .iter()
        .map(|&n| Ok(BaselineRate { n, rate: baseline_bound_rate(trace, n, spec.delta)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary {
        experiment: spec.name.clone(),
        records: run.records.len(),
        omega: run.omega,
        calibration: run.calibration.clone(),
        rate_slopes,
        coverage,
        baseline_rates,
    })
}

/// Writes the record, timing and curve files (and the SVG plot if asked)
/// into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, run: &ExperimentRun, plot: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let path = dir.join(name);
        std::fs::File::create(&path)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(path, e))
    };
    write_records(create(RECORDS_FILE)?, &run.records)?;
    write_timings(create(TIMINGS_FILE)?, &run.records)?;
    let curves = error_curves(&run.records);
    write_curves(create(CURVES_FILE)?, &curves)?;
    if plot {
        let path = dir.join(PLOT_FILE);
        std::fs::write(&path, render_svg(&curves)).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

const COLORS: [&str; 4] = ["#1b6ca8", "#d1495b", "#2e933c", "#8f5bb5"];

/// Log-log plot of median Frobenius error against `n`, one polyline per
/// estimator.
pub fn render_svg(curves: &[CurvePoint]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .filter(|c| c.median_frobenius_error > 0.0)
        .map(|c| ((c.n as f64).log10(), c.median_frobenius_error.log10()))
        .collect();
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let span = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
    };
    let (x0, x1) = span(|p| p.0);
    let (y0, y1) = span(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = write!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>"#,
        b = h - m,
        r = w - m
    );
    let _ = write!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">n (log scale)</text><text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">median Frobenius error (log scale)</text>"#,
        w / 2.0,
        h - 15.0,
        h / 2.0,
        h / 2.0
    );
    let mut methods: Vec<Method> = curves.iter().map(|c| c.estimator).collect();
    methods.dedup();
    for (i, method) in methods.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let line: Vec<String> = curves
            .iter()
            .filter(|c| c.estimator == *method && c.median_frobenius_error > 0.0)
            .map(|c| {
                format!(
                    "{:.2},{:.2}",
                    sx((c.n as f64).log10()),
                    sy(c.median_frobenius_error.log10())
                )
            })
            .collect();
        let _ = write!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            line.join(" ")
        );
        let _ = write!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{method}</text>"#,
            w - m - 80.0,
            m + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
