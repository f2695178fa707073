//! Monte Carlo experiments: spec files, the trial runner, rate and coverage
//! summaries, and CSV/SVG output.

mod analysis;
mod output;
mod runner;
mod spec;

pub use analysis::{
    coverage_report, error_curves, group_by_n, median, quantile, rate_slope, CoverageReport,
    CurvePoint, ErrorField, RateFit,
};
pub use output::{
    render_svg, summarize, write_curves, write_outputs, write_records, write_timings,
    BaselineRate, EstimatorRate, ExperimentSummary, CURVES_FILE, PLOT_FILE, RECORDS_FILE,
    RECORD_HEADER, TIMINGS_FILE,
};
pub use runner::{
    build_model, calibrate_omega, run_experiment, Calibration, ExperimentRun, RunOptions,
    TrialRecord,
};
pub use spec::{
    CalibrationSpec, ExperimentSpec, LambdaPolicy, DEFAULT_GRID_STEPS, EXPERIMENT_SCHEMA_VERSION,
};
