use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kroncov::estimators::{
    extract_factors, hard_threshold_estimate, lambda_grid, pls_estimate, rank_one_estimate,
    sample_covariance, sample_estimate, select_lambda, EstimateReport, Method, SampleSet,
    SplitConfig,
};
use kroncov::experiment::{run_experiment, summarize, write_outputs, ExperimentSpec, RunOptions};
use kroncov::linalg::io::{read_matrix_file, write_matrix_file};
use kroncov::linalg::singular_values;
use kroncov::model::{assemble_sigma, factorize_for_sampling, sample_matrix_model, ModelFile};
use kroncov::rearrange::rearrange;
use kroncov::rng::{derive_seed, TAG_DATA};
use kroncov::verify::run_checks;
use kroncov::BlockShape;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command, EstimateArgs, ExperimentArgs, GenerateArgs, GlobalArgs};
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

pub const SIGMA_FILE: &str = "sigma.csv";
pub const SAMPLES_FILE: &str = "samples.csv";
pub const PROVENANCE_FILE: &str = "provenance.json";
pub const SUMMARY_FILE: &str = "summary.json";
const DEFAULT_VERIFY_SEED: u64 = 20240601;

pub fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    check_global_flags(g, &cli.command)?;
    if let Some(t) = g.threads {
        kroncov::linalg::set_threads(t);
    }
    match &cli.command {
        Command::Generate(a) => generate(g, a),
        Command::Estimate(a) => estimate(g, a),
        Command::Experiment(a) => experiment(g, a),
        Command::Verify => verify(g),
    }
}

fn check_global_flags(g: &GlobalArgs, command: &Command) -> CliResult {
    let name = match command {
        Command::Generate(_) => "generate",
        Command::Estimate(_) => "estimate",
        Command::Experiment(_) => "experiment",
        Command::Verify => "verify",
    };
    let reject = |flag: &str| Err(CliError::Usage(format!("--{flag} has no effect on `{name}`")));
    if g.pre_center && name != "estimate" {
        return reject("pre-center");
    }
    if g.delta.is_some() && name != "experiment" {
        return reject("delta");
    }
    if g.omega.is_some() && name != "experiment" {
        return reject("omega");
    }
    Ok(())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Library(kroncov::Error::Io { path: path.to_path_buf(), source: e })
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).expect("plain data serializes");
    writeln!(out).map_err(|e| io_err(Path::new("<stdout>"), e))
}

#[derive(Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    input: PathBuf,
    input_sha256: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    outputs: Vec<String>,
}

fn generate(g: &GlobalArgs, a: &GenerateArgs) -> CliResult {
    let text = fs::read(&a.model).map_err(|e| io_err(&a.model, e))?;
    let origin = a.model.display().to_string();
    let model = ModelFile::parse(&String::from_utf8_lossy(&text), &origin)?;
    let seed = g.seed.or(model.seed).unwrap_or(0);
    let n = a.n.or(model.n).ok_or_else(|| {
        CliError::Usage("no sample size: pass --n or set `n` in the model file".into())
    })?;
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let base = a.model.parent().unwrap_or(Path::new("."));
    let cov = model.build(base, Some(seed))?;
    let data = sample_matrix_model(&factorize_for_sampling(&cov)?, n, derive_seed(seed, &[TAG_DATA]))?;

    create_dir(&g.out_dir)?;
    write_matrix_file(g.out_dir.join(SIGMA_FILE), &assemble_sigma(&cov))?;
    let samples = g.out_dir.join(SAMPLES_FILE);
    let file = fs::File::create(&samples).map_err(|e| io_err(&samples, e))?;
    data.write_csv(BufWriter::new(file)).map_err(|e| io_err(&samples, e))?;
    let provenance = Provenance {
        tool: "kroncov",
        version: env!("CARGO_PKG_VERSION"),
        command: "generate",
        input: a.model.clone(),
        input_sha256: sha256_hex(&text),
        seed,
        n: Some(n),
        outputs: vec![SIGMA_FILE.into(), SAMPLES_FILE.into()],
    };
    write_json(&g.out_dir.join(PROVENANCE_FILE), &provenance)?;
    print_json(&provenance)
}

fn read_samples(path: &Path) -> CliResult<SampleSet> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(SampleSet::read_csv(std::io::BufReader::new(file), &path.display().to_string())?)
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(flatten)]
    report: kroncov::estimators::ReportSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection_scores: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_files: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_symmetrization_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_reconstruction_residual: Option<f64>,
    pre_centered: bool,
    output: PathBuf,
}

fn estimate(g: &GlobalArgs, a: &EstimateArgs) -> CliResult {
    let uses_lambda = a.lambda.is_some() || a.lambda_grid.is_some() || a.grid_steps.is_some();
    if uses_lambda && a.method != Method::PlsSoft {
        return Err(CliError::Usage(format!("λ options apply to pls only, not {}", a.method)));
    }
    if a.method == Method::PlsSoft && !uses_lambda {
        return Err(CliError::Usage("pls needs --lambda, --lambda-grid or --grid-steps".into()));
    }
    if a.k.is_some() != (a.method == Method::PcaHard) {
        return Err(CliError::Usage("--k is required by pca and accepted by no other method".into()));
    }
    if let Some(l) = a.lambda {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be finite and non-negative, got {l}")));
        }
    }
    let shape = BlockShape::new(a.p, a.q)?;
    if let Some(k) = a.k {
        if k == 0 || k > shape.max_kronecker_rank() {
            return Err(CliError::Usage(format!("--k must lie in 1..={}", shape.max_kronecker_rank())));
        }
    }
    let mut data = read_samples(&a.data)?;
    if g.pre_center {
        data = data.centered();
    }
    if data.d() != shape.dim() {
        return Err(CliError::Library(kroncov::Error::Shape(format!(
            "{} has {} columns, but p·q = {}",
            a.data.display(),
            data.d(),
            shape.dim()
        ))));
    }

    let mut selection_scores = None;
    let report: EstimateReport = match a.method {
        Method::Sample => sample_estimate(&data, shape)?,
        Method::PcaHard => hard_threshold_estimate(&data, shape, a.k.expect("checked above"))?,
        Method::RankOne => rank_one_estimate(&data, shape)?,
        Method::PlsSoft => {
            let lambda = match (&a.lambda, &a.lambda_grid, a.grid_steps) {
                (Some(l), _, _) => *l,
                (None, grid, steps) => {
                    let grid = match (grid, steps) {
                        (Some(grid), _) => grid.clone(),
                        (None, Some(steps)) => {
                            let l0 = match a.lambda0 {
                                Some(l0) => l0,
                                None => {
                                    let cov = sample_covariance(&data);
                                    2.0 * singular_values(&rearrange(&cov, shape)?)?[0]
                                }
                            };
                            lambda_grid(l0, steps)?
                        }
                        (None, None) => unreachable!("checked above"),
                    };
                    let config = SplitConfig { split_fraction: a.split_fraction, repetitions: a.repetitions };
                    let sel = select_lambda(&data, shape, &grid, config, g.seed.unwrap_or(0))?;
                    if !sel.scores.is_empty() {
                        selection_scores = Some(grid.iter().copied().zip(sel.scores.iter().copied()).collect());
                    }
                    sel.lambda
                }
            };
            pls_estimate(&data, shape, lambda)?
        }
    };
    let report = match &a.truth {
        Some(path) => report.with_truth(&read_matrix_file(path)?)?,
        None => report,
    };

    create_dir(&g.out_dir)?;
    let output = g.out_dir.join(&a.output);
    write_matrix_file(&output, &report.estimate)?;

    let mut out = EstimateOutput {
        report: report.summary(),
        selection_scores,
        factor_files: None,
        factor_symmetrization_residual: None,
        factor_reconstruction_residual: None,
        pre_centered: g.pre_center,
        output,
    };
    if let Some(k) = a.factors {
        let f = extract_factors(&report, shape, k, a.psd)?;
        let mut files = Vec::with_capacity(2 * k);
        for (j, pair) in f.pairs.iter().enumerate() {
            for (label, m) in [("phi", &pair.phi), ("psi", &pair.psi)] {
                let name = format!("{label}_{}.csv", j + 1);
                write_matrix_file(g.out_dir.join(&name), m)?;
                files.push(name);
            }
        }
        out.factor_files = Some(files);
        out.factor_symmetrization_residual = Some(f.symmetrization_residual);
        out.factor_reconstruction_residual = Some(f.reconstruction_residual);
    }
    print_json(&out)
}

fn experiment(g: &GlobalArgs, a: &ExperimentArgs) -> CliResult {
    let text = fs::read(&a.spec).map_err(|e| io_err(&a.spec, e))?;
    let mut spec = ExperimentSpec::parse(&String::from_utf8_lossy(&text), &a.spec.display().to_string())?;
    if let Some(seed) = g.seed {
        spec.seed = seed;
    }
    if let Some(delta) = g.delta {
        spec.delta = delta;
    }
    if let Some(w) = g.omega {
        if !(w > 0.0 && w.is_finite()) {
            return Err(CliError::Usage(format!("--omega must be positive, got {w}")));
        }
    }
    let run = run_experiment(&spec, RunOptions { threads: g.threads, omega_override: g.omega })?;
    write_outputs(&g.out_dir, &run, a.plot)?;
    let summary = summarize(&spec, &run)?;
    write_json(&g.out_dir.join(SUMMARY_FILE), &summary)?;
    let mut outputs: Vec<String> = [
        kroncov::experiment::RECORDS_FILE,
        kroncov::experiment::TIMINGS_FILE,
        kroncov::experiment::CURVES_FILE,
        SUMMARY_FILE,
    ]
    .map(String::from)
    .to_vec();
    if a.plot {
        outputs.push(kroncov::experiment::PLOT_FILE.into());
    }
    write_json(
        &g.out_dir.join(PROVENANCE_FILE),
        &Provenance {
            tool: "kroncov",
            version: env!("CARGO_PKG_VERSION"),
            command: "experiment",
            input: a.spec.clone(),
            input_sha256: sha256_hex(&text),
            seed: spec.seed,
            n: None,
            outputs,
        },
    )?;
    print_json(&summary)
}

fn verify(g: &GlobalArgs) -> CliResult {
    let results = run_checks(g.seed.unwrap_or(DEFAULT_VERIFY_SEED))?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut failed = 0;
    for r in &results {
        println!(
            "{}  {:width$}  residual {:.3e}  tolerance {:.1e}",
            if r.passed { "ok  " } else { "FAIL" },
            r.name,
            r.residual,
            r.tolerance
        );
        failed += (!r.passed) as usize;
    }
    println!("{} checks, {} failed", results.len(), failed);
    if failed > 0 {
        return Err(CliError::VerifyFailed { failed, total: results.len() });
    }
    Ok(())
}
