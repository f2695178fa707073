//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use kroncov::estimators::{pls_estimate, pls_from_covariance, sample_covariance, Method};
use kroncov::experiment::{
    coverage_report, group_by_n, rate_slope, run_experiment, write_records, ErrorField,
    ExperimentSpec, RunOptions,
};
use kroncov::linalg::{kron, nuclear_norm, soft_threshold_svd, svd, symmetric_eigenvalues, unvec, vec};
use kroncov::model::{
    assemble_sigma, factorize_for_sampling, random_psd_factor, sample_matrix_model, FactorPair,
    KronSumCovariance, Spectrum, ERROR_BOUND_CONSTANT,
};
use kroncov::rearrange::{rearrange, rearrange_inverse, rearranged_deviation_norm};
use kroncov::rng::{derive_seed, stream};
use kroncov::{BlockShape, DenseMatrix};
use rand::Rng;

const RATE_SPEC: &str = include_str!("../../../specs/rate.toml");
const STRUCTURE_SPEC: &str = include_str!("../../../specs/structure.toml");
const COVERAGE_SPEC: &str = include_str!("../../../specs/coverage.toml");

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// `((1 + √2)/2)²`, the oracle-inequality constant.
fn oracle_constant() -> f64 {
    let h = (1.0 + 2f64.sqrt()) / 2.0;
    h * h
}

fn random_model(shape: BlockShape, k: usize, seed: u64) -> KronSumCovariance {
    let mut rng = stream(seed, &[]);
    let terms = (0..k)
        .map(|_| {
            let rp = 1.0 + rng.random::<f64>() * (shape.p() as f64 - 1.0);
            let rq = 1.0 + rng.random::<f64>() * (shape.q() as f64 - 1.0);
            FactorPair {
                phi: random_psd_factor(shape.p(), rp, Spectrum::Geometric, rng.random()).unwrap(),
                psi: random_psd_factor(shape.q(), rq, Spectrum::Geometric, rng.random()).unwrap(),
            }
        })
        .collect();
    KronSumCovariance::new(shape, terms).unwrap()
}

fn structural_identities() -> Outcome {
    let mut rng = stream(1, &[]);
    let (mut iso, mut lin, mut rank_one, mut appendix, mut exact_trips) = (0f64, 0f64, 0f64, 0f64, true);
    for case in 0..100 {
        let p = 1 + case % 6;
        let q = 1 + (case / 6) % 6;
        let shape = BlockShape::new(p, q).unwrap();
        let m = gaussian(p * q, p * q, &mut rng);
        let m2 = gaussian(p * q, p * q, &mut rng);
        let r = rearrange(&m, shape).unwrap();
        iso = iso.max((fro(&r) - fro(&m)).abs() / fro(&m));
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = rearrange(&(&m.scale(a) + &m2.scale(b)), shape).unwrap();
        let rhs = &r.scale(a) + &rearrange(&m2, shape).unwrap().scale(b);
        lin = lin.max(rel_diff(&lhs, &rhs));

        let fa = gaussian(p, p, &mut rng);
        let fb = gaussian(q, q, &mut rng);
        let outer = DenseMatrix::outer(&naive_vec(&fa), &naive_vec(&fb));
        rank_one = rank_one.max(rel_diff(&rearrange(&kron(&fa, &fb).unwrap(), shape).unwrap(), &outer));

        exact_trips &= rearrange_inverse(&r, shape).unwrap() == m;
        exact_trips &= rearrange(&rearrange_inverse(&outer, shape).unwrap(), shape).unwrap() == outer;
        exact_trips &= unvec(&vec(&m), p * q, p * q).unwrap() == m;

        // The four Kronecker identities, each against an independent evaluation.
        let fc = gaussian(p, p, &mut rng);
        let fd = gaussian(q, q, &mut rng);
        let mixed = naive_matmul(&kron(&fa, &fb).unwrap(), &kron(&fc, &fd).unwrap());
        let mixed_ref = naive_kron(&naive_matmul(&fa, &fc), &naive_matmul(&fb, &fd));
        appendix = appendix.max(rel_diff(&mixed, &mixed_ref));

        let k = kron(&fa, &fb).unwrap();
        appendix = appendix.max((fro(&k) - fro(&fa) * fro(&fb)).abs() / fro(&k));
        let sa = naive_matmul(&fa, &fa.transpose()).symmetrize().unwrap();
        let sb = naive_matmul(&fb, &fb.transpose()).symmetrize().unwrap();
        let ea = symmetric_eigenvalues(&sa).unwrap();
        let eb = symmetric_eigenvalues(&sb).unwrap();
        let mut prods: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x * y)).collect();
        prods.sort_by(|x, y| y.total_cmp(x));
        let got = symmetric_eigenvalues(&kron(&sa, &sb).unwrap()).unwrap();
        let eig_err = got.iter().zip(&prods).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max) / prods[0];
        appendix = appendix.max(eig_err);

        let u = gaussian(q, p, &mut rng);
        let kv = k.matmul_vec(&vec(&u));
        let kv_ref = naive_vec(&naive_matmul(&naive_matmul(&fb, &u), &fa.transpose()));
        let num: f64 = kv.iter().zip(&kv_ref).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = kv_ref.iter().map(|x| x * x).sum::<f64>().sqrt();
        appendix = appendix.max(num / den);

        let tr = naive_trace(&fa) * naive_trace(&fb);
        appendix = appendix.max((naive_trace(&k) - tr).abs() / tr.abs().max(fro(&k)));
    }
    let passed = iso <= 1e-12 && lin <= 1e-12 && rank_one <= 1e-12 && appendix <= 1e-11 && exact_trips;
    outcome(
        passed,
        format!(
            "isometry {iso:.1e}, linearity {lin:.1e}, rank-one {rank_one:.1e} (tol 1e-12); Kronecker identities {appendix:.1e} (tol 1e-11); exact round trips {exact_trips}"
        ),
    )
}

fn rank_oracle() -> Outcome {
    let shape = BlockShape::new(4, 4).unwrap();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let k = 1 + (case % 3) as usize;
        let sigma = assemble_sigma(&random_model(shape, k, derive_seed(2, &[case])));
        let s = svd(&naive_rearrange(&sigma, 4, 4)).unwrap().singular_values;
        let ratio = s[k] / s[0];
        worst = worst.max(ratio);
        ok += (s[k] <= 1e-9 * s[0]) as usize;
    }
    outcome(ok == 100, format!("{ok}/100 cases, worst sigma_(K+1)/sigma_1 = {worst:.1e} (tol 1e-9)"))
}

fn prox_optimality() -> Outcome {
    let mut rng = stream(3, &[]);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..20 {
        let m = gaussian(6, 8, &mut rng);
        for lambda in [0.1, 1.0, 10.0] {
            let r = soft_threshold_svd(&m, lambda).unwrap();
            let f = |x: &DenseMatrix| diff_fro(x, &m).powi(2) + lambda * nuclear_norm(x).unwrap();
            let best = f(&r);
            for i in 0..200 {
                let eps = if i % 2 == 0 { 1e-3 } else { 1e-2 };
                let d = gaussian(6, 8, &mut rng);
                let gain = best - f(&(&r + &d.scale(eps / fro(&d))));
                worst = worst.max(gain);
                violations += (gain > 1e-12) as usize;
            }
        }
    }
    outcome(
        violations == 0,
        format!("12000 perturbations, {violations} improvements beyond 1e-12, largest objective gain {worst:.1e}"),
    )
}

fn oracle_inequality() -> Outcome {
    let shape = BlockShape::new(6, 6).unwrap();
    let k = 2;
    let mut ok = 0;
    let mut worst_ratio: f64 = 0.0;
    for t in 0..100u64 {
        let cov = random_model(shape, k, derive_seed(4, &[t, 0]));
        let sigma = assemble_sigma(&cov);
        let data = sample_matrix_model(&factorize_for_sampling(&cov).unwrap(), 200, derive_seed(4, &[t, 1])).unwrap();
        let cov_hat = sample_covariance(&data);
        let lambda = 2.0 * rearranged_deviation_norm(&cov_hat, &sigma, shape).unwrap();
        let est = pls_from_covariance(&cov_hat, shape, lambda, 200).unwrap().estimate;
        let err_r = diff_fro(&naive_rearrange(&est, 6, 6), &naive_rearrange(&sigma, 6, 6)).powi(2);
        let err = diff_fro(&est, &sigma).powi(2);
        let oracle = oracle_constant() * lambda * lambda * k as f64;
        let theorem = ERROR_BOUND_CONSTANT * lambda * lambda * k as f64;
        worst_ratio = worst_ratio.max(err_r / oracle);
        ok += (err_r <= oracle + 1e-9 && err < theorem) as usize;
    }
    outcome(ok == 100, format!("{ok}/100 trials, worst error / oracle bound = {worst_ratio:.3}"))
}

fn rate_check() -> Outcome {
    let spec = ExperimentSpec::parse(RATE_SPEC, "rate.toml").unwrap();
    let run = run_experiment(&spec, RunOptions::default()).unwrap();
    let fit = rate_slope(&run.records, Method::PlsSoft, ErrorField::FrobeniusError).unwrap();
    outcome(
        (-0.65..=-0.35).contains(&fit.slope),
        format!("slope {:.3} (r^2 {:.3}), target [-0.65, -0.35]", fit.slope, fit.r_squared),
    )
}

fn medians_at(spec: &ExperimentSpec) -> Vec<(Method, f64)> {
    let run = run_experiment(spec, RunOptions::default()).unwrap();
    spec.estimators
        .iter()
        .map(|&m| {
            let groups = group_by_n(&run.records, m, ErrorField::FrobeniusError);
            (m, median(&groups[&spec.n_grid[0]]))
        })
        .collect()
}

fn structure_advantage() -> Outcome {
    let low = ExperimentSpec::parse(STRUCTURE_SPEC, "structure.toml").unwrap();
    let mut high = low.clone();
    high.phi_effective_ranks = vec![4.0];
    high.psi_effective_ranks = vec![4.0];
    let ratios = |meds: &[(Method, f64)]| {
        let sample = meds.iter().find(|(m, _)| *m == Method::Sample).unwrap().1;
        let get = |x: Method| meds.iter().find(|(m, _)| *m == x).unwrap().1 / sample;
        (get(Method::PlsSoft), get(Method::RankOne))
    };
    let (pls2, r1_2) = ratios(&medians_at(&low));
    let (pls4, r1_4) = ratios(&medians_at(&high));
    let passed = pls2 < 1.0 && r1_2 < 1.0 && pls4 < pls2 && r1_4 < r1_2;
    outcome(
        passed,
        format!(
            "median error / sample: pls_soft {pls2:.3} -> {pls4:.3}, rank_one {r1_2:.3} -> {r1_4:.3} (r = 2 -> 4)"
        ),
    )
}

fn coverage() -> Outcome {
    let spec = ExperimentSpec::parse(COVERAGE_SPEC, "coverage.toml").unwrap();
    let run = run_experiment(&spec, RunOptions::default()).unwrap();
    let c = coverage_report(&run.records, spec.delta).unwrap();
    let cal = run.calibration.as_ref().unwrap();
    outcome(
        c.lemma1_meets_target() && c.theorem1_meets_target() && c.records == 500,
        format!(
            "omega {:.3} from {} pilot trials; deviation bound {:.3}, error bound {:.3} over {} trials (target {:.2})",
            cal.omega, cal.trials, c.lemma1_coverage, c.theorem1_coverage, c.records, c.target
        ),
    )
}

fn determinism_and_performance() -> Outcome {
    let mut spec = ExperimentSpec::parse(RATE_SPEC, "rate.toml").unwrap();
    spec.trials = 8;
    spec.estimators = vec![Method::Sample, Method::PlsSoft, Method::PcaHard, Method::RankOne];
    let csv = |threads: usize| {
        let run = run_experiment(&spec, RunOptions { threads: Some(threads), omega_override: None }).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &run.records).unwrap();
        buf
    };
    let reference = csv(1);
    let identical = [1, 2, 4].iter().all(|&t| csv(t) == reference);

    let shape = BlockShape::new(64, 64).unwrap();
    let cov = KronSumCovariance::new(
        shape,
        vec![FactorPair {
            phi: random_psd_factor(64, 8.0, Spectrum::Geometric, 81).unwrap(),
            psi: random_psd_factor(64, 8.0, Spectrum::Geometric, 82).unwrap(),
        }],
    )
    .unwrap();
    let data = sample_matrix_model(&factorize_for_sampling(&cov).unwrap(), 128, 83).unwrap();
    let start = Instant::now();
    let report = pls_estimate(&data, shape, 1.0).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        identical && secs < 60.0 && report.estimate.rows() == 4096,
        format!("records identical across 1/2/4 threads: {identical}; pls at d = 4096, n = 128: {secs:.1}s (limit 60s)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("structural identities", structural_identities),
        ("rank oracle", rank_oracle),
        ("prox optimality", prox_optimality),
        ("oracle inequality", oracle_inequality),
        ("rate check", rate_check),
        ("structure advantage", structure_advantage),
        ("coverage", coverage),
        ("determinism and performance", determinism_and_performance),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        failures += (!o.passed) as usize;
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        println!("acceptance: all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
