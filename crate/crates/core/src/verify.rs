//! A self-check battery: algebraic identities and estimator properties
//! evaluated on seeded random inputs, each reported with its residual.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{pls_from_covariance, rank_one_factors, sample_covariance, SampleSet};
use crate::linalg::{
    dot, frobenius_norm, kron, nuclear_norm, soft_threshold_svd, svd, symmetric_eigen,
    symmetric_eigenvalues, trace, unvec, vec, DenseMatrix,
};
use crate::model::{
    assemble_sigma, factorize_for_sampling, random_psd_factor, sample_matrix_model, FactorPair,
    KronSumCovariance, Spectrum, ORACLE_CONSTANT,
};
use crate::rearrange::{rearrange, rearrange_inverse, BlockShape};
use crate::rng::{derive_seed, stream, StreamRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut StreamRng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_psd(dim: usize, rng: &mut StreamRng) -> DenseMatrix {
    let g = gaussian(dim, dim, rng);
    g.matmul(&g.transpose()).unwrap().symmetrize().unwrap()
}

fn rel(diff: &DenseMatrix, scale: &DenseMatrix) -> f64 {
    frobenius_norm(diff) / frobenius_norm(scale).max(f64::MIN_POSITIVE)
}

type Check = fn(&mut StreamRng) -> Result<CheckResult>;

const CHECKS: [(&str, Check); 16] = [
    ("kron mixed product", mixed_product),
    ("kron Frobenius norm", kron_frobenius),
    ("kron eigenvalues", kron_eigenvalues),
    ("kron vec identity", kron_vec),
    ("kron trace", kron_trace),
    ("vec/unvec round trip", vec_round_trip),
    ("rearrangement isometry", rearrange_isometry),
    ("rearrangement linearity", rearrange_linearity),
    ("rearrangement of a Kronecker product", rearrange_kron),
    ("rearrangement round trip", rearrange_round_trip),
    ("Kronecker rank oracle", rank_oracle),
    ("SVD reconstruction", svd_reconstruction),
    ("symmetric eigen reconstruction", eigen_reconstruction),
    ("soft-threshold prox optimality", prox_optimality),
    ("oracle inequality", oracle_inequality),
    ("trace-form representation", trace_form),
];

/// Runs every check with inputs drawn from `seed`.
pub fn run_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::with_capacity(CHECKS.len() + 1);
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        let mut rng = stream(seed, &[0x7e51, i as u64]);
        let mut r = check(&mut rng)?;
        r.name = name.to_string();
        out.push(r);
    }
    out.push(rank_one_block_traces(derive_seed(seed, &[0x7e51, CHECKS.len() as u64]))?);
    Ok(out)
}

fn mixed_product(rng: &mut StreamRng) -> Result<CheckResult> {
    let (a, b, c, d) = (gaussian(3, 3, rng), gaussian(3, 3, rng), gaussian(3, 3, rng), gaussian(3, 3, rng));
    let lhs = kron(&a, &b)?.matmul(&kron(&c, &d)?)?;
    let rhs = kron(&a.matmul(&c)?, &b.matmul(&d)?)?;
    Ok(CheckResult::new("", rel(&(&lhs - &rhs), &rhs), 1e-12))
}

fn kron_frobenius(rng: &mut StreamRng) -> Result<CheckResult> {
    let (a, b) = (gaussian(3, 4, rng), gaussian(2, 5, rng));
    let lhs = frobenius_norm(&kron(&a, &b)?);
    let rhs = frobenius_norm(&a) * frobenius_norm(&b);
    Ok(CheckResult::new("", (lhs - rhs).abs() / rhs, 1e-12))
}

fn kron_eigenvalues(rng: &mut StreamRng) -> Result<CheckResult> {
    let (a, b) = (gaussian_psd(3, rng), gaussian_psd(4, rng));
    let ea = symmetric_eigenvalues(&a)?;
    let eb = symmetric_eigenvalues(&b)?;
    let mut products: Vec<f64> = ea.iter().flat_map(|x| eb.iter().map(move |y| x * y)).collect();
    products.sort_by(|x, y| y.total_cmp(x));
    let got = symmetric_eigenvalues(&kron(&a, &b)?)?;
    let residual = got
        .iter()
        .zip(&products)
        .map(|(g, p)| (g - p).abs())
        .fold(0.0, f64::max)
        / products[0];
    Ok(CheckResult::new("", residual, 1e-11))
}

fn kron_vec(rng: &mut StreamRng) -> Result<CheckResult> {
    let (a, b, u) = (gaussian(3, 3, rng), gaussian(2, 2, rng), gaussian(2, 3, rng));
    let lhs = kron(&a, &b)?.matmul_vec(&vec(&u));
    let rhs = vec(&b.matmul(&u)?.matmul(&a.transpose())?);
    let diff: f64 = lhs.iter().zip(&rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    Ok(CheckResult::new("", diff / dot(&rhs, &rhs).sqrt(), 1e-12))
}

fn kron_trace(rng: &mut StreamRng) -> Result<CheckResult> {
    let (a, b) = (gaussian(4, 4, rng), gaussian(3, 3, rng));
    let lhs = trace(&kron(&a, &b)?)?;
    let rhs = trace(&a)? * trace(&b)?;
    Ok(CheckResult::new("", (lhs - rhs).abs() / rhs.abs().max(1.0), 1e-11))
}

fn vec_round_trip(rng: &mut StreamRng) -> Result<CheckResult> {
    let m = gaussian(5, 3, rng);
    let back = unvec(&vec(&m), 5, 3)?;
    Ok(CheckResult::new("", frobenius_norm(&(&back - &m)), 0.0))
}

fn rearrange_isometry(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(3, 4)?;
    let m = gaussian(12, 12, rng);
    let r = rearrange(&m, shape)?;
    let a = frobenius_norm(&m);
    Ok(CheckResult::new("", (frobenius_norm(&r) - a).abs() / a, 1e-12))
}

fn rearrange_linearity(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(2, 3)?;
    let (x, y) = (gaussian(6, 6, rng), gaussian(6, 6, rng));
    let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    let lhs = rearrange(&(&x.scale(a) + &y.scale(b)), shape)?;
    let rhs = &rearrange(&x, shape)?.scale(a) + &rearrange(&y, shape)?.scale(b);
    Ok(CheckResult::new("", rel(&(&lhs - &rhs), &rhs), 1e-12))
}

fn rearrange_kron(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(3, 2)?;
    let (a, b) = (gaussian(3, 3, rng), gaussian(2, 2, rng));
    let r = rearrange(&kron(&a, &b)?, shape)?;
    let expected = DenseMatrix::outer(&vec(&a), &vec(&b));
    Ok(CheckResult::new("", rel(&(&r - &expected), &expected), 1e-12))
}

fn rearrange_round_trip(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(4, 3)?;
    let m = gaussian(12, 12, rng);
    let back = rearrange_inverse(&rearrange(&m, shape)?, shape)?;
    Ok(CheckResult::new("", frobenius_norm(&(&back - &m)), 0.0))
}

fn random_model(shape: BlockShape, k: usize, rng: &mut StreamRng) -> Result<KronSumCovariance> {
    let terms = (0..k)
        .map(|_| {
            let rp = 1.0 + rng.random::<f64>() * (shape.p() as f64 - 1.0);
            let rq = 1.0 + rng.random::<f64>() * (shape.q() as f64 - 1.0);
            Ok(FactorPair {
                phi: random_psd_factor(shape.p(), rp, Spectrum::Geometric, rng.random())?,
                psi: random_psd_factor(shape.q(), rq, Spectrum::Geometric, rng.random())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KronSumCovariance::new(shape, terms)
}

fn rank_oracle(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(4, 4)?;
    let model = random_model(shape, 2, rng)?;
    let s = svd(&rearrange(&assemble_sigma(&model), shape)?)?.singular_values;
    Ok(CheckResult::new("", s[2] / s[0], 1e-9))
}

fn svd_reconstruction(rng: &mut StreamRng) -> Result<CheckResult> {
    let m = gaussian(20, 30, rng);
    let d = svd(&m)?;
    Ok(CheckResult::new("", rel(&(&d.reconstruct() - &m), &m), 1e-10))
}

fn eigen_reconstruction(rng: &mut StreamRng) -> Result<CheckResult> {
    let m = gaussian_psd(12, rng);
    let e = symmetric_eigen(&m)?;
    Ok(CheckResult::new("", rel(&(&e.reconstruct() - &m), &m), 1e-10))
}

fn prox_objective(r: &DenseMatrix, m: &DenseMatrix, lambda: f64) -> Result<f64> {
    Ok(frobenius_norm(&(r - m)).powi(2) + lambda * nuclear_norm(r)?)
}

fn prox_optimality(rng: &mut StreamRng) -> Result<CheckResult> {
    let m = gaussian(6, 8, rng);
    let lambda = 1.0;
    let r = soft_threshold_svd(&m, lambda)?;
    let best = prox_objective(&r, &m, lambda)?;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for i in 0..200 {
        let eps = if i % 2 == 0 { 1e-3 } else { 1e-2 };
        let delta = gaussian(6, 8, rng);
        let delta = delta.scale(eps / frobenius_norm(&delta));
        let value = prox_objective(&(&r + &delta), &m, lambda)?;
        worst_gap = worst_gap.max(best - value);
    }
    Ok(CheckResult::new("", worst_gap.max(0.0), 1e-12))
}

fn oracle_inequality(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(4, 4)?;
    let model = random_model(shape, 2, rng)?;
    let sigma = assemble_sigma(&model);
    let data = sample_matrix_model(&factorize_for_sampling(&model)?, 100, rng.random())?;
    let cov = sample_covariance(&data);
    let r_sigma = rearrange(&sigma, shape)?;
    let lambda = 2.0 * crate::linalg::operator_norm(&(&rearrange(&cov, shape)? - &r_sigma))?;
    let est = pls_from_covariance(&cov, shape, lambda, data.n())?.estimate;
    let err = frobenius_norm(&(&rearrange(&est, shape)? - &r_sigma)).powi(2);
    let bound = ORACLE_CONSTANT * lambda * lambda * 2.0;
    // Residual: how far the error exceeds the bound (0 when it holds).
    Ok(CheckResult::new("", (err - bound).max(0.0), 1e-9))
}

fn trace_form(rng: &mut StreamRng) -> Result<CheckResult> {
    let shape = BlockShape::new(3, 2)?;
    let (p, q) = (shape.p(), shape.q());
    let model = random_model(shape, 1, rng)?;
    let sigma = assemble_sigma(&model);
    let data = sample_matrix_model(&factorize_for_sampling(&model)?, 50, rng.random())?;
    let dev = &rearrange(&sample_covariance(&data), shape)? - &rearrange(&sigma, shape)?;
    let d = svd(&dev)?;
    let u = unvec(d.left(0), p, p)?;
    let v = unvec(d.right(0), q, q)?;
    let vt = v.transpose();
    let mut empirical = 0.0;
    for x in data.iter() {
        let xm = unvec(x, q, p)?;
        empirical += trace(&xm.transpose().matmul(&vt)?.matmul(&xm)?.matmul(&u)?)?;
    }
    empirical /= data.n() as f64;
    let expected = trace(&kron(&u.transpose(), &vt)?.matmul(&sigma)?)?;
    let sigma1 = d.singular_values[0];
    Ok(CheckResult::new(
        "",
        ((empirical - expected) - sigma1).abs() / sigma1.max(1.0),
        1e-10,
    ))
}

fn rank_one_block_traces(seed: u64) -> Result<CheckResult> {
    let mut rng = stream(seed, &[]);
    let shape = BlockShape::new(3, 4)?;
    let vectors: Vec<Vec<f64>> = (0..9)
        .map(|_| (0..12).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let data = SampleSet::from_vectors(&vectors)?;
    let (phi, psi, _) = rank_one_factors(&data, shape)?;
    let cov = sample_covariance(&data);
    let (p, q) = (shape.p(), shape.q());
    // Φ̂ is the matrix of block traces of Σ̂; Ψ̂ is the sum of its diagonal blocks.
    let phi_ref = DenseMatrix::from_fn(p, p, |a, b| (0..q).map(|k| cov[(a * q + k, b * q + k)]).sum());
    let psi_ref = DenseMatrix::from_fn(q, q, |k, l| (0..p).map(|a| cov[(a * q + k, a * q + l)]).sum());
    let residual = rel(&(&phi - &phi_ref), &phi_ref).max(rel(&(&psi - &psi_ref), &psi_ref));
    Ok(CheckResult::new("rank-one factor block traces", residual, 1e-12))
}
