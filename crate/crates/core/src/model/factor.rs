use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{stream, StreamRng, TAG_MODEL};

/// Eigenvalue profile of a random factor. Both are normalized so the top
/// eigenvalue is 1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// `λᵢ = ρⁱ`, `i = 0, …, dim − 1`, `ρ ∈ [0, 1]`.
    #[default]
    Geometric,
    /// `λᵢ = (i + 1)^{−α}`, `α ≥ 0`.
    Polynomial,
}

// Beyond this exponent the polynomial profile is rank one to working precision.
const MAX_POLY_EXPONENT: f64 = 64.0;
const BISECTION_STEPS: usize = 200;

/// Eigenvalues (non-increasing, top value 1) whose sum is `target`, up to
/// bisection accuracy.
pub fn spectrum_for_effective_rank(dim: usize, target: f64, spectrum: Spectrum) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::Contract("factor dimension must be at least 1".into()));
    }
    if !(target >= 1.0 && target <= dim as f64) {
        return Err(Error::Contract(format!(
            "effective rank {target} is infeasible in dimension {dim} (must lie in [1, {dim}])"
        )));
    }
    if target == dim as f64 {
        return Ok(vec![1.0; dim]);
    }
    let values = match spectrum {
        Spectrum::Geometric => {
            let profile = |rho: f64| -> Vec<f64> { (0..dim).map(|i| rho.powi(i as i32)).collect() };
            let rho = bisect(0.0, 1.0, |rho| profile(rho).iter().sum::<f64>() - target);
            profile(rho)
        }
        Spectrum::Polynomial => {
            let profile =
                |a: f64| -> Vec<f64> { (0..dim).map(|i| ((i + 1) as f64).powf(-a)).collect() };
            // The sum decreases in α, so bisect on the negated residual.
            let a = bisect(0.0, MAX_POLY_EXPONENT, |a| target - profile(a).iter().sum::<f64>());
            profile(a)
        }
    };
    Ok(values)
}

/// Root of an increasing function on `[lo, hi]` by bisection.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Haar-distributed orthogonal matrix: Gram–Schmidt (applied twice) on a
/// Gaussian matrix, which equals the QR factor with positive `diag(R)`.
pub(crate) fn random_orthogonal(dim: usize, rng: &mut StreamRng) -> DenseMatrix {
    let mut data: Vec<f64> = (0..dim * dim).map(|_| rng.sample(StandardNormal)).collect();
    for j in 0..dim {
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = data.split_at_mut(j * dim);
                let qk = &done[k * dim..(k + 1) * dim];
                let col = &mut rest[..dim];
                let proj: f64 = qk.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(qk).for_each(|(c, q)| *c -= proj * q);
            }
        }
        let col = &mut data[j * dim..(j + 1) * dim];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.iter_mut().for_each(|x| *x /= norm);
    }
    DenseMatrix::from_column_major(dim, dim, data).expect("finite by construction")
}

/// A random symmetric PSD `dim × dim` matrix with operator norm 1 and
/// effective rank `target`: the eigenvalues from
/// [`spectrum_for_effective_rank`] conjugated by a seeded Haar rotation.
///
/// `target == dim` returns the identity exactly.
pub fn random_psd_factor(
    dim: usize,
    target: f64,
    spectrum: Spectrum,
    seed: u64,
) -> Result<DenseMatrix> {
    let values = spectrum_for_effective_rank(dim, target, spectrum)?;
    if values.iter().all(|&v| v == 1.0) {
        return Ok(DenseMatrix::identity(dim));
    }
    let q = random_orthogonal(dim, &mut stream(seed, &[TAG_MODEL]));
    let scaled = DenseMatrix::from_fn(dim, dim, |i, c| q[(i, c)] * values[c]);
    Ok(scaled.matmul(&q.transpose())?.symmetrize()?)
}
