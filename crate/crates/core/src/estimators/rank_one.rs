use faer::linalg::matmul::matmul;
use faer::{Accum, MatRef, Par};

use super::sample::SampleSet;
use super::{EstimateReport, Method};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, kron, DenseMatrix};
use crate::rearrange::BlockShape;

/// `(Φ̂, Ψ̂, c)` with `Φ̂ = (1/n) Σᵢ 𝕏ᵢᵀ𝕏ᵢ`, `Ψ̂ = (1/n) Σᵢ 𝕏ᵢ𝕏ᵢᵀ` and
/// `c = (1/n) Σᵢ ‖Xᵢ‖²`, where `𝕏ᵢ = unvec(Xᵢ, q, p)`.
pub fn rank_one_factors(
    data: &SampleSet,
    shape: BlockShape,
) -> Result<(DenseMatrix, DenseMatrix, f64)> {
    let (p, q) = (shape.p(), shape.q());
    if data.d() != shape.dim() {
        return Err(Error::Shape(format!(
            "observations have dimension {}, but p·q = {}",
            data.d(),
            shape.dim()
        )));
    }
    let n = data.n();
    let scale = 1.0 / n as f64;

    let mut phi = DenseMatrix::zeros(p, p);
    for x in data.iter() {
        let xm = MatRef::from_column_major_slice(x, q, p);
        matmul(phi.view_mut(), Accum::Add, xm.transpose(), xm, scale, Par::Seq);
    }
    // The whole sample, read column-major, is [𝕏₁ 𝕏₂ … 𝕏ₙ] (q × np).
    let wide = MatRef::from_column_major_slice(data.as_flat(), q, n * p);
    let mut psi = DenseMatrix::zeros(q, q);
    matmul(psi.view_mut(), Accum::Replace, wide, wide.transpose(), scale, Par::Seq);
    mirror_lower(&mut phi);
    mirror_lower(&mut psi);

    let normalizer = (0..q).map(|i| psi[(i, i)]).sum::<f64>();
    if normalizer <= 0.0 {
        return Err(Error::Degenerate(
            "all observations are zero, so (1/n)·Σ‖Xᵢ‖² vanishes".into(),
        ));
    }
    Ok((phi, psi, normalizer))
}

fn mirror_lower(m: &mut DenseMatrix) {
    let n = m.rows();
    let buf = m.data_mut();
    for j in 0..n {
        for i in (j + 1)..n {
            buf[j * n + i] = buf[i * n + j];
        }
    }
}

/// `Σ̆ = (Φ̂ ⊗ Ψ̂) / ((1/n) Σᵢ ‖Xᵢ‖²)`.
pub fn rank_one_estimate(data: &SampleSet, shape: BlockShape) -> Result<EstimateReport> {
    let (phi, psi, normalizer) = rank_one_factors(data, shape)?;
    let estimate = kron(&phi, &psi)?.scale(1.0 / normalizer);
    // ℛ(Σ̆) = vec(Φ̂) vec(Ψ̂)ᵀ / c has a single nonzero singular value.
    let mut singular_values = vec![0.0; shape.max_kronecker_rank()];
    singular_values[0] = frobenius_norm(&phi) * frobenius_norm(&psi) / normalizer;
    Ok(EstimateReport::new(
        estimate,
        Method::RankOne,
        None,
        singular_values,
        1,
        data.n(),
    ))
}
