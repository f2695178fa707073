use super::EstimateReport;
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, kron, svd, symmetric_eigen, trace, unvec, DenseMatrix};
use crate::model::FactorPair;
use crate::rearrange::{rearrange, BlockShape};

#[derive(Clone, Debug)]
pub struct Factors {
    pub pairs: Vec<FactorPair>,
    /// Largest `‖M − (M + Mᵀ)/2‖_F` over the unvectorized singular vectors
    /// (scaled by `√σⱼ`) before symmetrization.
    pub symmetrization_residual: f64,
    /// `‖Σⱼ phiⱼ ⊗ psiⱼ − estimate‖_F`. This also contains any components
    /// beyond the first `k`, and the effect of PSD projection if requested.
    pub reconstruction_residual: f64,
}

/// Splits the top `k` rearranged components of an estimate into factor
/// pairs `(phiⱼ, psiⱼ)` with `Σⱼ phiⱼ ⊗ psiⱼ ≈ estimate`.
///
/// For the triple `(σⱼ, uⱼ, vⱼ)` of `ℛ(estimate)`,
/// `phiⱼ = sym(unvec(√σⱼ uⱼ, p, p))` and `psiⱼ = sym(unvec(√σⱼ vⱼ, q, q))`,
/// with the pair's sign chosen so that `Tr(phiⱼ) ≥ 0`. With
/// `psd_projection`, negative eigenvalues of each factor are clipped at zero.
pub fn extract_factors(
    report: &EstimateReport,
    shape: BlockShape,
    k: usize,
    psd_projection: bool,
) -> Result<Factors> {
    if k > report.effective_rank_estimate {
        return Err(Error::Contract(format!(
            "requested {k} factor pairs, but the estimate retains {}",
            report.effective_rank_estimate
        )));
    }
    let (p, q) = (shape.p(), shape.q());
    let r = rearrange(&report.estimate, shape)?;
    let dec = svd(&r)?;

    let mut pairs = Vec::with_capacity(k);
    let mut sym_residual: f64 = 0.0;
    for j in 0..k {
        let root = dec.singular_values[j].sqrt();
        let a = unvec(dec.left(j), p, p)?.scale(root);
        let b = unvec(dec.right(j), q, q)?.scale(root);
        let mut phi = a.symmetrize()?;
        let mut psi = b.symmetrize()?;
        sym_residual = sym_residual
            .max(frobenius_norm(&(&a - &phi)))
            .max(frobenius_norm(&(&b - &psi)));
        if trace(&phi)? < 0.0 {
            phi = phi.scale(-1.0);
            psi = psi.scale(-1.0);
        }
        if psd_projection {
            phi = clip_negative(&phi)?;
            psi = clip_negative(&psi)?;
        }
        pairs.push(FactorPair { phi, psi });
    }

    let d = shape.dim();
    let mut recon = DenseMatrix::zeros(d, d);
    for pair in &pairs {
        recon = &recon + &kron(&pair.phi, &pair.psi)?;
    }
    Ok(Factors {
        pairs,
        symmetrization_residual: sym_residual,
        reconstruction_residual: frobenius_norm(&(&recon - &report.estimate)),
    })
}

fn clip_negative(m: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(symmetric_eigen(m)?.map_spectrum(|x| x.max(0.0)).symmetrize()?)
}
