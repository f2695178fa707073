use faer::linalg::matmul::matmul;
use faer::{Accum, MatRef, Par};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::covariance::{FactorPair, KronSumCovariance};
use crate::error::{Error, Result};
use crate::estimators::SampleSet;
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::rearrange::BlockShape;
use crate::rng::{stream, TAG_DATA};

/// Eigenvalues below this fraction of the largest are treated as zero when
/// taking square roots.
pub const SQRT_CLIP: f64 = 1e-12;

/// Distribution of the entries of each noise matrix `𝕐`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    #[default]
    Gaussian,
}

/// One term `Bⱼ 𝕐ⱼ Aⱼᵀ` of the matrix model, `a` of size `p × p` and `b` of
/// size `q × q`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingTerm {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
}

/// `𝕏 = Σⱼ Bⱼ 𝕐ⱼ Aⱼᵀ` with independent `q × p` noise matrices `𝕐ⱼ`;
/// observations are `X = vec(𝕏)` with covariance `Σⱼ (AⱼAⱼᵀ) ⊗ (BⱼBⱼᵀ)`.
#[derive(Clone, Debug)]
pub struct MatrixModel {
    pub shape: BlockShape,
    pub terms: Vec<SamplingTerm>,
    pub noise: Noise,
}

impl MatrixModel {
    pub fn new(shape: BlockShape, terms: Vec<SamplingTerm>, noise: Noise) -> Result<Self> {
        for (j, t) in terms.iter().enumerate() {
            if t.a.shape() != (shape.p(), shape.p()) || t.b.shape() != (shape.q(), shape.q()) {
                return Err(Error::Shape(format!(
                    "term {j}: expected a {p}x{p} and b {q}x{q}",
                    p = shape.p(),
                    q = shape.q()
                )));
            }
        }
        Ok(MatrixModel {
            shape,
            terms,
            noise,
        })
    }

    /// The implied `Σⱼ (AⱼAⱼᵀ) ⊗ (BⱼBⱼᵀ)` as a validated model.
    pub fn covariance(&self) -> Result<KronSumCovariance> {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(FactorPair {
                    phi: t.a.matmul(&t.a.transpose())?.symmetrize()?,
                    psi: t.b.matmul(&t.b.transpose())?.symmetrize()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        KronSumCovariance::new(self.shape, terms)
    }
}

/// Symmetric PSD square root, clipping eigenvalues below
/// [`SQRT_CLIP`]` · λ_max` at zero.
pub fn psd_sqrt(m: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = symmetric_eigen(m)?;
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = SQRT_CLIP * top;
    eig.map_spectrum(|x| if x > floor { x.sqrt() } else { 0.0 })
        .symmetrize()
}

/// `Aⱼ = Φⱼ^{1/2}`, `Bⱼ = Ψⱼ^{1/2}`.
pub fn factorize_for_sampling(cov: &KronSumCovariance) -> Result<MatrixModel> {
    let terms = cov
        .terms()
        .iter()
        .map(|t| {
            Ok(SamplingTerm {
                a: psd_sqrt(&t.phi)?,
                b: psd_sqrt(&t.psi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MatrixModel::new(cov.shape(), terms, Noise::Gaussian)
}

/// `n` independent observations from the matrix model.
///
/// The noise for observation `i`, term `j` comes from the stream
/// `(seed, i, j)`, so any subset of observations can be regenerated alone.
pub fn sample_matrix_model(model: &MatrixModel, n: usize, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::Contract("sample size must be at least 1".into()));
    }
    let (p, q) = (model.shape.p(), model.shape.q());
    let d = p * q;
    let mut data = vec![0.0; n * d];
    let mut y = vec![0.0; q * p];
    let mut by = vec![0.0; q * p];
    for (i, obs) in data.chunks_mut(d).enumerate() {
        for (j, term) in model.terms.iter().enumerate() {
            let mut rng = stream(seed, &[TAG_DATA, i as u64, j as u64]);
            match model.noise {
                Noise::Gaussian => y.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            }
            let yv = MatRef::from_column_major_slice(&y, q, p);
            let mut byv = faer::MatMut::from_column_major_slice_mut(&mut by, q, p);
            matmul(byv.as_mut(), Accum::Replace, term.b.view(), yv, 1.0, Par::Seq);
            let mut x = faer::MatMut::from_column_major_slice_mut(obs, q, p);
            matmul(
                x.as_mut(),
                Accum::Add,
                MatRef::from_column_major_slice(&by, q, p),
                term.a.view().transpose(),
                1.0,
                Par::Seq,
            );
        }
    }
    Ok(SampleSet::from_flat(n, d, data)?.with_seed(seed))
}
