use crate::error::{Error, Result};
use crate::linalg::{kron, symmetric_eigenvalues, trace, DenseMatrix};
use crate::rearrange::BlockShape;

/// Tolerance for symmetry (absolute, scaled by `max(1, max |m|)`) and for
/// PSD-ness (minimum eigenvalue relative to the trace) of model factors.
pub const FACTOR_TOL: f64 = 1e-10;

/// One Kronecker term `phi ⊗ psi`, with `phi` of size `p × p` and `psi` of
/// size `q × q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub phi: DenseMatrix,
    pub psi: DenseMatrix,
}

/// `Σ = Σⱼ Φⱼ ⊗ Ψⱼ` with symmetric PSD factors.
#[derive(Clone, Debug)]
pub struct KronSumCovariance {
    shape: BlockShape,
    terms: Vec<FactorPair>,
}

impl KronSumCovariance {
    /// Validates every factor: right size, symmetric and PSD within
    /// [`FACTOR_TOL`].
    pub fn new(shape: BlockShape, terms: Vec<FactorPair>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Contract("a model needs at least one term".into()));
        }
        for (j, t) in terms.iter().enumerate() {
            check_factor(&t.phi, shape.p(), j, "phi")?;
            check_factor(&t.psi, shape.q(), j, "psi")?;
        }
        Ok(KronSumCovariance { shape, terms })
    }

    pub fn shape(&self) -> BlockShape {
        self.shape
    }

    pub fn k_rank(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[FactorPair] {
        &self.terms
    }

    /// `Tr(Σ) = Σⱼ Tr(Φⱼ) Tr(Ψⱼ)`.
    pub fn trace(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| diag_sum(&t.phi) * diag_sum(&t.psi))
            .sum()
    }
}

fn diag_sum(m: &DenseMatrix) -> f64 {
    (0..m.rows()).map(|i| m[(i, i)]).sum()
}

fn check_factor(m: &DenseMatrix, dim: usize, term: usize, factor: &'static str) -> Result<()> {
    if m.shape() != (dim, dim) {
        return Err(Error::Shape(format!(
            "term {term}: {factor} is {}x{}, expected {dim}x{dim}",
            m.rows(),
            m.cols()
        )));
    }
    let asymmetry = m.max_asymmetry();
    if asymmetry > FACTOR_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotSymmetric {
            term,
            factor,
            asymmetry,
        });
    }
    let eig = symmetric_eigenvalues(m)?;
    let min = eig.last().copied().unwrap_or(0.0);
    let tr = diag_sum(m);
    if min < -FACTOR_TOL * tr.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            term,
            factor,
            eigenvalue: min,
        });
    }
    Ok(())
}

/// `Σ = Σⱼ Φⱼ ⊗ Ψⱼ`.
pub fn assemble_sigma(model: &KronSumCovariance) -> DenseMatrix {
    let d = model.shape.dim();
    let mut sigma = DenseMatrix::zeros(d, d);
    for t in &model.terms {
        let term = kron(&t.phi, &t.psi).expect("sizes validated at construction");
        sigma = &sigma + &term;
    }
    sigma
}

/// `r(M) = Tr(M) / ‖M‖` for a symmetric PSD matrix.
pub fn effective_rank(m: &DenseMatrix) -> Result<f64> {
    let eig = symmetric_eigenvalues(m)?;
    let top = eig.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::Degenerate(
            "effective rank of a matrix with no positive eigenvalue".into(),
        ));
    }
    let tr = trace(m)?;
    let min = eig.last().copied().unwrap_or(0.0);
    if min < -FACTOR_TOL * tr {
        return Err(Error::Contract(format!(
            "effective rank needs a PSD matrix (min eigenvalue {min:e})"
        )));
    }
    Ok(tr / top)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(phi: DenseMatrix, psi: DenseMatrix) -> FactorPair {
        FactorPair { phi, psi }
    }

    #[test]
    fn identity_model() {
        let shape = BlockShape::new(3, 2).unwrap();
        let m = KronSumCovariance::new(
            shape,
            vec![pair(DenseMatrix::identity(3), DenseMatrix::identity(2))],
        )
        .unwrap();
        assert_eq!(assemble_sigma(&m), DenseMatrix::identity(6));
        assert_eq!(m.trace(), 6.0);
    }

    #[test]
    fn block_diagonal_two_terms() {
        let shape = BlockShape::new(2, 2).unwrap();
        let m = KronSumCovariance::new(
            shape,
            vec![
                pair(DenseMatrix::from_diag(&[2.0, 0.0]).unwrap(), DenseMatrix::identity(2)),
                pair(DenseMatrix::from_diag(&[0.0, 1.0]).unwrap(), DenseMatrix::identity(2)),
            ],
        )
        .unwrap();
        assert_eq!(
            assemble_sigma(&m),
            DenseMatrix::from_diag(&[2.0, 2.0, 1.0, 1.0]).unwrap()
        );
    }

    #[test]
    fn rejects_bad_factors() {
        let shape = BlockShape::new(2, 2).unwrap();
        let neg = DenseMatrix::from_diag(&[1.0, -0.5]).unwrap();
        let err = KronSumCovariance::new(
            shape,
            vec![
                pair(DenseMatrix::identity(2), DenseMatrix::identity(2)),
                pair(DenseMatrix::identity(2), neg),
            ],
        )
        .unwrap_err();
        match err {
            Error::NotPsd {
                term,
                factor,
                eigenvalue,
            } => {
                assert_eq!((term, factor), (1, "psi"));
                assert_eq!(eigenvalue, -0.5);
            }
            other => panic!("unexpected {other:?}"),
        }
        let asym = DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            KronSumCovariance::new(shape, vec![pair(asym, DenseMatrix::identity(2))]),
            Err(Error::NotSymmetric { term: 0, factor: "phi", .. })
        ));
        assert!(matches!(
            KronSumCovariance::new(shape, vec![pair(DenseMatrix::identity(3), DenseMatrix::identity(2))]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn effective_rank_examples() {
        assert_eq!(effective_rank(&DenseMatrix::identity(5)).unwrap(), 5.0);
        let u = [0.6, 0.8, 0.0];
        let r = effective_rank(&DenseMatrix::outer(&u, &u)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(
            effective_rank(&DenseMatrix::from_diag(&[2.0, 1.0, 1.0]).unwrap()).unwrap(),
            2.0
        );
        assert!(matches!(
            effective_rank(&DenseMatrix::zeros(2, 2)),
            Err(Error::Degenerate(_))
        ));
    }
}
