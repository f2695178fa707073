use super::backend::{self, LARGE_DIM};
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Tolerance on `max |m - mᵀ|` (relative to `max(1, max |m|)`) accepted by
/// [`symmetric_eigen`].
pub const SYMMETRY_TOL: f64 = 1e-10;

// Entries at or below this magnitude are skipped when fixing vector signs.
const SIGN_TOL: f64 = 1e-12;

/// Thin singular value decomposition `m = Σⱼ sⱼ uⱼ vⱼᵀ`.
///
/// Singular values are non-increasing; the first entry above `1e-12` in
/// magnitude of each left vector is positive (the right vector is flipped
/// along with it).
#[derive(Clone, Debug)]
pub struct Svd {
    pub left_vectors: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: DenseMatrix,
}

impl Svd {
    pub fn rank_capacity(&self) -> usize {
        self.singular_values.len()
    }

    /// `Σⱼ wⱼ uⱼ vⱼᵀ` for the given per-component weights; components with
    /// zero weight are skipped.
    pub fn reconstruct_with(&self, weights: &[f64]) -> DenseMatrix {
        assert_eq!(weights.len(), self.singular_values.len());
        let keep: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] != 0.0).collect();
        let rows = self.left_vectors.rows();
        let cols = self.right_vectors.rows();
        if keep.is_empty() {
            return DenseMatrix::zeros(rows, cols);
        }
        let u = DenseMatrix::from_fn(rows, keep.len(), |i, c| {
            self.left_vectors[(i, keep[c])] * weights[keep[c]]
        });
        let vt = DenseMatrix::from_fn(keep.len(), cols, |c, j| self.right_vectors[(j, keep[c])]);
        u.matmul(&vt).expect("conformable by construction")
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.singular_values)
    }

    pub fn left(&self, j: usize) -> &[f64] {
        self.left_vectors.column(j)
    }

    pub fn right(&self, j: usize) -> &[f64] {
        self.right_vectors.column(j)
    }
}

/// Thin SVD of a finite matrix, via faer's bidiagonal divide-and-conquer.
pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Svd {
            left_vectors: DenseMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            right_vectors: DenseMatrix::zeros(cols, 0),
        });
    }
    let raw = backend::thin_svd(m.view())?;
    let size = raw.s.len();
    let mut order: Vec<usize> = (0..size).collect();
    // Stable, so tied values keep the backend's order.
    order.sort_by(|&a, &b| raw.s[b].total_cmp(&raw.s[a]));

    let mut u = DenseMatrix::from_fn(rows, size, |i, c| raw.u[(i, order[c])]);
    let mut v = DenseMatrix::from_fn(cols, size, |i, c| raw.v[(i, order[c])]);
    let s: Vec<f64> = order.iter().map(|&k| raw.s[k].max(0.0)).collect();
    fix_signs(&mut u, Some(&mut v));
    Ok(Svd {
        left_vectors: u,
        singular_values: s,
        right_vectors: v,
    })
}

/// Flips columns so that the first entry above `SIGN_TOL` in magnitude of
/// each column of `primary` is positive; `partner` columns follow.
fn fix_signs(primary: &mut DenseMatrix, mut partner: Option<&mut DenseMatrix>) {
    let rows = primary.rows();
    for c in 0..primary.cols() {
        let lead = primary
            .column(c)
            .iter()
            .copied()
            .find(|x| x.abs() > SIGN_TOL)
            .unwrap_or(0.0);
        if lead < 0.0 {
            primary.data_mut()[c * rows..(c + 1) * rows]
                .iter_mut()
                .for_each(|x| *x = -*x);
            if let Some(p) = partner.as_deref_mut() {
                let prow = p.rows();
                p.data_mut()[c * prow..(c + 1) * prow]
                    .iter_mut()
                    .for_each(|x| *x = -*x);
            }
        }
    }
}

/// Singular values in non-increasing order.
///
/// Inputs whose smaller side is at least [`LARGE_DIM`] go through the
/// eigenvalues of the smaller Gram matrix, which costs well under half of a
/// bidiagonal reduction; values below `√ε·σ₁` lose relative accuracy there.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    if rows.min(cols) >= LARGE_DIM {
        return Ok(gram_spectrum(m, false)?.sigma);
    }
    let mut s = backend::singular_values(m.view())?;
    s.sort_by(|a, b| b.total_cmp(a));
    s.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(s)
}

/// Which Gram matrix a [`GramSpectrum`] was taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum GramSide {
    /// `mᵀm`; eigenvectors are right singular vectors.
    Right,
    /// `m mᵀ`; eigenvectors are left singular vectors.
    Left,
}

pub(crate) struct GramSpectrum {
    pub side: GramSide,
    /// `√max(eigenvalue, 0)`, non-increasing.
    pub sigma: Vec<f64>,
    /// Eigenvectors in the order of `sigma`.
    pub vectors: Option<DenseMatrix>,
}

/// Spectrum of the smaller Gram matrix of `m`.
pub(crate) fn gram_spectrum(m: &DenseMatrix, vectors: bool) -> Result<GramSpectrum> {
    let view = m.view();
    let (side, gram) = if m.cols() <= m.rows() {
        (GramSide::Right, backend::matmul(view.transpose(), view, 1.0))
    } else {
        (GramSide::Left, backend::matmul(view, view.transpose(), 1.0))
    };
    let (values, vecs) = backend::symmetric_eigen(gram.view(), vectors)?;
    let n = values.len();
    let sigma = values.iter().rev().map(|&g| g.max(0.0).sqrt()).collect();
    let vectors = vecs.map(|w| DenseMatrix::from_fn(n, n, |i, c| w[(i, n - 1 - c)]));
    Ok(GramSpectrum {
        side,
        sigma,
        vectors,
    })
}

/// Eigendecomposition `m = V Λ Vᵀ` of a symmetric matrix, eigenvalues
/// non-increasing.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymmetricEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let scaled = DenseMatrix::from_fn(n, n, |i, c| {
            self.eigenvectors[(i, c)] * f(self.eigenvalues[c])
        });
        scaled
            .matmul(&self.eigenvectors.transpose())
            .expect("square by construction")
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.map_spectrum(|x| x)
    }
}

fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition of a non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(Error::Contract(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    Ok(())
}

pub fn symmetric_eigen(m: &DenseMatrix) -> Result<SymmetricEigen> {
    check_symmetric(m)?;
    let n = m.rows();
    let (values, vecs) = backend::symmetric_eigen(m.view(), true)?;
    let vecs = vecs.expect("requested eigenvectors");
    let mut vectors = DenseMatrix::from_fn(n, n, |i, c| vecs[(i, n - 1 - c)]);
    fix_signs(&mut vectors, None);
    Ok(SymmetricEigen {
        eigenvalues: values.into_iter().rev().collect(),
        eigenvectors: vectors,
    })
}

/// Eigenvalues of a symmetric matrix, non-increasing.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let (values, _) = backend::symmetric_eigen(m.view(), false)?;
    Ok(values.into_iter().rev().collect())
}
