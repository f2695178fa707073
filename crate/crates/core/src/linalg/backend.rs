//! Thin wrappers over faer's dense kernels.
//!
//! Every call passes an explicit parallelism setting. Inputs below
//! [`LARGE_DIM`] always run sequentially, so Monte Carlo runs produce the
//! same bits for any thread count; larger inputs use faer's global setting.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul as faer_matmul;
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::diag::Diag;
use faer::{Accum, Mat, MatRef, Par};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Smallest dimension at which the dense kernels switch to the global
/// parallelism setting and thresholding switches to the Gram route.
pub const LARGE_DIM: usize = 1024;

pub(crate) fn par_for(dim: usize) -> Par {
    if dim >= LARGE_DIM {
        faer::get_global_parallelism()
    } else {
        Par::Seq
    }
}

/// Sets the worker count used by kernels on inputs of at least
/// [`LARGE_DIM`]. `0` means one per available core.
pub fn set_threads(threads: usize) {
    let par = match threads {
        1 => Par::Seq,
        n => Par::rayon(n),
    };
    faer::set_global_parallelism(par);
}

pub(crate) fn matmul(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>, alpha: f64) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(lhs.nrows(), rhs.ncols());
    let par = par_for(lhs.nrows().max(rhs.ncols()).max(lhs.ncols()));
    faer_matmul(out.view_mut(), Accum::Replace, lhs, rhs, alpha, par);
    out
}

pub(crate) struct RawSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
}

pub(crate) fn thin_svd(a: MatRef<'_, f64>) -> Result<RawSvd> {
    let (m, n) = a.shape();
    let size = m.min(n);
    let par = par_for(size);
    let mut u = Mat::<f64>::zeros(m, size);
    let mut v = Mat::<f64>::zeros(n, size);
    let mut s = Diag::<f64>::zeros(size);
    let mut buf = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        par,
        Default::default(),
    ));
    svd::svd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence {
        routine: "svd",
        rows: m,
        cols: n,
    })?;
    let s = s.column_vector().iter().copied().collect();
    Ok(RawSvd { u, s, v })
}

pub(crate) fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    let size = m.min(n);
    let par = par_for(size);
    let mut s = Diag::<f64>::zeros(size);
    let mut buf = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    ));
    svd::svd(
        a,
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence {
        routine: "singular values",
        rows: m,
        cols: n,
    })?;
    Ok(s.column_vector().iter().copied().collect())
}

/// Eigendecomposition of a symmetric matrix, reading the lower triangle.
/// Eigenvalues come back in faer's nondecreasing order.
pub(crate) fn symmetric_eigen(
    a: MatRef<'_, f64>,
    vectors: bool,
) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    let n = a.nrows();
    let par = par_for(n);
    let mut s = Diag::<f64>::zeros(n);
    let compute = if vectors {
        ComputeEigenvectors::Yes
    } else {
        ComputeEigenvectors::No
    };
    let mut u = vectors.then(|| Mat::<f64>::zeros(n, n));
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        compute,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| Error::NoConvergence {
        routine: "symmetric eigendecomposition",
        rows: n,
        cols: n,
    })?;
    Ok((s.column_vector().iter().copied().collect(), u))
}
