use super::matrix::checked_len;
use super::DenseMatrix;
use crate::error::{Error, Result};

/// Kronecker product `a ⊗ b`: block `(i, j)` of the output is `a[i,j]·b`.
///
/// ```
/// use kroncov::linalg::{kron, DenseMatrix};
///
/// let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
/// let b = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
/// let k = kron(&a, &b).unwrap();
/// assert_eq!(k.shape(), (4, 4));
/// assert_eq!(k[(0, 3)], 2.0);
/// ```
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let rows = ar.checked_mul(br).ok_or(Error::SizeOverflow {
        rows: usize::MAX,
        cols: ac.saturating_mul(bc),
    })?;
    let cols = ac.checked_mul(bc).ok_or(Error::SizeOverflow {
        rows,
        cols: usize::MAX,
    })?;
    let len = checked_len(rows, cols)?;
    let mut data = vec![0.0; len];
    for j in 0..ac {
        for l in 0..bc {
            let out_col = j * bc + l;
            let col = &mut data[out_col * rows..(out_col + 1) * rows];
            let b_col = b.column(l);
            for i in 0..ar {
                let aij = a.get(i, j);
                for (dst, &bkl) in col[i * br..(i + 1) * br].iter_mut().zip(b_col) {
                    *dst = aij * bkl;
                }
            }
        }
    }
    Ok(DenseMatrix::from_raw(rows, cols, data))
}

/// Column-stacking vectorization: entry `j·rows + i` is `m[i, j]` (0-based).
pub fn vec(m: &DenseMatrix) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[f64], rows: usize, cols: usize) -> Result<DenseMatrix> {
    DenseMatrix::from_column_major(rows, cols, v.to_vec())
}
