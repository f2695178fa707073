//! The rearrangement operator `ℛ : ℝ^{pq×pq} → ℝ^{p²×q²}` and its inverse.
//!
//! View a `pq × pq` matrix `M` as a `p × p` grid of `q × q` blocks
//! `M(i, j)`. With 1-based block indices, row `(j − 1)p + i` of `ℛ(M)` is
//! `vec(M(i, j))ᵀ`. `ℛ` maps `A ⊗ B` to the rank-one matrix `vec(A) vec(B)ᵀ`
//! and is an isometry for the Frobenius norm.
//!
//! Internally everything is 0-based: entry `(bi·q + k, bj·q + l)` of `M`
//! (block `(bi, bj)`, in-block position `(k, l)`) lands at row `bj·p + bi`,
//! column `l·q + k` of `ℛ(M)`. This is the only place the translation is
//! written down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, DenseMatrix};

/// Block grid dimension `p` and block size `q`; the ambient dimension is
/// `d = p·q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub struct BlockShape {
    p: usize,
    q: usize,
}

#[derive(Serialize, Deserialize)]
struct RawShape {
    p: usize,
    q: usize,
}

impl TryFrom<RawShape> for BlockShape {
    type Error = Error;

    fn try_from(raw: RawShape) -> Result<Self> {
        BlockShape::new(raw.p, raw.q)
    }
}

impl From<BlockShape> for RawShape {
    fn from(s: BlockShape) -> Self {
        RawShape { p: s.p, q: s.q }
    }
}

impl BlockShape {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Contract(format!(
                "block shape needs p, q >= 1 (got p = {p}, q = {q})"
            )));
        }
        let d = p.checked_mul(q).ok_or(Error::SizeOverflow { rows: p, cols: q })?;
        d.checked_mul(d)
            .ok_or(Error::SizeOverflow { rows: d, cols: d })?;
        Ok(BlockShape { p, q })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.p * self.q
    }

    /// `(p², q²)`.
    pub fn rearranged_shape(&self) -> (usize, usize) {
        (self.p * self.p, self.q * self.q)
    }

    /// Largest possible rank of a rearranged matrix, `min(p², q²)`.
    pub fn max_kronecker_rank(&self) -> usize {
        (self.p * self.p).min(self.q * self.q)
    }

    fn check_square(&self, m: &DenseMatrix) -> Result<()> {
        let d = self.dim();
        if m.shape() != (d, d) {
            return Err(Error::Shape(format!(
                "expected a {d}x{d} matrix for p = {}, q = {}, got {}x{}",
                self.p,
                self.q,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }

    fn check_rearranged(&self, r: &DenseMatrix) -> Result<()> {
        let (rr, rc) = self.rearranged_shape();
        if r.shape() != (rr, rc) {
            return Err(Error::Shape(format!(
                "expected a {rr}x{rc} rearranged matrix for p = {}, q = {}, got {}x{}",
                self.p,
                self.q,
                r.rows(),
                r.cols()
            )));
        }
        Ok(())
    }

    /// Calls `f(src, dst)` for every entry, where `src` is the column-major
    /// offset in `M` and `dst` the column-major offset in `ℛ(M)`.
    #[inline]
    fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        let (p, q) = (self.p, self.q);
        let d = p * q;
        let p2 = p * p;
        for bj in 0..p {
            for l in 0..q {
                let src_col = (bj * q + l) * d;
                for bi in 0..p {
                    let src = src_col + bi * q;
                    let dst_row = bj * p + bi;
                    for k in 0..q {
                        f(src + k, (l * q + k) * p2 + dst_row);
                    }
                }
            }
        }
    }
}

/// `ℛ(m)` for a `pq × pq` matrix.
///
/// ```
/// use kroncov::linalg::{kron, vec, DenseMatrix};
/// use kroncov::rearrange::{rearrange, BlockShape};
///
/// let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
/// let b = DenseMatrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]).unwrap();
/// let r = rearrange(&kron(&a, &b).unwrap(), BlockShape::new(2, 2).unwrap()).unwrap();
/// assert_eq!(r, DenseMatrix::outer(&vec(&a), &vec(&b)));
/// ```
pub fn rearrange(m: &DenseMatrix, shape: BlockShape) -> Result<DenseMatrix> {
    shape.check_square(m)?;
    let (rr, rc) = shape.rearranged_shape();
    let src = m.as_slice();
    let mut out = vec![0.0; rr * rc];
    shape.for_each_pair(|s, d| out[d] = src[s]);
    Ok(DenseMatrix::from_raw(rr, rc, out))
}

/// `ℛ⁻¹(r)` for a `p² × q²` matrix.
pub fn rearrange_inverse(r: &DenseMatrix, shape: BlockShape) -> Result<DenseMatrix> {
    shape.check_rearranged(r)?;
    let d = shape.dim();
    let src = r.as_slice();
    let mut out = vec![0.0; d * d];
    shape.for_each_pair(|s, dst| out[s] = src[dst]);
    Ok(DenseMatrix::from_raw(d, d, out))
}

/// `ℛ` with a precomputed gather table, for repeated use at one shape.
///
/// The table holds one `u32` per entry, so shapes with `d² > u32::MAX` are
/// rejected; use the free functions for those.
#[derive(Clone, Debug)]
pub struct Rearrangement {
    shape: BlockShape,
    // gather[dst] = src
    gather: Vec<u32>,
}

impl Rearrangement {
    pub fn new(shape: BlockShape) -> Result<Self> {
        let d = shape.dim();
        let len = d * d;
        if len > u32::MAX as usize {
            return Err(Error::SizeOverflow { rows: d, cols: d });
        }
        let mut gather = vec![0u32; len];
        shape.for_each_pair(|s, dst| gather[dst] = s as u32);
        Ok(Rearrangement { shape, gather })
    }

    pub fn shape(&self) -> BlockShape {
        self.shape
    }

    pub fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.shape.check_square(m)?;
        let (rr, rc) = self.shape.rearranged_shape();
        let src = m.as_slice();
        let out = self.gather.iter().map(|&s| src[s as usize]).collect();
        Ok(DenseMatrix::from_raw(rr, rc, out))
    }

    pub fn invert(&self, r: &DenseMatrix) -> Result<DenseMatrix> {
        self.shape.check_rearranged(r)?;
        let d = self.shape.dim();
        let mut out = vec![0.0; d * d];
        for (&s, &x) in self.gather.iter().zip(r.as_slice()) {
            out[s as usize] = x;
        }
        Ok(DenseMatrix::from_raw(d, d, out))
    }
}

/// `‖ℛ(sample_cov − sigma)‖`, the operator norm of the rearranged deviation.
pub fn rearranged_deviation_norm(
    sample_cov: &DenseMatrix,
    sigma: &DenseMatrix,
    shape: BlockShape,
) -> Result<f64> {
    shape.check_square(sample_cov)?;
    shape.check_square(sigma)?;
    let diff = sample_cov.try_sub(sigma)?;
    operator_norm(&rearrange(&diff, shape)?)
}
