//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's own kernels except for `DenseMatrix` storage.
#![allow(dead_code)]

use kroncov::rng::StreamRng;
use kroncov::DenseMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rows: usize, cols: usize, rng: &mut StreamRng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `G Gᵀ / dim` for a Gaussian `G`, symmetrized exactly.
pub fn gaussian_psd(dim: usize, rng: &mut StreamRng) -> DenseMatrix {
    let g = gaussian(dim, dim, rng);
    let m = naive_matmul(&g, &g.transpose());
    DenseMatrix::from_fn(dim, dim, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)) / dim as f64)
}

pub fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    assert_eq!(a.cols(), b.rows());
    DenseMatrix::from_fn(a.rows(), b.cols(), |i, j| {
        (0..a.cols()).map(|k| a.get(i, k) * b.get(k, j)).sum()
    })
}

pub fn naive_kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (br, bc) = b.shape();
    DenseMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

pub fn naive_vec(m: &DenseMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.rows() * m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            out.push(m.get(i, j));
        }
    }
    out
}

/// Row `(j−1)p + i` (1-based) is the column-stacked block `M(i, j)`.
pub fn naive_rearrange(m: &DenseMatrix, p: usize, q: usize) -> DenseMatrix {
    let mut rows = vec![vec![0.0; q * q]; p * p];
    for bi in 0..p {
        for bj in 0..p {
            let row = &mut rows[bj * p + bi];
            for l in 0..q {
                for k in 0..q {
                    row[l * q + k] = m.get(bi * q + k, bj * q + l);
                }
            }
        }
    }
    DenseMatrix::from_rows(&rows).unwrap()
}

/// `(1/n) Σ xᵢxᵢᵀ` by explicit triple loop.
pub fn naive_covariance(vectors: &[Vec<f64>]) -> DenseMatrix {
    let d = vectors[0].len();
    let n = vectors.len() as f64;
    let mut acc = vec![vec![0.0; d]; d];
    for x in vectors {
        for i in 0..d {
            for j in 0..d {
                acc[i][j] += x[i] * x[j];
            }
        }
    }
    DenseMatrix::from_fn(d, d, |i, j| acc[i][j] / n)
}

pub fn fro(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn diff_fro(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    diff_fro(a, b) / fro(b).max(f64::MIN_POSITIVE)
}

pub fn naive_trace(m: &DenseMatrix) -> f64 {
    (0..m.rows()).map(|i| m.get(i, i)).sum()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}
