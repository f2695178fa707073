use faer::linalg::matmul::matmul;
use faer::{Accum, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{io, DenseMatrix};

/// `n` observation vectors of dimension `d`, optionally tagged with the seed
/// that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    // Observation i occupies data[i*d .. (i+1)*d].
    data: Vec<f64>,
    seed: Option<u64>,
}

impl SampleSet {
    pub fn from_vectors<V: AsRef<[f64]>>(vectors: &[V]) -> Result<Self> {
        let n = vectors.len();
        if n == 0 {
            return Err(Error::Contract("a sample needs at least one vector".into()));
        }
        let d = vectors[0].as_ref().len();
        let mut data = Vec::with_capacity(n * d);
        for (i, v) in vectors.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != d {
                return Err(Error::Shape(format!(
                    "observation {i} has length {}, expected {d}",
                    v.len()
                )));
            }
            data.extend_from_slice(v);
        }
        Self::from_flat(n, d, data)
    }

    /// Wraps `n·d` values laid out observation by observation.
    pub fn from_flat(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Contract(format!(
                "a sample needs n >= 1 and d >= 1 (got n = {n}, d = {d})"
            )));
        }
        if data.len() != n * d {
            return Err(Error::Shape(format!(
                "{} values supplied for {n} observations of dimension {d}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(SampleSet {
            n,
            d,
            data,
            seed: None,
        })
    }

    /// Reads one observation per CSV row.
    pub fn read_csv<R: std::io::Read>(reader: R, origin: &str) -> Result<Self> {
        let rows = io::read_rows(reader, origin)?;
        if rows.is_empty() {
            return Err(Error::parse(origin, "no observations"));
        }
        Self::from_vectors(&rows)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> std::io::Result<()> {
        io::write_rows(writer, self.data.chunks(self.d))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }

    /// The observations selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<SampleSet> {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::Contract(format!(
                    "index {i} out of range for {} observations",
                    self.n
                )));
            }
            data.extend_from_slice(self.vector(i));
        }
        SampleSet::from_flat(indices.len(), self.d, data)
    }

    /// Subtracts the empirical mean from every observation.
    pub fn centered(&self) -> SampleSet {
        let mut mean = vec![0.0; self.d];
        for v in self.iter() {
            mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        let data = self
            .iter()
            .flat_map(|v| v.iter().zip(&mean).map(|(x, m)| x - m))
            .collect();
        SampleSet {
            n: self.n,
            d: self.d,
            data,
            seed: self.seed,
        }
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// The observations as the columns of a `d × n` view.
    pub(crate) fn columns_view(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.d, self.n)
    }
}

/// `Σ̂ = (1/n) Σᵢ XᵢXᵢᵀ`, without mean subtraction.
///
/// The result is exactly symmetric: the upper triangle is mirrored.
pub fn sample_covariance(data: &SampleSet) -> DenseMatrix {
    let d = data.d();
    let x = data.columns_view();
    let mut out = DenseMatrix::zeros(d, d);
    let par = crate::linalg::backend::par_for(d);
    matmul(
        out.view_mut(),
        Accum::Replace,
        x,
        x.transpose(),
        1.0 / data.n() as f64,
        par,
    );
    let buf = out.data_mut();
    for j in 0..d {
        for i in (j + 1)..d {
            buf[j * d + i] = buf[i * d + j];
        }
    }
    out
}
