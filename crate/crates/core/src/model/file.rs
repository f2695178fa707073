//! Model description files.
//!
//! A model file is TOML:
//!
//! ```toml
//! schema_version = 1
//! p = 2
//! q = 3
//! k = 2                 # optional; must match the number of terms
//! seed = 7              # optional; seeds factors given by effective rank
//! n = 500               # optional; default sample size for `generate`
//! spectrum = "geometric"  # or "polynomial"; for effective-rank factors
//!
//! [[terms]]
//! phi = [[2.0, 0.5], [0.5, 1.0]]
//! psi_csv = "psi1.csv"  # relative to the model file
//!
//! [[terms]]
//! phi_effective_rank = 1.5
//! psi_effective_rank = 2.0
//! ```
//!
//! Each factor is given exactly one way: inline rows (`phi`), a matrix CSV
//! (`phi_csv`) or a target effective rank (`phi_effective_rank`), in which
//! case a random factor with unit operator norm is drawn.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::covariance::{FactorPair, KronSumCovariance};
use super::factor::{random_psd_factor, Spectrum};
use crate::error::{Error, Result};
use crate::linalg::{io, DenseMatrix};
use crate::rearrange::BlockShape;
use crate::rng::{derive_seed, TAG_MODEL};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub p: usize,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub spectrum: Spectrum,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_effective_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_effective_rank: Option<f64>,
}

impl ModelFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::parse(origin, e.message()))?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::parse(
                origin,
                format!(
                    "unsupported schema_version {} (this build reads {MODEL_SCHEMA_VERSION})",
                    file.schema_version
                ),
            ));
        }
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// A file listing every factor of `cov` inline.
    pub fn from_covariance(cov: &KronSumCovariance) -> Self {
        let rows = |m: &DenseMatrix| (0..m.rows()).map(|i| m.row(i)).collect::<Vec<_>>();
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            p: cov.shape().p(),
            q: cov.shape().q(),
            k: Some(cov.k_rank()),
            seed: None,
            n: None,
            spectrum: Spectrum::default(),
            terms: cov
                .terms()
                .iter()
                .map(|t| TermSpec {
                    phi: Some(rows(&t.phi)),
                    psi: Some(rows(&t.psi)),
                    ..TermSpec::default()
                })
                .collect(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    pub fn shape(&self) -> Result<BlockShape> {
        BlockShape::new(self.p, self.q)
    }

    /// Builds the model. CSV references resolve against `base_dir`; random
    /// factors use `seed_override`, then the file's seed, then 0.
    pub fn build(&self, base_dir: &Path, seed_override: Option<u64>) -> Result<KronSumCovariance> {
        let shape = self.shape()?;
        if let Some(k) = self.k {
            if k != self.terms.len() {
                return Err(Error::Spec(format!(
                    "k = {k} but {} terms are listed",
                    self.terms.len()
                )));
            }
        }
        let seed = seed_override.or(self.seed).unwrap_or(0);
        let mut pairs = Vec::with_capacity(self.terms.len());
        for (j, term) in self.terms.iter().enumerate() {
            let phi = resolve_factor(
                &term.phi,
                &term.phi_csv,
                term.phi_effective_rank,
                shape.p(),
                self.spectrum,
                derive_seed(seed, &[TAG_MODEL, j as u64, 0]),
                base_dir,
                j,
                "phi",
            )?;
            let psi = resolve_factor(
                &term.psi,
                &term.psi_csv,
                term.psi_effective_rank,
                shape.q(),
                self.spectrum,
                derive_seed(seed, &[TAG_MODEL, j as u64, 1]),
                base_dir,
                j,
                "psi",
            )?;
            pairs.push(FactorPair { phi, psi });
        }
        KronSumCovariance::new(shape, pairs)
    }
}

#[allow(clippy::too_many_arguments)]
fn resolve_factor(
    inline: &Option<Vec<Vec<f64>>>,
    csv: &Option<PathBuf>,
    rank: Option<f64>,
    dim: usize,
    spectrum: Spectrum,
    seed: u64,
    base_dir: &Path,
    term: usize,
    name: &str,
) -> Result<DenseMatrix> {
    let given = inline.is_some() as u8 + csv.is_some() as u8 + rank.is_some() as u8;
    if given != 1 {
        return Err(Error::Spec(format!(
            "term {term}: give exactly one of {name}, {name}_csv, {name}_effective_rank"
        )));
    }
    if let Some(rows) = inline {
        return DenseMatrix::from_rows(rows);
    }
    if let Some(path) = csv {
        return io::read_matrix_file(base_dir.join(path));
    }
    random_psd_factor(dim, rank.expect("one source given"), spectrum, seed)
}
