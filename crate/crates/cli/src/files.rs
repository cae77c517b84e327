//! JSON artifacts. Matrices are `{rows, cols, entries}` with row-major `[re, im]` pairs; values
//! are written at full precision so every artifact re-verifies after a round trip.

use std::fs;
use std::path::{Path, PathBuf};

use mufact::channels::MixedUnitaryEnsemble;
use mufact::factorise::{GramCertificate, UnitaryTuple, UnitaryTupleEnsemble};
use mufact::{Complex64, ComplexMatrix};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Largest allowed `|Σ w - 1|` for weights read from a file.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> CliResult<ComplexMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Malformed("matrix must have positive dimensions".into()));
        }
        if self.entries.len() != self.rows * self.cols {
            return Err(CliError::Malformed(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.entries.len()
            )));
        }
        if self.entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::Malformed("matrix has non-finite entries".into()));
        }
        let data = self.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(ComplexMatrix::from_row_major(self.rows, self.cols, data)?)
    }
}

/// Either a mixed unitary ensemble on `M_n` or a weighted family of unitary `k`-tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnsembleFile {
    Unitaries {
        n: usize,
        weights: Vec<f64>,
        unitaries: Vec<MatrixFile>,
    },
    Tuples {
        d: usize,
        k: usize,
        weights: Vec<f64>,
        tuples: Vec<Vec<MatrixFile>>,
    },
}

impl EnsembleFile {
    pub fn from_mixed(e: &MixedUnitaryEnsemble) -> Self {
        EnsembleFile::Unitaries {
            n: e.n(),
            weights: e.weights().to_vec(),
            unitaries: e.unitaries().iter().map(MatrixFile::from_matrix).collect(),
        }
    }

    pub fn from_tuples(e: &UnitaryTupleEnsemble) -> Self {
        EnsembleFile::Tuples {
            d: e.d(),
            k: e.k(),
            weights: e.weights().to_vec(),
            tuples: e
                .tuples()
                .iter()
                .map(|t| t.unitaries().iter().map(MatrixFile::from_matrix).collect())
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            EnsembleFile::Unitaries { weights, .. } | EnsembleFile::Tuples { weights, .. } => weights,
        }
    }

    /// Every matrix in the file, checked against the declared dimensions.
    pub fn matrices(&self) -> CliResult<Vec<ComplexMatrix>> {
        let (list, size): (Vec<&MatrixFile>, usize) = match self {
            EnsembleFile::Unitaries { n, unitaries, .. } => (unitaries.iter().collect(), *n),
            EnsembleFile::Tuples { d, k, tuples, .. } => {
                if tuples.iter().any(|t| t.len() != *k) {
                    return Err(CliError::Malformed(format!("every tuple must have {k} members")));
                }
                (tuples.iter().flatten().collect(), *d)
            }
        };
        if list.is_empty() || self.weights().len() != self.len() {
            return Err(CliError::Malformed("ensemble needs one weight per member and at least one member".into()));
        }
        list.into_iter()
            .map(|m| {
                let m = m.to_matrix()?;
                if m.rows() != size || m.cols() != size {
                    return Err(CliError::Malformed(format!(
                        "member is {}x{}, expected {size}x{size}",
                        m.rows(),
                        m.cols()
                    )));
                }
                Ok(m)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        match self {
            EnsembleFile::Unitaries { unitaries, .. } => unitaries.len(),
            EnsembleFile::Tuples { tuples, .. } => tuples.len(),
        }
    }

    pub fn to_mixed(&self) -> CliResult<MixedUnitaryEnsemble> {
        match self {
            EnsembleFile::Unitaries { weights, .. } => {
                Ok(MixedUnitaryEnsemble::with_tolerance(weights.clone(), self.matrices()?, WEIGHT_TOL)?)
            }
            EnsembleFile::Tuples { .. } => Err(CliError::Malformed(
                "expected an ensemble of unitaries ({n, weights, unitaries}), got the tuple form".into(),
            )),
        }
    }

    pub fn to_tuples(&self) -> CliResult<UnitaryTupleEnsemble> {
        self.to_tuples_with(mufact::numkit::STRUCT_TOL)
    }

    /// [`to_tuples`](Self::to_tuples) accepting members up to the given unitarity residual.
    pub fn to_tuples_with(&self, unitarity_tol: f64) -> CliResult<UnitaryTupleEnsemble> {
        match self {
            EnsembleFile::Tuples { k, weights, .. } => {
                let mats = self.matrices()?;
                let tuples = mats
                    .chunks(*k)
                    .map(|c| UnitaryTuple::with_tolerance(c.to_vec(), unitarity_tol))
                    .collect::<mufact::Result<Vec<_>>>()?;
                Ok(UnitaryTupleEnsemble::with_tolerance(weights.clone(), tuples, WEIGHT_TOL)?)
            }
            EnsembleFile::Unitaries { .. } => Err(CliError::Malformed(
                "expected a tuple ensemble ({d, k, weights, tuples}), got the unitary form".into(),
            )),
        }
    }
}

/// A [`GramCertificate`] on disk. Verification recomputes `achieved` from the tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub d: usize,
    pub k: usize,
    pub target: MatrixFile,
    pub achieved: MatrixFile,
    pub residual_fro: f64,
    pub residual_max: f64,
    pub ensemble: EnsembleFile,
}

impl CertificateFile {
    pub fn from_certificate(c: &GramCertificate) -> Self {
        Self {
            d: c.d(),
            k: c.k(),
            target: MatrixFile::from_matrix(&c.target),
            achieved: MatrixFile::from_matrix(&c.achieved),
            residual_fro: c.residual_fro,
            residual_max: c.residual_max,
            ensemble: EnsembleFile::from_tuples(&c.ensemble),
        }
    }

    /// Loads without rejecting non-unitary members; [`GramCertificate::verify`] reports those.
    pub fn to_certificate(&self) -> CliResult<GramCertificate> {
        let ensemble = self.ensemble.to_tuples_with(f64::INFINITY)?;
        if ensemble.d() != self.d || ensemble.k() != self.k {
            return Err(CliError::Malformed("certificate header does not match its tuples".into()));
        }
        let target = self.target.to_matrix()?;
        let achieved = self.achieved.to_matrix()?;
        for m in [&target, &achieved] {
            if m.rows() != self.k || m.cols() != self.k {
                return Err(CliError::Malformed(format!("certificate matrices must be {0}x{0}", self.k)));
            }
        }
        Ok(GramCertificate {
            ensemble,
            achieved,
            target,
            residual_fro: self.residual_fro,
            residual_max: self.residual_max,
        })
    }
}

/// A file read by a command, with the digest echoed in reports.
#[derive(Debug, Clone)]
pub struct Input {
    pub role: &'static str,
    pub path: PathBuf,
    pub sha256: String,
}

pub fn read_json<T: DeserializeOwned>(role: &'static str, path: &Path) -> CliResult<(T, Input)> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Malformed(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
    let input = Input {
        role,
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    };
    Ok((value, input))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Malformed(format!("cannot write {}: {e}", path.display())))
}
