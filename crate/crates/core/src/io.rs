//! JSON file formats for states, density matrices and decompositions.
//!
//! Complex numbers are `[re, im]` pairs; arrays follow the row-major,
//! subsystem-1-slowest order used throughout the crate.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::state::{DensityMatrix, SchmidtDecomposition, StateTensor};

pub const FORMAT_VERSION: u32 = 1;

pub type Pair = [f64; 2];

fn to_pair(z: &C64) -> Pair {
    [z.re, z.im]
}

fn from_pair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub amplitudes: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub entries: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionFile {
    pub version: u32,
    pub dims: Vec<usize>,
    pub coefficients: Vec<f64>,
    /// `subsystems[k][l]` is the `l`-th basis vector of subsystem `k`.
    pub subsystems: Vec<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartition: Option<String>,
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {v}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

impl From<&StateTensor> for StateFile {
    fn from(s: &StateTensor) -> Self {
        StateFile {
            version: FORMAT_VERSION,
            dims: s.dims().to_vec(),
            amplitudes: s.amplitudes().iter().map(to_pair).collect(),
            label: s.label().map(str::to_owned),
        }
    }
}

impl StateFile {
    pub fn into_state(self) -> Result<StateTensor> {
        check_version(self.version)?;
        let amps = self.amplitudes.iter().map(from_pair).collect();
        let s = StateTensor::new(self.dims, amps)?;
        Ok(match self.label {
            Some(l) => s.with_label(l),
            None => s,
        })
    }
}

impl From<&DensityMatrix> for DensityFile {
    fn from(rho: &DensityMatrix) -> Self {
        let m = rho.entries();
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                entries.push(to_pair(&m[(i, j)]));
            }
        }
        DensityFile { version: FORMAT_VERSION, dims: rho.dims().to_vec(), entries }
    }
}

impl DensityFile {
    pub fn into_density(self) -> Result<DensityMatrix> {
        check_version(self.version)?;
        let side: usize = self.dims.iter().product();
        if self.entries.len() != side * side {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {side}x{side} matrix",
                self.entries.len()
            )));
        }
        let values: Vec<C64> = self.entries.iter().map(from_pair).collect();
        DensityMatrix::new(self.dims, CMatrix::from_row_slice(side, side, &values))
    }
}

impl DecompositionFile {
    pub fn from_decomposition(dec: &SchmidtDecomposition, bipartition: Option<String>) -> Self {
        DecompositionFile {
            version: FORMAT_VERSION,
            dims: dec.dims().to_vec(),
            coefficients: dec.coefficients().to_vec(),
            subsystems: dec
                .vectors()
                .iter()
                .map(|family| family.iter().map(|v| v.iter().map(to_pair).collect()).collect())
                .collect(),
            bipartition,
        }
    }

    pub fn into_decomposition(self) -> Result<SchmidtDecomposition> {
        check_version(self.version)?;
        let vectors: Vec<Vec<CVector>> = self
            .subsystems
            .iter()
            .map(|family| {
                family
                    .iter()
                    .map(|v| CVector::from_iterator(v.len(), v.iter().map(from_pair)))
                    .collect()
            })
            .collect();
        let dec = SchmidtDecomposition::new(self.coefficients, vectors)?;
        if dec.dims() != self.dims.as_slice() {
            return Err(Error::DimensionMismatch(format!("declared {:?}, vectors give {:?}", self.dims, dec.dims())));
        }
        Ok(dec)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("file types serialize")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value) + "\n").map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn read_state(path: &Path) -> Result<StateTensor> {
    read_json::<StateFile>(path)?.into_state()
}

pub fn write_state(path: &Path, state: &StateTensor) -> Result<()> {
    write_json(path, &StateFile::from(state))
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    read_json::<DensityFile>(path)?.into_density()
}

pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &DensityFile::from(rho))
}

pub fn read_decomposition(path: &Path) -> Result<SchmidtDecomposition> {
    read_json::<DecompositionFile>(path)?.into_decomposition()
}

pub fn write_decomposition(path: &Path, dec: &SchmidtDecomposition) -> Result<()> {
    write_json(path, &DecompositionFile::from_decomposition(dec, None))
}
