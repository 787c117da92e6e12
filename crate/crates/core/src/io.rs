//! JSON interchange: matrices as row-major lists of `[re, im]` pairs.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::spectral::{Blocks, GeneralizedObservable, SpectralModel, StateFunctional};
use crate::wigner::PositionKernel;

/// Row-major complex matrix.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension("matrix rows have different lengths".into()));
    }
    Ok(CMat::from_fn(n, c, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlocksJson {
    pub bound: MatrixJson,
    pub diag: Vec<MatrixJson>,
    pub cross_up: Vec<MatrixJson>,
    pub cross_down: Vec<MatrixJson>,
    pub kernel: MatrixJson,
}

impl BlocksJson {
    pub fn from_blocks(b: &Blocks) -> Self {
        let list = |v: &[CMat]| v.iter().map(matrix_to_json).collect();
        Self {
            bound: matrix_to_json(&b.bound),
            diag: list(&b.diag),
            cross_up: list(&b.cross_up),
            cross_down: list(&b.cross_down),
            kernel: matrix_to_json(&b.kernel),
        }
    }

    pub fn to_blocks(&self) -> Result<Blocks> {
        let list = |v: &[MatrixJson]| v.iter().map(matrix_from_json).collect::<Result<Vec<_>>>();
        Ok(Blocks {
            bound: matrix_from_json(&self.bound)?,
            diag: list(&self.diag)?,
            cross_up: list(&self.cross_up)?,
            cross_down: list(&self.cross_down)?,
            kernel: matrix_from_json(&self.kernel)?,
        })
    }
}

/// `{"model": ..., "blocks": ...}` for states and observables alike.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveBlockJson {
    pub model: SpectralModel,
    pub blocks: BlocksJson,
}

impl FiveBlockJson {
    pub fn from_state(s: &StateFunctional) -> Self {
        Self {
            model: s.model().clone(),
            blocks: BlocksJson::from_blocks(&s.blocks),
        }
    }

    pub fn from_observable(o: &GeneralizedObservable) -> Self {
        Self {
            model: o.model().clone(),
            blocks: BlocksJson::from_blocks(&o.blocks),
        }
    }

    pub fn to_state(&self) -> Result<StateFunctional> {
        StateFunctional::new(self.model.clone(), self.blocks.to_blocks()?)
    }

    pub fn to_observable(&self) -> Result<GeneralizedObservable> {
        GeneralizedObservable::new(self.model.clone(), self.blocks.to_blocks()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelJson {
    pub q: Vec<f64>,
    pub hbar: f64,
    pub values: MatrixJson,
}

impl KernelJson {
    pub fn from_kernel(k: &PositionKernel) -> Self {
        Self {
            q: k.q.clone(),
            hbar: k.hbar,
            values: matrix_to_json(&k.values),
        }
    }

    pub fn to_kernel(&self) -> Result<PositionKernel> {
        PositionKernel::new(self.q.clone(), matrix_from_json(&self.values)?, self.hbar)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}

pub fn load_state(path: &Path) -> Result<StateFunctional> {
    read_json::<FiveBlockJson>(path)?.to_state()
}

pub fn load_observable(path: &Path) -> Result<GeneralizedObservable> {
    read_json::<FiveBlockJson>(path)?.to_observable()
}
