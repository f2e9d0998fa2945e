//! JSON model files and energy grids.
//!
//! A model file looks like
//!
//! ```json
//! {
//!   "width": 2,
//!   "cable": [[[0, 0], [0, 0]], [[0, 0], [4, 0]]],
//!   "scatterer": [[[[0.5, 0], [0, 0]], [[0, 0], [4, 0]]]],
//!   "disorder": {"kind": "AndersonDiagonal", "strength": 1.0, "length": 16}
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major. The
//! scatterer may be omitted when a disorder block is present.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{cplx, CMatrix};
use crate::model::{DisorderKind, DisorderSpec, StripModel};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

type Entry = [f64; 2];
type RawMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    pub kind: DisorderKind,
    pub strength: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub width: usize,
    pub cable: RawMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scatterer: Vec<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderBlock>,
}

fn to_matrix(raw: &RawMatrix, width: usize, what: &str) -> Result<CMatrix<f64>, crate::Error> {
    if raw.len() != width || raw.iter().any(|row| row.len() != width) {
        return Err(crate::Error::InvalidModel(format!("{what} is not {width}x{width}")));
    }
    Ok(CMatrix::from_fn(width, width, |i, j| cplx(raw[i][j][0], raw[i][j][1])))
}

fn from_matrix(m: &CMatrix<f64>) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serialises")
    }

    pub fn from_model(model: &StripModel<f64>, disorder: Option<DisorderBlock>) -> Self {
        Self {
            width: model.width(),
            cable: from_matrix(model.cable()),
            scatterer: model.scatterer().iter().map(from_matrix).collect(),
            disorder,
        }
    }

    pub fn cable(&self) -> Result<CMatrix<f64>, crate::Error> {
        if self.width == 0 {
            return Err(crate::Error::InvalidModel("width must be at least 1".into()));
        }
        to_matrix(&self.cable, self.width, "cable")
    }

    /// The model with the explicit scatterer. Validates Hermiticity.
    pub fn model(&self) -> Result<StripModel<f64>, crate::Error> {
        let cable = self.cable()?;
        if self.scatterer.is_empty() {
            return Err(crate::Error::InvalidModel("model file has no scatterer".into()));
        }
        let sites = self
            .scatterer
            .iter()
            .enumerate()
            .map(|(n, v)| to_matrix(v, self.width, &format!("scatterer site {n}")))
            .collect::<Result<Vec<_>, _>>()?;
        StripModel::new(cable, sites)
    }

    pub fn disorder_spec(&self) -> Result<Option<DisorderSpec<f64>>, crate::Error> {
        self.disorder
            .map(|d| DisorderSpec::new(d.kind, d.strength, d.length))
            .transpose()
    }
}

/// `count` equally spaced energies from `start` to `stop`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl EnergyGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self, crate::Error> {
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(crate::Error::InvalidModel(
                "energy grid needs finite endpoints and count >= 1".into(),
            ));
        }
        Ok(Self { start, stop, count })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}
