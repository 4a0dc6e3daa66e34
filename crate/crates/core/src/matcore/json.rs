//! Matrix JSON format: `{"n": int, "rows": [[[re, im], ...], ...]}`.
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so a write/read cycle is bit-identical.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixJson {
    pub n: usize,
    pub rows: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub(crate) fn from_matrix(m: &CMatrix) -> Self {
        Self {
            n: m.rows(),
            rows: (0..m.rows())
                .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    pub(crate) fn into_matrix(self) -> Result<CMatrix> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Format {
                message: "n must be at least 1".into(),
                row: None,
                col: None,
            });
        }
        if self.rows.len() != n {
            return Err(Error::Format {
                message: format!("expected {n} rows, found {}", self.rows.len()),
                row: None,
                col: None,
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Format {
                    message: format!("expected {n} entries, found {}", row.len()),
                    row: Some(i),
                    col: None,
                });
            }
            for (j, &[re, im]) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::Format {
                        message: "non-finite entry".into(),
                        row: Some(i),
                        col: Some(j),
                    });
                }
                data.push(C64::new(re, im));
            }
        }
        CMatrix::from_row_major(n, n, data)
    }
}

impl CMatrix {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixJson::from_matrix(self)).expect("matrix serializes")
    }

    /// Parses and validates the matrix JSON format.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Format {
            message: e.to_string(),
            row: None,
            col: None,
        })?;
        raw.into_matrix()
    }
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(D::Error::custom)
    }
}
