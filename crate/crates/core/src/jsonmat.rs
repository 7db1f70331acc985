//! JSON encoding of real and complex matrices.
//!
//! Real entries are plain numbers, complex entries are `[re, im]` pairs.

use serde::{Deserialize, Serialize};

use crate::numerics::{CMat, Field, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn to_c64(self) -> C64 {
        match self {
            Scalar::Real(x) => C64::new(x, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }

    pub fn from_c64(z: C64, field: Field) -> Self {
        match field {
            Field::Real => Scalar::Real(z.re),
            Field::Complex => Scalar::Complex([z.re, z.im]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MatrixJsonError {
    #[error("matrix has no rows")]
    Empty,
    #[error("ragged matrix: row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("complex entry in a real matrix")]
    ComplexInReal,
}

/// Matrix from a list of rows.
pub fn from_rows(rows: &[Vec<Scalar>], field: Field) -> Result<CMat, MatrixJsonError> {
    let n = rows.len();
    if n == 0 {
        return Err(MatrixJsonError::Empty);
    }
    let m = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != m {
            return Err(MatrixJsonError::Ragged {
                row: i,
                found: r.len(),
                expected: m,
            });
        }
        if field == Field::Real
            && r.iter()
                .any(|s| matches!(s, Scalar::Complex([_, im]) if *im != 0.0))
        {
            return Err(MatrixJsonError::ComplexInReal);
        }
    }
    Ok(CMat::from_fn(n, m, |i, k| rows[i][k].to_c64()))
}

/// Matrix from a list of columns.
pub fn from_columns(cols: &[Vec<Scalar>], field: Field) -> Result<CMat, MatrixJsonError> {
    from_rows(cols, field).map(|m| m.transpose())
}

pub fn to_rows(m: &CMat, field: Field) -> Vec<Vec<Scalar>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|k| Scalar::from_c64(m[(i, k)], field))
                .collect()
        })
        .collect()
}

pub fn to_columns(m: &CMat, field: Field) -> Vec<Vec<Scalar>> {
    to_rows(&m.transpose(), field)
}
