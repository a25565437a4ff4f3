//! Small dense helpers shared across modules.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row `i` of a column-major matrix, copied out.
pub fn row_vec(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

/// `m.row(i) · x` without allocating.
#[inline]
pub fn row_dot(m: &DMatrix<f64>, i: usize, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (c, xc) in x.iter().enumerate() {
        s += m[(i, c)] * xc;
    }
    s
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

pub fn all_finite(values: impl IntoIterator<Item = f64>) -> bool {
    values.into_iter().all(f64::is_finite)
}

/// Serialize a `DMatrix` as a list of rows (plus an explicit column count so
/// that empty matrices survive the round trip).
pub mod serde_rows {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Rows {
        ncols: usize,
        rows: Vec<Vec<f64>>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows = (0..m.nrows()).map(|i| row_vec(m, i)).collect();
        Rows {
            ncols: m.ncols(),
            rows,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Rows::deserialize(d)?;
        if r.rows.iter().any(|row| row.len() != r.ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(from_rows(&r.rows, r.ncols))
    }
}

pub mod serde_vector {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}
