//! Serde adapters pinning the on-disk layout of nalgebra types.
//!
//! Matrices are stored as `{"rows": r, "cols": c, "data": [...]}` with
//! row-major `data`; vectors are stored as plain JSON arrays. JSON numbers
//! are written with the shortest representation that round-trips the exact
//! f64 bit pattern, so save/load preserves values bit for bit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Use with `#[serde(with = "crate::serialize::mat")]` on `DMatrix<f64>`.
pub mod mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixRepr { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.data.len() != repr.rows * repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix payload holds {} values but declares {}x{}",
                repr.data.len(),
                repr.rows,
                repr.cols
            )));
        }
        Ok(DMatrix::from_row_slice(repr.rows, repr.cols, &repr.data))
    }
}

/// Use with `#[serde(with = "crate::serialize::vec")]` on `DVector<f64>`.
pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        let data = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(data))
    }
}

/// Use with `#[serde(with = "crate::serialize::opt_vec")]` on
/// `Option<DVector<f64>>`.
pub mod opt_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<DVector<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DVector<f64>>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(DVector::from_vec))
    }
}
