//! Complex matrices as JSON arrays of rows of `[re, im]` pairs.

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<C64>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect();
    rows.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<C64>, D::Error> {
    let rows: Vec<Vec<C64>> = Vec::deserialize(d)?;
    from_rows(&rows).map_err(D::Error::custom)
}

pub(crate) fn from_rows(rows: &[Vec<C64>]) -> Result<DMatrix<C64>, String> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err("ragged matrix rows".into());
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

/// Complex vectors as flat arrays of `[re, im]` pairs.
pub mod cvec {
    use nalgebra::DVector;

    use super::*;

    pub fn serialize<S: Serializer>(v: &DVector<C64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<C64>, D::Error> {
        Ok(DVector::from_vec(Vec::deserialize(d)?))
    }
}
