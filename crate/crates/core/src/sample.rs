use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// N i.i.d. draws in R^d, stored row-major, with the metadata needed to
/// regenerate them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix<T> {
    data: Vec<T>,
    n: usize,
    dim: usize,
    pub seed: u64,
    pub dist_name: String,
}

impl<T: Scalar> SampleMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, seed: u64, dist_name: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parameter("sample must contain at least one row".into()));
        }
        let dim = rows[0].len();
        let mut data = Vec::with_capacity(n * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend(row);
        }
        Self::from_flat(data, n, dim, seed, dist_name)
    }

    pub fn from_flat(data: Vec<T>, n: usize, dim: usize, seed: u64, dist_name: impl Into<String>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::Parameter("sample needs n >= 1 and dim >= 1".into()));
        }
        if data.len() != n * dim {
            return Err(Error::DimensionMismatch { expected: n * dim, got: data.len() });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite_scalar()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { data, n, dim, seed, dist_name: dist_name.into() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    /// Convert every entry to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Option<SampleMatrix<U>> {
        let data = self.data.iter().map(|x| x.to_f64().and_then(U::from_f64)).collect::<Option<Vec<U>>>()?;
        Some(SampleMatrix { data, n: self.n, dim: self.dim, seed: self.seed, dist_name: self.dist_name.clone() })
    }
}
