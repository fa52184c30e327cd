use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_dataset(ds: &Dataset) -> Self {
        let cols = crate::layout::N_FEATURES;
        let data = ds.windows.iter().flat_map(|w| w.features.iter().map(|&x| T::of(x))).collect();
        Self { rows: ds.len(), cols, data }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self { rows: idx.len(), cols: self.cols, data }
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

/// Per-instance weights scaled to mean 1, so that any global rescaling of the
/// input weights yields bit-identical training.
pub fn normalized_weights<T: Scalar>(weights: Option<&[T]>, n: usize) -> Result<Vec<T>> {
    match weights {
        None => Ok(vec![T::one(); n]),
        Some(w) => {
            if w.len() != n {
                return Err(Error::Dimension { expected: n, got: w.len() });
            }
            if w.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
                return Err(Error::InvalidInput("instance weights must be finite and non-negative".into()));
            }
            let total: T = w.iter().copied().sum();
            if !(total > T::zero()) {
                return Err(Error::InvalidInput("instance weights sum to zero".into()));
            }
            let scale = T::of_usize(n) / total;
            Ok(w.iter().map(|&x| x * scale).collect())
        }
    }
}
