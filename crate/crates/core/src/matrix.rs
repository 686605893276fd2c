use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major `n x d` matrix of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.len() });
            }
            values.extend_from_slice(r);
        }
        Ok(Self { n: rows.len(), d, values })
    }

    pub fn from_row_major(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: values.len() });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * d);
        for c in columns {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.len() });
            }
        }
        for i in 0..n {
            values.extend(columns.iter().map(|c| c[i]));
        }
        Ok(Self { n, d, values })
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact on an empty width would panic
        let d = self.d.max(1);
        self.values.chunks_exact(d).take(if self.d == 0 { 0 } else { self.n })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.d).copied().collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self { n: idx.len(), d: self.d, values }
    }
}
