use crate::error::{invalid, Error, Result};

/// Dense row-major feature matrix. Values are stored as `f32`, matching the
/// on-disk format; arithmetic elsewhere widens to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("embedding dimension must be at least 1"));
        }
        if rows.checked_mul(dim) != Some(data.len()) {
            return Err(Error::DimensionMismatch {
                expected: rows.saturating_mul(dim),
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite embedding value at row {} column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            data.extend(r.iter().map(|&v| v as f32));
        }
        Self::new(rows.len(), dim, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies the selected rows into a new matrix, in the given order.
    pub fn select_rows(&self, items: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(items.len() * self.dim);
        for &i in items {
            if i >= self.rows {
                return Err(Error::IndexOutOfBounds {
                    index: i,
                    size: self.rows,
                });
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(items.len(), self.dim, data)
    }
}
