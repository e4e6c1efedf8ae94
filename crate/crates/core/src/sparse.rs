//! Row-compressed nonnegative similarity matrix.
//!
//! Rows keep their column indices strictly increasing, so iteration order is
//! deterministic and lookups are a binary search. Absent entries read as an
//! exact `0.0`.

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSimilarity {
    size: usize,
    row_offsets: Vec<u64>,
    column_indices: Vec<u32>,
    values: Vec<f32>,
}

impl SparseSimilarity {
    /// Wraps raw CSR arrays after checking every structural invariant.
    pub fn from_csr(
        size: usize,
        row_offsets: Vec<u64>,
        column_indices: Vec<u32>,
        values: Vec<f32>,
    ) -> Result<Self> {
        if size > u32::MAX as usize {
            return Err(invalid("matrix size exceeds u32 index range"));
        }
        if row_offsets.len() != size + 1 {
            return Err(Error::DimensionMismatch {
                expected: size + 1,
                got: row_offsets.len(),
            });
        }
        if column_indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: column_indices.len(),
                got: values.len(),
            });
        }
        if row_offsets[0] != 0 || row_offsets[size] as usize != values.len() {
            return Err(invalid("row offsets must start at 0 and end at nnz"));
        }
        for i in 0..size {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if hi < lo {
                return Err(invalid(format!("row offsets decrease at row {i}")));
            }
            let cols = &column_indices[lo as usize..hi as usize];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(invalid(format!(
                        "row {i}: column indices must be strictly increasing"
                    )));
                }
            }
            if let Some(&c) = cols.last() {
                if c as usize >= size {
                    return Err(Error::IndexOutOfBounds {
                        index: c as usize,
                        size,
                    });
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!(
                "similarity values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self {
            size,
            row_offsets,
            column_indices,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets in any order. Duplicate
    /// coordinates are rejected.
    pub fn from_triplets(
        size: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, _) in &t {
            let bad = i.max(j);
            if bad >= size {
                return Err(Error::IndexOutOfBounds { index: bad, size });
            }
        }
        t.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = t.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(invalid(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
        }
        Self::from_sorted(size, &t)
    }

    /// Builds from a dense row-major matrix, dropping exact zeros.
    pub fn from_dense(size: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: dense.len(),
            });
        }
        let t: Vec<_> = (0..size)
            .flat_map(|i| (0..size).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = dense[i * size + j];
                (v != 0.0).then_some((i, j, v))
            })
            .collect();
        Self::from_sorted(size, &t)
    }

    fn from_sorted(size: usize, t: &[(usize, usize, f64)]) -> Result<Self> {
        let mut row_offsets = vec![0u64; size + 1];
        for &(i, _, _) in t {
            row_offsets[i + 1] += 1;
        }
        for i in 0..size {
            row_offsets[i + 1] += row_offsets[i];
        }
        let column_indices = t.iter().map(|&(_, j, _)| j as u32).collect();
        let values = t.iter().map(|&(_, _, v)| v as f32).collect();
        Self::from_csr(size, row_offsets, column_indices, values)
    }

    /// Elementwise `max(w_ij, w_ji)`. The result is symmetric and keeps every
    /// entry present in either orientation.
    pub fn symmetrize_max(&self) -> Self {
        let mut t: Vec<(u32, u32, f32)> = Vec::with_capacity(2 * self.nnz());
        for i in 0..self.size {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                t.push((i as u32, j, v));
                t.push((j, i as u32, v));
            }
        }
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(b.2.total_cmp(&a.2)));
        t.dedup_by(|next, kept| (next.0, next.1) == (kept.0, kept.1));

        let mut row_offsets = vec![0u64; self.size + 1];
        for &(i, _, _) in &t {
            row_offsets[i as usize + 1] += 1;
        }
        for i in 0..self.size {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            size: self.size,
            row_offsets,
            column_indices: t.iter().map(|e| e.1).collect(),
            values: t.iter().map(|e| e.2).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.size + 1];
        for &j in &self.column_indices {
            counts[j as usize + 1] += 1;
        }
        for i in 0..self.size {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts.clone();
        let mut cursor = counts;
        let mut column_indices = vec![0u32; self.nnz()];
        let mut values = vec![0f32; self.nnz()];
        // Rows are visited in increasing order, so each transposed row fills
        // with increasing column indices.
        for i in 0..self.size {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let slot = cursor[j as usize] as usize;
                column_indices[slot] = i as u32;
                values[slot] = v;
                cursor[j as usize] += 1;
            }
        }
        Self {
            size: self.size,
            row_offsets,
            column_indices,
            values,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Longest stored row; every row holds at most this many entries.
    pub fn per_row_cap(&self) -> usize {
        self.row_offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    pub fn column_indices(&self) -> &[u32] {
        &self.column_indices
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f32]) {
        let lo = self.row_offsets[i] as usize;
        let hi = self.row_offsets[i + 1] as usize;
        (&self.column_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_len(&self, i: usize) -> usize {
        (self.row_offsets[i + 1] - self.row_offsets[i]) as usize
    }

    /// Stored `w_ij`, or `0.0` when absent.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        for idx in [i, j] {
            if idx >= self.size {
                return Err(Error::IndexOutOfBounds {
                    index: idx,
                    size: self.size,
                });
            }
        }
        Ok(self.get_unchecked(i, j))
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p] as f64,
            Err(_) => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.get_unchecked(j as usize, i) == v as f64)
        })
    }

    /// Dense row-major copy; only sensible for small matrices.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size * self.size];
        for i in 0..self.size {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i * self.size + j as usize] = v as f64;
            }
        }
        d
    }
}
