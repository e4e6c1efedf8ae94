//! Similarity kernels and sparse similarity construction.
//!
//! Nearest neighbors are exact: every query is scored against every allowed
//! candidate and the top `r` are kept. This is `O(r N^2)` work rather than the
//! `O(r N polylog N)` of an approximate index, which is fine at the scales this
//! crate targets and keeps results bit-reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{invalid, Error, Result};
use crate::ground::GroundSet;
use crate::sparse::SparseSimilarity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Kernel {
    /// `1 + cos(a, b)`, in `[0, 2]`.
    CosineShifted,
    /// `exp(-gamma * |a - b|^2)`, in `(0, 1]`.
    Rbf { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: Kernel,
    /// Neighbors kept per row before symmetrization.
    pub per_row_cap: usize,
    /// Zero out pairs whose labels differ before taking the top `r`.
    pub class_restricted: bool,
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.per_row_cap == 0 {
            return Err(invalid("per_row_cap must be at least 1"));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid(format!("rbf gamma must be positive, got {gamma}")));
            }
        }
        Ok(())
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

pub fn cosine_shifted(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(1.0 + cosine(a, b)?)
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    check_dims(a, b)?;
    if !(gamma > 0.0) {
        return Err(invalid(format!("rbf gamma must be positive, got {gamma}")));
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * d2).exp())
}

/// Row data prepared once for repeated kernel evaluation.
pub(crate) struct KernelEvaluator {
    kernel: Kernel,
    dim: usize,
    /// Unit-normalized rows for cosine, raw rows for rbf.
    rows: Vec<f64>,
}

impl KernelEvaluator {
    pub(crate) fn new(emb: &EmbeddingMatrix, kernel: Kernel) -> Result<Self> {
        let dim = emb.dim();
        let mut rows: Vec<f64> = emb.data().iter().map(|&v| v as f64).collect();
        match kernel {
            Kernel::CosineShifted => {
                for r in rows.chunks_exact_mut(dim) {
                    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        return Err(Error::ZeroNorm);
                    }
                    r.iter_mut().for_each(|v| *v /= norm);
                }
            }
            Kernel::Rbf { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(invalid(format!("rbf gamma must be positive, got {gamma}")));
                }
            }
        }
        Ok(Self { kernel, dim, rows })
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn eval(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row(i), self.row(j));
        match self.kernel {
            Kernel::CosineShifted => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                1.0 + dot.clamp(-1.0, 1.0)
            }
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[inline]
fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `r` best `(index, value)` pairs, sorted by value descending with
/// ties on the lower index.
fn keep_top(mut scored: Vec<(usize, f64)>, r: usize) -> Vec<(usize, f64)> {
    if scored.len() > r {
        scored.select_nth_unstable_by(r - 1, rank_order);
        scored.truncate(r);
    }
    scored.sort_unstable_by(rank_order);
    scored
}

fn check_rows(emb: &EmbeddingMatrix, items: &[usize]) -> Result<()> {
    if let Some(&bad) = items.iter().find(|&&i| i >= emb.rows()) {
        return Err(Error::IndexOutOfBounds {
            index: bad,
            size: emb.rows(),
        });
    }
    Ok(())
}

/// For each query row, the `r` candidate rows with the largest kernel value.
pub fn exact_topk_neighbors(
    embeddings: &EmbeddingMatrix,
    query_rows: &[usize],
    candidate_rows: &[usize],
    r: usize,
    kernel: Kernel,
) -> Result<Vec<Vec<(usize, f64)>>> {
    if r == 0 {
        return Err(invalid("r must be at least 1"));
    }
    if candidate_rows.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    check_rows(embeddings, query_rows)?;
    check_rows(embeddings, candidate_rows)?;
    let ev = KernelEvaluator::new(embeddings, kernel)?;
    Ok(query_rows
        .par_iter()
        .map(|&q| {
            let scored = candidate_rows.iter().map(|&c| (c, ev.eval(q, c))).collect();
            keep_top(scored, r)
        })
        .collect())
}

/// Sparse similarity over the whole ground set: per-row top-`r` among allowed
/// columns (diagonal excluded; same label only when class-restricted), then
/// symmetrized by elementwise max.
///
/// After symmetrization a row can hold more than `r` entries (it also receives
/// every `j` that kept it), but the total stays below `2 r N`.
pub fn build_sparse(
    embeddings: &EmbeddingMatrix,
    gs: &GroundSet,
    spec: &KernelSpec,
) -> Result<SparseSimilarity> {
    spec.validate()?;
    let n = gs.total_count();
    if embeddings.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: embeddings.rows(),
        });
    }
    let ev = KernelEvaluator::new(embeddings, spec.kernel)?;
    let by_class: Vec<Vec<usize>> = if spec.class_restricted {
        let mut groups = vec![Vec::new(); gs.class_count()];
        for i in 0..n {
            groups[gs.label(i)].push(i);
        }
        groups
    } else {
        vec![(0..n).collect()]
    };

    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pool = if spec.class_restricted {
                &by_class[gs.label(i)]
            } else {
                &by_class[0]
            };
            let scored = pool
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (j, ev.eval(i, j)))
                .collect();
            keep_top(scored, spec.per_row_cap)
        })
        .collect();

    let triplets = rows
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)));
    Ok(SparseSimilarity::from_triplets(n, triplets)?.symmetrize_max())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_embeddings(rows: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * dim)
            .map(|_| rng.random_range(-1.0f32..1.0))
            .collect();
        EmbeddingMatrix::new(rows, dim, data).unwrap()
    }

    fn row64(e: &EmbeddingMatrix, i: usize) -> Vec<f64> {
        e.row(i).iter().map(|&v| v as f64).collect()
    }

    #[test]
    fn cosine_shifted_values() {
        assert!((cosine_shifted(&[0.3, -2.0], &[0.3, -2.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!((cosine_shifted(&[1.0, 0.0], &[0.0, 5.0]).unwrap() - 1.0).abs() < 1e-15);
        // Scalar oracle: cos((1,0),(1,1)) = 1/sqrt(2).
        let oracle = 1.0 + 1.0 / 2f64.sqrt();
        assert!((cosine_shifted(&[1.0, 0.0], &[1.0, 1.0]).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 1.7071).abs() < 1e-4);
        assert!(matches!(
            cosine_shifted(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm)
        ));
        assert!(cosine_shifted(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rbf_values() {
        assert_eq!(rbf(&[0.4, 1.0], &[0.4, 1.0], 3.0).unwrap(), 1.0);
        let v = rbf(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.36788).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for g in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let v = rbf(&[0.0], &[1.0], g).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-300);
        assert!(rbf(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn topk_self_first_and_saturation() {
        let e = random_embeddings(10, 4, 3);
        let all: Vec<usize> = (0..10).collect();
        for kernel in [Kernel::CosineShifted, Kernel::Rbf { gamma: 1.0 }] {
            let nn = exact_topk_neighbors(&e, &[4], &all, 3, kernel).unwrap();
            assert_eq!(nn[0][0].0, 4);
            let sat = exact_topk_neighbors(&e, &[4], &all, 50, kernel).unwrap();
            assert_eq!(sat[0].len(), 10);
            assert!(sat[0].windows(2).all(|w| w[0].1 >= w[1].1));
        }
        assert!(matches!(
            exact_topk_neighbors(&e, &[0], &[], 3, Kernel::CosineShifted),
            Err(Error::EmptyCandidates)
        ));
    }

    #[test]
    fn topk_matches_full_sort_oracle() {
        let e = random_embeddings(50, 8, 11);
        let all: Vec<usize> = (0..50).collect();
        let kernel = Kernel::CosineShifted;
        let got = exact_topk_neighbors(&e, &all, &all, 5, kernel).unwrap();
        for q in 0..50 {
            let mut full: Vec<(usize, f64)> = (0..50)
                .map(|c| (c, cosine_shifted(&row64(&e, q), &row64(&e, c)).unwrap()))
                .collect();
            full.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            let want: Vec<usize> = full[..5].iter().map(|p| p.0).collect();
            let have: Vec<usize> = got[q].iter().map(|p| p.0).collect();
            assert_eq!(have, want);
        }
    }

    #[test]
    fn sparse_full_cap_equals_dense_kernel() {
        let e = random_embeddings(4, 3, 5);
        let gs = GroundSet::new(1, vec![0; 4], 1).unwrap();
        let spec = KernelSpec {
            kernel: Kernel::CosineShifted,
            per_row_cap: 4,
            class_restricted: false,
        };
        let s = build_sparse(&e, &gs, &spec).unwrap();
        for i in 0..4 {
            assert_eq!(s.get(i, i).unwrap(), 0.0);
            for j in (0..4).filter(|&j| j != i) {
                let want = cosine_shifted(&row64(&e, i), &row64(&e, j)).unwrap();
                assert!((s.get(i, j).unwrap() - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn class_restriction_masks_cross_class_pairs() {
        let e = random_embeddings(6, 3, 9);
        let labels = vec![0, 1, 0, 1, 0, 1];
        let gs = GroundSet::new(2, labels.clone(), 2).unwrap();
        let spec = KernelSpec {
            kernel: Kernel::Rbf { gamma: 0.5 },
            per_row_cap: 10,
            class_restricted: true,
        };
        let s = build_sparse(&e, &gs, &spec).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let dense = rbf(&row64(&e, i), &row64(&e, j), 0.5).unwrap();
                let masked = if i != j && labels[i] == labels[j] {
                    dense
                } else {
                    0.0
                };
                assert!((s.get(i, j).unwrap() - masked).abs() < 1e-6, "({i},{j})");
            }
        }
    }

    #[test]
    fn small_cap_rows_contain_own_neighbors() {
        let e = random_embeddings(40, 5, 21);
        let gs = GroundSet::new(5, vec![0; 40], 1).unwrap();
        let spec = KernelSpec {
            kernel: Kernel::CosineShifted,
            per_row_cap: 3,
            class_restricted: false,
        };
        let s = build_sparse(&e, &gs, &spec).unwrap();
        assert!(s.is_symmetric());
        assert!(s.nnz() <= 2 * 3 * 40);
        for i in 0..40 {
            let others: Vec<usize> = (0..40).filter(|&j| j != i).collect();
            let nn = exact_topk_neighbors(&e, &[i], &others, 3, spec.kernel).unwrap();
            for &(j, _) in &nn[0] {
                assert!(s.get(i, j).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn build_rejects_row_mismatch() {
        let e = random_embeddings(3, 2, 1);
        let gs = GroundSet::new(1, vec![0; 4], 1).unwrap();
        let spec = KernelSpec {
            kernel: Kernel::CosineShifted,
            per_row_cap: 2,
            class_restricted: false,
        };
        assert!(build_sparse(&e, &gs, &spec).is_err());
    }
}
