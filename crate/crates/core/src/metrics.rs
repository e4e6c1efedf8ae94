//! Diversity and balance diagnostics for a selection.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{invalid, Error, Result};
use crate::ground::{membership, GroundSet};
use crate::selection::{serialize_sig9, serialize_sig9_vec, SelectionResult};
use crate::sparse::SparseSimilarity;
use crate::submodular::{balance_kl_oracle, facility_location_value};

/// Eigenvalues below this are treated as exactly zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Kernels with unit self-similarity, as the Vendi score requires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VendiKernel {
    /// `max(cos(a, b), 0)`.
    #[default]
    Cosine,
    /// `exp(-gamma * |a - b|^2)`.
    Rbf { gamma: f64 },
}

impl VendiKernel {
    fn matrix(&self, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = rows.len();
        match *self {
            VendiKernel::Cosine => {
                let mut unit = Vec::with_capacity(n);
                for r in rows {
                    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm == 0.0 {
                        return Err(Error::ZeroNorm);
                    }
                    unit.push(r.iter().map(|v| v / norm).collect::<Vec<_>>());
                }
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        1.0
                    } else {
                        let dot: f64 = unit[i].iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
                        dot.clamp(0.0, 1.0)
                    }
                }))
            }
            VendiKernel::Rbf { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(invalid(format!("rbf gamma must be positive, got {gamma}")));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| {
                    let d2: f64 = rows[i]
                        .iter()
                        .zip(&rows[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (-gamma * d2).exp()
                }))
            }
        }
    }
}

/// `exp(-Σ λ log λ)` over the eigenvalues of `K / n`, for a symmetric kernel
/// matrix with unit diagonal.
pub fn vendi_from_kernel(kernel: &DMatrix<f64>) -> Result<f64> {
    let n = kernel.nrows();
    if n == 0 || !kernel.is_square() {
        return Err(invalid("Vendi score needs a nonempty square kernel"));
    }
    let eig = SymmetricEigen::new(kernel / n as f64).eigenvalues;
    if eig.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numerical(
            "non-finite eigenvalue in Vendi kernel".into(),
        ));
    }
    let entropy: f64 = eig
        .iter()
        .filter(|&&l| l >= EIGEN_FLOOR)
        .map(|&l| -l * l.ln())
        .sum();
    Ok(entropy.exp())
}

pub fn vendi_score(
    items: &[usize],
    embeddings: &EmbeddingMatrix,
    kernel: VendiKernel,
) -> Result<f64> {
    if items.is_empty() {
        return Err(invalid("Vendi score needs at least one item"));
    }
    membership(items, embeddings.rows())?;
    let rows: Vec<Vec<f64>> = items
        .iter()
        .map(|&i| embeddings.row(i).iter().map(|&v| v as f64).collect())
        .collect();
    vendi_from_kernel(&kernel.matrix(&rows)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub class_counts: Vec<usize>,
    #[serde(serialize_with = "serialize_sig9_vec")]
    pub class_distribution: Vec<f64>,
    /// `KL(uniform ‖ empirical)`; infinite (serialized as null) when a class
    /// is missing.
    #[serde(serialize_with = "serialize_sig9", deserialize_with = "deserialize_kl")]
    pub kl_to_uniform: f64,
}

fn deserialize_kl<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

pub fn class_balance_report(selection: &SelectionResult, gs: &GroundSet) -> Result<ClassBalance> {
    if selection.is_empty() {
        return Err(invalid("class balance needs a nonempty selection"));
    }
    let c = gs.class_count();
    let uniform = vec![1.0 / c as f64; c];
    let kl = balance_kl_oracle(&selection.selected, gs, &uniform)?;
    let counts = gs.class_counts(&selection.selected);
    let total = selection.len() as f64;
    Ok(ClassBalance {
        class_distribution: counts.iter().map(|&k| k as f64 / total).collect(),
        class_counts: counts,
        kl_to_uniform: kl,
    })
}

/// `Σ_{i∈V^tar} max_{j∈A} w_ij`.
pub fn coverage_score(
    selection: &SelectionResult,
    sim: &SparseSimilarity,
    gs: &GroundSet,
) -> Result<f64> {
    if selection.is_empty() {
        return Err(invalid("coverage needs a nonempty selection"));
    }
    if sim.size() != gs.total_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.total_count(),
            got: sim.size(),
        });
    }
    let targets: Vec<usize> = gs.target_range().collect();
    facility_location_value(&selection.selected, sim, &targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub objective: String,
    pub selected_count: usize,
    #[serde(serialize_with = "serialize_sig9")]
    pub vendi: f64,
    pub vendi_kernel: VendiKernel,
    #[serde(flatten)]
    pub balance: ClassBalance,
    #[serde(serialize_with = "serialize_sig9")]
    pub coverage: f64,
}

pub fn metric_report(
    selection: &SelectionResult,
    embeddings: &EmbeddingMatrix,
    sim: &SparseSimilarity,
    gs: &GroundSet,
    kernel: VendiKernel,
) -> Result<MetricReport> {
    selection.validate(gs)?;
    Ok(MetricReport {
        objective: selection.objective.clone(),
        selected_count: selection.len(),
        vendi: vendi_score(&selection.selected, embeddings, kernel)?,
        vendi_kernel: kernel,
        balance: class_balance_report(selection, gs)?,
        coverage: coverage_score(selection, sim, gs)?,
    })
}
