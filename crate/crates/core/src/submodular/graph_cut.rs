//! Graph cut and its mutual information.
//!
//! For symmetric `W` and disjoint `A`, `B`, the cut-based mutual information
//! `f(A) + f(B) - f(A ∪ B)` collapses to `2 Σ_{i∈A} Σ_{j∈B} w_ij`, a modular
//! function of `A` once `B` is fixed. With `B` the target set this is exactly
//! nearest-neighbor (Sim-Score) retrieval up to the factor of two.

use super::Objective;
use crate::error::{Error, Result};
use crate::ground::{membership, GroundSet};
use crate::sparse::SparseSimilarity;

/// `Σ_{i∈A} Σ_{j∉A} w_ij`.
pub fn graph_cut_value(items: &[usize], sim: &SparseSimilarity) -> Result<f64> {
    let inside = membership(items, sim.size())?;
    Ok(cut_with_mask(items, &inside, sim))
}

fn cut_with_mask(items: &[usize], inside: &[bool], sim: &SparseSimilarity) -> f64 {
    let mut total = 0.0;
    for &i in items {
        let (cols, vals) = sim.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            if !inside[j as usize] {
                total += w as f64;
            }
        }
    }
    total
}

fn cross_sum(a: &[usize], b_mask: &[bool], sim: &SparseSimilarity) -> f64 {
    let mut total = 0.0;
    for &i in a {
        let (cols, vals) = sim.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            if b_mask[j as usize] {
                total += w as f64;
            }
        }
    }
    total
}

fn disjoint_masks(a: &[usize], b: &[usize], size: usize) -> Result<(Vec<bool>, Vec<bool>)> {
    let am = membership(a, size)?;
    let bm = membership(b, size)?;
    if let Some(&i) = a.iter().find(|&&i| bm[i]) {
        return Err(Error::Overlap(i));
    }
    Ok((am, bm))
}

/// `2 Σ_{i∈A} Σ_{j∈B} w_ij` for disjoint `A`, `B`.
pub fn gcmi(a: &[usize], b: &[usize], sim: &SparseSimilarity) -> Result<f64> {
    let (_, bm) = disjoint_masks(a, b, sim.size())?;
    Ok(2.0 * cross_sum(a, &bm, sim))
}

/// The same quantity through the definition `f(A) + f(B) - f(A ∪ B)`.
pub fn gcmi_via_cut(a: &[usize], b: &[usize], sim: &SparseSimilarity) -> Result<f64> {
    let (am, bm) = disjoint_masks(a, b, sim.size())?;
    let union: Vec<usize> = a.iter().chain(b).copied().collect();
    let um: Vec<bool> = am.iter().zip(&bm).map(|(x, y)| *x || *y).collect();
    Ok(cut_with_mask(a, &am, sim) + cut_with_mask(b, &bm, sim) - cut_with_mask(&union, &um, sim))
}

/// Nearest-neighbor retrieval score `g(A) = Σ_{j∈A} Σ_{i∈V^tar} w_ij`.
pub fn nearest_neighbor_value(
    items: &[usize],
    sim: &SparseSimilarity,
    gs: &GroundSet,
) -> Result<f64> {
    let am = membership(items, sim.size())?;
    let mut total = 0.0;
    for i in gs.target_range() {
        let (cols, vals) = sim.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            if am[j as usize] {
                total += w as f64;
            }
        }
    }
    Ok(total)
}

/// GCMI against a fixed query set, as an objective in `A`.
#[derive(Debug, Clone)]
pub struct Gcmi<'a> {
    sim: &'a SparseSimilarity,
    query: Vec<bool>,
    scores: Vec<f64>,
}

impl<'a> Gcmi<'a> {
    pub fn new(sim: &'a SparseSimilarity, query: &[usize]) -> Result<Self> {
        let query = membership(query, sim.size())?;
        let scores = (0..sim.size())
            .map(|v| 2.0 * cross_sum(&[v], &query, sim))
            .collect();
        Ok(Self { sim, query, scores })
    }

    /// Query set is the target pool.
    pub fn against_targets(sim: &'a SparseSimilarity, gs: &GroundSet) -> Result<Self> {
        let targets: Vec<usize> = gs.target_range().collect();
        Self::new(sim, &targets)
    }

    /// Per-item gain `2 Σ_{j∈B} w_vj`.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Objective for Gcmi<'_> {
    type State = ();

    fn name(&self) -> &str {
        "gcmi"
    }

    fn size(&self) -> usize {
        self.sim.size()
    }

    fn empty_state(&self) {}

    fn gain(&self, _: &(), item: usize) -> f64 {
        self.scores[item]
    }

    fn commit(&self, _: &mut (), _: usize) {}

    fn value(&self, items: &[usize]) -> f64 {
        2.0 * cross_sum(items, &self.query, self.sim)
    }

    fn static_gains(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> (Vec<f64>, SparseSimilarity) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.random_range(0.0..1.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        let s = SparseSimilarity::from_dense(n, &d).unwrap();
        (s.to_dense(), s)
    }

    fn cut_oracle(d: &[f64], n: usize, a: &[usize]) -> f64 {
        let mut t = 0.0;
        for &i in a {
            for j in 0..n {
                if !a.contains(&j) {
                    t += d[i * n + j];
                }
            }
        }
        t
    }

    #[test]
    fn cut_edge_cases() {
        let (_, s) = random_symmetric(5, 1);
        assert_eq!(graph_cut_value(&[], &s).unwrap(), 0.0);
        assert!(graph_cut_value(&[0, 1, 2, 3, 4], &s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn cut_matches_double_sum() {
        let (d, s) = random_symmetric(5, 2);
        let got = graph_cut_value(&[0, 2], &s).unwrap();
        assert!((got - cut_oracle(&d, 5, &[0, 2])).abs() < 1e-12);
    }

    #[test]
    fn gcmi_identity_on_random_instance() {
        let (d, s) = random_symmetric(8, 3);
        let (a, b) = (vec![1, 4, 6], vec![0, 3]);
        let lhs =
            cut_oracle(&d, 8, &a) + cut_oracle(&d, 8, &b) - cut_oracle(&d, 8, &[1, 4, 6, 0, 3]);
        let rhs = gcmi(&a, &b, &s).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
        assert!((gcmi_via_cut(&a, &b, &s).unwrap() - rhs).abs() < 1e-9);
        assert_eq!(gcmi(&[], &b, &s).unwrap(), 0.0);
        assert_eq!(gcmi(&a, &[], &s).unwrap(), 0.0);
    }

    #[test]
    fn gcmi_rejects_overlap() {
        let (_, s) = random_symmetric(4, 4);
        assert!(matches!(gcmi(&[0, 1], &[1, 2], &s), Err(Error::Overlap(1))));
    }

    #[test]
    fn gcmi_against_targets_is_twice_nn_score() {
        let (_, s) = random_symmetric(7, 5);
        let gs = GroundSet::new(3, vec![0; 7], 1).unwrap();
        for a in [vec![3], vec![4, 6], vec![3, 5, 6]] {
            let g = nearest_neighbor_value(&a, &s, &gs).unwrap();
            let mi = gcmi(&a, &[0, 1, 2], &s).unwrap();
            assert!((mi - 2.0 * g).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_gains_are_constant() {
        let (_, s) = random_symmetric(6, 6);
        let obj = Gcmi::new(&s, &[0, 1]).unwrap();
        let v0 = obj.value(&[2, 3]);
        assert!((obj.value(&[2, 3, 5]) - v0 - obj.gain(&(), 5)).abs() < 1e-12);
        assert_eq!(obj.value(&[]), 0.0);
    }
}
