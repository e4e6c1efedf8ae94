//! Facility location and its combinatorial mutual information (FLMI).
//!
//! Both objectives keep, per client `i`, the best similarity achieved by the
//! current selection. A candidate's gain only touches the clients stored in
//! its column, so a gain costs `O(column nnz)`.

use std::borrow::Cow;

use super::Objective;
use crate::error::Result;
use crate::ground::{membership, GroundSet};
use crate::sparse::SparseSimilarity;

fn columns(sim: &SparseSimilarity) -> Cow<'_, SparseSimilarity> {
    if sim.is_symmetric() {
        Cow::Borrowed(sim)
    } else {
        Cow::Owned(sim.transpose())
    }
}

fn best_in(sim: &SparseSimilarity, i: usize, mask: &[bool]) -> f64 {
    let (cols, vals) = sim.row(i);
    cols.iter()
        .zip(vals)
        .filter(|(&j, _)| mask[j as usize])
        .map(|(_, &w)| w as f64)
        .fold(0.0, f64::max)
}

/// `f(A) = Σ_{i∈clients} max_{j∈A} w_ij`, with the max over `∅` taken as 0.
pub fn facility_location_value(
    items: &[usize],
    sim: &SparseSimilarity,
    clients: &[usize],
) -> Result<f64> {
    let am = membership(items, sim.size())?;
    membership(clients, sim.size())?;
    Ok(clients.iter().map(|&i| best_in(sim, i, &am)).sum())
}

/// Best similarity of every item to the target pool, `t_i = max_{j∈V^tar} w_ij`.
pub fn target_maxima(sim: &SparseSimilarity, gs: &GroundSet) -> Vec<f64> {
    let m = gs.target_count() as u32;
    (0..sim.size())
        .map(|i| {
            let (cols, vals) = sim.row(i);
            cols.iter()
                .zip(vals)
                .take_while(|(&j, _)| j < m)
                .map(|(_, &w)| w as f64)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `I_FL(A) = Σ_{i∈V} min(max_{j∈A} w_ij, max_{j∈V^tar} w_ij)` for `A ⊆ V^aux`.
pub fn flmi_value(items: &[usize], sim: &SparseSimilarity, gs: &GroundSet) -> Result<f64> {
    gs.check_aux_subset(items)?;
    let am = membership(items, sim.size())?;
    let t = target_maxima(sim, gs);
    Ok((0..sim.size())
        .map(|i| best_in(sim, i, &am).min(t[i]))
        .sum())
}

#[derive(Debug, Clone)]
pub struct FacilityLocation<'a> {
    sim: &'a SparseSimilarity,
    cols: Cow<'a, SparseSimilarity>,
    clients: Vec<bool>,
    client_list: Vec<usize>,
}

impl<'a> FacilityLocation<'a> {
    pub fn new(sim: &'a SparseSimilarity, clients: &[usize]) -> Result<Self> {
        Ok(Self {
            sim,
            cols: columns(sim),
            clients: membership(clients, sim.size())?,
            client_list: clients.to_vec(),
        })
    }

    /// Every item is a client.
    pub fn over_all(sim: &'a SparseSimilarity) -> Self {
        let all: Vec<usize> = (0..sim.size()).collect();
        Self::new(sim, &all).expect("full range is a valid client set")
    }
}

impl Objective for FacilityLocation<'_> {
    /// Best similarity per client so far.
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "facility_location"
    }

    fn size(&self) -> usize {
        self.sim.size()
    }

    fn empty_state(&self) -> Vec<f64> {
        vec![0.0; self.sim.size()]
    }

    fn gain(&self, best: &Vec<f64>, item: usize) -> f64 {
        let (rows, vals) = self.cols.row(item);
        let mut g = 0.0;
        for (&i, &w) in rows.iter().zip(vals) {
            let i = i as usize;
            if self.clients[i] {
                g += (w as f64 - best[i]).max(0.0);
            }
        }
        g
    }

    fn commit(&self, best: &mut Vec<f64>, item: usize) {
        let (rows, vals) = self.cols.row(item);
        for (&i, &w) in rows.iter().zip(vals) {
            let b = &mut best[i as usize];
            *b = b.max(w as f64);
        }
    }

    fn value(&self, items: &[usize]) -> f64 {
        let mut am = vec![false; self.sim.size()];
        items.iter().for_each(|&i| am[i] = true);
        self.client_list
            .iter()
            .map(|&i| best_in(self.sim, i, &am))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct Flmi<'a> {
    sim: &'a SparseSimilarity,
    cols: Cow<'a, SparseSimilarity>,
    target_max: Vec<f64>,
}

impl<'a> Flmi<'a> {
    pub fn new(sim: &'a SparseSimilarity, gs: &GroundSet) -> Self {
        Self {
            sim,
            cols: columns(sim),
            target_max: target_maxima(sim, gs),
        }
    }

    pub fn target_maxima(&self) -> &[f64] {
        &self.target_max
    }
}

impl Objective for Flmi<'_> {
    /// Per-client `min(best selected similarity, t_i)`.
    type State = Vec<f64>;

    fn name(&self) -> &str {
        "flmi"
    }

    fn size(&self) -> usize {
        self.sim.size()
    }

    fn empty_state(&self) -> Vec<f64> {
        vec![0.0; self.sim.size()]
    }

    fn gain(&self, covered: &Vec<f64>, item: usize) -> f64 {
        let (rows, vals) = self.cols.row(item);
        let mut g = 0.0;
        for (&i, &w) in rows.iter().zip(vals) {
            let i = i as usize;
            g += ((w as f64).min(self.target_max[i]) - covered[i]).max(0.0);
        }
        g
    }

    fn commit(&self, covered: &mut Vec<f64>, item: usize) {
        let (rows, vals) = self.cols.row(item);
        for (&i, &w) in rows.iter().zip(vals) {
            let i = i as usize;
            covered[i] = covered[i].max((w as f64).min(self.target_max[i]));
        }
    }

    fn value(&self, items: &[usize]) -> f64 {
        let mut am = vec![false; self.sim.size()];
        items.iter().for_each(|&i| am[i] = true);
        (0..self.sim.size())
            .map(|i| best_in(self.sim, i, &am).min(self.target_max[i]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dense(n: usize, density: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * n)
            .map(|_| {
                if rng.random_bool(density) {
                    rng.random_range(0.0..2.0)
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn fl_oracle(d: &[f64], n: usize, a: &[usize], clients: &[usize]) -> f64 {
        clients
            .iter()
            .map(|&i| a.iter().map(|&j| d[i * n + j]).fold(0.0, f64::max))
            .sum()
    }

    fn flmi_oracle(d: &[f64], n: usize, m: usize, a: &[usize]) -> f64 {
        (0..n)
            .map(|i| {
                let sel = a.iter().map(|&j| d[i * n + j]).fold(0.0, f64::max);
                let tar = (0..m).map(|j| d[i * n + j]).fold(0.0, f64::max);
                sel.min(tar)
            })
            .sum()
    }

    #[test]
    fn single_facility_is_column_sum() {
        let s = SparseSimilarity::from_dense(10, &random_dense(10, 0.6, 1)).unwrap();
        let d = s.to_dense();
        let all: Vec<usize> = (0..10).collect();
        let col3: f64 = (0..10).map(|i| d[i * 10 + 3]).sum();
        assert!((facility_location_value(&[3], &s, &all).unwrap() - col3).abs() < 1e-12);
        assert_eq!(facility_location_value(&[], &s, &all).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_column_gains_nothing() {
        // Column 4 duplicates column 1 for every client.
        let mut d = random_dense(6, 1.0, 2);
        for i in 0..6 {
            d[i * 6 + 4] = d[i * 6 + 1];
        }
        let s = SparseSimilarity::from_dense(6, &d).unwrap();
        let fl = FacilityLocation::over_all(&s);
        let st = fl.state_for(&[1]);
        assert_eq!(fl.gain(&st, 4), 0.0);
    }

    #[test]
    fn fl_matches_oracle() {
        let s = SparseSimilarity::from_dense(10, &random_dense(10, 0.5, 3)).unwrap();
        let d = s.to_dense();
        let clients = [0, 2, 3, 7, 9];
        for a in [vec![1], vec![1, 5, 8], vec![0, 2, 4, 6]] {
            let want = fl_oracle(&d, 10, &a, &clients);
            assert!((facility_location_value(&a, &s, &clients).unwrap() - want).abs() < 1e-12);
            let obj = FacilityLocation::new(&s, &clients).unwrap();
            assert!((obj.value(&a) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn flmi_matches_oracle_and_gains() {
        let s = SparseSimilarity::from_dense(9, &random_dense(9, 0.5, 4)).unwrap();
        let d = s.to_dense();
        let gs = GroundSet::new(3, vec![0; 9], 1).unwrap();
        let obj = Flmi::new(&s, &gs);
        let a = [4, 7, 3];
        assert!((flmi_value(&a, &s, &gs).unwrap() - flmi_oracle(&d, 9, 3, &a)).abs() < 1e-12);
        let st = obj.state_for(&a[..2]);
        let diff = obj.value(&a) - obj.value(&a[..2]);
        assert!((obj.gain(&st, 3) - diff).abs() < 1e-12);
        assert_eq!(flmi_value(&[], &s, &gs).unwrap(), 0.0);
        assert!(flmi_value(&[0, 4], &s, &gs).is_err());
    }

    #[test]
    fn irrelevant_client_contributes_nothing() {
        // Item 3 has no similarity to targets {0, 1}; whatever is selected,
        // its own row never adds to the objective.
        let d = vec![
            0.0, 1.0, 0.5, 0.0, //
            1.0, 0.0, 0.2, 0.0, //
            0.5, 0.2, 0.0, 0.9, //
            0.0, 0.0, 0.9, 0.0,
        ];
        let s = SparseSimilarity::from_dense(4, &d).unwrap();
        let d = s.to_dense();
        let gs = GroundSet::new(2, vec![0; 4], 1).unwrap();
        assert_eq!(target_maxima(&s, &gs)[3], 0.0);
        for a in [vec![2], vec![3], vec![2, 3]] {
            let full = flmi_value(&a, &s, &gs).unwrap();
            let without: f64 = (0..3)
                .map(|i| {
                    let sel = a.iter().map(|&j| d[i * 4 + j]).fold(0.0, f64::max);
                    sel.min(d[i * 4].max(d[i * 4 + 1]))
                })
                .sum();
            assert!((full - without).abs() < 1e-12);
        }
    }
}
