//! Cardinality-constrained maximization.
//!
//! [`greedy_naive`] re-scores every remaining candidate at every step.
//! [`greedy_lazy`] keeps stale gains in a max-heap and only re-scores the top
//! entry until it is fresh; for submodular objectives stale gains are upper
//! bounds, so both produce the same sequence. Ties always go to the lowest
//! item index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ground::{membership, GroundSet};
use crate::selection::SelectionResult;
use crate::submodular::Objective;

/// Gains below this are reported and compared as exactly zero.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Largest number of subsets [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetConstraint {
    k: usize,
    candidates: Vec<usize>,
}

impl BudgetConstraint {
    pub fn new(k: usize, mut candidates: Vec<usize>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if k == 0 {
            return Err(invalid("budget k must be at least 1"));
        }
        candidates.sort_unstable();
        if candidates.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("candidate set contains duplicates"));
        }
        if k > candidates.len() {
            return Err(invalid(format!(
                "budget {k} exceeds the {} available candidates",
                candidates.len()
            )));
        }
        Ok(Self { k, candidates })
    }

    /// Budget over the whole auxiliary pool.
    pub fn aux(gs: &GroundSet, k: usize) -> Result<Self> {
        Self::new(k, gs.aux_range().collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Candidates in ascending order.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    fn check_against<O: Objective>(&self, obj: &O) -> Result<()> {
        membership(&self.candidates, obj.size()).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Naive,
    Lazy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRun {
    pub selection: SelectionResult,
    /// Number of marginal-gain evaluations performed.
    pub evaluations: u64,
}

#[inline]
fn floor_gain(g: f64) -> f64 {
    if g < GAIN_FLOOR {
        0.0
    } else {
        g
    }
}

pub fn maximize<O: Objective>(
    obj: &O,
    constraint: &BudgetConstraint,
    engine: Engine,
) -> Result<GreedyRun> {
    match engine {
        Engine::Naive => greedy_naive(obj, constraint),
        Engine::Lazy => greedy_lazy(obj, constraint),
    }
}

pub fn greedy_naive<O: Objective>(obj: &O, constraint: &BudgetConstraint) -> Result<GreedyRun> {
    constraint.check_against(obj)?;
    let mut state = obj.empty_state();
    let mut remaining = constraint.candidates.clone();
    let mut out = SelectionResult::new(obj.name(), constraint.k);
    let mut evaluations = 0u64;

    for _ in 0..constraint.k {
        let gains: Vec<f64> = remaining
            .par_iter()
            .map(|&v| floor_gain(obj.gain(&state, v)))
            .collect();
        evaluations += gains.len() as u64;
        // `remaining` is ascending, so the first maximum is the lowest index.
        let (pos, best) = gains
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (p, &g)| if g > acc.1 { (p, g) } else { acc },
            );
        let item = remaining.remove(pos);
        obj.commit(&mut state, item);
        out.selected.push(item);
        out.gains.push(best);
    }
    Ok(GreedyRun {
        selection: out,
        evaluations,
    })
}

#[derive(Debug)]
struct Stale {
    gain: f64,
    item: usize,
    step: usize,
}

impl PartialEq for Stale {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Stale {}

impl PartialOrd for Stale {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Stale {
    // Max-heap on gain; among equal gains the lower item index ranks higher.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.item.cmp(&self.item))
    }
}

pub fn greedy_lazy<O: Objective>(obj: &O, constraint: &BudgetConstraint) -> Result<GreedyRun> {
    constraint.check_against(obj)?;
    let mut state = obj.empty_state();
    let static_gains = obj.static_gains();
    let mut out = SelectionResult::new(obj.name(), constraint.k);

    let initial: Vec<Stale> = constraint
        .candidates
        .par_iter()
        .map(|&item| Stale {
            gain: floor_gain(obj.gain(&state, item)),
            item,
            step: 0,
        })
        .collect();
    let mut evaluations = initial.len() as u64;
    let mut heap = BinaryHeap::from(initial);

    for step in 0..constraint.k {
        loop {
            let top = heap.pop().expect("budget never exceeds candidate count");
            if top.step == step || static_gains {
                obj.commit(&mut state, top.item);
                out.selected.push(top.item);
                out.gains.push(top.gain);
                break;
            }
            evaluations += 1;
            heap.push(Stale {
                gain: floor_gain(obj.gain(&state, top.item)),
                item: top.item,
                step,
            });
        }
    }
    Ok(GreedyRun {
        selection: out,
        evaluations,
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Exact optimum by enumerating every `k`-subset of the candidates.
///
/// Among equal values the lexicographically smallest index set wins. The
/// result lists the optimal set in ascending order, with gains measured along
/// that order.
pub fn brute_force<O: Objective>(
    obj: &O,
    constraint: &BudgetConstraint,
) -> Result<SelectionResult> {
    constraint.check_against(obj)?;
    let cands = &constraint.candidates;
    let (n, k) = (cands.len(), constraint.k);
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let mut idx: Vec<usize> = (0..k).collect();
    let mut set: Vec<usize> = idx.iter().map(|&i| cands[i]).collect();
    let mut best = (f64::NEG_INFINITY, set.clone());
    loop {
        set.iter_mut().zip(&idx).for_each(|(s, &i)| *s = cands[i]);
        let v = obj.value(&set);
        if v > best.0 {
            best = (v, set.clone());
        }
        // Advance to the next combination in lexicographic order.
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            break;
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }

    let mut out = SelectionResult::new(obj.name(), k);
    let mut prev = 0.0;
    for &item in &best.1 {
        out.selected.push(item);
        let v = obj.value(&out.selected);
        out.gains.push(v - prev);
        prev = v;
    }
    Ok(out)
}

/// True when each gain is at most the previous one plus `tol`.
pub fn gains_non_increasing(gains: &[f64], tol: f64) -> bool {
    gains.windows(2).all(|w| w[1] <= w[0] + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseSimilarity;
    use crate::submodular::{Flmi, Modular};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flmi_instance(n: usize, m: usize, seed: u64) -> (SparseSimilarity, GroundSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.5) {
                    let v = rng.random_range(0.0..1.0);
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
        }
        (
            SparseSimilarity::from_dense(n, &d).unwrap(),
            GroundSet::new(m, vec![0; n], 1).unwrap(),
        )
    }

    #[test]
    fn modular_greedy_is_top_k() {
        let scores = vec![0.0, 5.0, 1.0, 5.0, 3.0, 0.5];
        let obj = Modular::new("scores", scores);
        let c = BudgetConstraint::new(3, (0..6).collect()).unwrap();
        for run in [
            greedy_naive(&obj, &c).unwrap(),
            greedy_lazy(&obj, &c).unwrap(),
        ] {
            assert_eq!(run.selection.selected, vec![1, 3, 4]);
            assert_eq!(run.selection.gains, vec![5.0, 5.0, 3.0]);
        }
        assert_eq!(brute_force(&obj, &c).unwrap().selected, vec![1, 3, 4]);
    }

    #[test]
    fn lazy_modular_evaluates_each_candidate_once() {
        let obj = Modular::new("scores", (0..50).map(|i| (i * 7 % 13) as f64).collect());
        let c = BudgetConstraint::new(10, (0..50).collect()).unwrap();
        assert_eq!(greedy_lazy(&obj, &c).unwrap().evaluations, 50);
    }

    #[test]
    fn full_budget_gains_telescope() {
        let (s, gs) = flmi_instance(9, 3, 1);
        let obj = Flmi::new(&s, &gs);
        let c = BudgetConstraint::aux(&gs, 6).unwrap();
        let run = greedy_naive(&obj, &c).unwrap();
        let total: f64 = run.selection.gains.iter().sum();
        let all: Vec<usize> = gs.aux_range().collect();
        assert!((total - obj.value(&all)).abs() < 1e-9);
    }

    #[test]
    fn greedy_meets_approximation_bound() {
        let (s, gs) = flmi_instance(12, 3, 2);
        let obj = Flmi::new(&s, &gs);
        let c = BudgetConstraint::aux(&gs, 4).unwrap();
        let g = greedy_naive(&obj, &c).unwrap();
        let opt = brute_force(&obj, &c).unwrap();
        let (gv, ov) = (obj.value(&g.selection.selected), obj.value(&opt.selected));
        assert!(gv >= (1.0 - (-1f64).exp()) * ov - 1e-12);
        assert!(gv <= ov + 1e-12);
    }

    #[test]
    fn lazy_matches_naive_with_fewer_evaluations() {
        let (s, gs) = flmi_instance(40, 5, 3);
        let obj = Flmi::new(&s, &gs);
        let c = BudgetConstraint::aux(&gs, 12).unwrap();
        let (n, l) = (
            greedy_naive(&obj, &c).unwrap(),
            greedy_lazy(&obj, &c).unwrap(),
        );
        assert_eq!(n.selection, l.selection);
        assert!(l.evaluations < n.evaluations);
        assert!(gains_non_increasing(&n.selection.gains, 1e-12));
    }

    #[test]
    fn brute_force_k1_and_guard() {
        let obj = Modular::new("s", vec![0.2, 0.9, 0.9, 0.1]);
        let c = BudgetConstraint::new(1, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(brute_force(&obj, &c).unwrap().selected, vec![1]);
        let big = Modular::new("s", vec![1.0; 100]);
        let c = BudgetConstraint::new(10, (0..100).collect()).unwrap();
        assert!(matches!(
            brute_force(&big, &c),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn constraint_validation() {
        assert!(matches!(
            BudgetConstraint::new(1, vec![]),
            Err(Error::EmptyCandidates)
        ));
        assert!(BudgetConstraint::new(0, vec![1]).is_err());
        assert!(BudgetConstraint::new(3, vec![1, 2]).is_err());
        assert!(BudgetConstraint::new(1, vec![1, 1]).is_err());
        let obj = Modular::new("s", vec![1.0; 3]);
        let c = BudgetConstraint::new(1, vec![5]).unwrap();
        assert!(greedy_naive(&obj, &c).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 4), 495);
        assert_eq!(binomial(100, 10), 17_310_309_456_440);
        assert_eq!(binomial(5, 5), 1);
    }
}
