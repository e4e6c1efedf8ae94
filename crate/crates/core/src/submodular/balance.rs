//! Soft class balance.
//!
//! `Σ_u log(1 + m_u(A)) / C` is concave in each class count, so adding an item
//! of an under-represented class gains more than one of a crowded class. The
//! KL form below is only used to check that maximizing `Σ_u p_u log m_u(A)`
//! picks the same sets as minimizing `KL(p ‖ p̂(A))`.

use super::Objective;
use crate::error::{invalid, Result};
use crate::ground::{membership, GroundSet};

fn log_balance(counts: &[usize]) -> f64 {
    let c = counts.len() as f64;
    counts.iter().map(|&m| (m as f64).ln_1p()).sum::<f64>() / c
}

/// `Σ_u log(1 + m_u(A)) / C`.
pub fn balance_value(items: &[usize], gs: &GroundSet) -> Result<f64> {
    membership(items, gs.total_count())?;
    Ok(log_balance(&gs.class_counts(items)))
}

fn check_distribution(p: &[f64], gs: &GroundSet) -> Result<()> {
    if p.len() != gs.class_count() {
        return Err(invalid(format!(
            "distribution has {} entries for {} classes",
            p.len(),
            gs.class_count()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("distribution must be nonnegative and sum to 1"));
    }
    Ok(())
}

/// `KL(p ‖ p̂(A))` with `p̂_u(A) = m_u(A) / |A|`; `+∞` when a class with
/// `p_u > 0` is absent from `A`.
pub fn balance_kl_oracle(items: &[usize], gs: &GroundSet, p: &[f64]) -> Result<f64> {
    if items.is_empty() {
        return Err(invalid(
            "KL to the empirical class distribution needs |A| >= 1",
        ));
    }
    check_distribution(p, gs)?;
    membership(items, gs.total_count())?;
    let counts = gs.class_counts(items);
    let size = items.len() as f64;
    let mut kl = 0.0;
    for (&pu, &mu) in p.iter().zip(&counts) {
        if pu == 0.0 {
            continue;
        }
        if mu == 0 {
            return Ok(f64::INFINITY);
        }
        kl += pu * (pu / (mu as f64 / size)).ln();
    }
    Ok(kl)
}

/// `Σ_u p_u log m_u(A)`, skipping classes with `p_u = 0`; `-∞` when a
/// supported class is absent.
pub fn log_count_score(items: &[usize], gs: &GroundSet, p: &[f64]) -> Result<f64> {
    check_distribution(p, gs)?;
    membership(items, gs.total_count())?;
    let counts = gs.class_counts(items);
    let mut s = 0.0;
    for (&pu, &mu) in p.iter().zip(&counts) {
        if pu == 0.0 {
            continue;
        }
        if mu == 0 {
            return Ok(f64::NEG_INFINITY);
        }
        s += pu * (mu as f64).ln();
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct Balance<'a> {
    gs: &'a GroundSet,
}

impl<'a> Balance<'a> {
    pub fn new(gs: &'a GroundSet) -> Self {
        Self { gs }
    }
}

impl Objective for Balance<'_> {
    /// Per-class counts.
    type State = Vec<usize>;

    fn name(&self) -> &str {
        "balance"
    }

    fn size(&self) -> usize {
        self.gs.total_count()
    }

    fn empty_state(&self) -> Vec<usize> {
        vec![0; self.gs.class_count()]
    }

    fn gain(&self, counts: &Vec<usize>, item: usize) -> f64 {
        let m = counts[self.gs.label(item)] as f64;
        // log(2 + m) - log(1 + m), in a form that is monotone in m.
        (1.0 / (1.0 + m)).ln_1p() / self.gs.class_count() as f64
    }

    fn commit(&self, counts: &mut Vec<usize>, item: usize) {
        counts[self.gs.label(item)] += 1;
    }

    fn value(&self, items: &[usize]) -> f64 {
        log_balance(&self.gs.class_counts(items))
    }
}
