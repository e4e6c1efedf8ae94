//! The composite retrieval objective:
//! `μ q(A) + (1 - μ) (I_FL(A) + λ Σ_u log(1 + m_u(A)) / C)`.

use serde::{Deserialize, Serialize};

use super::{Balance, Flmi, Objective};
use crate::error::{invalid, Error, Result};
use crate::ground::GroundSet;
use crate::sparse::SparseSimilarity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CobraParams {
    /// Class-balance weight.
    pub lambda: f64,
    /// Quality weight.
    pub mu: f64,
    /// Per-item quality, indexed by item over the whole ground set.
    pub quality: Option<Vec<f64>>,
}

impl Default for CobraParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            mu: 0.0,
            quality: None,
        }
    }
}

impl CobraParams {
    pub fn validate(&self, gs: &GroundSet) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return Err(invalid(format!("mu must lie in [0, 1], got {}", self.mu)));
        }
        match &self.quality {
            None if self.mu > 0.0 => return Err(Error::MissingQuality),
            Some(q) if q.len() != gs.total_count() => {
                return Err(Error::DimensionMismatch {
                    expected: gs.total_count(),
                    got: q.len(),
                })
            }
            Some(q) if q.iter().any(|v| !v.is_finite()) => {
                return Err(invalid("quality values must be finite"))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Sim-Score used as a quality vector: `q(i) = Σ_{j∈V^tar} w_ij` for every item.
pub fn sim_score_quality(sim: &SparseSimilarity, gs: &GroundSet) -> Vec<f64> {
    let m = gs.target_count() as u32;
    (0..sim.size())
        .map(|i| {
            let (cols, vals) = sim.row(i);
            cols.iter()
                .zip(vals)
                .take_while(|(&j, _)| j < m)
                .map(|(_, &w)| w as f64)
                .sum()
        })
        .collect()
}

pub fn cobra_value(
    items: &[usize],
    sim: &SparseSimilarity,
    gs: &GroundSet,
    params: &CobraParams,
) -> Result<f64> {
    params.validate(gs)?;
    gs.check_aux_subset(items)?;
    crate::ground::membership(items, gs.total_count())?;
    Ok(Cobra::new(sim, gs, params.clone())?.value(items))
}

#[derive(Debug, Clone)]
pub struct Cobra<'a> {
    flmi: Flmi<'a>,
    balance: Balance<'a>,
    params: CobraParams,
}

impl<'a> Cobra<'a> {
    pub fn new(sim: &'a SparseSimilarity, gs: &'a GroundSet, params: CobraParams) -> Result<Self> {
        params.validate(gs)?;
        if sim.size() != gs.total_count() {
            return Err(Error::DimensionMismatch {
                expected: gs.total_count(),
                got: sim.size(),
            });
        }
        Ok(Self {
            flmi: Flmi::new(sim, gs),
            balance: Balance::new(gs),
            params,
        })
    }

    pub fn params(&self) -> &CobraParams {
        &self.params
    }

    fn quality(&self, item: usize) -> f64 {
        self.params.quality.as_ref().map_or(0.0, |q| q[item])
    }
}

impl Objective for Cobra<'_> {
    type State = (Vec<f64>, Vec<usize>);

    fn name(&self) -> &str {
        "cobra"
    }

    fn size(&self) -> usize {
        self.flmi.size()
    }

    fn empty_state(&self) -> Self::State {
        (self.flmi.empty_state(), self.balance.empty_state())
    }

    fn gain(&self, (fl, counts): &Self::State, item: usize) -> f64 {
        let CobraParams { lambda, mu, .. } = self.params;
        let mut g =
            (1.0 - mu) * (self.flmi.gain(fl, item) + lambda * self.balance.gain(counts, item));
        if mu > 0.0 {
            g += mu * self.quality(item);
        }
        g
    }

    fn commit(&self, (fl, counts): &mut Self::State, item: usize) {
        self.flmi.commit(fl, item);
        self.balance.commit(counts, item);
    }

    fn value(&self, items: &[usize]) -> f64 {
        let CobraParams { lambda, mu, .. } = self.params;
        let mut v = (1.0 - mu) * (self.flmi.value(items) + lambda * self.balance.value(items));
        if mu > 0.0 {
            v += mu * items.iter().map(|&i| self.quality(i)).sum::<f64>();
        }
        v
    }
}
