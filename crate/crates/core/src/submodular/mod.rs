//! Set functions used for retrieval and the cached-state contract the
//! optimizers rely on.
//!
//! Every objective here is normalized (`value(&[]) == 0`). All except
//! [`LogDetMi`] are monotone submodular for nonnegative similarities; log-det
//! mutual information is monotone but not submodular in general.

mod balance;
mod cobra;
mod facility;
mod graph_cut;
mod logdet;
mod modular;

pub use balance::{balance_kl_oracle, balance_value, log_count_score, Balance};
pub use cobra::{cobra_value, sim_score_quality, Cobra, CobraParams};
pub use facility::{facility_location_value, flmi_value, target_maxima, FacilityLocation, Flmi};
pub use graph_cut::{gcmi, gcmi_via_cut, graph_cut_value, nearest_neighbor_value, Gcmi};
pub use logdet::{logdet_mi, logdet_mi_schur, shifted_cosine_gram, Gram, LogDetMi, LOGDET_RIDGE};
pub use modular::Modular;

/// A set function with incrementally maintained state for marginal gains.
///
/// `gain(state_for(A), v)` must equal `value(A ∪ {v}) - value(A)` up to
/// rounding. States are plain values: cloning one forks an independent copy.
pub trait Objective: Sync {
    type State: Clone + Send + Sync;

    fn name(&self) -> &str;

    /// Items are indexed `0..size()`.
    fn size(&self) -> usize;

    /// State for the empty set.
    fn empty_state(&self) -> Self::State;

    /// Marginal gain of adding `item` to the set summarized by `state`.
    fn gain(&self, state: &Self::State, item: usize) -> f64;

    /// Adds `item` to the set summarized by `state`.
    fn commit(&self, state: &mut Self::State, item: usize);

    /// Direct evaluation from scratch, independent of any cached state.
    fn value(&self, items: &[usize]) -> f64;

    /// True when `gain` never depends on the state (modular objectives), which
    /// lets lazy greedy skip re-evaluation entirely.
    fn static_gains(&self) -> bool {
        false
    }

    fn state_for(&self, items: &[usize]) -> Self::State {
        let mut s = self.empty_state();
        for &i in items {
            self.commit(&mut s, i);
        }
        s
    }
}
