use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result};
use crate::ground::GroundSet;

/// Ordered selection with the marginal gain recorded at each step.
///
/// Serializes as `{"objective", "budget", "selected", "gains"}` with every
/// float rounded to nine significant digits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub objective: String,
    pub budget: usize,
    pub selected: Vec<usize>,
    #[serde(serialize_with = "serialize_sig9_vec")]
    pub gains: Vec<f64>,
}

impl SelectionResult {
    pub fn new(objective: impl Into<String>, budget: usize) -> Self {
        Self {
            objective: objective.into(),
            budget,
            selected: Vec::with_capacity(budget),
            gains: Vec::with_capacity(budget),
        }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Checks size, auxiliary range and uniqueness against a ground set.
    pub fn validate(&self, gs: &GroundSet) -> Result<()> {
        if self.selected.len() > self.budget {
            return Err(invalid(format!(
                "{} items selected under a budget of {}",
                self.selected.len(),
                self.budget
            )));
        }
        gs.check_aux_subset(&self.selected)?;
        crate::ground::membership(&self.selected, gs.total_count())?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("selection serializes")
    }
}

/// Rounds to nine significant digits through a decimal round-trip so the
/// shortest-form printer emits at most nine digits on every platform.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

pub fn serialize_sig9<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(round_sig9(*x))
    } else {
        s.serialize_none()
    }
}

pub fn serialize_sig9_vec<S: Serializer>(xs: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        if x.is_finite() {
            seq.serialize_element(&round_sig9(*x))?;
        } else {
            seq.serialize_element(&Option::<f64>::None)?;
        }
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_and_rounding() {
        let r = SelectionResult {
            objective: "flmi".into(),
            budget: 2,
            selected: vec![3, 4],
            gains: vec![1.0 / 3.0, 2.0],
        };
        assert_eq!(
            r.to_json(),
            r#"{"objective":"flmi","budget":2,"selected":[3,4],"gains":[0.333333333,2.0]}"#
        );
    }

    #[test]
    fn validate_rejects_targets_and_duplicates() {
        let gs = GroundSet::new(1, vec![0, 0, 0], 1).unwrap();
        let mut r = SelectionResult::new("x", 2);
        r.selected = vec![1, 1];
        assert!(r.validate(&gs).is_err());
        r.selected = vec![0];
        assert!(r.validate(&gs).is_err());
        r.selected = vec![1, 2];
        assert!(r.validate(&gs).is_ok());
    }

    #[test]
    fn sig9_keeps_small_magnitudes() {
        assert_eq!(round_sig9(1.234567891234e-20), 1.23456789e-20);
        assert_eq!(round_sig9(0.0), 0.0);
    }
}
