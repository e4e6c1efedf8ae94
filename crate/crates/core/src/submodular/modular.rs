use super::Objective;

/// `f(A) = Σ_{a∈A} score(a)`.
#[derive(Debug, Clone)]
pub struct Modular {
    name: String,
    scores: Vec<f64>,
}

impl Modular {
    pub fn new(name: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            scores,
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

impl Objective for Modular {
    type State = ();

    fn name(&self) -> &str {
        &self.name
    }

    fn size(&self) -> usize {
        self.scores.len()
    }

    fn empty_state(&self) {}

    fn gain(&self, _: &(), item: usize) -> f64 {
        self.scores[item]
    }

    fn commit(&self, _: &mut (), _: usize) {}

    fn value(&self, items: &[usize]) -> f64 {
        items.iter().map(|&i| self.scores[i]).sum()
    }

    fn static_gains(&self) -> bool {
        true
    }
}
