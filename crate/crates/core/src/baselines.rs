//! Comparison strategies: nearest-neighbor scores (Sim-Score, CLIP-Score),
//! per-class and global top-k, uniform random draws, and MMR.
//!
//! Per-item scores are indexed by auxiliary position, so `scores[a]` belongs
//! to item `m + a`. Selections always report joint indices.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{invalid, Error, Result};
use crate::ground::GroundSet;
use crate::kernels::{Kernel, KernelEvaluator};
use crate::selection::SelectionResult;
use crate::sparse::SparseSimilarity;
use crate::submodular::target_maxima;

/// Which targets an auxiliary item is scored against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimScoreMode {
    /// Targets sharing the item's (pseudo-)label.
    #[default]
    SameClass,
    /// Every target.
    AllTargets,
}

fn check_size(sim: &SparseSimilarity, gs: &GroundSet) -> Result<()> {
    if sim.size() != gs.total_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.total_count(),
            got: sim.size(),
        });
    }
    Ok(())
}

/// `score(i) = Σ_j w_ij` over the permitted targets `j`.
pub fn sim_score(gs: &GroundSet, sim: &SparseSimilarity, mode: SimScoreMode) -> Result<Vec<f64>> {
    check_size(sim, gs)?;
    let m = gs.target_count() as u32;
    Ok(gs
        .aux_range()
        .map(|i| {
            let (cols, vals) = sim.row(i);
            cols.iter()
                .zip(vals)
                .take_while(|(&j, _)| j < m)
                .filter(|(&j, _)| {
                    mode == SimScoreMode::AllTargets || gs.label(j as usize) == gs.label(i)
                })
                .map(|(_, &w)| w as f64)
                .sum()
        })
        .collect())
}

/// Sim-Score from the unsparsified kernel: every target pair is evaluated.
pub fn sim_score_exact(
    embeddings: &EmbeddingMatrix,
    gs: &GroundSet,
    kernel: Kernel,
    mode: SimScoreMode,
) -> Result<Vec<f64>> {
    if embeddings.rows() != gs.total_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.total_count(),
            got: embeddings.rows(),
        });
    }
    let ev = KernelEvaluator::new(embeddings, kernel)?;
    let aux: Vec<usize> = gs.aux_range().collect();
    Ok(aux
        .par_iter()
        .map(|&i| {
            gs.target_range()
                .filter(|&j| mode == SimScoreMode::AllTargets || gs.label(j) == gs.label(i))
                .map(|j| ev.eval(i, j))
                .sum()
        })
        .collect())
}

/// Cosine between each auxiliary row and the text embedding of its class.
/// `aux_embeddings` row `a` belongs to item `m + a`.
pub fn clip_score(
    aux_embeddings: &EmbeddingMatrix,
    class_text_embeddings: &EmbeddingMatrix,
    gs: &GroundSet,
) -> Result<Vec<f64>> {
    if class_text_embeddings.rows() != gs.class_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.class_count(),
            got: class_text_embeddings.rows(),
        });
    }
    if aux_embeddings.rows() != gs.aux_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.aux_count(),
            got: aux_embeddings.rows(),
        });
    }
    if aux_embeddings.dim() != class_text_embeddings.dim() {
        return Err(Error::DimensionMismatch {
            expected: class_text_embeddings.dim(),
            got: aux_embeddings.dim(),
        });
    }
    let to_f64 = |r: &[f32]| r.iter().map(|&v| v as f64).collect::<Vec<_>>();
    let text: Vec<Vec<f64>> = (0..gs.class_count())
        .map(|c| to_f64(class_text_embeddings.row(c)))
        .collect();
    let m = gs.target_count();
    (0..gs.aux_count())
        .into_par_iter()
        .map(|a| crate::kernels::cosine(&to_f64(aux_embeddings.row(a)), &text[gs.label(m + a)]))
        .collect()
}

fn check_scores(scores: &[f64], gs: &GroundSet) -> Result<()> {
    if scores.len() != gs.aux_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.aux_count(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("scores must be finite"));
    }
    Ok(())
}

/// Items sorted by score descending, ties on the lower index.
fn rank(items: &mut [usize], score: impl Fn(usize) -> f64) {
    items.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
}

/// Top `per_class_budget` auxiliary items of every class. Classes with fewer
/// candidates contribute all of them, so the result can be shorter than the
/// nominal budget `per_class_budget · C`.
pub fn select_topk_per_class(
    name: &str,
    scores: &[f64],
    gs: &GroundSet,
    per_class_budget: usize,
) -> Result<SelectionResult> {
    check_scores(scores, gs)?;
    if per_class_budget == 0 {
        return Err(invalid("per-class budget must be at least 1"));
    }
    let m = gs.target_count();
    let mut out = SelectionResult::new(name, per_class_budget * gs.class_count());
    for c in 0..gs.class_count() {
        let mut pool = gs.aux_of_class(c);
        rank(&mut pool, |i| scores[i - m]);
        for &i in pool.iter().take(per_class_budget) {
            out.selected.push(i);
            out.gains.push(scores[i - m]);
        }
    }
    Ok(out)
}

/// Top `k` auxiliary items by score regardless of class.
pub fn select_topk(
    name: &str,
    scores: &[f64],
    gs: &GroundSet,
    k: usize,
) -> Result<SelectionResult> {
    check_scores(scores, gs)?;
    if k == 0 || k > gs.aux_count() {
        return Err(invalid(format!(
            "budget must lie in 1..={}, got {k}",
            gs.aux_count()
        )));
    }
    let m = gs.target_count();
    let mut pool: Vec<usize> = gs.aux_range().collect();
    rank(&mut pool, |i| scores[i - m]);
    let mut out = SelectionResult::new(name, k);
    for &i in &pool[..k] {
        out.selected.push(i);
        out.gains.push(scores[i - m]);
    }
    Ok(out)
}

/// Uniform draw without replacement inside every class. Picks are listed by
/// class, ascending within a class; `gains` is empty.
pub fn select_random(
    gs: &GroundSet,
    per_class_budget: usize,
    seed: u64,
) -> Result<SelectionResult> {
    if per_class_budget == 0 {
        return Err(invalid("per-class budget must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SelectionResult::new("random", per_class_budget * gs.class_count());
    for c in 0..gs.class_count() {
        let pool = gs.aux_of_class(c);
        let take = per_class_budget.min(pool.len());
        let mut picks: Vec<usize> = sample(&mut rng, pool.len(), take)
            .into_iter()
            .map(|p| pool[p])
            .collect();
        picks.sort_unstable();
        out.selected.extend(picks);
    }
    Ok(out)
}

/// Uniform draw of `k` auxiliary items, ascending.
pub fn select_random_global(gs: &GroundSet, k: usize, seed: u64) -> Result<SelectionResult> {
    if k == 0 || k > gs.aux_count() {
        return Err(invalid(format!(
            "budget must lie in 1..={}, got {k}",
            gs.aux_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = gs.target_count();
    let mut picks: Vec<usize> = sample(&mut rng, gs.aux_count(), k)
        .into_iter()
        .map(|a| m + a)
        .collect();
    picks.sort_unstable();
    let mut out = SelectionResult::new("random", k);
    out.selected = picks;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmrParams {
    /// Relevance weight; `1 - lambda_mmr` weighs redundancy.
    pub lambda_mmr: f64,
}

impl MmrParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_mmr) {
            return Err(invalid(format!(
                "lambda_mmr must lie in [0, 1], got {}",
                self.lambda_mmr
            )));
        }
        Ok(())
    }
}

/// Maximal marginal relevance over the auxiliary pool.
///
/// Relevance is the best target similarity `max_{j∈V^tar} w_ij`; redundancy
/// is `max_{j∈A} w_ij`, taken as 0 while `A` is empty. Each step picks the
/// highest `λ·relevance - (1-λ)·redundancy`, ties on the lower index, and
/// records that score as the step's gain.
pub fn select_mmr(
    gs: &GroundSet,
    sim: &SparseSimilarity,
    params: &MmrParams,
    k: usize,
) -> Result<SelectionResult> {
    params.validate()?;
    check_size(sim, gs)?;
    if k == 0 || k > gs.aux_count() {
        return Err(invalid(format!(
            "budget must lie in 1..={}, got {k}",
            gs.aux_count()
        )));
    }
    let lam = params.lambda_mmr;
    let relevance = target_maxima(sim, gs);
    let cols = if sim.is_symmetric() {
        std::borrow::Cow::Borrowed(sim)
    } else {
        std::borrow::Cow::Owned(sim.transpose())
    };
    let mut redundancy = vec![0.0f64; sim.size()];
    let mut remaining: Vec<usize> = gs.aux_range().collect();
    let mut out = SelectionResult::new("mmr", k);

    for _ in 0..k {
        let (pos, best) = remaining
            .iter()
            .enumerate()
            .map(|(p, &i)| (p, lam * relevance[i] - (1.0 - lam) * redundancy[i]))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (p, s)| if s > acc.1 { (p, s) } else { acc },
            );
        let item = remaining.remove(pos);
        let (rows, vals) = cols.row(item);
        for (&i, &w) in rows.iter().zip(vals) {
            let r = &mut redundancy[i as usize];
            *r = r.max(w as f64);
        }
        out.selected.push(item);
        out.gains.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_instance(
        seed: u64,
        n: usize,
        m: usize,
        classes: u32,
    ) -> (SparseSimilarity, GroundSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(0.0..2.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
        (
            SparseSimilarity::from_dense(n, &d).unwrap(),
            GroundSet::new(m, labels, classes as usize).unwrap(),
        )
    }

    #[test]
    fn sim_score_matches_double_loop() {
        let (s, gs) = random_instance(1, 12, 4, 3);
        let d = s.to_dense();
        for mode in [SimScoreMode::SameClass, SimScoreMode::AllTargets] {
            let got = sim_score(&gs, &s, mode).unwrap();
            for i in 4..12 {
                let mut want = 0.0;
                for j in 0..4 {
                    if mode == SimScoreMode::AllTargets || gs.label(i) == gs.label(j) {
                        want += d[i * 12 + j];
                    }
                }
                assert!((got[i - 4] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_target_score_is_the_weight() {
        let (s, gs) = random_instance(2, 6, 1, 1);
        let got = sim_score(&gs, &s, SimScoreMode::AllTargets).unwrap();
        for i in 1..6 {
            assert_eq!(got[i - 1], s.get(i, 0).unwrap());
        }
    }

    #[test]
    fn clip_score_cases() {
        let gs = GroundSet::new(1, vec![0, 0, 1, 1], 2).unwrap();
        let text = EmbeddingMatrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        let aux = EmbeddingMatrix::from_rows(&[[3.0, 0.0], [1.0, 1.0], [5.0, 0.0]]).unwrap();
        let got = clip_score(&aux, &text, &gs).unwrap();
        assert!((got[0] - 1.0).abs() < 1e-12);
        assert!((got[1] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(got[2].abs() < 1e-12);
        let bad = EmbeddingMatrix::from_rows(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!(clip_score(&aux, &bad, &gs).is_err());
    }

    #[test]
    fn topk_per_class_small_and_saturated() {
        // Aux items 1..=3 class 0, 4..=6 class 1.
        let gs = GroundSet::new(1, vec![0, 0, 0, 0, 1, 1, 1], 2).unwrap();
        let scores = [0.2, 0.9, 0.9, 0.1, 0.5, 0.3];
        let r = select_topk_per_class("t", &scores, &gs, 1).unwrap();
        assert_eq!(r.selected, vec![2, 5]);
        let r = select_topk_per_class("t", &scores, &gs, 5).unwrap();
        assert_eq!(r.selected, vec![2, 3, 1, 5, 6, 4]);
        assert_eq!(r.budget, 10);
    }

    #[test]
    fn random_is_seeded_and_saturates() {
        let gs = GroundSet::new(1, vec![0, 0, 0, 1, 1, 1, 1, 1], 2).unwrap();
        let a = select_random(&gs, 2, 9).unwrap();
        assert_eq!(a, select_random(&gs, 2, 9).unwrap());
        assert_eq!(select_random(&gs, 3, 0).unwrap().selected[..2], [1, 2]);
        assert!(a.validate(&gs).is_ok());
    }

    #[test]
    fn random_frequencies_are_uniform() {
        let gs = GroundSet::new(1, vec![0; 5], 1).unwrap();
        let mut hits = [0usize; 4];
        for seed in 0..10_000 {
            hits[select_random(&gs, 1, seed).unwrap().selected[0] - 1] += 1;
        }
        for h in hits {
            assert!((h as f64 / 10_000.0 - 0.25).abs() < 0.02, "{hits:?}");
        }
    }

    #[test]
    fn mmr_unit_lambda_is_relevance_topk() {
        let (s, gs) = random_instance(3, 15, 3, 2);
        let rel: Vec<f64> = target_maxima(&s, &gs)[3..].to_vec();
        let mmr = select_mmr(&gs, &s, &MmrParams { lambda_mmr: 1.0 }, 5).unwrap();
        assert_eq!(
            mmr.selected,
            select_topk("x", &rel, &gs, 5).unwrap().selected
        );
    }

    #[test]
    fn mmr_zero_lambda_first_pick_is_most_relevant() {
        let (s, gs) = random_instance(4, 10, 2, 1);
        let rel = target_maxima(&s, &gs);
        let mmr = select_mmr(&gs, &s, &MmrParams { lambda_mmr: 0.0 }, 1).unwrap();
        let best = (2..10).fold(2, |b, i| if rel[i] > rel[b] { i } else { b });
        assert_eq!(mmr.selected, vec![best]);
    }

    #[test]
    fn mmr_defers_duplicate() {
        // Target 0; aux 1..=6. Items 1 and 2 are near-duplicates (w = 1.9);
        // other aux pairs are weakly similar.
        let n = 7;
        let mut d = vec![0.1; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        let rel = [0.0, 1.0, 0.98, 0.9, 0.85, 0.8, 0.75];
        for i in 1..n {
            d[i * n] = rel[i];
            d[i] = rel[i];
        }
        d[n + 2] = 1.9;
        d[2 * n + 1] = 1.9;
        let s = SparseSimilarity::from_dense(n, &d).unwrap();
        let gs = GroundSet::new(1, vec![0; n], 1).unwrap();
        let r = select_mmr(&gs, &s, &MmrParams { lambda_mmr: 0.5 }, 6).unwrap();
        assert_eq!(r.selected, vec![1, 3, 4, 5, 6, 2]);
    }
}
