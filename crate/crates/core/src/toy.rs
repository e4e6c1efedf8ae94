//! Two-dimensional toy experiment.
//!
//! A skewed Gaussian mixture provides a small labeled target set and a large
//! auxiliary pool. Auxiliary points are pseudo-labeled by a linear classifier
//! trained on the targets, then COBRA and Sim-Score each retrieve a fixed
//! budget and are compared on target coverage, diversity and class balance.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::baselines::{select_topk, sim_score_exact, SimScoreMode};
use crate::embedding::EmbeddingMatrix;
use crate::error::{invalid, Result};
use crate::ground::GroundSet;
use crate::kernels::{build_sparse, Kernel, KernelEvaluator, KernelSpec};
use crate::metrics::{class_balance_report, coverage_score, vendi_score, VendiKernel};
use crate::optimize::{maximize, BudgetConstraint, Engine};
use crate::selection::{round_sig9, serialize_sig9, serialize_sig9_vec, SelectionResult};
use crate::sparse::SparseSimilarity;
use crate::submodular::{Cobra, CobraParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub target_per_class: usize,
    pub aux_total: usize,
    /// Mixture weight per class; the class count is `weights.len()`.
    pub weights: Vec<f64>,
    pub means: Vec<[f64; 2]>,
    /// Isotropic standard deviation per class.
    pub stds: Vec<f64>,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            target_per_class: 16,
            aux_total: 25_000,
            weights: vec![0.55, 0.25, 0.15, 0.05],
            means: vec![[-3.0, -3.0], [3.0, -3.0], [-3.0, 3.0], [3.0, 3.0]],
            stds: vec![1.0; 4],
            seed: 7,
        }
    }
}

impl ToyConfig {
    pub fn class_count(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.class_count();
        if c < 2 {
            return Err(invalid("the toy mixture needs at least 2 classes"));
        }
        if self.means.len() != c || self.stds.len() != c {
            return Err(invalid(
                "means, stds and weights must have one entry per class",
            ));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("mixture weights must be positive"));
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("mixture weights must sum to 1"));
        }
        if self.stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(invalid("standard deviations must be positive"));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("means must be finite"));
        }
        if self.target_per_class == 0 {
            return Err(invalid("target_per_class must be at least 1"));
        }
        if self.aux_total < c {
            return Err(invalid("aux_total must be at least the class count"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ToyData {
    /// Targets first (grouped by class), then the auxiliary pool.
    pub points: EmbeddingMatrix,
    /// True labels for targets, pseudo-labels for auxiliary points.
    pub ground: GroundSet,
    /// Generating component of every auxiliary point.
    pub aux_components: Vec<u32>,
}

/// Samples the targets and the auxiliary pool, then pseudo-labels the pool.
pub fn generate_toy(config: &ToyConfig) -> Result<ToyData> {
    config.validate()?;
    let c = config.class_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normals: Vec<Normal<f64>> = config
        .stds
        .iter()
        .map(|&s| Normal::new(0.0, s).expect("validated std"))
        .collect();
    let draw = |k: usize, rng: &mut ChaCha8Rng| -> [f64; 2] {
        let [mx, my] = config.means[k];
        [mx + normals[k].sample(rng), my + normals[k].sample(rng)]
    };

    let mut targets = Vec::with_capacity(c * config.target_per_class);
    let mut target_labels = Vec::with_capacity(targets.capacity());
    for k in 0..c {
        for _ in 0..config.target_per_class {
            targets.push(draw(k, &mut rng));
            target_labels.push(k as u32);
        }
    }
    let mixture = WeightedIndex::new(&config.weights).map_err(|e| invalid(e.to_string()))?;
    let mut aux = Vec::with_capacity(config.aux_total);
    let mut aux_components = Vec::with_capacity(config.aux_total);
    for _ in 0..config.aux_total {
        let k = mixture.sample(&mut rng);
        aux.push(draw(k, &mut rng));
        aux_components.push(k as u32);
    }

    let pseudo = pseudo_label_linear(&targets, &target_labels, c, &aux)?;
    let m = targets.len();
    let mut rows = targets;
    rows.extend(aux);
    let mut labels = target_labels;
    labels.extend(pseudo);
    Ok(ToyData {
        points: EmbeddingMatrix::from_rows(&rows)?,
        ground: GroundSet::new(m, labels, c)?,
        aux_components,
    })
}

const EPOCHS: usize = 500;
const STEP: f64 = 0.1;
const L2: f64 = 0.01;

/// One-vs-rest linear classifier trained by full-batch hinge-loss subgradient
/// descent from a zero start. Returns per-class `[w_x, w_y, bias]`.
pub fn train_linear(
    points: &[[f64; 2]],
    labels: &[u32],
    class_count: usize,
) -> Result<Vec<[f64; 3]>> {
    if points.len() != labels.len() || points.is_empty() {
        return Err(invalid(
            "training points and labels must be nonempty and aligned",
        ));
    }
    if labels.iter().any(|&l| l as usize >= class_count) {
        return Err(invalid("training label out of range"));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(invalid(
            "training set has a single class; nothing to separate",
        ));
    }
    let n = points.len() as f64;
    let mut w = vec![[0.0f64; 3]; class_count];
    for (c, wc) in w.iter_mut().enumerate() {
        for _ in 0..EPOCHS {
            let mut grad = [L2 * wc[0], L2 * wc[1], 0.0];
            for (p, &l) in points.iter().zip(labels) {
                let y = if l as usize == c { 1.0 } else { -1.0 };
                let margin = y * (wc[0] * p[0] + wc[1] * p[1] + wc[2]);
                if margin < 1.0 {
                    grad[0] -= y * p[0] / n;
                    grad[1] -= y * p[1] / n;
                    grad[2] -= y / n;
                }
            }
            for (v, g) in wc.iter_mut().zip(grad) {
                *v -= STEP * g;
            }
        }
    }
    Ok(w)
}

/// Highest-scoring class, lowest id on ties.
pub fn predict_linear(weights: &[[f64; 3]], p: [f64; 2]) -> u32 {
    let mut best = (0, f64::NEG_INFINITY);
    for (c, w) in weights.iter().enumerate() {
        let s = w[0] * p[0] + w[1] * p[1] + w[2];
        if s > best.1 {
            best = (c, s);
        }
    }
    best.0 as u32
}

pub fn pseudo_label_linear(
    targets: &[[f64; 2]],
    target_labels: &[u32],
    class_count: usize,
    aux: &[[f64; 2]],
) -> Result<Vec<u32>> {
    let w = train_linear(targets, target_labels, class_count)?;
    Ok(aux.iter().map(|&p| predict_linear(&w, p)).collect())
}

/// Exact kernel between every target and every auxiliary item; other pairs
/// are absent. Used to score coverage without sparsification effects.
pub fn target_block_similarity(
    points: &EmbeddingMatrix,
    gs: &GroundSet,
    kernel: Kernel,
) -> Result<SparseSimilarity> {
    let ev = KernelEvaluator::new(points, kernel)?;
    let mut triplets = Vec::with_capacity(2 * gs.target_count() * gs.aux_count());
    for t in gs.target_range() {
        for a in gs.aux_range() {
            let v = ev.eval(t, a);
            triplets.push((t, a, v));
            triplets.push((a, t, v));
        }
    }
    SparseSimilarity::from_triplets(gs.total_count(), triplets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyOptions {
    pub budget: usize,
    pub gamma: f64,
    pub per_row_cap: usize,
    pub engine: Engine,
}

impl Default for ToyOptions {
    fn default() -> Self {
        Self {
            budget: 128,
            gamma: 1.0,
            per_row_cap: 100,
            engine: Engine::Lazy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub selection: SelectionResult,
    #[serde(serialize_with = "serialize_sig9")]
    pub coverage: f64,
    #[serde(serialize_with = "serialize_sig9")]
    pub vendi: f64,
    pub class_counts: Vec<usize>,
    #[serde(serialize_with = "serialize_sig9")]
    pub kl_to_uniform: f64,
    /// Marginal-gain evaluations, for greedy strategies.
    pub evaluations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub config: ToyConfig,
    pub options: ToyOptions,
    pub target_count: usize,
    pub aux_count: usize,
    pub class_count: usize,
    pub pseudo_label_counts: Vec<usize>,
    /// Share of auxiliary points whose pseudo-label matches their component.
    #[serde(serialize_with = "serialize_sig9")]
    pub pseudo_label_agreement: f64,
    pub similarity_nnz: usize,
    pub vendi_kernel: VendiKernel,
    pub cobra: StrategyReport,
    pub sim_score: StrategyReport,
    /// `cobra.coverage / sim_score.coverage - 1`.
    #[serde(serialize_with = "serialize_sig9_vec")]
    pub coverage_margin: Vec<f64>,
}

pub struct ToyOutcome {
    pub data: ToyData,
    pub report: ToyReport,
}

fn strategy_report(
    selection: SelectionResult,
    evaluations: Option<u64>,
    data: &ToyData,
    coverage_sim: &SparseSimilarity,
    vendi_kernel: VendiKernel,
) -> Result<StrategyReport> {
    let balance = class_balance_report(&selection, &data.ground)?;
    Ok(StrategyReport {
        coverage: coverage_score(&selection, coverage_sim, &data.ground)?,
        vendi: vendi_score(&selection.selected, &data.points, vendi_kernel)?,
        class_counts: balance.class_counts,
        kl_to_uniform: balance.kl_to_uniform,
        evaluations,
        selection,
    })
}

/// COBRA (`λ = 1`, `μ = 0`, class-restricted sparse rbf graph) against
/// Sim-Score (exact same-class kernel sums), both under one global budget.
pub fn run_toy_comparison(config: &ToyConfig, options: &ToyOptions) -> Result<ToyOutcome> {
    let data = generate_toy(config)?;
    let gs = &data.ground;
    let kernel = Kernel::Rbf {
        gamma: options.gamma,
    };
    let spec = KernelSpec {
        kernel,
        per_row_cap: options.per_row_cap,
        class_restricted: true,
    };
    let sim = build_sparse(&data.points, gs, &spec)?;

    let cobra = Cobra::new(&sim, gs, CobraParams::default())?;
    let run = maximize(
        &cobra,
        &BudgetConstraint::aux(gs, options.budget)?,
        options.engine,
    )?;

    let scores = sim_score_exact(&data.points, gs, kernel, SimScoreMode::SameClass)?;
    let nn = select_topk("sim_score", &scores, gs, options.budget)?;

    let coverage_sim = target_block_similarity(&data.points, gs, kernel)?;
    let vendi_kernel = VendiKernel::Rbf {
        gamma: options.gamma,
    };
    let cobra_report = strategy_report(
        run.selection,
        Some(run.evaluations),
        &data,
        &coverage_sim,
        vendi_kernel,
    )?;
    let nn_report = strategy_report(nn, None, &data, &coverage_sim, vendi_kernel)?;

    let m = gs.target_count();
    let aux: Vec<usize> = gs.aux_range().collect();
    let agree = data
        .aux_components
        .iter()
        .enumerate()
        .filter(|&(a, &k)| gs.label(m + a) == k as usize)
        .count();
    let report = ToyReport {
        config: config.clone(),
        options: options.clone(),
        target_count: m,
        aux_count: gs.aux_count(),
        class_count: gs.class_count(),
        pseudo_label_counts: gs.class_counts(&aux),
        pseudo_label_agreement: agree as f64 / gs.aux_count() as f64,
        similarity_nnz: sim.nnz(),
        vendi_kernel,
        coverage_margin: vec![cobra_report.coverage / nn_report.coverage - 1.0],
        cobra: cobra_report,
        sim_score: nn_report,
    };
    Ok(ToyOutcome { data, report })
}

fn sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}

/// `x,y,role,label` for every target and auxiliary point, then one row per
/// pick of each strategy.
pub fn points_csv(outcome: &ToyOutcome) -> String {
    let ToyOutcome { data, report } = outcome;
    let gs = &data.ground;
    let mut out = String::from("x,y,role,label\n");
    let mut row = |i: usize, role: &str| {
        let p = data.points.row(i);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig9(p[0] as f64),
            sig9(p[1] as f64),
            role,
            gs.label(i)
        );
    };
    for i in 0..gs.total_count() {
        row(i, if gs.is_target(i) { "target" } else { "aux" });
    }
    for &i in &report.cobra.selection.selected {
        row(i, "cobra_pick");
    }
    for &i in &report.sim_score.selection.selected {
        row(i, "simscore_pick");
    }
    out
}
