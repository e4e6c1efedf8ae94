//! Randomized self-checks of the objective identities, the greedy guarantee
//! and the submodularity properties, runnable from the command line.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ground::GroundSet;
use crate::optimize::{brute_force, greedy_lazy, greedy_naive, BudgetConstraint};
use crate::selection::serialize_sig9;
use crate::sparse::SparseSimilarity;
use crate::submodular::{
    balance_kl_oracle, gcmi, graph_cut_value, log_count_score, logdet_mi, logdet_mi_schur,
    nearest_neighbor_value, Balance, Cobra, CobraParams, FacilityLocation, Flmi, Gcmi, Gram,
    LogDetMi, Modular, Objective,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Lemmas,
    GreedyBound,
    Properties,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    /// What `worst` measures, e.g. `max_abs_residual` or `min_ratio`.
    pub statistic: String,
    #[serde(serialize_with = "serialize_sig9")]
    pub worst: f64,
    #[serde(serialize_with = "serialize_sig9")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_ratio: Option<f64>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.passed == self.trials
    }

    fn line(&self) -> String {
        let mut s = format!(
            "{} {}: {}/{} passed, {} = {:.3e} (tolerance {:.1e})",
            if self.ok() { "PASS" } else { "FAIL" },
            self.name,
            self.passed,
            self.trials,
            self.statistic,
            self.worst,
            self.tolerance
        );
        if let Some(r) = self.mean_ratio {
            s.push_str(&format!(", mean ratio {r:.6}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<CheckReport>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckReport::ok)
    }

    /// One human-readable line per check.
    pub fn summary(&self) -> String {
        self.checks.iter().map(|c| c.line() + "\n").collect()
    }
}

/// Tracks residuals (`higher_is_worse`) or ratios (lower is worse).
struct Tally {
    report: CheckReport,
    higher_is_worse: bool,
    ratio_sum: f64,
}

impl Tally {
    fn residual(name: &str, tolerance: f64) -> Self {
        Self::new(name, "max_abs_residual", 0.0, tolerance, true)
    }

    fn mismatch(name: &str) -> Self {
        Self::new(name, "mismatches", 0.0, 0.0, true)
    }

    fn ratio(name: &str, bound: f64) -> Self {
        Self::new(name, "min_ratio", f64::INFINITY, bound, false)
    }

    fn new(name: &str, stat: &str, worst: f64, tolerance: f64, higher_is_worse: bool) -> Self {
        Self {
            report: CheckReport {
                name: name.to_string(),
                trials: 0,
                passed: 0,
                statistic: stat.to_string(),
                worst,
                tolerance,
                mean_ratio: None,
            },
            higher_is_worse,
            ratio_sum: 0.0,
        }
    }

    /// Records one trial; NaN always fails.
    fn record(&mut self, x: f64) {
        let r = &mut self.report;
        r.trials += 1;
        let pass = if self.higher_is_worse {
            x <= r.tolerance
        } else {
            self.ratio_sum += x;
            x >= r.tolerance
        };
        if pass {
            r.passed += 1;
        }
        let worse = if self.higher_is_worse {
            x > r.worst
        } else {
            x < r.worst
        };
        if worse || x.is_nan() {
            r.worst = x;
        }
    }

    /// Mismatch counts accumulate rather than taking a maximum.
    fn record_match(&mut self, equal: bool) {
        self.report.trials += 1;
        if equal {
            self.report.passed += 1;
        } else {
            self.report.worst += 1.0;
        }
    }

    fn finish(mut self) -> CheckReport {
        if !self.higher_is_worse && self.report.trials > 0 {
            self.report.mean_ratio = Some(self.ratio_sum / self.report.trials as f64);
        }
        self.report
    }
}

/// Random symmetric nonnegative matrix with a zero diagonal; each off-diagonal
/// pair is kept with probability `density`.
pub fn random_symmetric(rng: &mut impl Rng, n: usize, density: f64) -> Vec<f64> {
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(density) {
                let v = rng.random_range(0.0..2.0);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
    }
    d
}

fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
    c: usize,
) -> (SparseSimilarity, GroundSet) {
    let density = rng.random_range(0.3..1.0);
    let d = random_symmetric(rng, n, density);
    let labels = (0..n).map(|_| rng.random_range(0..c as u32)).collect();
    (
        SparseSimilarity::from_dense(n, &d).expect("valid dense matrix"),
        GroundSet::new(m, labels, c).expect("valid labels"),
    )
}

fn random_pd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let x = DMatrix::from_fn(n, n + 2, |_, _| rng.random_range(-1.0..1.0));
    &x * x.transpose() + DMatrix::identity(n, n) * 0.1
}

/// Two random disjoint subsets of `0..n`, each possibly empty unless
/// `nonempty` is set.
fn disjoint_pair(rng: &mut impl Rng, n: usize, nonempty: bool) -> (Vec<usize>, Vec<usize>) {
    loop {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..n {
            match rng.random_range(0..3) {
                0 => a.push(i),
                1 => b.push(i),
                _ => {}
            }
        }
        if !nonempty || (!a.is_empty() && !b.is_empty()) {
            return (a, b);
        }
    }
}

/// Every `k`-subset of `items` in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else {
            return out;
        };
        idx[p] += 1;
        for q in p + 1..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn lemma1(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::residual("lemma1_gcmi_identity", 1e-9);
    for _ in 0..trials {
        let n = rng.random_range(2..=12);
        let d = random_symmetric(rng, n, 0.7);
        let s = SparseSimilarity::from_dense(n, &d).expect("valid");
        let (a, b) = disjoint_pair(rng, n, false);
        let ab: Vec<usize> = a.iter().chain(&b).copied().collect();
        let lhs = graph_cut_value(&a, &s).unwrap() + graph_cut_value(&b, &s).unwrap()
            - graph_cut_value(&ab, &s).unwrap();
        t.record((lhs - gcmi(&a, &b, &s).unwrap()).abs());
    }
    t.finish()
}

fn corollary1(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::mismatch("corollary1_nearest_neighbor_argmax");
    for _ in 0..trials {
        let n = rng.random_range(6..=12);
        let m = rng.random_range(1..=3);
        let (s, gs) = random_instance(rng, n, m, 1);
        let k = rng.random_range(1..=4.min(n - m));
        let cons = BudgetConstraint::aux(&gs, k).unwrap();
        let g: Vec<f64> = (0..n)
            .map(|j| nearest_neighbor_value(&[j], &s, &gs).unwrap())
            .collect();
        let by_g = brute_force(&Modular::new("g", g), &cons).unwrap();
        let by_gcmi = brute_force(&Gcmi::against_targets(&s, &gs).unwrap(), &cons).unwrap();
        t.record_match(by_g.selected == by_gcmi.selected);
    }
    t.finish()
}

/// Sets within `tol` of the best score.
fn argmax_family(scored: &[(Vec<usize>, f64)], tol: f64) -> Vec<&Vec<usize>> {
    let best = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    scored
        .iter()
        .filter(|s| s.1 >= best - tol)
        .map(|s| &s.0)
        .collect()
}

fn lemma2(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::mismatch("lemma2_kl_argmin_equals_log_count_argmax");
    for _ in 0..trials {
        let c = rng.random_range(2..=3);
        let n = rng.random_range(c + 2..=12);
        let labels = (0..n)
            .map(|i| {
                if i < c {
                    i as u32
                } else {
                    rng.random_range(0..c as u32)
                }
            })
            .collect();
        let gs = GroundSet::new(1, labels, c).unwrap();
        let k = rng.random_range(c..n);
        let mut w: Vec<f64> = (0..c).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let uniform = vec![1.0 / c as f64; c];
        let aux: Vec<usize> = gs.aux_range().collect();
        let subsets: Vec<Vec<usize>> = combinations(&aux, k)
            .into_iter()
            .filter(|a| gs.class_counts(a).iter().all(|&x| x > 0))
            .collect();
        if subsets.is_empty() {
            continue;
        }
        for p in [&uniform, &w] {
            let neg_kl: Vec<(Vec<usize>, f64)> = subsets
                .iter()
                .map(|a| (a.clone(), -balance_kl_oracle(a, &gs, p).unwrap()))
                .collect();
            let logc: Vec<(Vec<usize>, f64)> = subsets
                .iter()
                .map(|a| (a.clone(), log_count_score(a, &gs, p).unwrap()))
                .collect();
            t.record_match(argmax_family(&neg_kl, 1e-12) == argmax_family(&logc, 1e-12));
        }
    }
    t.finish()
}

fn logdet_paths(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::residual("logdet_mi_schur_identity", 1e-8);
    for _ in 0..trials {
        let n = rng.random_range(2..=10);
        let k = random_pd(rng, n);
        let (a, b) = disjoint_pair(rng, n, true);
        let x = logdet_mi(&a, &b, &k).unwrap();
        let y = logdet_mi_schur(&a, &b, &k).unwrap();
        t.record((x - y).abs());
    }
    t.finish()
}

const BOUND: f64 = 1.0 - 1.0 / std::f64::consts::E;

fn greedy_ratio<O: Objective>(obj: &O, cons: &BudgetConstraint) -> f64 {
    let greedy = obj.value(&greedy_naive(obj, cons).unwrap().selection.selected);
    let opt = obj.value(&brute_force(obj, cons).unwrap().selected);
    if opt <= 0.0 {
        1.0
    } else {
        greedy / opt
    }
}

fn greedy_bound(rng: &mut ChaCha8Rng, trials: usize) -> Vec<CheckReport> {
    let mut fl = Tally::ratio("greedy_bound_flmi", BOUND);
    let mut co = Tally::ratio("greedy_bound_cobra", BOUND);
    for _ in 0..trials {
        let n = rng.random_range(8..=15);
        let m = rng.random_range(1..=3);
        let (s, gs) = random_instance(rng, n, m, 3);
        let k = rng.random_range(2..=5.min(n - m));
        let cons = BudgetConstraint::aux(&gs, k).unwrap();
        fl.record(greedy_ratio(&Flmi::new(&s, &gs), &cons));
        let params = CobraParams {
            lambda: rng.random_range(0.0..2.0),
            ..CobraParams::default()
        };
        co.record(greedy_ratio(&Cobra::new(&s, &gs, params).unwrap(), &cons));
    }
    vec![fl.finish(), co.finish()]
}

fn same_sequence<O: Objective>(obj: &O, cons: &BudgetConstraint) -> bool {
    let naive = greedy_naive(obj, cons).unwrap();
    let lazy = greedy_lazy(obj, cons).unwrap();
    naive.selection.selected == lazy.selection.selected
}

fn lazy_naive(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::mismatch("lazy_equals_naive");
    for trial in 0..trials {
        let n = rng.random_range(10..=40);
        let m = rng.random_range(1..=4);
        let (s, gs) = random_instance(rng, n, m, 3);
        let k = rng.random_range(1..=(n - m).min(10));
        let cons = BudgetConstraint::aux(&gs, k).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let same = match trial % 6 {
            0 => same_sequence(&FacilityLocation::new(&s, &all).unwrap(), &cons),
            1 => same_sequence(&Flmi::new(&s, &gs), &cons),
            2 => same_sequence(&Balance::new(&gs), &cons),
            3 => {
                let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                let params = CobraParams {
                    lambda: rng.random_range(0.0..2.0),
                    mu: rng.random_range(0.0..1.0),
                    quality: Some(q),
                };
                same_sequence(&Cobra::new(&s, &gs, params).unwrap(), &cons)
            }
            4 => same_sequence(&Gcmi::against_targets(&s, &gs).unwrap(), &cons),
            _ => {
                let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                same_sequence(&Modular::new("quality", q), &cons)
            }
        };
        t.record_match(same);
    }
    t.finish()
}

/// Residuals of one random triple `A ⊂ B ⊆ V^aux`, `v ∉ B`:
/// (diminishing returns, monotonicity, normalization, cached-gain drift).
fn triple<O: Objective>(obj: &O, aux: &[usize], rng: &mut ChaCha8Rng) -> [f64; 4] {
    let mut pool = aux.to_vec();
    pool.shuffle(rng);
    let v = pool.pop().expect("at least two auxiliary items");
    let b_len = rng.random_range(0..=pool.len());
    let a_len = rng.random_range(0..=b_len);
    let b = &pool[..b_len];
    let a = &pool[..a_len];
    let with = |s: &[usize]| -> Vec<usize> { s.iter().copied().chain([v]).collect() };
    let (fa, fb) = (obj.value(a), obj.value(b));
    let gain_a = obj.value(&with(a)) - fa;
    let gain_b = obj.value(&with(b)) - fb;
    let cached = obj.gain(&obj.state_for(b), v);
    [
        (gain_b - gain_a).max(0.0),
        (-gain_b).max(0.0),
        obj.value(&[]).abs(),
        (cached - gain_b).abs(),
    ]
}

fn properties(rng: &mut ChaCha8Rng, trials: usize) -> Vec<CheckReport> {
    const NAMES: [&str; 5] = ["facility_location", "flmi", "balance", "cobra", "gcmi"];
    let mut out = Vec::new();
    for (o, name) in NAMES.iter().enumerate() {
        let mut tallies = [
            Tally::residual(&format!("submodular_{name}"), 1e-9),
            Tally::residual(&format!("monotone_{name}"), 1e-12),
            Tally::residual(&format!("normalized_{name}"), 0.0),
            Tally::residual(&format!("gain_consistency_{name}"), 1e-9),
        ];
        for _ in 0..trials {
            let n = rng.random_range(6..=14);
            let m = rng.random_range(1..=3);
            let (s, gs) = random_instance(rng, n, m, 3);
            let aux: Vec<usize> = gs.aux_range().collect();
            let all: Vec<usize> = (0..n).collect();
            let r = match o {
                0 => triple(&FacilityLocation::new(&s, &all).unwrap(), &aux, rng),
                1 => triple(&Flmi::new(&s, &gs), &aux, rng),
                2 => triple(&Balance::new(&gs), &aux, rng),
                3 => {
                    let q = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
                    let params = CobraParams {
                        lambda: rng.random_range(0.0..2.0),
                        mu: rng.random_range(0.0..1.0),
                        quality: Some(q),
                    };
                    triple(&Cobra::new(&s, &gs, params).unwrap(), &aux, rng)
                }
                _ => triple(&Gcmi::against_targets(&s, &gs).unwrap(), &aux, rng),
            };
            for (t, x) in tallies.iter_mut().zip(r) {
                t.record(x);
            }
        }
        out.extend(tallies.map(Tally::finish));
    }
    out
}

/// Log-det MI is monotone but not submodular, so it only gets the
/// gain-consistency and normalization checks.
fn logdet_gains(rng: &mut ChaCha8Rng, trials: usize) -> CheckReport {
    let mut t = Tally::residual("gain_consistency_logdet_mi", 1e-9);
    for _ in 0..trials {
        let n = rng.random_range(4..=10);
        let obj = LogDetMi::new(Gram::Dense(random_pd(rng, n)), vec![0]).unwrap();
        let aux: Vec<usize> = (1..n).collect();
        let r = triple(&obj, &aux, rng);
        t.record(r[3].max(r[2]));
    }
    t.finish()
}

/// Runs the named suite with `trials` random instances per check.
pub fn verify(suite: Suite, trials: usize, seed: u64) -> Result<VerifyReport> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    if matches!(suite, Suite::Lemmas | Suite::All) {
        checks.push(lemma1(&mut rng, trials));
        checks.push(corollary1(&mut rng, trials));
        checks.push(lemma2(&mut rng, trials));
        checks.push(logdet_paths(&mut rng, trials));
    }
    if matches!(suite, Suite::GreedyBound | Suite::All) {
        checks.extend(greedy_bound(&mut rng, trials));
        checks.push(lazy_naive(&mut rng, trials));
    }
    if matches!(suite, Suite::Properties | Suite::All) {
        checks.extend(properties(&mut rng, trials));
        checks.push(logdet_gains(&mut rng, trials));
    }
    Ok(VerifyReport {
        suite,
        trials,
        seed,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        let c = combinations(&[3, 5, 7, 9], 2);
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![3, 5]);
        assert_eq!(c[5], vec![7, 9]);
        assert!(combinations(&[1], 2).is_empty());
    }

    #[test]
    fn every_suite_passes_briefly() {
        let r = verify(Suite::All, 20, 3).unwrap();
        assert!(r.all_passed(), "{}", r.summary());
        assert_eq!(r.checks.len(), 4 + 3 + 21);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(verify(Suite::Lemmas, 0, 1).is_err());
    }
}
