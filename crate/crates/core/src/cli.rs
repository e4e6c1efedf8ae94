//! Command-line front end.
//!
//! Every failure is reported as one line on stderr,
//! `error: kind=<kind> code=<exit code> message=<text>`, and the process exits
//! with the matching code. Output files are written atomically.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::baselines::{
    clip_score, select_mmr, select_random, select_random_global, select_topk,
    select_topk_per_class, sim_score, MmrParams, SimScoreMode,
};
use crate::error::Error;
use crate::ground::GroundSet;
use crate::io;
use crate::kernels::{build_sparse, Kernel, KernelSpec};
use crate::metrics::{metric_report, VendiKernel};
use crate::optimize::{maximize, BudgetConstraint, Engine};
use crate::selection::SelectionResult;
use crate::sparse::SparseSimilarity;
use crate::submodular::{
    shifted_cosine_gram, sim_score_quality, Cobra, CobraParams, Flmi, Gcmi, LogDetMi, Objective,
    LOGDET_RIDGE,
};
use crate::toy::{points_csv, run_toy_comparison, ToyConfig, ToyOptions};
use crate::verify::{verify, Suite};

/// Exit code for command-line usage errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit code when a verification check fails.
pub const EXIT_VERIFY_FAILED: i32 = 15;

#[derive(Debug, Parser)]
#[command(
    name = "cobra",
    version,
    about = "Diverse, relevant subset selection from an auxiliary pool"
)]
pub struct Cli {
    /// Worker threads; 0 uses every available core. Results do not depend on it.
    #[arg(long, global = true, env = "COBRA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Similarity matrix construction.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Select auxiliary items with one strategy.
    #[command(subcommand)]
    Select(SelectCommand),
    /// Diversity, balance and coverage of a saved selection.
    Metrics(MetricsArgs),
    /// Two-dimensional toy experiment.
    #[command(subcommand)]
    Toy(ToyCommand),
    /// Randomized self-checks of identities, bounds and properties.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Build a sparse top-k similarity matrix (SPW1) from embeddings.
    Build(SimBuildArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    /// 1 + cosine similarity.
    Cosine,
    /// exp(-gamma * squared distance).
    Rbf,
}

#[derive(Debug, Args)]
pub struct SimBuildArgs {
    /// Embedding file (EMB1), one row per item.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Label CSV with header index,label.
    #[arg(long)]
    pub labels: PathBuf,
    /// Kernel.
    #[arg(long, value_enum, default_value_t = KernelArg::Cosine)]
    pub kernel: KernelArg,
    /// RBF bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Neighbors kept per row before symmetrization.
    #[arg(long)]
    pub topk: usize,
    /// Only keep pairs with equal labels.
    #[arg(long)]
    pub class_restricted: bool,
    /// Output SPW1 path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    /// Label CSV with header index,label covering targets and auxiliary items.
    #[arg(long)]
    pub labels: PathBuf,
    /// Number of target items; they occupy indices 0..m.
    #[arg(long)]
    pub target_count: usize,
    /// Class count; defaults to the largest label plus one.
    #[arg(long)]
    pub classes: Option<usize>,
}

impl GroundArgs {
    fn load(&self) -> Result<GroundSet, Error> {
        let labels = io::read_labels(&self.labels)?;
        match self.classes {
            Some(c) => GroundSet::new(self.target_count, labels, c),
            None => GroundSet::infer_classes(self.target_count, labels),
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct BudgetArgs {
    /// Global budget k over the whole auxiliary pool.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Budget per (pseudo-)class.
    #[arg(long)]
    pub per_class: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EngineArg {
    /// Re-score every candidate at every step.
    Naive,
    /// Priority queue of stale gains.
    Lazy,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Naive => Engine::Naive,
            EngineArg::Lazy => Engine::Lazy,
        }
    }
}

#[derive(Debug, Args)]
pub struct GreedyArgs {
    /// Similarity file (SPW1).
    #[arg(long)]
    pub sim: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Greedy engine.
    #[arg(long, value_enum, default_value_t = EngineArg::Lazy)]
    pub engine: EngineArg,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CobraArgs {
    #[command(flatten)]
    pub greedy: GreedyArgs,
    /// Class-balance weight.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Quality weight in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Quality CSV (index,quality) or the word sim-score to use target similarity sums.
    #[arg(long)]
    pub quality: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimScoreModeArg {
    /// Sum over targets of the item's own class.
    SameClass,
    /// Sum over every target.
    AllTargets,
}

#[derive(Debug, Args)]
pub struct SimScoreArgs {
    /// Similarity file (SPW1).
    #[arg(long)]
    pub sim: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Which targets each item is scored against.
    #[arg(long, value_enum, default_value_t = SimScoreModeArg::SameClass)]
    pub mode: SimScoreModeArg,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClipScoreArgs {
    /// Auxiliary image embeddings (EMB1), one row per auxiliary item.
    #[arg(long)]
    pub aux_embeddings: PathBuf,
    /// Class text embeddings (EMB1), one row per class.
    #[arg(long)]
    pub text_embeddings: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[command(flatten)]
    pub ground: GroundArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MmrArgs {
    /// Similarity file (SPW1).
    #[arg(long)]
    pub sim: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    /// Number of items to select.
    #[arg(long)]
    pub budget: usize,
    /// Relevance weight in [0, 1]; the sweep 0.25, 0.5, 0.75 is customary.
    #[arg(long, default_value_t = 0.5)]
    pub lambda_mmr: f64,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LogDetArgs {
    /// Embedding file (EMB1) for every item.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    /// Number of items to select.
    #[arg(long)]
    pub budget: usize,
    /// Diagonal ridge added to the shifted-cosine Gram matrix.
    #[arg(long, default_value_t = LOGDET_RIDGE)]
    pub ridge: f64,
    /// Output selection JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SelectCommand {
    /// FLMI plus soft class balance plus optional quality.
    Cobra(CobraArgs),
    /// Graph-cut mutual information with the targets.
    Gcmi(GreedyArgs),
    /// Facility-location mutual information with the targets.
    Flmi(GreedyArgs),
    /// Top items by summed similarity to targets.
    SimScore(SimScoreArgs),
    /// Top items by cosine to their class text embedding.
    ClipScore(ClipScoreArgs),
    /// Uniform random draw.
    Random(RandomArgs),
    /// Maximal marginal relevance.
    Mmr(MmrArgs),
    /// Log-determinant mutual information with the targets (naive greedy).
    LogdetMi(LogDetArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VendiKernelArg {
    /// Cosine clamped at zero.
    Cosine,
    /// exp(-gamma * squared distance).
    Rbf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Selection JSON.
    #[arg(long)]
    pub selection: PathBuf,
    /// Embedding file (EMB1) for every item.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Similarity file (SPW1) used for coverage.
    #[arg(long)]
    pub sim: PathBuf,
    #[command(flatten)]
    pub ground: GroundArgs,
    /// Kernel for the Vendi score.
    #[arg(long, value_enum, default_value_t = VendiKernelArg::Cosine)]
    pub vendi_kernel: VendiKernelArg,
    /// RBF bandwidth for the Vendi kernel.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Output report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-class counts CSV (class,count).
    #[arg(long)]
    pub counts_csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ToyCommand {
    /// Generate the mixture, run COBRA and Sim-Score, write report.json and points.csv.
    Run(ToyRunArgs),
}

#[derive(Debug, Args)]
pub struct ToyRunArgs {
    /// Seed for data generation.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Items retrieved by each strategy.
    #[arg(long, default_value_t = 128)]
    pub budget: usize,
    /// Auxiliary pool size.
    #[arg(long, default_value_t = 25_000)]
    pub aux_total: usize,
    /// Neighbors kept per row of the sparse graph.
    #[arg(long, default_value_t = 100)]
    pub topk: usize,
    /// RBF bandwidth.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Greedy engine for COBRA.
    #[arg(long, value_enum, default_value_t = EngineArg::Lazy)]
    pub engine: EngineArg,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    /// Graph-cut identity, nearest-neighbor argmax, KL argmin, log-det paths.
    Lemmas,
    /// Greedy approximation bound and lazy/naive agreement.
    GreedyBound,
    /// Submodularity, monotonicity, normalization, cached gains.
    Properties,
    /// Every suite.
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run.
    #[arg(value_enum, default_value_t = SuiteArg::All)]
    pub suite: SuiteArg,
    /// Random instances per check.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optional report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum Failure {
    Core(Error),
    Usage(String),
    VerifyFailed(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn report(&self) -> (i32, &'static str, String) {
        match self {
            Failure::Core(e) => (e.exit_code(), e.kind(), e.to_string()),
            Failure::Usage(m) => (EXIT_USAGE, "usage", m.clone()),
            Failure::VerifyFailed(n) => (
                EXIT_VERIFY_FAILED,
                "verify-failed",
                format!("{n} checks failed"),
            ),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Parses `argv` (program name first), runs the command and returns the exit
/// status.
pub fn dispatch(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            return fail(Failure::Usage(
                e.kind().to_string() + ": " + first_line(&e.to_string()),
            ));
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(p) => p,
        Err(e) => return fail(Failure::Usage(e.to_string())),
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => 0,
        Err(f) => fail(f),
    }
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("").trim_start_matches("error: ")
}

fn fail(f: Failure) -> i32 {
    let (code, kind, msg) = f.report();
    eprintln!(
        "error: kind={kind} code={code} message={}",
        msg.replace('\n', " ")
    );
    code
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Sim(SimCommand::Build(a)) => sim_build(a),
        Command::Select(s) => select(s),
        Command::Metrics(a) => metrics(a),
        Command::Toy(ToyCommand::Run(a)) => toy_run(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn sim_build(a: SimBuildArgs) -> Outcome {
    let emb = io::read_embeddings(&a.embeddings)?;
    let gs = GroundSet::infer_classes(1, io::read_labels(&a.labels)?)?;
    let kernel = match a.kernel {
        KernelArg::Cosine => Kernel::CosineShifted,
        KernelArg::Rbf => Kernel::Rbf { gamma: a.gamma },
    };
    let spec = KernelSpec {
        kernel,
        per_row_cap: a.topk,
        class_restricted: a.class_restricted,
    };
    let sim = build_sparse(&emb, &gs, &spec)?;
    io::write_atomic(&a.out, &io::encode_similarity(&sim))?;
    eprintln!("wrote {} entries for {} items", sim.nnz(), sim.size());
    Ok(())
}

fn load_sim(path: &Path, gs: &GroundSet) -> Result<SparseSimilarity, Error> {
    let sim = io::read_similarity(path)?;
    if sim.size() != gs.total_count() {
        return Err(Error::DimensionMismatch {
            expected: gs.total_count(),
            got: sim.size(),
        });
    }
    Ok(sim)
}

fn write_selection(path: &Path, sel: &SelectionResult) -> Outcome {
    let mut json = sel.to_json();
    json.push('\n');
    io::write_atomic(path, json.as_bytes())?;
    Ok(())
}

/// Greedy under a global budget, or one greedy run per class concatenated.
fn greedy_select<O: Objective>(
    obj: &O,
    gs: &GroundSet,
    budget: &BudgetArgs,
    engine: Engine,
) -> Result<SelectionResult, Error> {
    let (sel, evaluations) = match (budget.budget, budget.per_class) {
        (Some(k), _) => {
            let run = maximize(obj, &BudgetConstraint::aux(gs, k)?, engine)?;
            (run.selection, run.evaluations)
        }
        (None, Some(b)) => {
            if b == 0 {
                return Err(Error::Validation(
                    "per-class budget must be at least 1".into(),
                ));
            }
            let mut sel = SelectionResult::new(obj.name(), b * gs.class_count());
            let mut evaluations = 0;
            for c in 0..gs.class_count() {
                let pool = gs.aux_of_class(c);
                if pool.is_empty() {
                    continue;
                }
                let run = maximize(
                    obj,
                    &BudgetConstraint::new(b.min(pool.len()), pool)?,
                    engine,
                )?;
                sel.selected.extend(run.selection.selected);
                sel.gains.extend(run.selection.gains);
                evaluations += run.evaluations;
            }
            (sel, evaluations)
        }
        (None, None) => unreachable!("clap requires one budget flag"),
    };
    eprintln!(
        "selected {} items with {} gain evaluations",
        sel.len(),
        evaluations
    );
    Ok(sel)
}

fn scored_select(
    name: &str,
    scores: &[f64],
    gs: &GroundSet,
    budget: &BudgetArgs,
) -> Result<SelectionResult, Error> {
    match (budget.budget, budget.per_class) {
        (Some(k), _) => select_topk(name, scores, gs, k),
        (None, Some(b)) => select_topk_per_class(name, scores, gs, b),
        (None, None) => unreachable!("clap requires one budget flag"),
    }
}

fn select(cmd: SelectCommand) -> Outcome {
    match cmd {
        SelectCommand::Cobra(a) => {
            let gs = a.greedy.ground.load()?;
            let sim = load_sim(&a.greedy.sim, &gs)?;
            let quality = match a.quality.as_deref() {
                None => None,
                Some("sim-score") => Some(sim_score_quality(&sim, &gs)),
                Some(p) => Some(io::read_quality(Path::new(p))?),
            };
            let params = CobraParams {
                lambda: a.lambda,
                mu: a.mu,
                quality,
            };
            let obj = Cobra::new(&sim, &gs, params)?;
            let sel = greedy_select(&obj, &gs, &a.greedy.budget, a.greedy.engine.into())?;
            write_selection(&a.greedy.out, &sel)
        }
        SelectCommand::Gcmi(a) => {
            let gs = a.ground.load()?;
            let sim = load_sim(&a.sim, &gs)?;
            let obj = Gcmi::against_targets(&sim, &gs)?;
            let sel = greedy_select(&obj, &gs, &a.budget, a.engine.into())?;
            write_selection(&a.out, &sel)
        }
        SelectCommand::Flmi(a) => {
            let gs = a.ground.load()?;
            let sim = load_sim(&a.sim, &gs)?;
            let obj = Flmi::new(&sim, &gs);
            let sel = greedy_select(&obj, &gs, &a.budget, a.engine.into())?;
            write_selection(&a.out, &sel)
        }
        SelectCommand::SimScore(a) => {
            let gs = a.ground.load()?;
            let sim = load_sim(&a.sim, &gs)?;
            let mode = match a.mode {
                SimScoreModeArg::SameClass => SimScoreMode::SameClass,
                SimScoreModeArg::AllTargets => SimScoreMode::AllTargets,
            };
            let scores = sim_score(&gs, &sim, mode)?;
            write_selection(
                &a.out,
                &scored_select("sim_score", &scores, &gs, &a.budget)?,
            )
        }
        SelectCommand::ClipScore(a) => {
            let gs = a.ground.load()?;
            let aux = io::read_embeddings(&a.aux_embeddings)?;
            let text = io::read_embeddings(&a.text_embeddings)?;
            let scores = clip_score(&aux, &text, &gs)?;
            write_selection(
                &a.out,
                &scored_select("clip_score", &scores, &gs, &a.budget)?,
            )
        }
        SelectCommand::Random(a) => {
            let gs = a.ground.load()?;
            let sel = match (a.budget.budget, a.budget.per_class) {
                (Some(k), _) => select_random_global(&gs, k, a.seed)?,
                (None, Some(b)) => select_random(&gs, b, a.seed)?,
                (None, None) => unreachable!("clap requires one budget flag"),
            };
            write_selection(&a.out, &sel)
        }
        SelectCommand::Mmr(a) => {
            let gs = a.ground.load()?;
            let sim = load_sim(&a.sim, &gs)?;
            let params = MmrParams {
                lambda_mmr: a.lambda_mmr,
            };
            write_selection(&a.out, &select_mmr(&gs, &sim, &params, a.budget)?)
        }
        SelectCommand::LogdetMi(a) => {
            let gs = a.ground.load()?;
            let emb = io::read_embeddings(&a.embeddings)?;
            if emb.rows() != gs.total_count() {
                return Err(Error::DimensionMismatch {
                    expected: gs.total_count(),
                    got: emb.rows(),
                }
                .into());
            }
            let gram = shifted_cosine_gram(&emb, a.ridge)?;
            let obj = LogDetMi::new(gram, gs.target_range().collect())?;
            // Not submodular, so stale gains are not upper bounds: always naive.
            let run = maximize(&obj, &BudgetConstraint::aux(&gs, a.budget)?, Engine::Naive)?;
            write_selection(&a.out, &run.selection)
        }
    }
}

fn metrics(a: MetricsArgs) -> Outcome {
    let gs = a.ground.load()?;
    let sel = io::read_selection(&a.selection)?;
    let emb = io::read_embeddings(&a.embeddings)?;
    let sim = load_sim(&a.sim, &gs)?;
    let kernel = match a.vendi_kernel {
        VendiKernelArg::Cosine => VendiKernel::Cosine,
        VendiKernelArg::Rbf => VendiKernel::Rbf { gamma: a.gamma },
    };
    let report = metric_report(&sel, &emb, &sim, &gs, kernel)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    io::write_atomic(&a.out, json.as_bytes())?;
    if let Some(p) = a.counts_csv {
        let mut csv = String::from("class,count\n");
        for (c, k) in report.balance.class_counts.iter().enumerate() {
            csv.push_str(&format!("{c},{k}\n"));
        }
        io::write_atomic(&p, csv.as_bytes())?;
    }
    Ok(())
}

fn toy_run(a: ToyRunArgs) -> Outcome {
    let config = ToyConfig {
        seed: a.seed,
        aux_total: a.aux_total,
        ..ToyConfig::default()
    };
    let options = ToyOptions {
        budget: a.budget,
        gamma: a.gamma,
        per_row_cap: a.topk,
        engine: a.engine.into(),
    };
    let outcome = run_toy_comparison(&config, &options)?;
    std::fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
    let mut json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    json.push('\n');
    io::write_atomic(&a.out_dir.join("report.json"), json.as_bytes())?;
    io::write_atomic(
        &a.out_dir.join("points.csv"),
        points_csv(&outcome).as_bytes(),
    )?;
    let r = &outcome.report;
    eprintln!(
        "coverage cobra {:.4} vs sim_score {:.4}; vendi {:.4} vs {:.4}",
        r.cobra.coverage, r.sim_score.coverage, r.cobra.vendi, r.sim_score.vendi
    );
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Outcome {
    let suite = match a.suite {
        SuiteArg::Lemmas => Suite::Lemmas,
        SuiteArg::GreedyBound => Suite::GreedyBound,
        SuiteArg::Properties => Suite::Properties,
        SuiteArg::All => Suite::All,
    };
    let report = verify(suite, a.trials, a.seed)?;
    print!("{}", report.summary());
    if let Some(p) = a.out {
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        io::write_atomic(&p, json.as_bytes())?;
    }
    let failed = report.checks.iter().filter(|c| !c.ok()).count();
    if failed > 0 {
        return Err(Failure::VerifyFailed(failed));
    }
    Ok(())
}

/// The clap command tree, for help rendering and introspection.
pub fn command() -> clap::Command {
    Cli::command()
}
