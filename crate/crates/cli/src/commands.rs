//! The five subcommands as library functions.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use causalwalk_core::scm::{deviations, verify_frontdoor};
use causalwalk_core::synth::{generate, GeneratorConfig, Splits};
use causalwalk_core::walk::train::EpochMetrics;
use causalwalk_core::walk::{
    evaluate, train, EvalMetrics, EvalMode, ModelConfig, Objective, TrainConfig,
};
use causalwalk_core::{ClaimEvidenceGraph, FeaturizerConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::{objective_name, Checkpoint};
use crate::dataset::{load_graphs, split_path, write_splits};
use crate::error::{io_err, CliError, Result};
use crate::report;
use crate::scm_file;

#[derive(Debug, Parser)]
#[command(name = "causalwalk", version, about = "Walk-based causal reasoning for multi-hop fact verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic train/dev/test splits.
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint and per-epoch log.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one or more splits.
    Eval(EvalArgs),
    /// Compare causal, walk-only and evidence-supervised training over seeds.
    Ablate(AblateArgs),
    /// Check the front-door identity on random or given SCMs.
    ScmVerify(ScmVerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Causal,
    WalkOnly,
}

impl Mode {
    pub fn objective(self) -> Objective {
        match self {
            Mode::Causal => Objective::Full,
            Mode::WalkOnly => Objective::WalkOnly,
        }
    }

    pub fn eval_mode(self) -> EvalMode {
        self.objective().eval_mode()
    }

    pub fn name(self) -> &'static str {
        objective_name(self.objective())
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenDataArgs {
    /// Output directory for `<split>.jsonl` files.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub n_train: usize,
    #[arg(long, default_value_t = 200)]
    pub n_dev: usize,
    #[arg(long, default_value_t = 200)]
    pub n_test: usize,
    #[arg(long, default_value_t = 3)]
    pub chain_length: usize,
    #[arg(long, default_value_t = 8)]
    pub n_distractors: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Probability that the shortcut sentence agrees with the label.
    #[arg(long, default_value_t = 0.0)]
    pub bias: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenDataArgs {
    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            n_train: self.n_train,
            n_dev: self.n_dev,
            n_test: self.n_test,
            chain_length: self.chain_length,
            n_distractors: self.n_distractors,
            classes: self.classes,
            bias_strength: self.bias,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Hashed feature dimension.
    #[arg(long, default_value_t = 256)]
    pub features: usize,
    /// Hidden size d of node, path and graph representations.
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    /// Hidden width of the edge and attention scorers.
    #[arg(long, default_value_t = 64)]
    pub mlp_hidden: usize,
    #[arg(long, default_value_t = 3)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 5)]
    pub max_hops: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Dictionary entries per class.
    #[arg(long, default_value_t = 5)]
    pub dict_k: usize,
    /// Number of classes; inferred from the training labels when absent.
    #[arg(long)]
    pub classes: Option<usize>,
}

impl Default for ModelArgs {
    fn default() -> Self {
        Self {
            features: 256,
            dim: 64,
            layers: 2,
            mlp_hidden: 64,
            beam_width: 3,
            max_hops: 5,
            alpha: 0.1,
            dict_k: 5,
            classes: None,
        }
    }
}

impl ModelArgs {
    pub fn featurizer(&self) -> FeaturizerConfig {
        FeaturizerConfig {
            dim: self.features,
            ..FeaturizerConfig::default()
        }
    }

    pub fn model(&self, classes: usize) -> ModelConfig {
        let mut c = ModelConfig {
            featurizer: self.featurizer(),
            mlp_hidden: self.mlp_hidden,
            classes,
            beam_width: self.beam_width,
            max_hops: self.max_hops,
            alpha: self.alpha,
            dict_k: self.dict_k,
            ..ModelConfig::default()
        };
        c.gconv.layers = self.layers;
        c.gconv.hidden_dim = self.dim;
        c
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimArgs {
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 4)]
    pub batch_size: usize,
    /// Weight of the evidence-label loss when supervision is enabled.
    #[arg(long, default_value_t = 0.5)]
    pub supervision_weight: f64,
}

impl Default for OptimArgs {
    fn default() -> Self {
        Self {
            lr: 3e-3,
            epochs: 10,
            batch_size: 4,
            supervision_weight: 0.5,
        }
    }
}

impl OptimArgs {
    pub fn train_config(&self, seed: u64, mode: Mode, evidence_supervision: bool) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            objective: mode.objective(),
            evidence_supervision,
            supervision_weight: self.supervision_weight,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Receives `model.ckpt`, `train_log.csv` and `train_config.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Causal)]
    pub mode: Mode,
    /// Add the evidence-label loss on transition rows.
    #[arg(long)]
    pub evidence_supervision: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Comma-separated split names.
    #[arg(long, value_delimiter = ',', default_value = "dev,test_id,test_adversarial,test_symmetric")]
    pub splits: Vec<String>,
    /// Prediction head; defaults to the one the checkpoint was trained for.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Receives `metrics.csv` and `eval_config.json`; defaults to the
    /// checkpoint's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AblateArgs {
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of seeds, starting at `--seed`.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "test_id,test_adversarial,test_symmetric")]
    pub splits: Vec<String>,
    /// Comma-separated subset of causal, walk-only, evidence.
    #[arg(long, value_delimiter = ',', default_value = "causal,walk-only,evidence")]
    pub variants: Vec<Variant>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub optim: OptimArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Full objective, causal head.
    Causal,
    /// Walk loss only, path-only head.
    WalkOnly,
    /// Full objective plus evidence-label supervision.
    Evidence,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Causal => "causal",
            Variant::WalkOnly => "walk-only",
            Variant::Evidence => "causal+evidence",
        }
    }

    fn setup(self) -> (Mode, bool) {
        match self {
            Variant::Causal => (Mode::Causal, false),
            Variant::WalkOnly => (Mode::WalkOnly, false),
            Variant::Evidence => (Mode::Causal, true),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScmVerifyArgs {
    /// Number of random SCMs.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    /// Largest cardinality drawn for each variable (2..=8).
    #[arg(long, default_value_t = 8)]
    pub max_card: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// SCM description files checked in addition to the random models.
    #[arg(long)]
    pub scm_file: Vec<PathBuf>,
    /// Largest accepted |front-door - interventional|.
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn echo_config<T: Serialize>(dir: Option<&Path>, command: &str, args: &T) -> Result<()> {
    let json = serde_json::to_string(args)?;
    println!("config {command} {json}");
    if let Some(dir) = dir {
        create_dir(dir)?;
        let path = dir.join(format!("{command}_config.json"));
        fs::write(&path, serde_json::to_string_pretty(args)? + "\n").map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn gen_data(args: &GenDataArgs) -> Result<Splits> {
    let splits = generate(&args.generator())?;
    write_splits(&args.data_dir, &splits)?;
    echo_config(Some(&args.data_dir), "gen-data", args)?;
    for name in Splits::NAMES {
        println!("wrote {} ({} examples)", split_path(&args.data_dir, name).display(), splits.get(name).map_or(0, <[_]>::len));
    }
    Ok(splits)
}

fn infer_classes(graphs: &[ClaimEvidenceGraph], requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| {
        graphs.iter().filter_map(|g| g.label).max().map_or(2, |m| (m + 1).max(2))
    })
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub checkpoint_path: PathBuf,
    pub history: Vec<EpochMetrics>,
}

pub fn run_train(args: &TrainArgs) -> Result<TrainOutcome> {
    echo_config(Some(&args.out_dir), "train", args)?;
    let featurizer = args.model.featurizer();
    let train_set = load_graphs(&args.data_dir, "train", &featurizer)?;
    let dev_path = split_path(&args.data_dir, "dev");
    let dev_set = if dev_path.exists() {
        Some(load_graphs(&args.data_dir, "dev", &featurizer)?)
    } else {
        None
    };
    let model = args.model.model(infer_classes(&train_set, args.model.classes));
    let tc = args.optim.train_config(args.seed, args.mode, args.evidence_supervision);
    let trained = train(&train_set, dev_set.as_deref().filter(|d| !d.is_empty()), &model, &tc)?;
    for h in &trained.history {
        let dev = h.dev_accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        println!(
            "epoch {:>3}  L_walk {:.6}  L_causal {:.6}  L_total {:.6}  dev_acc {dev}",
            h.epoch, h.loss_walk, h.loss_causal, h.loss_total
        );
    }
    report::write_train_log(&args.out_dir.join("train_log.csv"), &trained.history)?;
    let checkpoint = Checkpoint {
        config: trained.config,
        params: trained.params,
        dictionary: trained.dictionary,
        objective: args.mode.objective(),
        seed: args.seed,
    };
    let checkpoint_path = args.out_dir.join("model.ckpt");
    checkpoint.save(&checkpoint_path)?;
    println!("wrote {}", checkpoint_path.display());
    Ok(TrainOutcome {
        checkpoint,
        checkpoint_path,
        history: trained.history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitMetrics {
    pub split: String,
    pub mode: Mode,
    pub metrics: EvalMetrics,
}

fn mode_of(objective: Objective) -> Mode {
    match objective {
        Objective::Full => Mode::Causal,
        Objective::WalkOnly => Mode::WalkOnly,
    }
}

pub fn evaluate_split(
    data_dir: &Path,
    split: &str,
    checkpoint: &Checkpoint,
    mode: Mode,
) -> Result<SplitMetrics> {
    let graphs = load_graphs(data_dir, split, &checkpoint.config.featurizer)?;
    let metrics = evaluate(
        &graphs,
        &checkpoint.params,
        &checkpoint.dictionary,
        &checkpoint.config,
        mode.eval_mode(),
    )?;
    Ok(SplitMetrics {
        split: split.to_string(),
        mode,
        metrics,
    })
}

pub fn run_eval(args: &EvalArgs) -> Result<Vec<SplitMetrics>> {
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| args.checkpoint.parent().map(Path::to_path_buf).unwrap_or_default());
    echo_config(Some(&out_dir), "eval", args)?;
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let mode = args.mode.unwrap_or_else(|| mode_of(checkpoint.objective));
    let mut results = Vec::new();
    for split in &args.splits {
        let r = evaluate_split(&args.data_dir, split, &checkpoint, mode)?;
        println!(
            "{:<18} mode {:<9} accuracy {:.4} ({} examples)",
            r.split,
            mode.name(),
            r.metrics.accuracy,
            r.metrics.count
        );
        results.push(r);
    }
    report::write_metrics(&out_dir.join("metrics.csv"), &results)?;
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRun {
    pub variant: &'static str,
    pub seed: u64,
    pub split: String,
    pub accuracy: f64,
    pub mean_transition_entropy: f64,
    pub train_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub variant: &'static str,
    pub split: String,
    pub seeds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_entropy: f64,
    pub std_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub runs: Vec<AblationRun>,
    pub summary: Vec<AblationSummary>,
}

impl AblationReport {
    pub fn summary_for(&self, variant: Variant, split: &str) -> Option<&AblationSummary> {
        self.summary
            .iter()
            .find(|s| s.variant == variant.name() && s.split == split)
    }

    /// Total training wall time of one variant across seeds.
    pub fn train_seconds(&self, variant: Variant) -> f64 {
        let mut seen = Vec::new();
        self.runs
            .iter()
            .filter(|r| r.variant == variant.name())
            .filter(|r| {
                let first = !seen.contains(&r.seed);
                seen.push(r.seed);
                first
            })
            .map(|r| r.train_seconds)
            .sum()
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains every variant on every seed and evaluates on `splits`.
/// Graph featurization happens once and is shared by all runs.
pub fn ablate_graphs(
    train_set: &[ClaimEvidenceGraph],
    eval_sets: &[(String, Vec<ClaimEvidenceGraph>)],
    model: &ModelConfig,
    optim: &OptimArgs,
    variants: &[Variant],
    seeds: &[u64],
) -> Result<AblationReport> {
    let mut runs = Vec::new();
    for &variant in variants {
        let (mode, supervised) = variant.setup();
        for &seed in seeds {
            let tc = optim.train_config(seed, mode, supervised);
            let start = Instant::now();
            let trained = train(train_set, None, model, &tc)?;
            let train_seconds = start.elapsed().as_secs_f64();
            for (split, graphs) in eval_sets {
                let m = evaluate(graphs, &trained.params, &trained.dictionary, model, mode.eval_mode())?;
                runs.push(AblationRun {
                    variant: variant.name(),
                    seed,
                    split: split.clone(),
                    accuracy: m.accuracy,
                    mean_transition_entropy: m.mean_transition_entropy,
                    train_seconds,
                });
            }
        }
    }
    let mut summary = Vec::new();
    for &variant in variants {
        for (split, _) in eval_sets {
            let rows: Vec<&AblationRun> = runs
                .iter()
                .filter(|r| r.variant == variant.name() && &r.split == split)
                .collect();
            let acc: Vec<f64> = rows.iter().map(|r| r.accuracy).collect();
            let ent: Vec<f64> = rows.iter().map(|r| r.mean_transition_entropy).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&acc);
            let (mean_entropy, std_entropy) = mean_std(&ent);
            summary.push(AblationSummary {
                variant: variant.name(),
                split: split.clone(),
                seeds: rows.len(),
                mean_accuracy,
                std_accuracy,
                mean_entropy,
                std_entropy,
            });
        }
    }
    Ok(AblationReport { runs, summary })
}

pub fn run_ablate(args: &AblateArgs) -> Result<AblationReport> {
    if args.seeds == 0 || args.variants.is_empty() || args.splits.is_empty() {
        return Err(CliError::Usage("ablate needs at least one seed, variant and split".into()));
    }
    echo_config(Some(&args.out_dir), "ablate", args)?;
    let featurizer = args.model.featurizer();
    let train_set = load_graphs(&args.data_dir, "train", &featurizer)?;
    let eval_sets = args
        .splits
        .iter()
        .map(|s| Ok((s.clone(), load_graphs(&args.data_dir, s, &featurizer)?)))
        .collect::<Result<Vec<_>>>()?;
    let model = args.model.model(infer_classes(&train_set, args.model.classes));
    let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| args.seed + i).collect();
    let report = ablate_graphs(&train_set, &eval_sets, &model, &args.optim, &args.variants, &seeds)?;
    report::write_ablation(&args.out_dir, &report)?;
    println!("{:<16} {:<18} {:>8} {:>8} {:>9} {:>8}", "variant", "split", "acc", "±", "entropy", "±");
    for s in &report.summary {
        println!(
            "{:<16} {:<18} {:>8.4} {:>8.4} {:>9.4} {:>8.4}",
            s.variant, s.split, s.mean_accuracy, s.std_accuracy, s.mean_entropy, s.std_entropy
        );
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScmVerifyReport {
    pub models: usize,
    pub max_deviation: f64,
    pub max_confounding_gap: f64,
    pub passed: bool,
}

pub fn run_scm_verify(args: &ScmVerifyArgs) -> Result<ScmVerifyReport> {
    echo_config(args.out_dir.as_deref(), "scm-verify", args)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let base = verify_frontdoor(args.count, args.max_card, &mut rng)?;
    let mut report = ScmVerifyReport {
        models: base.models,
        max_deviation: base.max_deviation,
        max_confounding_gap: base.max_confounding_gap,
        passed: false,
    };
    for path in &args.scm_file {
        let scm = scm_file::load(path)?;
        let (dev, gap) = deviations(&scm)?;
        println!("{}: max deviation {dev:.3e}, confounding gap {gap:.3e}", path.display());
        report.models += 1;
        report.max_deviation = report.max_deviation.max(dev);
        report.max_confounding_gap = report.max_confounding_gap.max(gap);
    }
    report.passed = report.max_deviation < args.tolerance;
    println!(
        "models {} max_deviation {:.3e} max_confounding_gap {:.3e} {}",
        report.models,
        report.max_deviation,
        report.max_confounding_gap,
        if report.passed { "PASS" } else { "FAIL" }
    );
    if let Some(dir) = &args.out_dir {
        let path = dir.join("scm_verify.json");
        fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(io_err(&path))?;
    }
    Ok(report)
}

/// Runs a parsed command line; `Ok(false)` signals a failed check.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::GenData(a) => gen_data(a).map(|_| true),
        Command::Train(a) => run_train(a).map(|_| true),
        Command::Eval(a) => run_eval(a).map(|_| true),
        Command::Ablate(a) => run_ablate(a).map(|_| true),
        Command::ScmVerify(a) => run_scm_verify(a).map(|r| r.passed),
    }
}
