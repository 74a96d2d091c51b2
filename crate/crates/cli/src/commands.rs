use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use febaa::augmentation::{self, SelectionMode, ViewConfig};
use febaa::evaluation::{self, EvalConfig};
use febaa::gcl;
use febaa::graph::{self, AttributedGraph};
use febaa::ranking::{self, FeatureRanking, FeatureScorer, GclScorer, VarianceScorer};
use febaa::sweep;
use febaa::Matrix;

use crate::config::{parse_config, resolve_seed, RunConfig, ScorerKind};
use crate::error::CliError;
use crate::manifest::RunDir;

#[derive(Debug, Parser)]
#[command(
    name = "febaa",
    version,
    about = "Feature-based adaptive augmentation toolkit"
)]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Root directory for per-run output directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out_root: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a dataset, printing a JSON report.
    Ingest(IngestArgs),
    /// Rank features by single-column masking.
    Rank(RankArgs),
    /// Dump one augmented view for inspection.
    Augment(AugmentArgs),
    /// Train the contrastive encoder.
    Train(SeedArgs),
    /// Linear evaluation of an embedding matrix.
    Eval(EvalArgs),
    /// Ratio / probability / position grid.
    Sweep(SeedArgs),
    /// Edge drop vs only-feature-drop ablation.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub edges: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Epochs per scoring run (i).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Rounds to average over (n).
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub scorer: Option<ScorerKind>,
    /// Copy of the ranking CSV outside the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=2))]
    pub view: u64,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Defaults to `data.labels` from the config.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Supplies eval settings and seed, and enables a run directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the `split,score` CSV here (without a config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Runs per arm; defaults to `sweep.runs`.
    #[arg(long)]
    pub runs: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Rank(a) => rank(&cli.out_root, a),
        Command::Augment(a) => augment(&cli.out_root, a),
        Command::Train(a) => train(&cli.out_root, a),
        Command::Eval(a) => eval(&cli.out_root, a),
        Command::Sweep(a) => sweep_cmd(&cli.out_root, a),
        Command::Ablate(a) => ablate(&cli.out_root, a),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let mut cfg = parse_config(path)?;
    resolve_seed(&mut cfg, seed)?;
    Ok(cfg)
}

fn load_graph(cfg: &RunConfig) -> Result<AttributedGraph, CliError> {
    Ok(graph::load_graph(
        &cfg.data.edges,
        &cfg.data.features,
        cfg.data.labels.as_deref(),
    )?)
}

fn needs_ranking(cfg: &RunConfig) -> bool {
    [&cfg.view1, &cfg.view2]
        .iter()
        .any(|v| v.selection_mode == SelectionMode::Influential)
}

fn load_ranking(cfg: &RunConfig) -> Result<FeatureRanking, CliError> {
    let path = cfg.data.ranking.as_ref().ok_or_else(|| {
        CliError::Config(vec!["ranking required: data.ranking is not set".into()])
    })?;
    Ok(ranking::load_ranking(path)?)
}

fn optional_ranking(cfg: &RunConfig) -> Result<Option<FeatureRanking>, CliError> {
    needs_ranking(cfg).then(|| load_ranking(cfg)).transpose()
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    let (edges, features, labels) = match &a.config {
        Some(path) => {
            let cfg = parse_config(path)?;
            (
                cfg.data.edges,
                cfg.data.features,
                a.labels.or(cfg.data.labels),
            )
        }
        None => (
            a.edges.expect("required by clap"),
            a.features.expect("required by clap"),
            a.labels,
        ),
    };
    let g = graph::load_graph(&edges, &features, labels.as_deref())?;
    let report = serde_json::to_string_pretty(&g.stats()).expect("stats serialize");
    if let Some(out) = &a.out {
        fs::write(out, format!("{report}\n")).map_err(|e| CliError::io(out, e))?;
    }
    println!("{report}");
    Ok(())
}

/// The scorer trains without a ranking, so influential views fall back to
/// all-feature masking with the same probability and edge drop.
fn ranking_train_config(cfg: &RunConfig) -> gcl::TrainConfig {
    let plain = |v: &ViewConfig| match v.selection_mode {
        SelectionMode::Influential => ViewConfig {
            rng_seed: v.rng_seed,
            ..ViewConfig::all_features(v.feature_masking_probability, v.edge_drop_probability)
        },
        _ => v.clone(),
    };
    gcl::TrainConfig {
        view1: plain(&cfg.view1),
        view2: plain(&cfg.view2),
        ..cfg.train_config()
    }
}

fn rank(out_root: &Path, a: RankArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config, a.seed)?;
    if let Some(e) = a.epochs {
        cfg.ranking.epochs = e;
    }
    if let Some(n) = a.rounds {
        cfg.ranking.rounds = n;
    }
    if let Some(s) = a.scorer {
        cfg.ranking.scorer = s;
    }
    cfg.validate()?;
    let g = load_graph(&cfg)?;
    let scorer: Box<dyn FeatureScorer> = match cfg.ranking.scorer {
        ScorerKind::Gcl => Box::new(GclScorer::new(ranking_train_config(&cfg), cfg.eval.clone())),
        ScorerKind::VarianceStub => Box::new(VarianceScorer),
    };
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let counting = |masked: &AttributedGraph, task: &ranking::ScoringTask| {
        calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        scorer.score(masked, task)
    };
    let r = ranking::rank_features(
        &g,
        &counting,
        cfg.ranking.epochs,
        cfg.ranking.rounds,
        cfg.seed,
    )?;
    let budget =
        ranking::pretraining_budget(g.num_features(), cfg.ranking.epochs, cfg.ranking.rounds);

    let csv = r.to_csv();
    let mut run = RunDir::create(out_root, "rank", &cfg)?;
    run.write("ranking.csv", &csv)?;
    if let Some(out) = &a.out {
        fs::write(out, &csv).map_err(|e| CliError::io(out, e))?;
    }
    println!("run_dir={}", run.path().display());
    run.finish()?;
    println!(
        "scorer_calls={} budget={}",
        calls.load(std::sync::atomic::Ordering::Relaxed),
        budget.total_iterations
    );
    Ok(())
}

fn augment(out_root: &Path, a: AugmentArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, a.seed)?;
    let g = load_graph(&cfg)?;
    let view = if a.view == 1 { &cfg.view1 } else { &cfg.view2 };
    let ranking = (view.selection_mode == SelectionMode::Influential)
        .then(|| load_ranking(&cfg))
        .transpose()?;
    let mut sel = augmentation::selection_rng(cfg.seed, a.view, view);
    let cf = augmentation::candidate_features(g.num_features(), view, ranking.as_ref(), &mut sel)?;
    let mut rng = augmentation::epoch_rng(cfg.seed, a.view, view, a.epoch);
    let v = augmentation::apply_view(&g, &cf, view, &mut rng)?;

    let mut run = RunDir::create(out_root, "augment", &cfg)?;
    let tag = format!("view{}_epoch{}", a.view, a.epoch);
    run.write(&format!("{tag}_features.csv"), &matrix_csv(&v.features))?;
    let edges: String = v.edges.iter().map(|(s, t)| format!("{s} {t}\n")).collect();
    run.write(&format!("{tag}_edges.txt"), &edges)?;
    let summary = serde_json::json!({
        "candidate_features": cf.indices(),
        "masked_columns": v.masked_columns,
        "dropped_edges": v.dropped_edges,
        "retained_edges": v.edges.len(),
    });
    run.write(
        &format!("{tag}.json"),
        &(serde_json::to_string_pretty(&summary).expect("json") + "\n"),
    )?;
    println!("run_dir={}", run.path().display());
    println!(
        "candidates={} masked={} dropped_edges={}",
        cf.len(),
        v.masked_columns.len(),
        v.dropped_edges
    );
    run.finish()?;
    Ok(())
}

pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn loss_csv(trace: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in trace.iter().enumerate() {
        writeln!(out, "{epoch},{loss}").unwrap();
    }
    out
}

fn train(out_root: &Path, a: SeedArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, a.seed)?;
    let g = load_graph(&cfg)?;
    let ranking = optional_ranking(&cfg)?;
    let result = gcl::train(&g, ranking.as_ref(), &cfg.train_config())?;

    let mut run = RunDir::create(out_root, "train", &cfg)?;
    run.write("loss.csv", &loss_csv(&result.loss_trace))?;
    run.write("embeddings.csv", &matrix_csv(&result.embeddings))?;
    println!("run_dir={}", run.path().display());
    if let Some(last) = result.loss_trace.last() {
        println!("final_loss={last}");
    }
    run.finish()?;
    Ok(())
}

fn scores_csv(scores: &[f64]) -> String {
    let mut out = String::from("split,score\n");
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{i},{s}").unwrap();
    }
    out
}

fn eval(out_root: &Path, a: EvalArgs) -> Result<(), CliError> {
    let cfg = a
        .config
        .as_deref()
        .map(|p| load_config(p, a.seed))
        .transpose()?;
    let labels_path = a
        .labels
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.data.labels.clone()))
        .ok_or_else(|| CliError::Usage("eval needs --labels or data.labels in --config".into()))?;
    let embeddings = graph::read_feature_csv(&a.embeddings)?;
    let labels = graph::read_labels(&labels_path)?;
    let (eval_cfg, seed) = match &cfg {
        Some(c) => (c.eval.clone(), c.seed),
        None => (EvalConfig::default(), a.seed.unwrap_or(0)),
    };
    let splits = evaluation::generate_splits(
        labels.len(),
        eval_cfg.train_fraction,
        eval_cfg.num_splits,
        seed,
    )?;
    let result = evaluation::linear_evaluate(&embeddings, &labels, &splits, &eval_cfg)?;
    let csv = scores_csv(&result.per_split_scores);
    match &cfg {
        Some(c) => {
            let mut run = RunDir::create(out_root, "eval", c)?;
            run.write("scores.csv", &csv)?;
            println!("run_dir={}", run.path().display());
            run.finish()?;
        }
        None => {
            if let Some(out) = &a.out {
                fs::write(out, &csv).map_err(|e| CliError::io(out, e))?;
            }
        }
    }
    println!("{result}");
    Ok(())
}

fn sweep_cmd(out_root: &Path, a: SeedArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, a.seed)?;
    let g = load_graph(&cfg)?;
    let ranking = load_ranking(&cfg)?;
    let table = sweep::run_sweep(&g, &ranking, &cfg.sweep_grid())?;
    let report = sweep::pos_win_analysis(&[(cfg.name.clone(), table.clone())]);

    let mut run = RunDir::create(out_root, "sweep", &cfg)?;
    run.write("sweep.csv", &table.to_csv())?;
    for pos in &cfg.sweep.positions {
        run.write(&format!("plot_{pos}.csv"), &table.plot_csv(*pos))?;
    }
    run.write("pos_wins.csv", &report.to_csv())?;
    println!("run_dir={}", run.path().display());
    for row in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "warning: cell {}x{} {} failed: {}",
            row.probability,
            row.ratio,
            row.pos,
            row.error.as_deref().unwrap_or_default()
        );
    }
    for skipped in &report.unmatched {
        eprintln!("warning: unmatched {skipped}");
    }
    print!("{}", report.to_csv());
    run.finish()?;
    Ok(())
}

fn ablate(out_root: &Path, a: AblateArgs) -> Result<(), CliError> {
    let cfg = load_config(&a.config, a.seed)?;
    let g = load_graph(&cfg)?;
    let ranking = optional_ranking(&cfg)?;
    let runs = a.runs.unwrap_or(cfg.sweep.runs);
    let result = sweep::ablation_ofd(
        &cfg.name,
        &g,
        ranking.as_ref(),
        &cfg.train_config(),
        &cfg.eval,
        runs,
    )?;
    let csv = sweep::ablation_csv(&[result]);
    let mut run = RunDir::create(out_root, "ablate", &cfg)?;
    run.write("ablation.csv", &csv)?;
    println!("run_dir={}", run.path().display());
    print!("{csv}");
    run.finish()?;
    Ok(())
}
