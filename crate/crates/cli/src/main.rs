use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use roadboost::boost::{score_patches, train_adaboost, StrongClassifier};
use roadboost::dataset::{generate_synthetic_corpus, load_dataset, save_dataset, ClassLabel, ImagePatch};
use roadboost::harness::{
    aggregate, create_tasks, input_digest, render_report, run, Archive, ClassifierEvaluator, FaultPlan, RunOptions,
    RunReport,
};
use roadboost::mining::mine;
use roadboost::par::Parallelism;
use roadboost::presence::{accuracy_percentiles, cdf_svg, roc_curve, roc_svg, roc_table};

mod config;

use config::{required, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "roadboost", version, about = "Train, mine and evaluate roadside vehicle detectors")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `workers` from the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides `out` from the config. The directory must exist.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus into the output directory.
    Gen,
    /// Boost a classifier on `train.dataset`.
    Train,
    /// Grow a training set from `mine.population`, starting at `mine.initial`.
    Mine,
    /// Evaluate a classifier on `eval.dataset` with the worker pool.
    Eval {
        /// Archive root; falls back to `eval.archive`.
        #[arg(long, env = "ROADBOOST_ARCHIVE")]
        archive: Option<PathBuf>,
    },
    /// Sweep the decision threshold over `roc.dataset`.
    Roc,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cli.out.is_some() {
        cfg.out = cli.out;
    }
    cfg.validate_common()?;
    match cli.command {
        Command::Gen => gen(&cfg),
        Command::Train => train(&cfg),
        Command::Mine => mine_cmd(&cfg),
        Command::Eval { archive } => eval(&cfg, archive),
        Command::Roc => roc(&cfg),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn gen(cfg: &RunConfig) -> Result<()> {
    let synth = cfg.synthetic()?;
    let out = cfg.out_dir()?;
    let corpus = generate_synthetic_corpus(&synth)?;
    let manifest = save_dataset(&corpus.dataset, out)?;
    println!("wrote {} frames to {}", corpus.dataset.len(), manifest.display());
    Ok(())
}

fn train(cfg: &RunConfig) -> Result<()> {
    let train_cfg = cfg.train_config()?;
    let index = cfg.feature_index()?;
    let dataset_path = required(&cfg.train.dataset, "train.dataset")?;
    let out = cfg.out_dir()?;
    let dataset = load_dataset(dataset_path)?;
    let outcome = train_adaboost(&dataset, &index, &train_cfg)?;
    outcome.classifier.save(&out.join("classifier.txt"))?;
    write(&out.join("history.tsv"), &outcome.history_table())?;
    println!(
        "trained {} stumps ({}), final training error {}",
        outcome.classifier.n_c(),
        outcome.stop_reason.as_str(),
        outcome.history.last().map_or(f64::NAN, |r| r.training_error)
    );
    Ok(())
}

fn mine_cmd(cfg: &RunConfig) -> Result<()> {
    let train_cfg = cfg.train_config()?;
    let mining_cfg = cfg.mining_config()?;
    let index = cfg.feature_index()?;
    let initial_path = required(&cfg.mine.initial, "mine.initial")?;
    let population_path = required(&cfg.mine.population, "mine.population")?;
    let out = cfg.out_dir()?;
    let initial = load_dataset(initial_path)?;
    let population = load_dataset(population_path)?;
    let outcome = mine(&initial, &population, &mining_cfg, &train_cfg, &index)?;
    save_dataset(&outcome.samples, &out.join("samples"))?;
    outcome.classifier.save(&out.join("classifier.txt"))?;
    write(&out.join("mining_history.tsv"), &outcome.history.to_table())?;
    println!(
        "mined {} samples over {} iterations ({})",
        outcome.samples.len(),
        outcome.history.records.len(),
        outcome.stop_reason.as_str()
    );
    Ok(())
}

fn eval(cfg: &RunConfig, archive: Option<PathBuf>) -> Result<()> {
    cfg.validate_eval()?;
    let e = &cfg.eval;
    let index = cfg.feature_index()?;
    let dataset_path = required(&e.dataset, "eval.dataset")?;
    let archive = archive.or_else(|| e.archive.clone());
    let dataset = load_dataset(dataset_path)?;
    if e.dry_run {
        let tasks = create_tasks(&dataset, &e.query, "", &e.run_id)?;
        println!("{} tasks match {:?}", tasks.len(), e.query);
        return Ok(());
    }
    let classifier = StrongClassifier::load(required(&e.classifier, "eval.classifier")?)?;
    let version = classifier.feature_index_version.to_string();
    let tasks = create_tasks(&dataset, &e.query, &version, &e.run_id)?;
    let out = cfg.out_dir()?;
    let evaluator = ClassifierEvaluator::new(&dataset, &classifier, &index)?;
    let plan = FaultPlan::seeded(&tasks, e.fault_seed.unwrap_or(cfg.seed()), e.fault_rate, e.fault_max, e.max_retries);
    let options = RunOptions {
        worker_count: cfg.workers(),
        scheduler_seed: cfg.seed(),
        max_failed_fraction: e.max_failed_fraction,
    };
    let results = run(&tasks, &plan, &evaluator, &options)?;
    let stats = aggregate(&results)?;
    let report = RunReport {
        run_id: e.run_id.clone(),
        classifier_version: version.clone(),
        query: e.query.clone(),
        input_digest: input_digest(&tasks, &version),
        stats,
    };
    write(&out.join("report.txt"), &render_report(&report))?;
    let per_video: Vec<f64> = report.stats.per_video_accuracy().into_iter().map(|(_, a)| a).collect();
    if !per_video.is_empty() {
        let p = accuracy_percentiles(&per_video)?;
        write(&out.join("accuracy_cdf.tsv"), &p.to_table())?;
        write(&out.join("accuracy_cdf.svg"), &cdf_svg(&p))?;
    }
    if let Some(root) = archive {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let entry = Archive::open(&root)?.record(&report, timestamp)?;
        println!("archived {}", root.join(&entry.report_path).display());
    }
    let accuracy = report.stats.overall_accuracy();
    println!(
        "{} tasks, {} failed, overall accuracy {}",
        tasks.len(),
        report.stats.failed,
        accuracy.map_or("n/a".to_string(), |a| a.to_string())
    );
    if let (Some(min), Some(acc)) = (e.min_accuracy, accuracy) {
        if acc < min {
            bail!("overall accuracy {acc} is below the required {min}");
        }
    }
    Ok(())
}

fn roc(cfg: &RunConfig) -> Result<()> {
    let index = cfg.feature_index()?;
    let dataset_path = required(&cfg.roc.dataset, "roc.dataset")?;
    let classifier_path = required(&cfg.roc.classifier, "roc.classifier")?;
    let out = cfg.out_dir()?;
    let dataset = load_dataset(dataset_path)?;
    let classifier = StrongClassifier::load(classifier_path)?;
    let patches: Vec<&ImagePatch> = dataset.frames().iter().map(|f| &f.patch).collect();
    let labels: Vec<ClassLabel> = dataset.frames().iter().map(|f| f.label).collect();
    let scores = score_patches(&classifier, &index, &patches, &Parallelism::new(cfg.workers()))?;
    let mut thresholds = vec![f64::INFINITY, f64::NEG_INFINITY];
    thresholds.extend_from_slice(&scores);
    thresholds.extend_from_slice(&cfg.roc.thresholds);
    let points = roc_curve(&scores, &labels, Some(&thresholds))?;
    write(&out.join("roc.tsv"), &roc_table(&points))?;
    write(&out.join("roc.svg"), &roc_svg(&points))?;
    println!("{} ROC points over {} frames", points.len(), scores.len());
    Ok(())
}
