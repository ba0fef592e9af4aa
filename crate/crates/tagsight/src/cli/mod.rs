//! Subcommand implementations behind the `tagsight` binary.
//!
//! `simulate` writes a corpus, `featurize` turns it into windows, `split`
//! partitions them, `train` fits one of the four classifiers, `evaluate`
//! and `infer` score models, and `repro` chains the whole thing with
//! defaults and checks the calibration and accuracy gates. Every flag
//! mirrors a config-file key; all randomness derives from `--seed`.

mod checks;
mod repro;

pub use repro::{run_repro, ReproOptions, ReproOutcome};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::eval::{self, SplitParts, SplitSpec};
use crate::features::{
    self, build_material_datasets, build_orientation_dataset, FeatureWindow, WindowingOptions,
};
use crate::ingest::{self, CorpusManifest, SessionManifest};
use crate::learn::{
    self, one_hot, oob_score, predict_forest, ForestHyperparams, MlpHyperparams, SavedModel,
    TrainReport,
};
use crate::pipeline::{infer_batch, BundleManifest, PipelineModels};
use crate::rng;
use crate::sim::{self, RawRead, ScenarioConfig, TagRole};

/// Aggregate read rate (Hz across all three tags) matching the original
/// hardware capture; used by `--paper-count-mode`.
const PAPER_AGGREGATE_RATE_HZ: f64 = 5.0;

#[derive(Debug, Parser)]
#[command(
    name = "tagsight",
    version,
    about = "Synthetic RFID package inspection: simulate, featurize, train, evaluate"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic 30-session corpus (5 materials x 6 states).
    Simulate(SimulateArgs),
    /// Turn a corpus into one-second feature windows (JSON-lines).
    Featurize(FeaturizeArgs),
    /// Split windows into pipeline-holdout / train / val / test parts.
    Split(SplitArgs),
    /// Train one classifier from a splits directory.
    Train(TrainArgs),
    /// Score trained models: accuracies, confusions, PCA and box stats.
    Evaluate(EvaluateArgs),
    /// Run a pipeline bundle over a windows file.
    Infer(InferArgs),
    /// Run the whole chain with defaults and check the acceptance gates.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory for the corpus.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Root seed; every stage derives its own stream from it.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Optional TOML scenario config; flags below override its keys.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Emulate the original aggregate read rate (~5 Hz across 3 tags)
    /// for corpus-size parity. Too sparse for windowed variance features.
    #[arg(long)]
    pub paper_count_mode: bool,
    #[arg(long, value_name = "SECONDS")]
    pub duration: Option<f64>,
    /// Per-tag read rate in Hz.
    #[arg(long, value_name = "HZ")]
    pub reads_per_sec: Option<f64>,
    #[arg(long, value_name = "METERS")]
    pub reader_distance: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub frequency: Option<f64>,
    #[arg(long, value_name = "DBM")]
    pub tx_power: Option<f64>,
    #[arg(long, value_name = "DBM")]
    pub rx_floor: Option<f64>,
    #[arg(long, value_name = "METERS")]
    pub box_edge: Option<f64>,
    /// Simulate 2 or 3 tags.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n_tags: Option<u8>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Corpus directory produced by `simulate`.
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Output JSON-lines windows file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Featurize as a 2- or 3-tag setup (a 3-tag corpus can be viewed as
    /// 2-tag by dropping Tag3).
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub n_tags: Option<u8>,
    #[arg(long, default_value_t = 1.0, value_name = "SECONDS")]
    pub window_len: f64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Windows JSON-lines file.
    #[arg(long, value_name = "FILE")]
    pub windows: PathBuf,
    /// Output directory for the four part files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0 / 9.0)]
    pub holdout_fraction: f64,
    #[arg(long, default_value_t = 0.70)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.15)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0.15)]
    pub test_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainTarget {
    /// 3-tag orientation forest (6 features, 100 trees).
    #[value(name = "orientation3")]
    Orientation3,
    /// 2-tag orientation forest (4 features, 200 trees).
    #[value(name = "orientation2")]
    Orientation2,
    /// Rear-position material network [4,128,64,48,5].
    #[value(name = "material_rear")]
    MaterialRear,
    /// Side-position material network [4,128,64,64,48,5].
    #[value(name = "material_side")]
    MaterialSide,
}

impl TrainTarget {
    /// Canonical model file stem.
    pub fn stem(self) -> &'static str {
        match self {
            TrainTarget::Orientation3 => "orientation_3tag",
            TrainTarget::Orientation2 => "orientation_2tag",
            TrainTarget::MaterialRear => "material_rear",
            TrainTarget::MaterialSide => "material_side",
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Which classifier to train.
    #[arg(value_enum)]
    pub which: TrainTarget,
    /// Splits directory from `split` (use 2-tag windows for orientation2).
    #[arg(long, value_name = "DIR")]
    pub splits: PathBuf,
    /// Output directory for the model and its training report.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Override the forest size.
    #[arg(long)]
    pub trees: Option<usize>,
    /// Override the network's max epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory holding the trained model files.
    #[arg(long, value_name = "DIR")]
    pub models: PathBuf,
    /// Splits directory with 3-tag windows.
    #[arg(long, value_name = "DIR")]
    pub splits_3tag: Option<PathBuf>,
    /// Splits directory with 2-tag windows.
    #[arg(long, value_name = "DIR")]
    pub splits_2tag: Option<PathBuf>,
    /// Corpus directory; enables raw-data box statistics.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Pipeline bundle manifest (JSON).
    #[arg(long, value_name = "FILE")]
    pub bundle: PathBuf,
    /// Windows JSON-lines file.
    #[arg(long, value_name = "FILE")]
    pub windows: PathBuf,
    /// Output JSON-lines predictions file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Session length; the default reproduces the full-scale corpus.
    #[arg(long, default_value_t = 300.0, value_name = "SECONDS")]
    pub duration: f64,
    #[arg(long, default_value_t = 5.0, value_name = "HZ")]
    pub reads_per_sec: f64,
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Featurize(args) => cmd_featurize(&args),
        Command::Split(args) => cmd_split(&args),
        Command::Train(args) => cmd_train(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Infer(args) => cmd_infer(&args),
        Command::Repro(args) => {
            let outcome = run_repro(&ReproOptions {
                seed: args.seed,
                out: args.out.clone(),
                duration_s: args.duration,
                reads_per_sec: args.reads_per_sec,
            })?;
            if !outcome.all_pass {
                bail!(
                    "{} of {} acceptance checks failed; see report.json",
                    outcome.n_failed(),
                    outcome.report.criteria.len()
                );
            }
            Ok(())
        }
    }
}

/// Load a TOML scenario config, or the defaults when no file is given.
pub fn load_scenario_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    let cfg = match path {
        None => ScenarioConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
    };
    Ok(cfg)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = load_scenario_config(args.config.as_deref())?;
    if let Some(v) = args.duration {
        cfg.duration_s = v;
    }
    if let Some(v) = args.reads_per_sec {
        cfg.reads_per_sec_per_tag = v;
    }
    if args.paper_count_mode {
        cfg.reads_per_sec_per_tag = PAPER_AGGREGATE_RATE_HZ / 3.0;
    }
    if let Some(v) = args.reader_distance {
        cfg.reader_distance_m = v;
    }
    if let Some(v) = args.frequency {
        cfg.frequency_hz = v;
    }
    if let Some(v) = args.tx_power {
        cfg.tx_power_dbm = v;
    }
    if let Some(v) = args.rx_floor {
        cfg.rx_floor_dbm = v;
    }
    if let Some(v) = args.box_edge {
        cfg.box_edge_m = v;
    }
    if let Some(v) = args.n_tags {
        cfg.n_tags = v;
    }

    let corpus = sim::generate_corpus(&cfg, rng::derive_seed(args.seed, "sim"))?;
    let manifest = write_corpus(&corpus, &args.out)?;
    println!(
        "wrote {} sessions, {} reads to {}",
        manifest.session_ids.len(),
        corpus.total_reads(),
        args.out.display()
    );
    Ok(())
}

/// Write a corpus directory: per-session reads CSV + manifest, plus the
/// top-level corpus manifest.
pub(crate) fn write_corpus(corpus: &sim::Corpus, dir: &Path) -> Result<CorpusManifest> {
    std::fs::create_dir_all(dir)?;
    let mut session_ids = Vec::new();
    for session in &corpus.sessions {
        let id = session.id();
        let manifest = SessionManifest::for_config(id.clone(), &session.cfg);
        let csv = ingest::serialize_reads(&session.reads, &manifest.tags)?;
        std::fs::write(dir.join(format!("{id}.reads.csv")), csv)?;
        manifest.save(&dir.join(format!("{id}.manifest.json")))?;
        session_ids.push(id);
    }
    let manifest = CorpusManifest {
        schema_version: 1,
        seed: corpus.seed,
        session_ids,
    };
    manifest.save(dir)?;
    Ok(manifest)
}

/// Load every session of a corpus directory.
pub(crate) fn load_corpus(dir: &Path) -> Result<Vec<(SessionManifest, Vec<RawRead>)>> {
    let manifest = CorpusManifest::load(dir)
        .with_context(|| format!("loading corpus manifest from {}", dir.display()))?;
    let mut sessions = Vec::with_capacity(manifest.session_ids.len());
    for id in &manifest.session_ids {
        let session_manifest = SessionManifest::load(&dir.join(format!("{id}.manifest.json")))?;
        let bytes = std::fs::read(dir.join(format!("{id}.reads.csv")))?;
        let reads = ingest::parse_reads(&bytes, &session_manifest.tags)
            .with_context(|| format!("parsing reads of session {id}"))?;
        sessions.push((session_manifest, reads));
    }
    Ok(sessions)
}

/// Window every session of a corpus, viewed as an `n_tags` setup.
/// Returns the windows plus (discarded windows, discarded reads).
pub(crate) fn featurize_sessions(
    sessions: &[(SessionManifest, Vec<RawRead>)],
    n_tags: u8,
    window_len_s: f64,
) -> Result<(Vec<FeatureWindow>, usize, usize)> {
    let mut windows = Vec::new();
    let mut discarded_windows = 0;
    let mut discarded_reads = 0;
    for (manifest, reads) in sessions {
        if manifest.n_tags < n_tags {
            bail!(
                "session {} has {} tags; cannot featurize as {n_tags}-tag",
                manifest.session_id,
                manifest.n_tags
            );
        }
        // Viewing a 3-tag session as 2-tag drops the third tag's reads.
        let active = TagRole::active(n_tags);
        let filtered: Vec<RawRead> = reads
            .iter()
            .filter(|r| active.contains(&r.tag))
            .copied()
            .collect();
        let opts = WindowingOptions {
            window_len_s,
            n_tags,
            session_id: manifest.session_id.clone(),
            material: Some(manifest.material),
            state: Some(manifest.state),
            rx_floor_dbm: manifest.config.rx_floor_dbm,
        };
        let windowing = features::window_reads(&filtered, &opts)?;
        windows.extend(windowing.windows);
        discarded_windows += windowing.discarded_windows;
        discarded_reads += windowing.discarded_reads;
    }
    Ok((windows, discarded_windows, discarded_reads))
}

fn cmd_featurize(args: &FeaturizeArgs) -> Result<()> {
    let sessions = load_corpus(&args.corpus)?;
    let n_tags = args
        .n_tags
        .unwrap_or_else(|| sessions.first().map_or(3, |(m, _)| m.n_tags));
    let (windows, discarded, _) = featurize_sessions(&sessions, n_tags, args.window_len)?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    features::write_windows_jsonl(&windows, &args.out)?;
    println!(
        "wrote {} windows ({discarded} discarded) to {}",
        windows.len(),
        args.out.display()
    );
    Ok(())
}

pub(crate) fn write_split_parts(parts: &SplitParts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    features::write_windows_jsonl(&parts.pipeline_test, &dir.join("pipeline_test.jsonl"))?;
    features::write_windows_jsonl(&parts.train, &dir.join("train.jsonl"))?;
    features::write_windows_jsonl(&parts.val, &dir.join("val.jsonl"))?;
    features::write_windows_jsonl(&parts.test, &dir.join("test.jsonl"))?;
    Ok(())
}

pub(crate) fn load_split_parts(dir: &Path) -> Result<SplitParts> {
    Ok(SplitParts {
        pipeline_test: features::read_windows_jsonl(&dir.join("pipeline_test.jsonl"))?,
        train: features::read_windows_jsonl(&dir.join("train.jsonl"))?,
        val: features::read_windows_jsonl(&dir.join("val.jsonl"))?,
        test: features::read_windows_jsonl(&dir.join("test.jsonl"))?,
    })
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let windows = features::read_windows_jsonl(&args.windows)?;
    let spec = SplitSpec {
        holdout_fraction: args.holdout_fraction,
        train_fraction: args.train_fraction,
        val_fraction: args.val_fraction,
        test_fraction: args.test_fraction,
        seed: rng::derive_seed(args.seed, "split"),
    };
    let parts = eval::split(&windows, &spec)?;
    write_split_parts(&parts, &args.out)?;
    println!(
        "split {} windows into {}/{}/{}/{} (holdout/train/val/test) under {}",
        windows.len(),
        parts.pipeline_test.len(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len(),
        args.out.display()
    );
    Ok(())
}

/// Orientation forest defaults: 100 trees for 3 tags, 200 for 2.
pub(crate) fn orientation_hyperparams(n_tags: u8, seed: u64) -> ForestHyperparams {
    ForestHyperparams {
        n_trees: if n_tags == 3 { 100 } else { 200 },
        max_depth: None,
        min_samples_split: 4,
        min_samples_leaf: 2,
        features_per_split: None,
        bootstrap: true,
        seed,
    }
}

/// Material network defaults: rear [4,128,64,48,5] for 40 epochs, side
/// [4,128,64,64,48,5] for 30.
pub(crate) fn material_hyperparams(rear: bool, seed: u64) -> MlpHyperparams {
    MlpHyperparams {
        layer_widths: if rear {
            vec![4, 128, 64, 48, 5]
        } else {
            vec![4, 128, 64, 64, 48, 5]
        },
        batch_size: 16,
        learning_rate: 0.001,
        max_epochs: if rear { 40 } else { 30 },
        patience: 5,
        seed,
    }
}

pub(crate) struct TrainedModel {
    pub saved: SavedModel,
    pub report: TrainReport,
    pub param_count: Option<usize>,
}

/// Train one target from split parts.
pub(crate) fn train_target(
    target: TrainTarget,
    parts: &SplitParts,
    seed: u64,
    trees_override: Option<usize>,
    epochs_override: Option<usize>,
) -> Result<TrainedModel> {
    match target {
        TrainTarget::Orientation3 | TrainTarget::Orientation2 => {
            let n_tags = if target == TrainTarget::Orientation3 { 3 } else { 2 };
            let train = build_orientation_dataset(&parts.train, n_tags)?;
            let val = build_orientation_dataset(&parts.val, n_tags)?;
            let test = build_orientation_dataset(&parts.test, n_tags)?;
            let mut hp =
                orientation_hyperparams(n_tags, rng::derive_seed(seed, &format!("forest/{n_tags}tag")));
            if let Some(trees) = trees_override {
                hp.n_trees = trees;
            }
            let (mut model, mut report) = learn::train_forest(&train.x, &train.y, &hp)?;
            model.class_labels = (0..6).map(|s| s.to_string()).collect();
            report.validation_accuracy = Some(forest_accuracy(&model, &val));
            report.test_accuracy = Some(forest_accuracy(&model, &test));
            Ok(TrainedModel {
                saved: SavedModel::forest(model),
                report,
                param_count: None,
            })
        }
        TrainTarget::MaterialRear | TrainTarget::MaterialSide => {
            let rear = target == TrainTarget::MaterialRear;
            let pick = |w: &[FeatureWindow]| -> Result<learn::Dataset> {
                let both = build_material_datasets(w, 3)?;
                Ok(if rear { both.rear } else { both.side })
            };
            let train = pick(&parts.train)?;
            let val = pick(&parts.val)?;
            let test = pick(&parts.test)?;
            let name = if rear { "rear" } else { "side" };
            let mut hp = material_hyperparams(rear, rng::derive_seed(seed, &format!("mlp/{name}")));
            if let Some(epochs) = epochs_override {
                hp.max_epochs = epochs;
            }
            let n_classes = crate::sim::MaterialClass::ALL.len();
            let (mut model, mut report) = learn::train_mlp(
                &train.x,
                &one_hot(&train.y, n_classes),
                &val.x,
                &one_hot(&val.y, n_classes),
                &hp,
            )?;
            model.class_labels = crate::sim::MaterialClass::ALL
                .iter()
                .map(|m| m.slug().to_string())
                .collect();
            report.test_accuracy = Some(mlp_accuracy(&model, &test));
            let params = model.param_count();
            Ok(TrainedModel {
                saved: SavedModel::mlp(model),
                report,
                param_count: Some(params),
            })
        }
    }
}

pub(crate) fn forest_accuracy(model: &learn::ForestModel, data: &learn::Dataset) -> f64 {
    let preds: Vec<usize> = data.x.iter().map(|row| predict_forest(model, row)).collect();
    eval::accuracy(&preds, &data.y)
}

pub(crate) fn mlp_accuracy(model: &learn::MlpModel, data: &learn::Dataset) -> f64 {
    let preds: Vec<usize> = data.x.iter().map(|row| mlp_predict(model, row)).collect();
    eval::accuracy(&preds, &data.y)
}

pub(crate) fn mlp_predict(model: &learn::MlpModel, row: &[f64]) -> usize {
    let probs = learn::forward(model, row);
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let parts = load_split_parts(&args.splits)?;
    let trained = train_target(args.which, &parts, args.seed, args.trees, args.epochs)?;
    std::fs::create_dir_all(&args.out)?;
    let stem = args.which.stem();
    learn::save_model(&trained.saved, &args.out.join(format!("{stem}.json")))?;
    std::fs::write(
        args.out.join(format!("{stem}.report.json")),
        serde_json::to_string_pretty(&trained.report)? + "\n",
    )?;
    if let Some(params) = trained.param_count {
        println!("parameters: {params}");
    }
    if let Some(oob) = trained.report.oob_score {
        println!("oob_score: {oob:.4}");
    }
    println!(
        "train_accuracy: {:.4}  validation_accuracy: {}  test_accuracy: {}",
        trained.report.train_accuracy,
        trained
            .report
            .validation_accuracy
            .map_or("-".into(), |a| format!("{a:.4}")),
        trained
            .report
            .test_accuracy
            .map_or("-".into(), |a| format!("{a:.4}")),
    );
    println!("wrote {}", args.out.join(format!("{stem}.json")).display());
    Ok(())
}

/// Load a model file and its sibling training report, if present.
pub(crate) fn load_model_with_report(
    models_dir: &Path,
    stem: &str,
) -> Result<(SavedModel, Option<TrainReport>)> {
    let model = learn::load_model(&models_dir.join(format!("{stem}.json")))?;
    let report_path = models_dir.join(format!("{stem}.report.json"));
    let report = if report_path.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(report_path)?)?)
    } else {
        None
    };
    Ok((model, report))
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut orientation = Vec::new();
    let mut pca_sets = Vec::new();

    for (n_tags, splits) in [(3u8, &args.splits_3tag), (2u8, &args.splits_2tag)] {
        let Some(dir) = splits else { continue };
        let parts = load_split_parts(dir)?;
        let stem = format!("orientation_{n_tags}tag");
        let (saved, report) = load_model_with_report(&args.models, &stem)?;
        let SavedModel::Forest { model, .. } = saved else {
            bail!("{stem}.json is not a forest model");
        };
        orientation.push(repro::orientation_eval(&model, &report, &parts, n_tags)?);
        pca_sets.push((format!("{n_tags}tag"), repro::orientation_pca(&parts, n_tags)?));
    }

    let mut materials = Vec::new();
    if let Some(dir) = &args.splits_3tag {
        let parts = load_split_parts(dir)?;
        for stem in ["material_rear", "material_side"] {
            let (saved, report) = load_model_with_report(&args.models, stem)?;
            let SavedModel::Mlp { model, .. } = saved else {
                bail!("{stem}.json is not an mlp model");
            };
            materials.push(repro::material_eval(&model, &report, &parts, stem)?);
        }
    }

    let box_groups = match &args.corpus {
        Some(dir) => repro::box_groups_from_corpus(&load_corpus(dir)?),
        None => BTreeMap::new(),
    };

    let report = eval::EvalReport {
        seed: None,
        n_windows_3tag: 0,
        n_windows_2tag: 0,
        orientation,
        materials,
        pipeline: Vec::new(),
        calibration: None,
        criteria: Vec::new(),
    };
    eval::emit_report(&report, &pca_sets, &box_groups, &args.out)?;
    for c in &report.orientation {
        println!(
            "{}: test_accuracy {:.4}",
            c.name,
            c.test_accuracy
        );
    }
    for c in &report.materials {
        println!("{}: test_accuracy {:.4}", c.name, c.test_accuracy);
    }
    println!("wrote {}", args.out.join("report.json").display());
    Ok(())
}

/// One output line of `infer`: window identity, labels when known, and the
/// full pipeline result.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct InferRecord {
    pub session_id: String,
    pub window_index: u64,
    pub true_material: Option<crate::sim::MaterialClass>,
    pub true_state: Option<crate::sim::OrientationState>,
    pub result: crate::pipeline::PipelineResult,
}

pub(crate) fn write_infer_records(
    windows: &[FeatureWindow],
    results: &[crate::pipeline::PipelineResult],
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    for (w, r) in windows.iter().zip(results) {
        let record = InferRecord {
            session_id: w.session_id.clone(),
            window_index: w.window_index,
            true_material: w.material,
            true_state: w.state,
            result: r.clone(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_infer(args: &InferArgs) -> Result<()> {
    let models: PipelineModels = crate::pipeline::load_bundle(&args.bundle)?;
    let windows = features::read_windows_jsonl(&args.windows)?;
    let (results, summary) = infer_batch(&windows, &models)?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_infer_records(&windows, &results, &args.out)?;
    println!(
        "{} windows; orientation accuracy {}, material accuracy {}",
        summary.n_windows,
        summary
            .orientation_accuracy
            .map_or("-".into(), |a| format!("{a:.4}")),
        summary
            .material_accuracy
            .map_or("-".into(), |a| format!("{a:.4}")),
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Save the two bundle manifests next to the model files.
pub(crate) fn write_bundles(models_dir: &Path) -> Result<()> {
    for n_tags in [3u8, 2] {
        let manifest = BundleManifest {
            schema_version: 1,
            n_tags,
            orientation_model: format!("orientation_{n_tags}tag.json"),
            side_model: "material_side.json".into(),
            rear_model: "material_rear.json".into(),
        };
        manifest.save(&models_dir.join(format!("bundle_{n_tags}tag.json")))?;
    }
    Ok(())
}

pub(crate) fn oob_from_split(model: &learn::ForestModel, parts: &SplitParts, n_tags: u8) -> Option<f64> {
    let train = build_orientation_dataset(&parts.train, n_tags).ok()?;
    oob_score(model, &train.x, &train.y)
}
