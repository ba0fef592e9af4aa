//! The `repro` chain: simulate -> featurize -> split -> train -> evaluate
//! -> infer, with defaults, followed by the acceptance-style checks.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};

use crate::eval::{
    self, confusion, BoxGroups, ClassifierEval, EvalReport, PcaProjection, PipelineEval,
    SplitParts, SplitSpec,
};
use crate::features::{build_material_datasets, build_orientation_dataset, FeatureWindow};
use crate::ingest::SessionManifest;
use crate::learn::{ForestModel, MlpModel, SavedModel, TrainReport};
use crate::pipeline::{infer_batch, load_bundle};
use crate::rng;
use crate::sim::{self, tag_face_for_state, Face, RawRead, ScenarioConfig};

use super::checks;
use super::{
    featurize_sessions, mlp_predict, train_target, write_bundles, write_corpus,
    write_infer_records, write_split_parts, TrainTarget,
};

pub struct ReproOptions {
    pub seed: u64,
    pub out: PathBuf,
    pub duration_s: f64,
    pub reads_per_sec: f64,
}

/// Everything `repro` produced, for callers that want to inspect it.
pub struct ReproOutcome {
    pub report: EvalReport,
    pub all_pass: bool,
}

impl ReproOutcome {
    pub fn n_failed(&self) -> usize {
        self.report.criteria.iter().filter(|c| !c.pass).count()
    }
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let value = f()?;
    eprintln!("[repro] {name}: {:.1}s", start.elapsed().as_secs_f64());
    Ok(value)
}

/// Run the whole chain with defaults and evaluate the acceptance checks.
/// All artifacts land under `opts.out`; the outcome reports pass/fail but
/// file emission happens regardless.
pub fn run_repro(opts: &ReproOptions) -> Result<ReproOutcome> {
    let out = &opts.out;
    std::fs::create_dir_all(out)?;
    let base = ScenarioConfig {
        duration_s: opts.duration_s,
        reads_per_sec_per_tag: opts.reads_per_sec,
        ..ScenarioConfig::default()
    };
    base.validate()?;

    // Simulate and persist the corpus.
    let corpus = stage("simulate", || {
        Ok(sim::generate_corpus(&base, rng::derive_seed(opts.seed, "sim"))?)
    })?;
    write_corpus(&corpus, &out.join("corpus"))?;
    let sessions: Vec<(SessionManifest, Vec<RawRead>)> = corpus
        .sessions
        .iter()
        .map(|s| (SessionManifest::for_config(s.id(), &s.cfg), s.reads.clone()))
        .collect();

    // Feature windows for the 3- and 2-tag views of the same corpus.
    let (windows3, windows2) = stage("featurize", || {
        let (w3, _, _) = featurize_sessions(&sessions, 3, 1.0)?;
        let (w2, _, _) = featurize_sessions(&sessions, 2, 1.0)?;
        Ok((w3, w2))
    })?;
    crate::features::write_windows_jsonl(&windows3, &out.join("windows_3tag.jsonl"))?;
    crate::features::write_windows_jsonl(&windows2, &out.join("windows_2tag.jsonl"))?;

    // Stratified splits, one per view.
    let spec = SplitSpec {
        seed: rng::derive_seed(opts.seed, "split"),
        ..SplitSpec::default()
    };
    let (parts3, parts2) = stage("split", || {
        Ok((eval::split(&windows3, &spec)?, eval::split(&windows2, &spec)?))
    })?;
    write_split_parts(&parts3, &out.join("splits").join("n3"))?;
    write_split_parts(&parts2, &out.join("splits").join("n2"))?;

    // Train all four classifiers.
    let models_dir = out.join("models");
    std::fs::create_dir_all(&models_dir)?;
    let mut trained = BTreeMap::new();
    for target in [
        TrainTarget::Orientation3,
        TrainTarget::Orientation2,
        TrainTarget::MaterialRear,
        TrainTarget::MaterialSide,
    ] {
        let parts = if target == TrainTarget::Orientation2 {
            &parts2
        } else {
            &parts3
        };
        let model = stage(target.stem(), || {
            train_target(target, parts, opts.seed, None, None)
        })?;
        crate::learn::save_model(&model.saved, &models_dir.join(format!("{}.json", target.stem())))?;
        std::fs::write(
            models_dir.join(format!("{}.report.json", target.stem())),
            serde_json::to_string_pretty(&model.report)? + "\n",
        )?;
        trained.insert(target.stem(), model);
    }
    write_bundles(&models_dir)?;

    // Per-classifier evaluation blocks.
    let unwrap_forest = |stem: &str| -> Result<(ForestModel, TrainReport)> {
        let t = &trained[stem];
        match &t.saved {
            SavedModel::Forest { model, .. } => Ok((model.clone(), t.report.clone())),
            SavedModel::Mlp { .. } => bail!("{stem} is not a forest"),
        }
    };
    let unwrap_mlp = |stem: &str| -> Result<(MlpModel, TrainReport)> {
        let t = &trained[stem];
        match &t.saved {
            SavedModel::Mlp { model, .. } => Ok((model.clone(), t.report.clone())),
            SavedModel::Forest { .. } => bail!("{stem} is not an mlp"),
        }
    };
    let (forest3, report3) = unwrap_forest("orientation_3tag")?;
    let (forest2, report2) = unwrap_forest("orientation_2tag")?;
    let (rear, rear_report) = unwrap_mlp("material_rear")?;
    let (side, side_report) = unwrap_mlp("material_side")?;

    let orientation = vec![
        orientation_eval(&forest3, &Some(report3), &parts3, 3)?,
        orientation_eval(&forest2, &Some(report2), &parts2, 2)?,
    ];
    let materials = vec![
        material_eval(&rear, &Some(rear_report), &parts3, "material_rear")?,
        material_eval(&side, &Some(side_report), &parts3, "material_side")?,
    ];

    // End-to-end holdout inference through the saved bundles.
    let infer_dir = out.join("infer");
    std::fs::create_dir_all(&infer_dir)?;
    let mut pipeline = Vec::new();
    for (n_tags, parts) in [(3u8, &parts3), (2u8, &parts2)] {
        let models = load_bundle(&models_dir.join(format!("bundle_{n_tags}tag.json")))?;
        let (results, summary) = stage(&format!("infer {n_tags}-tag holdout"), || {
            Ok(infer_batch(&parts.pipeline_test, &models)?)
        })?;
        write_infer_records(
            &parts.pipeline_test,
            &results,
            &infer_dir.join(format!("holdout_{n_tags}tag.jsonl")),
        )?;
        let labels: Vec<usize> = parts
            .pipeline_test
            .iter()
            .map(|w| w.material.unwrap().index())
            .collect();
        let preds: Vec<usize> = results.iter().map(|r| r.material.index()).collect();
        pipeline.push(PipelineEval {
            name: format!("pipeline_{n_tags}tag"),
            n_windows: parts.pipeline_test.len(),
            orientation_accuracy: summary.orientation_accuracy.unwrap_or(0.0),
            accuracy: summary.material_accuracy.unwrap_or(0.0),
            confusion: confusion(&preds, &labels, 5),
        });
    }

    // Simulator calibration cells.
    let calibration = stage("calibration", || {
        Ok(sim::calibration_summary(
            &base,
            2000,
            rng::derive_seed(opts.seed, "calibration"),
        ))
    })?;

    let mut report = EvalReport {
        seed: Some(opts.seed),
        n_windows_3tag: windows3.len(),
        n_windows_2tag: windows2.len(),
        orientation,
        materials,
        pipeline,
        calibration: Some(calibration),
        criteria: Vec::new(),
    };
    report.criteria = checks::run_all(&report, &trained, opts.seed)?;

    // Figure data: PCA of both orientation datasets, box stats of raw reads.
    let pca_sets = vec![
        ("3tag".to_string(), orientation_pca(&parts3, 3)?),
        ("2tag".to_string(), orientation_pca(&parts2, 2)?),
    ];
    let box_groups = box_groups_from_corpus(&sessions);
    eval::emit_report(&report, &pca_sets, &box_groups, &out.join("reports"))?;

    for criterion in &report.criteria {
        println!(
            "criterion {:>2} [{}]: {} — {}",
            criterion.id,
            criterion.name,
            if criterion.pass { "PASS" } else { "FAIL" },
            criterion.detail
        );
    }
    let all_pass = report.criteria.iter().all(|c| c.pass);
    Ok(ReproOutcome { report, all_pass })
}

/// Evaluation block for one orientation forest.
pub(crate) fn orientation_eval(
    model: &ForestModel,
    train_report: &Option<TrainReport>,
    parts: &SplitParts,
    n_tags: u8,
) -> Result<ClassifierEval> {
    let test = build_orientation_dataset(&parts.test, n_tags)?;
    let preds: Vec<usize> = test
        .x
        .iter()
        .map(|row| crate::learn::predict_forest(model, row))
        .collect();
    let report = train_report.clone().unwrap_or_default();
    let oob = report
        .oob_score
        .or_else(|| super::oob_from_split(model, parts, n_tags));
    Ok(ClassifierEval {
        name: format!("orientation_{n_tags}tag"),
        class_labels: model.class_labels.clone(),
        train_accuracy: report.train_accuracy,
        validation_accuracy: report.validation_accuracy,
        test_accuracy: eval::accuracy(&preds, &test.y),
        oob_score: oob,
        stopping_epoch: None,
        test_confusion: confusion(&preds, &test.y, 6),
    })
}

/// Evaluation block for one material network.
pub(crate) fn material_eval(
    model: &MlpModel,
    train_report: &Option<TrainReport>,
    parts: &SplitParts,
    stem: &str,
) -> Result<ClassifierEval> {
    let rear = stem.ends_with("rear");
    let datasets = build_material_datasets(&parts.test, 3)?;
    let test = if rear { datasets.rear } else { datasets.side };
    let preds: Vec<usize> = test.x.iter().map(|row| mlp_predict(model, row)).collect();
    let report = train_report.clone().unwrap_or_default();
    Ok(ClassifierEval {
        name: stem.to_string(),
        class_labels: model.class_labels.clone(),
        train_accuracy: report.train_accuracy,
        validation_accuracy: report.validation_accuracy,
        test_accuracy: eval::accuracy(&preds, &test.y),
        oob_score: None,
        stopping_epoch: report.stopping_epoch,
        test_confusion: confusion(&preds, &test.y, 5),
    })
}

/// PCA of the orientation features over a split's classifier windows
/// (train + val + test), labeled by state.
pub(crate) fn orientation_pca(parts: &SplitParts, n_tags: u8) -> Result<PcaProjection> {
    let mut windows: Vec<&FeatureWindow> = Vec::new();
    windows.extend(&parts.train);
    windows.extend(&parts.val);
    windows.extend(&parts.test);
    let mut x = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    for w in windows {
        x.push(crate::features::assemble_orientation(w, n_tags)?);
        labels.push(w.state.map_or_else(String::new, |s| s.to_string()));
    }
    Ok(eval::pca2(&x, &labels)?)
}

/// Raw per-read RSSI/phase values grouped by tag position and material,
/// for the box-plot statistics.
pub(crate) fn box_groups_from_corpus(sessions: &[(SessionManifest, Vec<RawRead>)]) -> BoxGroups {
    let mut groups = BoxGroups::new();
    for (manifest, reads) in sessions {
        for read in reads {
            let face = tag_face_for_state(manifest.state, read.tag);
            let position = match face {
                Face::Rear => "rear",
                Face::Left | Face::Right | Face::Top => "side",
                Face::Front | Face::Bottom => continue,
            };
            let material = manifest.material.slug();
            groups
                .entry(format!("{position}/{material}/rssi"))
                .or_default()
                .push(read.rssi_dbm);
            groups
                .entry(format!("{position}/{material}/phase"))
                .or_default()
                .push(read.phase_rad);
        }
    }
    groups
}
