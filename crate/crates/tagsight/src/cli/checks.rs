//! The checks `repro` evaluates before declaring a run good. Each one
//! returns a pass/fail with the measured numbers; thresholds are pinned
//! here as constants.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use rand::Rng;

use crate::eval::{CriterionResult, EvalReport};
use crate::features::{window_reads, WindowingOptions};
use crate::learn::{
    gradient_check, one_hot, oob_score, predict_forest, serialize_model, train_forest,
    ForestHyperparams, MlpModel, SavedModel,
};
use crate::pipeline::{select_tag, ClassifierKind, SelectionOutcome};
use crate::rng;
use crate::sim::{OrientationState, RawRead, TagRole};

use super::TrainedModel;

pub const ORIENT_3TAG_MIN: f64 = 0.99;
pub const ORIENT_2TAG_MIN: f64 = 0.95;
pub const MATERIAL_REAR_MIN: f64 = 0.80;
pub const MATERIAL_SIDE_MIN: f64 = 0.70;
pub const PIPELINE_3TAG_MIN: f64 = 0.75;
pub const PIPELINE_GAP_MAX: f64 = 0.03;
pub const GRADIENT_CHECK_MAX: f64 = 1e-4;
pub const FEATURE_ORACLE_TOL: f64 = 1e-9;

pub(crate) fn run_all(
    report: &EvalReport,
    trained: &BTreeMap<&'static str, TrainedModel>,
    seed: u64,
) -> Result<Vec<CriterionResult>> {
    let forest3 = match &trained["orientation_3tag"].saved {
        SavedModel::Forest { model, .. } => model,
        SavedModel::Mlp { .. } => bail!("orientation_3tag is not a forest"),
    };
    Ok(vec![
        selection_table(),
        architecture(trained),
        gradient(seed),
        forest_oracle(forest3, seed)?,
        feature_oracle(seed)?,
        orientation_bands(report)?,
        material_bands(report)?,
        pipeline_bands(report)?,
        calibration_orderings(report),
    ])
}

fn result(id: u32, name: &str, pass: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        name: name.to_string(),
        pass,
        detail,
    }
}

/// 1: selection logic matches the frozen table over all 12 cases.
fn selection_table() -> CriterionResult {
    use ClassifierKind::{Rear, Side};
    use TagRole::{Tag1, Tag2, Tag3};
    let expected: [(u8, u8, TagRole, ClassifierKind); 12] = [
        (0, 3, Tag2, Side),
        (1, 3, Tag2, Rear),
        (2, 3, Tag1, Rear),
        (3, 3, Tag1, Side),
        (4, 3, Tag2, Side),
        (5, 3, Tag3, Rear),
        (0, 2, Tag2, Side),
        (1, 2, Tag2, Rear),
        (2, 2, Tag1, Rear),
        (3, 2, Tag1, Side),
        (4, 2, Tag2, Side),
        (5, 2, Tag2, Side),
    ];
    let mut failures = Vec::new();
    for (state, n_tags, tag, classifier) in expected {
        let got = select_tag(OrientationState::new(state).unwrap(), n_tags);
        if got.ok() != Some(SelectionOutcome { tag, classifier }) {
            failures.push(format!("state {state}/{n_tags} tags"));
        }
    }
    result(
        1,
        "selection-table-exactness",
        failures.is_empty(),
        if failures.is_empty() {
            "all 12 cases match".into()
        } else {
            format!("mismatches: {}", failures.join(", "))
        },
    )
}

/// 2: material network parameter counts are exactly 12,261 and 16,421.
fn architecture(trained: &BTreeMap<&'static str, TrainedModel>) -> CriterionResult {
    let rear = trained["material_rear"].param_count.unwrap_or(0);
    let side = trained["material_side"].param_count.unwrap_or(0);
    result(
        2,
        "architecture-exactness",
        rear == 12_261 && side == 16_421,
        format!("rear {rear} (want 12261), side {side} (want 16421)"),
    )
}

/// 3: analytic gradients match central finite differences on 10 random
/// (model, batch) pairs.
fn gradient(seed: u64) -> CriterionResult {
    let mut worst = 0.0f64;
    for i in 0..10u64 {
        let mut check_rng = rng::stream(seed, &format!("check/gradient/{i}"));
        let hidden = 6 + (i % 4) as usize;
        let model = MlpModel::init(&[4, hidden + 4, hidden, 5], rng::derive_seed(seed, &format!("gcm/{i}")));
        let x: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| check_rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..6).map(|_| check_rng.gen_range(0..5)).collect();
        let y = one_hot(&labels, 5);
        match gradient_check(&model, &x, &y) {
            Ok(err) => worst = worst.max(err),
            Err(_) => worst = f64::INFINITY,
        }
    }
    result(
        3,
        "backprop-correctness",
        worst < GRADIENT_CHECK_MAX,
        format!("max relative error {worst:.3e} (limit {GRADIENT_CHECK_MAX:.0e})"),
    )
}

/// Replay a serialized forest on one row: walk each tree's JSON nodes and
/// majority-vote with ties toward the lowest class.
fn replay_serialized_forest(doc: &serde_json::Value, row: &[f64], n_classes: usize) -> usize {
    let trees = doc["model"]["trees"].as_array().expect("trees array");
    let mut votes = vec![0u64; n_classes];
    for tree in trees {
        let nodes = tree["nodes"].as_array().expect("nodes array");
        let mut at = 0usize;
        let class = loop {
            let node = &nodes[at];
            match node["kind"].as_str().expect("node kind") {
                "split" => {
                    let feature = node["feature"].as_u64().unwrap() as usize;
                    let threshold = node["threshold"].as_f64().unwrap();
                    at = if row[feature] <= threshold {
                        node["left"].as_u64().unwrap() as usize
                    } else {
                        node["right"].as_u64().unwrap() as usize
                    };
                }
                "leaf" => {
                    let counts = node["counts"].as_array().unwrap();
                    let mut best = 0usize;
                    let mut best_count = -1i64;
                    for (i, c) in counts.iter().enumerate() {
                        let c = c.as_i64().unwrap();
                        if c > best_count {
                            best_count = c;
                            best = i;
                        }
                    }
                    break best;
                }
                other => panic!("unknown node kind {other}"),
            }
        };
        votes[class] += 1;
    }
    let mut best = 0usize;
    for (i, v) in votes.iter().enumerate() {
        if *v > votes[best] {
            best = i;
        }
    }
    best
}

/// 4: forest predictions equal an independent replay over the serialized
/// trees, and the OOB score really is computed from out-of-bag trees only
/// (an independent recompute matches, and corrupting a bag moves it).
fn forest_oracle(forest3: &crate::learn::ForestModel, seed: u64) -> Result<CriterionResult> {
    let json = serialize_model(&SavedModel::forest(forest3.clone()))?;
    let doc: serde_json::Value = serde_json::from_str(&json)?;
    let mut oracle_rng = rng::stream(seed, "check/forest-oracle");
    let n_classes = forest3.n_classes();
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let mut row = Vec::with_capacity(forest3.n_features);
        for j in 0..forest3.n_features {
            // Even features are RSSI-like, odd are phase-like.
            row.push(if j % 2 == 0 {
                oracle_rng.gen_range(-90.0..-40.0)
            } else {
                oracle_rng.gen_range(0.0..std::f64::consts::TAU)
            });
        }
        if replay_serialized_forest(&doc, &row, n_classes) != predict_forest(forest3, &row) {
            mismatches += 1;
        }
    }

    // OOB mechanics on a purpose-built noisy set: labels carry 15% noise so
    // trees disagree and the score is sensitive to which trees may vote.
    let mut noise_rng = rng::stream(seed, "check/oob-noise");
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..300 {
        let class = i % 2;
        let base = class as f64;
        x.push(vec![
            base + noise_rng.gen::<f64>() * 1.2,
            -base + noise_rng.gen::<f64>() * 1.2,
        ]);
        y.push(if noise_rng.gen::<f64>() < 0.15 { 1 - class } else { class });
    }
    let (noisy, noisy_report) = train_forest(
        &x,
        &y,
        &ForestHyperparams {
            n_trees: 15,
            seed: rng::derive_seed(seed, "check/oob-forest"),
            ..Default::default()
        },
    )?;
    // Independent recompute from the recorded OOB row sets.
    let mut votes = vec![vec![0u32; 2]; x.len()];
    for (tree, oob) in noisy.trees.iter().zip(&noisy.oob_rows) {
        for &r in oob {
            votes[r as usize][tree.vote(&x[r as usize])] += 1;
        }
    }
    let (mut correct, mut scored) = (0usize, 0usize);
    for (i, v) in votes.iter().enumerate() {
        if v[0] + v[1] > 0 {
            scored += 1;
            let pred = usize::from(v[1] > v[0]);
            if pred == y[i] {
                correct += 1;
            }
        }
    }
    let replayed_oob = correct as f64 / scored as f64;
    let oob_matches = noisy_report.oob_score == Some(replayed_oob);

    // Mutation: let tree 0 vote everywhere, as if its bag were empty.
    let mut corrupted = noisy.clone();
    corrupted.oob_rows[0] = (0..x.len() as u32).collect();
    let mutated = oob_score(&corrupted, &x, &y);
    let mutation_moves = mutated != noisy_report.oob_score;

    let pass = mismatches == 0 && oob_matches && mutation_moves;
    Ok(result(
        4,
        "forest-oracle-equivalence",
        pass,
        format!(
            "{mismatches}/1000 replay mismatches; oob recompute match: {oob_matches}; bag corruption moved oob: {mutation_moves}"
        ),
    ))
}

/// 5: windowed features match a direct-formula recomputation within 1e-9
/// on 1000 random windows.
fn feature_oracle(seed: u64) -> Result<CriterionResult> {
    let mut oracle_rng = rng::stream(seed, "check/feature-oracle");
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let mut reads = Vec::new();
        let mut per_tag: [Vec<(f64, f64)>; 3] = Default::default();
        for tag in TagRole::ALL {
            let n = oracle_rng.gen_range(2..9);
            for k in 0..n {
                let rssi = oracle_rng.gen_range(-84.0..0.0);
                let phase = oracle_rng.gen_range(0.0..std::f64::consts::TAU);
                reads.push(RawRead {
                    timestamp_s: (k as f64 + 0.3) / 10.0,
                    tag,
                    rssi_dbm: rssi,
                    phase_rad: phase,
                });
                per_tag[tag.index()].push((rssi, phase));
            }
        }
        reads.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
        let windowing = window_reads(&reads, &WindowingOptions::default())?;
        if windowing.windows.len() != 1 {
            bail!("oracle setup error: expected one window");
        }
        let window = &windowing.windows[0];

        for tag in TagRole::ALL {
            let values = &per_tag[tag.index()];
            let n = values.len() as f64;
            // Different algebraic routes from the implementation: E[x^2] -
            // mu^2 for variance, component means for the circular mean.
            let mu = values.iter().map(|(r, _)| r).sum::<f64>() / n;
            let var = values.iter().map(|(r, _)| r * r).sum::<f64>() / n - mu * mu;
            let mc = values.iter().map(|(_, p)| p.cos()).sum::<f64>() / n;
            let ms = values.iter().map(|(_, p)| p.sin()).sum::<f64>() / n;
            let cmean = ms.atan2(mc).rem_euclid(std::f64::consts::TAU);
            let cvar = 1.0 - (mc * mc + ms * ms).sqrt();

            let got = window.tag(tag).expect("tag present");
            worst = worst.max((got.mean_rssi_dbm - mu).abs());
            worst = worst.max((got.var_rssi_db2 - var).abs());
            let dphase = (got.mean_phase_rad - cmean).abs();
            worst = worst.max(dphase.min(std::f64::consts::TAU - dphase));
            worst = worst.max((got.var_phase - cvar).abs());
        }
    }
    Ok(result(
        5,
        "feature-oracle-equivalence",
        worst < FEATURE_ORACLE_TOL,
        format!("max deviation {worst:.3e} (limit {FEATURE_ORACLE_TOL:.0e})"),
    ))
}

fn find<'a>(report: &'a EvalReport, name: &str) -> Result<&'a crate::eval::ClassifierEval> {
    report
        .orientation
        .iter()
        .chain(&report.materials)
        .find(|c| c.name == name)
        .ok_or_else(|| anyhow::anyhow!("missing classifier eval {name}"))
}

/// 6: orientation accuracy bands.
fn orientation_bands(report: &EvalReport) -> Result<CriterionResult> {
    let acc3 = find(report, "orientation_3tag")?.test_accuracy;
    let acc2 = find(report, "orientation_2tag")?.test_accuracy;
    let pass = acc3 >= ORIENT_3TAG_MIN && acc2 >= ORIENT_2TAG_MIN && acc3 >= acc2;
    Ok(result(
        6,
        "orientation-reproduction",
        pass,
        format!(
            "3-tag {acc3:.4} (min {ORIENT_3TAG_MIN}), 2-tag {acc2:.4} (min {ORIENT_2TAG_MIN}), 3-tag >= 2-tag: {}",
            acc3 >= acc2
        ),
    ))
}

/// 7: material accuracy bands, rear strictly above side.
fn material_bands(report: &EvalReport) -> Result<CriterionResult> {
    let rear = find(report, "material_rear")?.test_accuracy;
    let side = find(report, "material_side")?.test_accuracy;
    let pass = rear >= MATERIAL_REAR_MIN && side >= MATERIAL_SIDE_MIN && rear > side;
    Ok(result(
        7,
        "material-reproduction",
        pass,
        format!(
            "rear {rear:.4} (min {MATERIAL_REAR_MIN}), side {side:.4} (min {MATERIAL_SIDE_MIN}), rear > side: {}",
            rear > side
        ),
    ))
}

/// 8: unified pipeline band and 2-vs-3 tag gap.
fn pipeline_bands(report: &EvalReport) -> Result<CriterionResult> {
    let p3 = report
        .pipeline
        .iter()
        .find(|p| p.name == "pipeline_3tag")
        .ok_or_else(|| anyhow::anyhow!("missing pipeline_3tag"))?
        .accuracy;
    let p2 = report
        .pipeline
        .iter()
        .find(|p| p.name == "pipeline_2tag")
        .ok_or_else(|| anyhow::anyhow!("missing pipeline_2tag"))?
        .accuracy;
    let gap = (p3 - p2).abs();
    let pass = p3 >= PIPELINE_3TAG_MIN && gap <= PIPELINE_GAP_MAX;
    Ok(result(
        8,
        "unified-pipeline-reproduction",
        pass,
        format!(
            "3-tag {p3:.4} (min {PIPELINE_3TAG_MIN}), 2-tag {p2:.4}, gap {gap:.4} (max {PIPELINE_GAP_MAX})"
        ),
    ))
}

/// 9: simulator calibration orderings.
fn calibration_orderings(report: &EvalReport) -> CriterionResult {
    let Some(c) = &report.calibration else {
        return result(9, "simulator-calibration-orderings", false, "no calibration block".into());
    };
    result(
        9,
        "simulator-calibration-orderings",
        c.all_hold(),
        format!(
            "chips rear var largest: {}; plastic rear mean < control: {}; side var > rear var for all: {} ({} draws/cell)",
            c.chips_rear_var_largest,
            c.plastic_rear_mean_below_control,
            c.side_var_exceeds_rear_for_all,
            c.draws_per_cell
        ),
    )
}
