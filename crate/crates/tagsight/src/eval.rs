//! Dataset splitting, metrics, and the statistics behind the evaluation
//! artifacts: confusion matrices, 2-component PCA scatter data, and
//! box-plot summaries.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureWindow;
use crate::rng;
use crate::sim::CalibrationSummary;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
    #[error("window {0} has no labels; splits are stratified by (material, state)")]
    MissingLabels(u64),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How to split the windowed corpus: a pipeline holdout first, then
/// train/validation/test over the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction reserved for end-to-end pipeline evaluation.
    pub holdout_fraction: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            holdout_fraction: 1.0 / 9.0,
            train_fraction: 0.70,
            val_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(EvalError::InvalidSpec(
                "holdout_fraction must be in [0, 1)".into(),
            ));
        }
        let sum = self.train_fraction + self.val_fraction + self.test_fraction;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvalError::InvalidSpec(format!(
                "train+val+test fractions must sum to 1, got {sum}"
            )));
        }
        if self.train_fraction < 0.0 || self.val_fraction < 0.0 || self.test_fraction < 0.0 {
            return Err(EvalError::InvalidSpec("fractions must be >= 0".into()));
        }
        Ok(())
    }
}

/// The four disjoint parts of a split corpus.
#[derive(Debug, Clone, Default)]
pub struct SplitParts {
    pub pipeline_test: Vec<FeatureWindow>,
    pub train: Vec<FeatureWindow>,
    pub val: Vec<FeatureWindow>,
    pub test: Vec<FeatureWindow>,
}

/// Stratified split by (material, state): each stratum is shuffled with a
/// stream derived from the split seed, then cut at cumulative fraction
/// boundaries. Parts are disjoint, cover the input, and are reproducible.
pub fn split(windows: &[FeatureWindow], spec: &SplitSpec) -> Result<SplitParts, EvalError> {
    spec.validate()?;
    let mut strata: BTreeMap<(usize, u8), Vec<&FeatureWindow>> = BTreeMap::new();
    for w in windows {
        let material = w.material.ok_or(EvalError::MissingLabels(w.window_index))?;
        let state = w.state.ok_or(EvalError::MissingLabels(w.window_index))?;
        strata
            .entry((material.index(), state.id()))
            .or_default()
            .push(w);
    }

    let mut parts = SplitParts::default();
    for ((material, state), mut stratum) in strata {
        use rand::seq::SliceRandom;
        let mut stratum_rng =
            rng::stream(spec.seed, &format!("split/m{material}/s{state}"));
        stratum.shuffle(&mut stratum_rng);

        let n = stratum.len();
        // Cumulative cuts keep the total intact under rounding.
        let hold = (n as f64 * spec.holdout_fraction).round() as usize;
        let rest = n - hold;
        let c1 = (rest as f64 * spec.train_fraction).round() as usize;
        let c2 = (rest as f64 * (spec.train_fraction + spec.val_fraction)).round() as usize;
        for (i, w) in stratum.into_iter().enumerate() {
            let w = w.clone();
            if i < hold {
                parts.pipeline_test.push(w);
            } else if i - hold < c1 {
                parts.train.push(w);
            } else if i - hold < c2 {
                parts.val.push(w);
            } else {
                parts.test.push(w);
            }
        }
    }
    Ok(parts)
}

/// Fraction of predictions equal to labels.
pub fn accuracy(preds: &[usize], labels: &[usize]) -> f64 {
    assert_eq!(preds.len(), labels.len());
    if preds.is_empty() {
        return 0.0;
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / preds.len() as f64
}

/// k x k confusion counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// trace / total; the exact accuracy identity.
    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.trace() as f64 / self.total() as f64
        }
    }

    /// Per-class support (row sums).
    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }
}

pub fn confusion(preds: &[usize], labels: &[usize], k: usize) -> ConfusionMatrix {
    assert_eq!(preds.len(), labels.len());
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &l) in preds.iter().zip(labels) {
        counts[l][p] += 1;
    }
    ConfusionMatrix { counts }
}

/// One projected point with its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub pc1: f64,
    pub pc2: f64,
    pub label: String,
}

/// Two-component PCA of standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// Two orthonormal axes in feature space.
    pub axes: [Vec<f64>; 2],
    /// Fractions of total variance, non-increasing.
    pub explained_fractions: [f64; 2],
    pub points: Vec<PcaPoint>,
}

/// Project rows onto the top two principal axes.
///
/// Features are z-scored first (RSSI in dB and phase in rad live on very
/// different scales), the covariance matrix is eigendecomposed by cyclic
/// Jacobi rotations, and each axis is signed so its largest-magnitude
/// loading is positive. `labels` may be empty.
#[allow(clippy::needless_range_loop)]
pub fn pca2(x: &[Vec<f64>], labels: &[String]) -> Result<PcaProjection, EvalError> {
    if x.is_empty() {
        return Err(EvalError::EmptyInput("pca2 needs at least one row".into()));
    }
    let d = x[0].len();
    if d < 2 {
        return Err(EvalError::DimensionMismatch(
            "pca2 needs at least two features".into(),
        ));
    }
    if x.iter().any(|row| row.len() != d) {
        return Err(EvalError::DimensionMismatch("ragged rows".into()));
    }
    if !labels.is_empty() && labels.len() != x.len() {
        return Err(EvalError::DimensionMismatch(
            "labels must match rows".into(),
        ));
    }
    let n = x.len() as f64;

    // Standardize: zero mean, unit population variance per feature.
    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    let mut sd = vec![0.0; d];
    for row in x {
        for j in 0..d {
            let c = row[j] - mean[j];
            sd[j] += c * c;
        }
    }
    for s in sd.iter_mut() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0; // constant feature: leave centered at zero
        }
    }
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|row| (0..d).map(|j| (row[j] - mean[j]) / sd[j]).collect())
        .collect();

    // Covariance of the standardized data.
    let mut cov = vec![vec![0.0; d]; d];
    for row in &z {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&mut cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut axes: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut explained = [0.0; 2];
    for c in 0..2 {
        let idx = order[c];
        let mut axis: Vec<f64> = (0..d).map(|r| eigenvectors[r][idx]).collect();
        // Sign convention: largest-magnitude loading positive.
        let dominant = (0..d)
            .max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()))
            .unwrap();
        if axis[dominant] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        explained[c] = if total > 0.0 {
            eigenvalues[idx].max(0.0) / total
        } else {
            0.0
        };
        axes[c] = axis;
    }

    let points = z
        .iter()
        .enumerate()
        .map(|(i, row)| PcaPoint {
            pc1: dot(row, &axes[0]),
            pc2: dot(row, &axes[1]),
            label: labels.get(i).cloned().unwrap_or_default(),
        })
        .collect();

    Ok(PcaProjection {
        axes,
        explained_fractions: explained,
        points,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (destroys the
/// input). Returns (eigenvalues, eigenvectors-as-columns).
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(a: &mut [Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() < 1e-18 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues = (0..d).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Five-number box summary with 1.5*IQR whiskers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Most extreme values still within 1.5*IQR of the box.
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub n_outliers: usize,
}

/// Quantile by linear interpolation over sorted values at p*(n-1)
/// (the inclusive method).
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput("box_stats needs values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_bound = q1 - 1.5 * iqr;
    let hi_bound = q3 + 1.5 * iqr;
    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v >= lo_bound && *v <= hi_bound)
        .collect();
    Ok(BoxStats {
        n: sorted.len(),
        median,
        q1,
        q3,
        whisker_lo: inside.first().copied().unwrap_or(q1),
        whisker_hi: inside.last().copied().unwrap_or(q3),
        n_outliers: sorted.len() - inside.len(),
    })
}

/// Evaluation numbers for one trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEval {
    pub name: String,
    pub class_labels: Vec<String>,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    pub test_accuracy: f64,
    pub oob_score: Option<f64>,
    pub stopping_epoch: Option<usize>,
    pub test_confusion: ConfusionMatrix,
}

/// End-to-end pipeline numbers on the holdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEval {
    pub name: String,
    pub n_windows: usize,
    pub orientation_accuracy: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// One acceptance-style check evaluated during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything `emit_report` writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: Option<u64>,
    pub n_windows_3tag: usize,
    pub n_windows_2tag: usize,
    pub orientation: Vec<ClassifierEval>,
    pub materials: Vec<ClassifierEval>,
    pub pipeline: Vec<PipelineEval>,
    /// Sampled channel-calibration orderings; present in `repro` reports.
    pub calibration: Option<CalibrationSummary>,
    pub criteria: Vec<CriterionResult>,
}

/// Named value groups for box-plot statistics.
pub type BoxGroups = BTreeMap<String, Vec<f64>>;

/// Write `report.json`, `pca_points.csv` (plus one per extra PCA set), and
/// `box_stats.csv` into `dir`.
pub fn emit_report(
    report: &EvalReport,
    pca_sets: &[(String, PcaProjection)],
    box_groups: &BoxGroups,
    dir: &Path,
) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(dir.join("report.json"), json + "\n")?;

    for (i, (_name, projection)) in pca_sets.iter().enumerate() {
        let filename = if i == 0 {
            "pca_points.csv".to_string()
        } else {
            format!("pca_points_{}.csv", pca_sets[i].0)
        };
        let mut out = Vec::new();
        writeln!(out, "pc1,pc2,state")?;
        for p in &projection.points {
            writeln!(out, "{},{},{}", p.pc1, p.pc2, p.label)?;
        }
        std::fs::write(dir.join(filename), out)?;
    }

    let mut out = Vec::new();
    writeln!(out, "group,stat,value")?;
    for (group, values) in box_groups {
        let stats = box_stats(values)?;
        for (stat, value) in [
            ("median", stats.median),
            ("q1", stats.q1),
            ("q3", stats.q3),
            ("whisker_lo", stats.whisker_lo),
            ("whisker_hi", stats.whisker_hi),
            ("n_outliers", stats.n_outliers as f64),
            ("n", stats.n as f64),
        ] {
            writeln!(out, "{group},{stat},{value}")?;
        }
    }
    std::fs::write(dir.join("box_stats.csv"), out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{MaterialClass, OrientationState};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn labeled_windows(per_stratum: usize) -> Vec<FeatureWindow> {
        let mut windows = Vec::new();
        let mut index = 0;
        for material in MaterialClass::ALL {
            for state in OrientationState::all() {
                for _ in 0..per_stratum {
                    windows.push(FeatureWindow {
                        session_id: format!("{}-{}", material.slug(), state),
                        window_index: index,
                        n_tags: 3,
                        tag1: None,
                        tag2: None,
                        tag3: None,
                        material: Some(material),
                        state: Some(state),
                    });
                    index += 1;
                }
            }
        }
        windows
    }

    #[test]
    fn split_is_disjoint_and_covers() {
        let windows = labeled_windows(30); // 900 windows
        let spec = SplitSpec {
            seed: 9,
            ..Default::default()
        };
        let parts = split(&windows, &spec).unwrap();
        let total =
            parts.pipeline_test.len() + parts.train.len() + parts.val.len() + parts.test.len();
        assert_eq!(total, windows.len());
        let mut seen = std::collections::HashSet::new();
        for w in parts
            .pipeline_test
            .iter()
            .chain(&parts.train)
            .chain(&parts.val)
            .chain(&parts.test)
        {
            assert!(seen.insert(w.window_index), "duplicate {}", w.window_index);
        }
        // Per stratum of 30: 3 holdout, then 27 cut at 19/23 -> 19/4/4.
        assert_eq!(parts.pipeline_test.len(), 90);
        assert_eq!(parts.train.len(), 570);
        assert_eq!(parts.val.len(), 120);
        assert_eq!(parts.test.len(), 120);
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let windows = labeled_windows(30);
        let spec = SplitSpec {
            seed: 4,
            ..Default::default()
        };
        let a = split(&windows, &spec).unwrap();
        let b = split(&windows, &spec).unwrap();
        let ids = |part: &[FeatureWindow]| part.iter().map(|w| w.window_index).collect::<Vec<_>>();
        assert_eq!(ids(&a.train), ids(&b.train));
        assert_eq!(ids(&a.pipeline_test), ids(&b.pipeline_test));

        // Each stratum contributes proportionally to the train part.
        let mut per = BTreeMap::new();
        for w in &a.train {
            *per.entry((w.material.unwrap().index(), w.state.unwrap().id()))
                .or_insert(0usize) += 1;
        }
        assert!(per.values().all(|&c| c == 19), "{per:?}");

        let c = split(
            &windows,
            &SplitSpec {
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(ids(&a.train), ids(&c.train));
    }

    #[test]
    fn split_rejects_unlabeled_and_bad_fractions() {
        let mut windows = labeled_windows(2);
        windows[0].material = None;
        assert!(matches!(
            split(&windows, &SplitSpec::default()),
            Err(EvalError::MissingLabels(_))
        ));
        let spec = SplitSpec {
            train_fraction: 0.5,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn accuracy_and_confusion_basics() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]), 1.0);
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], 3);
        assert_eq!(cm.trace(), 3);
        assert_eq!(cm.accuracy(), 1.0);

        // Every prediction wrong in a 2-class problem: anti-diagonal.
        let cm = confusion(&[1, 0], &[0, 1], 2);
        assert_eq!(cm.counts, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(cm.accuracy(), 0.0);

        let preds = [0, 0, 1, 2, 2, 2];
        let labels = [0, 1, 1, 2, 2, 0];
        let cm = confusion(&preds, &labels, 3);
        assert_eq!(cm.row_sums(), vec![2, 2, 2]);
        assert_relative_eq!(cm.accuracy(), accuracy(&preds, &labels));
    }

    #[test]
    fn pca_line_explains_everything() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let p = pca2(&x, &[]).unwrap();
        assert_relative_eq!(p.explained_fractions[0], 1.0, epsilon = 1e-9);
        assert!(p.explained_fractions[1].abs() < 1e-9);
    }

    #[test]
    fn pca_isotropic_gaussian_splits_evenly() {
        let mut rng = crate::rng::stream(17, "pca-iso");
        let normal = |rng: &mut rand_chacha::ChaCha8Rng| {
            // Box-Muller from two uniforms.
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let x: Vec<Vec<f64>> = (0..4000)
            .map(|_| vec![normal(&mut rng), normal(&mut rng)])
            .collect();
        let p = pca2(&x, &[]).unwrap();
        assert!((p.explained_fractions[0] - 0.5).abs() < 0.05);
        assert!((p.explained_fractions[1] - 0.5).abs() < 0.05);
    }

    #[test]
    fn pca_axes_orthonormal_and_mean_projects_to_origin() {
        let mut rng = crate::rng::stream(23, "pca-orth");
        let x: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..6).map(|j| rng.gen::<f64>() * (j + 1) as f64).collect())
            .collect();
        let p = pca2(&x, &[]).unwrap();
        assert_relative_eq!(dot(&p.axes[0], &p.axes[0]), 1.0, epsilon = 1e-9);
        assert_relative_eq!(dot(&p.axes[1], &p.axes[1]), 1.0, epsilon = 1e-9);
        assert!(dot(&p.axes[0], &p.axes[1]).abs() < 1e-9);
        assert!(p.explained_fractions[0] >= p.explained_fractions[1]);

        // Projecting the (standardized) mean point gives the origin; the
        // mean of the projections is the projected mean by linearity.
        let mean_pc1: f64 = p.points.iter().map(|pt| pt.pc1).sum::<f64>() / 300.0;
        let mean_pc2: f64 = p.points.iter().map(|pt| pt.pc2).sum::<f64>() / 300.0;
        assert!(mean_pc1.abs() < 1e-9 && mean_pc2.abs() < 1e-9);
    }

    #[test]
    fn pca_reconstruction_error_non_increasing() {
        let mut rng = crate::rng::stream(29, "pca-recon");
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|j| rng.gen::<f64>() * (j + 1) as f64).collect())
            .collect();
        let p = pca2(&x, &[]).unwrap();
        // Reconstruction error in standardized space, using 1 vs 2 axes.
        let d = 4;
        let n = x.len() as f64;
        let mut mean = vec![0.0; d];
        for row in &x {
            for j in 0..d {
                mean[j] += row[j] / n;
            }
        }
        let mut sd = vec![0.0; d];
        for row in &x {
            for j in 0..d {
                sd[j] += (row[j] - mean[j]).powi(2) / n;
            }
        }
        let err = |axes: &[&Vec<f64>]| -> f64 {
            let mut total = 0.0;
            for row in &x {
                let z: Vec<f64> = (0..d).map(|j| (row[j] - mean[j]) / sd[j].sqrt()).collect();
                let mut recon = vec![0.0; d];
                for axis in axes {
                    let c = dot(&z, axis);
                    for j in 0..d {
                        recon[j] += c * axis[j];
                    }
                }
                total += z
                    .iter()
                    .zip(&recon)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
            }
            total
        };
        let one = err(&[&p.axes[0]]);
        let two = err(&[&p.axes[0], &p.axes[1]]);
        assert!(two <= one + 1e-9, "two-axis {} vs one-axis {}", two, one);
    }

    #[test]
    fn box_stats_examples() {
        let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q1, 2.0);
        assert_eq!(s.q3, 4.0);
        assert_eq!(s.whisker_lo, 1.0);
        assert_eq!(s.whisker_hi, 5.0);
        assert_eq!(s.n_outliers, 0);

        let constant = box_stats(&[7.0; 9]).unwrap();
        assert_eq!(constant.q1, 7.0);
        assert_eq!(constant.q3, 7.0);
        assert_eq!(constant.median, 7.0);

        // Order invariance.
        let a = box_stats(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!(a, s);

        // A far point becomes an outlier and the whisker stops inside.
        let o = box_stats(&[1.0, 2.0, 3.0, 4.0, 50.0]).unwrap();
        assert_eq!(o.n_outliers, 1);
        assert_eq!(o.whisker_hi, 4.0);

        assert!(box_stats(&[]).is_err());
    }

    #[test]
    fn emit_report_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = EvalReport {
            seed: Some(1),
            n_windows_3tag: 10,
            n_windows_2tag: 10,
            orientation: vec![],
            materials: vec![],
            pipeline: vec![],
            calibration: Some(crate::sim::calibration_summary(
                &crate::sim::ScenarioConfig::default(),
                50,
                1,
            )),
            criteria: vec![],
        };
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, -(i as f64)]).collect();
        let labels: Vec<String> = (0..20).map(|i| (i % 6).to_string()).collect();
        let pca = pca2(&x, &labels).unwrap();
        let mut groups = BoxGroups::new();
        groups.insert("rear/control/rssi".into(), vec![1.0, 2.0, 3.0]);
        emit_report(
            &report,
            &[("3tag".into(), pca.clone()), ("2tag".into(), pca)],
            &groups,
            dir.path(),
        )
        .unwrap();
        assert!(dir.path().join("report.json").exists());
        let pca_csv = std::fs::read_to_string(dir.path().join("pca_points.csv")).unwrap();
        assert!(pca_csv.starts_with("pc1,pc2,state\n"));
        assert!(dir.path().join("pca_points_2tag.csv").exists());
        let box_csv = std::fs::read_to_string(dir.path().join("box_stats.csv")).unwrap();
        assert!(box_csv.starts_with("group,stat,value\n"));
        assert!(box_csv.contains("rear/control/rssi,median,2"));
    }
}
