//! One-second feature windows over raw reads.
//!
//! RSSI uses the arithmetic mean and population (1/n) variance. Phase is an
//! angle, so it gets circular statistics: the mean is the angle of the
//! summed unit vectors mapped to [0, 2*pi), and the variance is 1 - Rbar
//! (mean resultant length), a dimensionless value in [0, 1]. Arithmetic
//! phase statistics would break for distributions straddling the 0/2*pi
//! wrap.
//!
//! Windows are non-overlapping [k, k+1) slices. A window is discarded when
//! any active tag has fewer than two reads, with one exception: in 2-tag
//! mode a bottom-face tag that is entirely absent (fully occluded) is
//! imputed at the receive floor so the occlusion itself survives as a
//! feature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learn::Dataset;
use crate::sim::{
    tag_face_for_state, Face, MaterialClass, OrientationState, RawRead, TagRole,
};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("reads are not sorted by timestamp (index {0})")]
    UnsortedInput(usize),
    #[error("invalid windowing options: {0}")]
    InvalidOptions(String),
    #[error("window {window_index} missing features for {tag}")]
    MissingTag { window_index: u64, tag: TagRole },
    #[error("window {0} has no labels")]
    MissingLabels(u64),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Windowed statistics for one tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagFeatures {
    pub mean_rssi_dbm: f64,
    /// Population variance of RSSI, dB^2.
    pub var_rssi_db2: f64,
    /// Circular mean in [0, 2*pi).
    pub mean_phase_rad: f64,
    /// Circular variance 1 - Rbar, in [0, 1].
    pub var_phase: f64,
    /// Reads in the window; 0 only for imputed occluded tags.
    pub n_reads: usize,
}

/// One one-second window with per-tag features and optional labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow {
    pub session_id: String,
    pub window_index: u64,
    pub n_tags: u8,
    pub tag1: Option<TagFeatures>,
    pub tag2: Option<TagFeatures>,
    pub tag3: Option<TagFeatures>,
    pub material: Option<MaterialClass>,
    pub state: Option<OrientationState>,
}

impl FeatureWindow {
    pub fn tag(&self, tag: TagRole) -> Option<&TagFeatures> {
        match tag {
            TagRole::Tag1 => self.tag1.as_ref(),
            TagRole::Tag2 => self.tag2.as_ref(),
            TagRole::Tag3 => self.tag3.as_ref(),
        }
    }

    fn set_tag(&mut self, tag: TagRole, features: TagFeatures) {
        match tag {
            TagRole::Tag1 => self.tag1 = Some(features),
            TagRole::Tag2 => self.tag2 = Some(features),
            TagRole::Tag3 => self.tag3 = Some(features),
        }
    }
}

/// How to window a read sequence.
#[derive(Debug, Clone)]
pub struct WindowingOptions {
    pub window_len_s: f64,
    pub n_tags: u8,
    pub session_id: String,
    pub material: Option<MaterialClass>,
    pub state: Option<OrientationState>,
    /// Imputation value for fully occluded bottom tags in 2-tag mode.
    pub rx_floor_dbm: f64,
}

impl Default for WindowingOptions {
    fn default() -> Self {
        WindowingOptions {
            window_len_s: 1.0,
            n_tags: 3,
            session_id: String::new(),
            material: None,
            state: None,
            rx_floor_dbm: -84.0,
        }
    }
}

/// Result of windowing one session.
#[derive(Debug, Clone)]
pub struct Windowing {
    pub windows: Vec<FeatureWindow>,
    /// Windows dropped because some active tag had < 2 reads.
    pub discarded_windows: usize,
    /// Reads inside those dropped windows.
    pub discarded_reads: usize,
}

/// Arithmetic mean and population variance.
pub fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Circular mean (angle of the summed unit vectors) mapped to [0, 2*pi),
/// and circular variance 1 - Rbar in [0, 1].
pub fn circular_mean_and_var(phases: &[f64]) -> (f64, f64) {
    let n = phases.len() as f64;
    let sum_cos: f64 = phases.iter().map(|p| p.cos()).sum();
    let sum_sin: f64 = phases.iter().map(|p| p.sin()).sum();
    let mean = sum_sin.atan2(sum_cos).rem_euclid(TWO_PI);
    let rbar = (sum_cos * sum_cos + sum_sin * sum_sin).sqrt() / n;
    (mean, (1.0 - rbar).clamp(0.0, 1.0))
}

fn tag_features(reads: &[&RawRead]) -> TagFeatures {
    let rssi: Vec<f64> = reads.iter().map(|r| r.rssi_dbm).collect();
    let phase: Vec<f64> = reads.iter().map(|r| r.phase_rad).collect();
    let (mean_rssi_dbm, var_rssi_db2) = mean_and_var(&rssi);
    let (mean_phase_rad, var_phase) = circular_mean_and_var(&phase);
    TagFeatures {
        mean_rssi_dbm,
        var_rssi_db2,
        mean_phase_rad,
        var_phase,
        n_reads: reads.len(),
    }
}

/// Slice sorted reads into non-overlapping windows and compute per-tag
/// features. Each read lands in exactly one window.
pub fn window_reads(reads: &[RawRead], opts: &WindowingOptions) -> Result<Windowing, FeatureError> {
    if !opts.window_len_s.is_finite() || opts.window_len_s <= 0.0 {
        return Err(FeatureError::InvalidOptions(
            "window_len_s must be > 0".into(),
        ));
    }
    if opts.n_tags != 2 && opts.n_tags != 3 {
        return Err(FeatureError::InvalidOptions("n_tags must be 2 or 3".into()));
    }
    for (i, pair) in reads.windows(2).enumerate() {
        if pair[1].timestamp_s < pair[0].timestamp_s {
            return Err(FeatureError::UnsortedInput(i + 1));
        }
    }

    let active = TagRole::active(opts.n_tags);
    let mut windowing = Windowing {
        windows: Vec::new(),
        discarded_windows: 0,
        discarded_reads: 0,
    };

    let mut start = 0;
    while start < reads.len() {
        let index = (reads[start].timestamp_s / opts.window_len_s).floor() as u64;
        let mut end = start;
        while end < reads.len()
            && (reads[end].timestamp_s / opts.window_len_s).floor() as u64 == index
        {
            end += 1;
        }
        let slice = &reads[start..end];
        start = end;

        let mut window = FeatureWindow {
            session_id: opts.session_id.clone(),
            window_index: index,
            n_tags: opts.n_tags,
            tag1: None,
            tag2: None,
            tag3: None,
            material: opts.material,
            state: opts.state,
        };
        let mut keep = true;
        for &tag in active {
            let tag_reads: Vec<&RawRead> = slice.iter().filter(|r| r.tag == tag).collect();
            if tag_reads.len() >= 2 {
                window.set_tag(tag, tag_features(&tag_reads));
            } else if tag_reads.is_empty() && imputable(tag, opts) {
                // Fully occluded bottom tag in 2-tag mode: pin it to the
                // receive floor so the occlusion stays visible downstream.
                window.set_tag(
                    tag,
                    TagFeatures {
                        mean_rssi_dbm: opts.rx_floor_dbm,
                        var_rssi_db2: 0.0,
                        mean_phase_rad: 0.0,
                        var_phase: 0.0,
                        n_reads: 0,
                    },
                );
            } else {
                keep = false;
                break;
            }
        }
        if keep {
            windowing.windows.push(window);
        } else {
            windowing.discarded_windows += 1;
            windowing.discarded_reads += slice.len();
        }
    }
    Ok(windowing)
}

fn imputable(tag: TagRole, opts: &WindowingOptions) -> bool {
    opts.n_tags == 2
        && opts
            .state
            .is_some_and(|state| tag_face_for_state(state, tag) == Face::Bottom)
}

/// Wrap an angle difference into (-pi, pi].
fn wrap_signed(delta: f64) -> f64 {
    let r = delta.rem_euclid(TWO_PI);
    if r > std::f64::consts::PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Phase difference of arrival between two tags' window means, in (-pi, pi].
///
/// Diagnostic only: the classifiers receive the raw per-tag means, of which
/// this difference is a linear combination.
pub fn pdoa(window: &FeatureWindow, a: TagRole, b: TagRole) -> Result<f64, FeatureError> {
    let fa = window.tag(a).ok_or(FeatureError::MissingTag {
        window_index: window.window_index,
        tag: a,
    })?;
    let fb = window.tag(b).ok_or(FeatureError::MissingTag {
        window_index: window.window_index,
        tag: b,
    })?;
    Ok(wrap_signed(fa.mean_phase_rad - fb.mean_phase_rad))
}

/// Orientation classifier input: `[rssi, phase]` means per tag, Tag1 first.
/// Length 6 for 3-tag windows, 4 for 2-tag.
pub fn assemble_orientation(
    window: &FeatureWindow,
    n_tags: u8,
) -> Result<Vec<f64>, FeatureError> {
    let mut v = Vec::with_capacity(2 * n_tags as usize);
    for &tag in TagRole::active(n_tags) {
        let f = window.tag(tag).ok_or(FeatureError::MissingTag {
            window_index: window.window_index,
            tag,
        })?;
        v.push(f.mean_rssi_dbm);
        v.push(f.mean_phase_rad);
    }
    Ok(v)
}

/// Material classifier input for one tag:
/// `[avg_rssi, rssi_var, avg_phase, phase_var]`.
pub fn assemble_material(window: &FeatureWindow, tag: TagRole) -> Result<[f64; 4], FeatureError> {
    let f = window.tag(tag).ok_or(FeatureError::MissingTag {
        window_index: window.window_index,
        tag,
    })?;
    Ok([f.mean_rssi_dbm, f.var_rssi_db2, f.mean_phase_rad, f.var_phase])
}

/// Labeled orientation dataset over windows: features are the per-tag means,
/// targets the orientation state ids.
pub fn build_orientation_dataset(
    windows: &[FeatureWindow],
    n_tags: u8,
) -> Result<Dataset, FeatureError> {
    let mut x = Vec::with_capacity(windows.len());
    let mut y = Vec::with_capacity(windows.len());
    for w in windows {
        let state = w.state.ok_or(FeatureError::MissingLabels(w.window_index))?;
        x.push(assemble_orientation(w, n_tags)?);
        y.push(state.id() as usize);
    }
    Ok(Dataset { x, y })
}

/// Labeled material datasets: one sample per (window, tag) where the tag
/// sits on the rear face or on a non-bottom perpendicular face.
pub struct MaterialDatasets {
    pub rear: Dataset,
    pub side: Dataset,
}

pub fn build_material_datasets(
    windows: &[FeatureWindow],
    n_tags: u8,
) -> Result<MaterialDatasets, FeatureError> {
    let mut rear = Dataset::default();
    let mut side = Dataset::default();
    for w in windows {
        let state = w.state.ok_or(FeatureError::MissingLabels(w.window_index))?;
        let material = w
            .material
            .ok_or(FeatureError::MissingLabels(w.window_index))?;
        for &tag in TagRole::active(n_tags) {
            let face = tag_face_for_state(state, tag);
            let dataset = match face {
                Face::Rear => &mut rear,
                Face::Left | Face::Right | Face::Top => &mut side,
                Face::Front | Face::Bottom => continue,
            };
            dataset.x.push(assemble_material(w, tag)?.to_vec());
            dataset.y.push(material.index());
        }
    }
    Ok(MaterialDatasets { rear, side })
}

/// Write windows as JSON-lines: one object per window.
pub fn write_windows_jsonl(windows: &[FeatureWindow], path: &std::path::Path) -> Result<(), FeatureError> {
    let mut out = String::new();
    for w in windows {
        out.push_str(&serde_json::to_string(w)?);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_windows_jsonl(path: &std::path::Path) -> Result<Vec<FeatureWindow>, FeatureError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(FeatureError::from))
        .collect()
}
