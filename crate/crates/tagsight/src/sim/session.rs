//! Session and corpus generation.

use rayon::prelude::*;

use rand::Rng;

use crate::rng;

use super::channel::{sample_at_face, sample_read};
use super::{Face, MaterialClass, OrientationState, RawRead, ScenarioConfig, SimError, TagRole};

/// One generated session: its config plus the kept reads, timestamp-sorted.
#[derive(Debug, Clone)]
pub struct Session {
    /// Position in the corpus (material-major, state-minor).
    pub index: usize,
    pub cfg: ScenarioConfig,
    pub reads: Vec<RawRead>,
}

impl Session {
    /// Stable identifier used in file names and manifests.
    pub fn id(&self) -> String {
        format!(
            "s{:02}_{}_state{}",
            self.index,
            self.cfg.material.slug(),
            self.cfg.state
        )
    }
}

/// A full corpus: one session per (material, state) pair.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub seed: u64,
    pub sessions: Vec<Session>,
}

impl Corpus {
    pub fn total_reads(&self) -> usize {
        self.sessions.iter().map(|s| s.reads.len()).sum()
    }
}

/// Generate every read of one session.
///
/// Each active tag is polled `reads_per_sec_per_tag` times per second on a
/// jittered grid, so each one-second window sees a fixed number of poll
/// attempts per tag. Dropped reads are simply absent. Output is sorted by
/// timestamp (stable: tag order breaks ties) and fully determined by the
/// config, including its seed.
pub fn generate_session(cfg: &ScenarioConfig) -> Result<Vec<RawRead>, SimError> {
    cfg.validate()?;
    let rate = cfg.reads_per_sec_per_tag;
    let n_polls = (rate * cfg.duration_s).round() as usize;

    let mut all: Vec<RawRead> = Vec::with_capacity(n_polls * cfg.n_tags as usize);
    for &tag in TagRole::active(cfg.n_tags) {
        let mut tag_rng = rng::stream(cfg.seed, &format!("sim/tag{}", tag.index()));
        for i in 0..n_polls {
            let jitter: f64 = tag_rng.gen::<f64>();
            let t = (i as f64 + jitter) / rate;
            if t >= cfg.duration_s {
                continue;
            }
            if let Some(read) = sample_read(cfg, tag, t, &mut tag_rng) {
                all.push(read);
            }
        }
    }
    all.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    Ok(all)
}

/// Generate the 30-session corpus: every material crossed with every state.
///
/// Session seeds are derived from `seed` by session id, so sessions are
/// independent streams and may be generated in parallel without changing
/// the output.
pub fn generate_corpus(base: &ScenarioConfig, seed: u64) -> Result<Corpus, SimError> {
    base.validate()?;
    let mut configs = Vec::new();
    for material in MaterialClass::ALL {
        for state in OrientationState::all() {
            let index = configs.len();
            let mut cfg = base.clone();
            cfg.material = material;
            cfg.state = state;
            cfg.seed = rng::derive_seed(
                seed,
                &format!("sim/session{:02}/{}/{}", index, material.slug(), state),
            );
            configs.push((index, cfg));
        }
    }

    let sessions = configs
        .into_par_iter()
        .map(|(index, cfg)| {
            generate_session(&cfg).map(|reads| Session { index, cfg, reads })
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Corpus { seed, sessions })
}

/// Sampled per-cell RSSI statistics used to check the simulator calibration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationCell {
    pub material: MaterialClass,
    pub face: Face,
    pub n: usize,
    pub mean_rssi_dbm: f64,
    pub var_rssi_db2: f64,
}

/// Calibration orderings over sampled draws, plus the raw cell stats.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationSummary {
    pub draws_per_cell: usize,
    pub cells: Vec<CalibrationCell>,
    /// Chips show the largest rear-position RSSI variance.
    pub chips_rear_var_largest: bool,
    /// Plastic wrap's rear-position mean RSSI sits below the control's.
    pub plastic_rear_mean_below_control: bool,
    /// Every material has more side-position RSSI variance than rear.
    pub side_var_exceeds_rear_for_all: bool,
}

impl CalibrationSummary {
    pub fn all_hold(&self) -> bool {
        self.chips_rear_var_largest
            && self.plastic_rear_mean_below_control
            && self.side_var_exceeds_rear_for_all
    }
}

fn cell_stats(
    base: &ScenarioConfig,
    material: MaterialClass,
    face: Face,
    n: usize,
    seed: u64,
) -> CalibrationCell {
    let mut cfg = base.clone();
    cfg.material = material;
    let mut rng = rng::stream(seed, &format!("calib/{}/{:?}", material.slug(), face));
    let mut values = Vec::with_capacity(n);
    // Floor drops are rare at these faces; keep drawing until n kept reads.
    while values.len() < n {
        if let Some((rssi, _phase)) = sample_at_face(&cfg, face, &mut rng) {
            values.push(rssi);
        }
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    CalibrationCell {
        material,
        face,
        n,
        mean_rssi_dbm: mean,
        var_rssi_db2: var,
    }
}

/// Draw `draws_per_cell` reads for every (material, position) cell and check
/// the qualitative orderings the channel model is calibrated to reproduce.
/// The side position is represented by the right face.
pub fn calibration_summary(
    base: &ScenarioConfig,
    draws_per_cell: usize,
    seed: u64,
) -> CalibrationSummary {
    let mut cells = Vec::new();
    for material in MaterialClass::ALL {
        for face in [Face::Rear, Face::Right] {
            cells.push(cell_stats(base, material, face, draws_per_cell, seed));
        }
    }
    let get = |material: MaterialClass, face: Face| {
        cells
            .iter()
            .find(|c| c.material == material && c.face == face)
            .unwrap()
    };

    let chips_rear = get(MaterialClass::Chips, Face::Rear).var_rssi_db2;
    let chips_rear_var_largest = MaterialClass::ALL
        .iter()
        .filter(|m| **m != MaterialClass::Chips)
        .all(|m| get(*m, Face::Rear).var_rssi_db2 < chips_rear);

    let plastic_rear_mean_below_control = get(MaterialClass::PlasticWrap, Face::Rear).mean_rssi_dbm
        < get(MaterialClass::Control, Face::Rear).mean_rssi_dbm;

    let side_var_exceeds_rear_for_all = MaterialClass::ALL
        .iter()
        .all(|m| get(*m, Face::Right).var_rssi_db2 > get(*m, Face::Rear).var_rssi_db2);

    CalibrationSummary {
        draws_per_cell,
        cells,
        chips_rear_var_largest,
        plastic_rear_mean_below_control,
        side_var_exceeds_rear_for_all,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> ScenarioConfig {
        ScenarioConfig {
            duration_s: 30.0,
            seed: 99,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn session_is_sorted_and_deterministic() {
        let cfg = quick_cfg();
        let a = generate_session(&cfg).unwrap();
        let b = generate_session(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].timestamp_s <= w[1].timestamp_s));
        assert!(!a.is_empty());
    }

    #[test]
    fn session_rejects_zero_duration() {
        let cfg = ScenarioConfig {
            duration_s: 0.0,
            ..ScenarioConfig::default()
        };
        assert!(generate_session(&cfg).is_err());
    }

    #[test]
    fn session_read_count_near_rate() {
        // 30 s * 3 tags * 5 Hz = 450 polls; state 0 has a bottom tag that
        // drops about half its polls. Exact count frozen from a fixed-seed
        // run as a golden value.
        let reads = generate_session(&quick_cfg()).unwrap();
        assert_eq!(reads.len(), 378);
    }

    #[test]
    fn golden_full_session_count() {
        // 300 s * 3 tags * 5 Hz = 4500 polls minus bottom-tag drops;
        // frozen from a fixed-seed run.
        let cfg = ScenarioConfig {
            seed: 99,
            ..ScenarioConfig::default()
        };
        let reads = generate_session(&cfg).unwrap();
        assert_eq!(reads.len(), 3735);
    }

    #[test]
    fn golden_paper_count_mode_corpus() {
        // Aggregate-rate mode: ~5 polls per second across the three tags,
        // 45,000 polls over 30 sessions; the bottom-tag occlusion drops
        // about 11%, leaving the recorded count near the original corpus
        // size. Exact total frozen from a fixed-seed run.
        let base = ScenarioConfig {
            reads_per_sec_per_tag: 5.0 / 3.0,
            ..ScenarioConfig::default()
        };
        let corpus = generate_corpus(&base, 42).unwrap();
        assert_eq!(corpus.total_reads(), 39_955);
        assert!(corpus.total_reads() > 35_000 && corpus.total_reads() < 50_000);
    }

    #[test]
    fn two_tag_session_has_no_tag3() {
        let cfg = ScenarioConfig {
            n_tags: 2,
            ..quick_cfg()
        };
        let reads = generate_session(&cfg).unwrap();
        assert!(reads.iter().all(|r| r.tag != TagRole::Tag3));
    }

    #[test]
    fn timestamps_stay_in_session() {
        let reads = generate_session(&quick_cfg()).unwrap();
        assert!(reads
            .iter()
            .all(|r| r.timestamp_s >= 0.0 && r.timestamp_s < 30.0));
    }

    #[test]
    fn corpus_has_thirty_sessions() {
        let base = ScenarioConfig {
            duration_s: 2.0,
            ..ScenarioConfig::default()
        };
        let corpus = generate_corpus(&base, 5).unwrap();
        assert_eq!(corpus.sessions.len(), 30);
        // Every (material, state) pair appears exactly once.
        let mut pairs = std::collections::HashSet::new();
        for s in &corpus.sessions {
            assert!(pairs.insert((s.cfg.material, s.cfg.state.id())));
        }
        assert_eq!(pairs.len(), 30);
    }

    #[test]
    fn corpus_is_deterministic() {
        let base = ScenarioConfig {
            duration_s: 2.0,
            ..ScenarioConfig::default()
        };
        let a = generate_corpus(&base, 5).unwrap();
        let b = generate_corpus(&base, 5).unwrap();
        for (sa, sb) in a.sessions.iter().zip(&b.sessions) {
            assert_eq!(sa.reads, sb.reads);
            assert_eq!(sa.id(), sb.id());
        }
    }

    #[test]
    fn calibration_orderings_hold() {
        let summary = calibration_summary(&ScenarioConfig::default(), 1000, 42);
        assert!(summary.chips_rear_var_largest, "{summary:?}");
        assert!(summary.plastic_rear_mean_below_control);
        assert!(summary.side_var_exceeds_rear_for_all);
        assert_eq!(summary.cells.len(), 10);
    }
}
