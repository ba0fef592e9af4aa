//! Read-record ingestion: CSV parsing/serialization, session manifests,
//! validation, and stream merging.
//!
//! This is the boundary where exports from a real reader could replace the
//! simulator. Records travel as UTF-8 CSV with the fixed header
//! `timestamp_s,tag_id,rssi_dbm,phase_rad` (decimal point, no locale);
//! phase is stored in radians in [0, 2*pi). Tag ids map to [`TagRole`]s
//! through the session manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{MaterialClass, OrientationState, RawRead, ScenarioConfig, TagRole};

/// Fixed CSV header for read-record files.
pub const READS_CSV_HEADER: &str = "timestamp_s,tag_id,rssi_dbm,phase_rad";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing or malformed header: expected `{READS_CSV_HEADER}`")]
    BadHeader,
    #[error("line {line}: malformed row: {msg}")]
    MalformedRow { line: u64, msg: String },
    #[error("line {line}: unknown tag_id `{tag_id}`")]
    UnknownTagId { line: u64, tag_id: String },
    #[error("line {line}: phase {value} out of range [0, 2*pi)")]
    PhaseOutOfRange { line: u64, value: f64 },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Labels and provenance for one session's read file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session_id: String,
    pub material: MaterialClass,
    pub state: OrientationState,
    pub n_tags: u8,
    /// Reader-visible tag id to role, e.g. `"TAG-001" -> Tag1`.
    pub tags: BTreeMap<String, TagRole>,
    /// Snapshot of the generating config.
    pub config: ScenarioConfig,
}

impl SessionManifest {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.n_tags != 2 && self.n_tags != 3 {
            return Err(IngestError::Manifest("n_tags must be 2 or 3".into()));
        }
        if self.tags.len() != self.n_tags as usize {
            return Err(IngestError::Manifest(format!(
                "expected {} tag ids, found {}",
                self.n_tags,
                self.tags.len()
            )));
        }
        let mut roles: Vec<TagRole> = self.tags.values().copied().collect();
        roles.sort();
        roles.dedup();
        if roles.len() != self.tags.len() {
            return Err(IngestError::Manifest("duplicate tag roles".into()));
        }
        if self.n_tags == 2 && roles.contains(&TagRole::Tag3) {
            return Err(IngestError::Manifest(
                "Tag3 must be absent in 2-tag sessions".into(),
            ));
        }
        Ok(())
    }

    /// The default simulator manifest for a session.
    pub fn for_config(session_id: String, cfg: &ScenarioConfig) -> SessionManifest {
        SessionManifest {
            session_id,
            material: cfg.material,
            state: cfg.state,
            n_tags: cfg.n_tags,
            tags: default_tag_ids(cfg.n_tags),
            config: cfg.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SessionManifest, IngestError> {
        let text = std::fs::read_to_string(path)?;
        let manifest: SessionManifest = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Top-level corpus manifest: which sessions a corpus directory holds.
/// Each session id `s` has `{s}.reads.csv` and `{s}.manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub seed: u64,
    pub session_ids: Vec<String>,
}

impl CorpusManifest {
    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("corpus.json"), json + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<CorpusManifest, IngestError> {
        let text = std::fs::read_to_string(dir.join("corpus.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// The simulator's fixed tag ids.
pub fn default_tag_ids(n_tags: u8) -> BTreeMap<String, TagRole> {
    TagRole::active(n_tags)
        .iter()
        .map(|t| (format!("TAG-{:03}", t.index() + 1), *t))
        .collect()
}

/// Parse a read-record CSV into typed records, in file order.
///
/// Errors name the 1-based line of the offending row.
pub fn parse_reads(
    bytes: &[u8],
    tags: &BTreeMap<String, TagRole>,
) -> Result<Vec<RawRead>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    {
        let headers = reader.headers().map_err(|_| IngestError::BadHeader)?;
        let expected: Vec<&str> = READS_CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(IngestError::BadHeader);
        }
    }

    let mut reads = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| IngestError::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            return Err(IngestError::MalformedRow {
                line,
                msg: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let field = |i: usize, name: &str| -> Result<f64, IngestError> {
            record[i].trim().parse::<f64>().map_err(|e| {
                IngestError::MalformedRow {
                    line,
                    msg: format!("bad {name} `{}`: {e}", &record[i]),
                }
            })
        };
        let timestamp_s = field(0, "timestamp_s")?;
        let tag_id = record[1].trim();
        let tag = *tags.get(tag_id).ok_or_else(|| IngestError::UnknownTagId {
            line,
            tag_id: tag_id.to_string(),
        })?;
        let rssi_dbm = field(2, "rssi_dbm")?;
        let phase_rad = field(3, "phase_rad")?;
        if !(0.0..std::f64::consts::TAU).contains(&phase_rad) {
            return Err(IngestError::PhaseOutOfRange {
                line,
                value: phase_rad,
            });
        }
        reads.push(RawRead {
            timestamp_s,
            tag,
            rssi_dbm,
            phase_rad,
        });
    }
    Ok(reads)
}

/// Serialize reads to CSV. Floats are written in shortest round-trip form,
/// so `parse_reads(serialize_reads(x)) == x`.
pub fn serialize_reads(
    reads: &[RawRead],
    tags: &BTreeMap<String, TagRole>,
) -> Result<Vec<u8>, IngestError> {
    let by_role: BTreeMap<TagRole, &str> =
        tags.iter().map(|(id, role)| (*role, id.as_str())).collect();
    let mut out = Vec::new();
    writeln!(out, "{READS_CSV_HEADER}")?;
    for read in reads {
        let tag_id = by_role.get(&read.tag).ok_or_else(|| {
            IngestError::Manifest(format!("no tag id mapped for {:?}", read.tag))
        })?;
        writeln!(
            out,
            "{},{},{},{}",
            read.timestamp_s, tag_id, read.rssi_dbm, read.phase_rad
        )?;
    }
    Ok(out)
}

/// Validation findings for one session.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_reads: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a parsed session against its manifest: monotonic timestamps,
/// per-tag read counts, and value ranges.
pub fn validate_session(reads: &[RawRead], manifest: &SessionManifest) -> ValidationReport {
    let mut report = ValidationReport {
        n_reads: reads.len(),
        ..Default::default()
    };
    if let Err(e) = manifest.validate() {
        report.violations.push(e.to_string());
    }

    let mut counts = [0usize; 3];
    let mut prev = f64::NEG_INFINITY;
    for (i, read) in reads.iter().enumerate() {
        if read.timestamp_s < prev {
            report.violations.push(format!(
                "read {i}: timestamp {} decreases (previous {prev})",
                read.timestamp_s
            ));
        }
        prev = read.timestamp_s;
        if read.rssi_dbm > 0.0 || read.rssi_dbm < manifest.config.rx_floor_dbm {
            report.violations.push(format!(
                "read {i}: rssi {} outside [{}, 0]",
                read.rssi_dbm, manifest.config.rx_floor_dbm
            ));
        }
        if !(0.0..std::f64::consts::TAU).contains(&read.phase_rad) {
            report
                .violations
                .push(format!("read {i}: phase {} out of range", read.phase_rad));
        }
        counts[read.tag.index()] += 1;
    }
    for &tag in TagRole::active(manifest.n_tags) {
        if counts[tag.index()] == 0 {
            report
                .violations
                .push(format!("active tag {tag} has no reads"));
        }
    }
    if manifest.n_tags == 2 && counts[TagRole::Tag3.index()] > 0 {
        report
            .violations
            .push("inactive Tag3 has reads in a 2-tag session".to_string());
    }
    report
}

/// Merge timestamp-sorted read streams into one globally sorted sequence.
/// The merge is stable: on equal timestamps, earlier streams win.
pub fn merge_streams(streams: &[Vec<RawRead>]) -> Vec<RawRead> {
    let mut merged: Vec<RawRead> = streams.iter().flatten().copied().collect();
    merged.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    merged
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tag_map() -> BTreeMap<String, TagRole> {
        let mut m = BTreeMap::new();
        m.insert("E200-1".to_string(), TagRole::Tag1);
        m.insert("E200-2".to_string(), TagRole::Tag2);
        m.insert("E200-3".to_string(), TagRole::Tag3);
        m
    }

    #[test]
    #[allow(clippy::approx_constant)] // 1.5708 is sample file data, not pi/2
    fn parses_single_row() {
        let csv = format!("{READS_CSV_HEADER}\n0.200,E200-1,-61.0,1.5708\n");
        let reads = parse_reads(csv.as_bytes(), &tag_map()).unwrap();
        assert_eq!(reads.len(), 1);
        assert_eq!(reads[0].timestamp_s, 0.2);
        assert_eq!(reads[0].tag, TagRole::Tag1);
        assert_eq!(reads[0].rssi_dbm, -61.0);
        assert_eq!(reads[0].phase_rad, 1.5708);
    }

    #[test]
    fn rejects_phase_out_of_range() {
        let csv = format!("{READS_CSV_HEADER}\n0.1,E200-1,-61.0,6.4\n");
        let err = parse_reads(csv.as_bytes(), &tag_map()).unwrap_err();
        match err {
            IngestError::PhaseOutOfRange { line, value } => {
                assert_eq!(line, 2);
                assert_eq!(value, 6.4);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_empty_sequence() {
        let csv = format!("{READS_CSV_HEADER}\n");
        assert!(parse_reads(csv.as_bytes(), &tag_map()).unwrap().is_empty());
    }

    #[test]
    fn malformed_row_names_line() {
        let csv = format!("{READS_CSV_HEADER}\n0.1,E200-1,-61.0,1.0\nnot-a-number,E200-2,-60,2.0\n");
        let err = parse_reads(csv.as_bytes(), &tag_map()).unwrap_err();
        match err {
            IngestError::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_tag_is_an_error() {
        let csv = format!("{READS_CSV_HEADER}\n0.1,BOGUS,-61.0,1.0\n");
        assert!(matches!(
            parse_reads(csv.as_bytes(), &tag_map()),
            Err(IngestError::UnknownTagId { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_wrong_header() {
        let csv = "time,tag,rssi,phase\n0.1,E200-1,-61.0,1.0\n";
        assert!(matches!(
            parse_reads(csv.as_bytes(), &tag_map()),
            Err(IngestError::BadHeader)
        ));
    }

    #[test]
    fn merge_is_sorted_stable_union() {
        let a = vec![
            RawRead { timestamp_s: 0.0, tag: TagRole::Tag1, rssi_dbm: -60.0, phase_rad: 1.0 },
            RawRead { timestamp_s: 2.0, tag: TagRole::Tag1, rssi_dbm: -61.0, phase_rad: 1.0 },
        ];
        let b = vec![
            RawRead { timestamp_s: 0.0, tag: TagRole::Tag2, rssi_dbm: -62.0, phase_rad: 2.0 },
            RawRead { timestamp_s: 1.0, tag: TagRole::Tag2, rssi_dbm: -63.0, phase_rad: 2.0 },
        ];
        let merged = merge_streams(&[a.clone(), b.clone()]);
        assert_eq!(merged.len(), 4);
        assert!(merged.windows(2).all(|w| w[0].timestamp_s <= w[1].timestamp_s));
        // Equal timestamps keep input order: stream a's read first.
        assert_eq!(merged[0].tag, TagRole::Tag1);
        assert_eq!(merged[1].tag, TagRole::Tag2);

        let merged_empty = merge_streams(&[a.clone(), vec![]]);
        assert_eq!(merged_empty, a);
    }

    #[test]
    fn validate_flags_problems() {
        let cfg = ScenarioConfig::default();
        let manifest = SessionManifest::for_config("s".into(), &cfg);
        let ids = default_tag_ids(3);
        assert_eq!(ids.len(), 3);
        let reads = vec![
            RawRead { timestamp_s: 1.0, tag: TagRole::Tag1, rssi_dbm: -60.0, phase_rad: 1.0 },
            RawRead { timestamp_s: 0.5, tag: TagRole::Tag2, rssi_dbm: 3.0, phase_rad: 1.0 },
        ];
        let report = validate_session(&reads, &manifest);
        assert!(!report.is_ok());
        // Decreasing timestamp, positive rssi, and no Tag3 reads.
        assert_eq!(report.violations.len(), 3, "{:?}", report.violations);
    }

    #[test]
    fn validate_accepts_clean_session() {
        let cfg = ScenarioConfig {
            duration_s: 20.0,
            seed: 3,
            ..ScenarioConfig::default()
        };
        let reads = crate::sim::generate_session(&cfg).unwrap();
        let manifest = SessionManifest::for_config("s00".into(), &cfg);
        let report = validate_session(&reads, &manifest);
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn manifest_roundtrips_through_json() {
        let cfg = ScenarioConfig::default();
        let manifest = SessionManifest::for_config("s07_control_state1".into(), &cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let loaded = SessionManifest::load(&path).unwrap();
        assert_eq!(manifest, loaded);
    }

    #[test]
    fn manifest_rejects_tag3_in_two_tag_mode() {
        let cfg = ScenarioConfig::default();
        let mut manifest = SessionManifest::for_config("s".into(), &cfg);
        manifest.n_tags = 2;
        manifest.tags = [
            ("A".to_string(), TagRole::Tag1),
            ("B".to_string(), TagRole::Tag3),
        ]
        .into_iter()
        .collect();
        assert!(manifest.validate().is_err());
    }

    proptest! {
        #[test]
        fn serialize_parse_roundtrip(
            rows in proptest::collection::vec(
                (0.0f64..1000.0, 0usize..3, -84.0f64..0.0, 0.0f64..std::f64::consts::TAU),
                0..40,
            )
        ) {
            let mut reads: Vec<RawRead> = rows
                .into_iter()
                .map(|(t, tag, rssi, phase)| RawRead {
                    timestamp_s: t,
                    tag: TagRole::ALL[tag],
                    rssi_dbm: rssi,
                    phase_rad: phase,
                })
                .collect();
            reads.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
            let tags = tag_map();
            let bytes = serialize_reads(&reads, &tags).unwrap();
            let parsed = parse_reads(&bytes, &tags).unwrap();
            prop_assert_eq!(parsed, reads);
        }

        #[test]
        fn merge_preserves_length(
            a in proptest::collection::vec(0.0f64..100.0, 0..20),
            b in proptest::collection::vec(0.0f64..100.0, 0..20),
        ) {
            let mk = |ts: &[f64], tag| {
                let mut v: Vec<RawRead> = ts.iter().map(|&t| RawRead {
                    timestamp_s: t, tag, rssi_dbm: -60.0, phase_rad: 1.0,
                }).collect();
                v.sort_by(|x, y| x.timestamp_s.total_cmp(&y.timestamp_s));
                v
            };
            let sa = mk(&a, TagRole::Tag1);
            let sb = mk(&b, TagRole::Tag2);
            let merged = merge_streams(&[sa, sb]);
            prop_assert_eq!(merged.len(), a.len() + b.len());
            prop_assert!(merged.windows(2).all(|w| w[0].timestamp_s <= w[1].timestamp_s));
        }
    }
}
