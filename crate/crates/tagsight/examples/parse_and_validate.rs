//! Round-trip reads through the CSV record format, validate a session
//! against its manifest, and show the parse errors malformed input earns.
//!
//! ```bash
//! cargo run -p tagsight --example parse_and_validate
//! ```

use tagsight::ingest::{
    default_tag_ids, parse_reads, serialize_reads, validate_session, SessionManifest,
};
use tagsight::sim::generate_session;
use tagsight::ScenarioConfig;

fn main() -> anyhow::Result<()> {
    let cfg = ScenarioConfig {
        duration_s: 15.0,
        seed: 3,
        ..ScenarioConfig::default()
    };
    let reads = generate_session(&cfg)?;
    let manifest = SessionManifest::for_config("demo_session".into(), &cfg);

    let csv = serialize_reads(&reads, &manifest.tags)?;
    println!("serialized {} reads to {} bytes of CSV", reads.len(), csv.len());
    let parsed = parse_reads(&csv, &manifest.tags)?;
    assert_eq!(parsed, reads);
    println!("parse(serialize(reads)) round-trips exactly");

    let report = validate_session(&parsed, &manifest);
    println!(
        "validation: {} reads, {} violations",
        report.n_reads,
        report.violations.len()
    );

    // Malformed input names the offending line.
    let bad = "timestamp_s,tag_id,rssi_dbm,phase_rad\n0.1,TAG-001,-61.0,1.0\n0.2,TAG-001,-61.0,6.4\n";
    match parse_reads(bad.as_bytes(), &default_tag_ids(3)) {
        Err(err) => println!("malformed file rejected: {err}"),
        Ok(_) => unreachable!("phase 6.4 is out of range"),
    }
    let unknown = "timestamp_s,tag_id,rssi_dbm,phase_rad\n0.1,MYSTERY,-61.0,1.0\n";
    match parse_reads(unknown.as_bytes(), &default_tag_ids(3)) {
        Err(err) => println!("unknown tag rejected:     {err}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
