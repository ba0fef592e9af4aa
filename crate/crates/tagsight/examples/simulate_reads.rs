//! Generate one session of synthetic reads and look at the channel.
//!
//! ```bash
//! cargo run -p tagsight --example simulate_reads
//! ```

use tagsight::sim::{generate_session, tag_face_for_state};
use tagsight::{MaterialClass, OrientationState, ScenarioConfig, TagRole};

fn main() -> anyhow::Result<()> {
    let cfg = ScenarioConfig {
        material: MaterialClass::Chips,
        state: OrientationState::new(2)?, // Tag1 rear, Tag2 bottom, Tag3 right
        duration_s: 30.0,
        seed: 7,
        ..ScenarioConfig::default()
    };
    let reads = generate_session(&cfg)?;
    println!(
        "{} reads over {}s ({} polls/tag/s, bottom tag drops ~half)",
        reads.len(),
        cfg.duration_s,
        cfg.reads_per_sec_per_tag
    );

    for &tag in TagRole::active(cfg.n_tags) {
        let face = tag_face_for_state(cfg.state, tag);
        let values: Vec<&tagsight::RawRead> = reads.iter().filter(|r| r.tag == tag).collect();
        let mean_rssi =
            values.iter().map(|r| r.rssi_dbm).sum::<f64>() / values.len() as f64;
        println!(
            "{tag} on {face:?}: {} reads, mean rssi {mean_rssi:.1} dBm",
            values.len()
        );
    }

    println!("\nfirst five reads:");
    for read in &reads[..5] {
        println!(
            "  t={:7.3}s {} rssi={:7.2} dBm phase={:.4} rad",
            read.timestamp_s, read.tag, read.rssi_dbm, read.phase_rad
        );
    }
    Ok(())
}
