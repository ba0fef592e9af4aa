//! The evaluation statistics behind the figures: 2-component PCA of the
//! orientation features and box-plot summaries of the raw per-read data.
//!
//! ```bash
//! cargo run -p tagsight --example evaluate_stats
//! ```

use tagsight::eval::{box_stats, pca2};
use tagsight::features::{assemble_orientation, window_reads, WindowingOptions};
use tagsight::sim::{generate_corpus, tag_face_for_state, Face};
use tagsight::ScenarioConfig;

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig {
        duration_s: 30.0,
        ..ScenarioConfig::default()
    };
    let corpus = generate_corpus(&base, 17)?;

    // PCA of the 3-tag orientation features, labeled by state.
    let mut x = Vec::new();
    let mut labels = Vec::new();
    for session in &corpus.sessions {
        let opts = WindowingOptions {
            session_id: session.id(),
            material: Some(session.cfg.material),
            state: Some(session.cfg.state),
            rx_floor_dbm: session.cfg.rx_floor_dbm,
            ..WindowingOptions::default()
        };
        for window in window_reads(&session.reads, &opts)?.windows {
            x.push(assemble_orientation(&window, 3)?);
            labels.push(session.cfg.state.to_string());
        }
    }
    let projection = pca2(&x, &labels)?;
    println!(
        "PCA of {} orientation vectors: components explain {:.1}% and {:.1}% of variance",
        x.len(),
        projection.explained_fractions[0] * 100.0,
        projection.explained_fractions[1] * 100.0
    );
    for point in projection.points.iter().take(5) {
        println!(
            "  state {}: pc1 {:+.3}, pc2 {:+.3}",
            point.label, point.pc1, point.pc2
        );
    }

    // Box statistics of raw rear-position RSSI per material.
    println!("\nrear-position RSSI by material (median [q1, q3], whiskers, outliers):");
    for material in tagsight::MaterialClass::ALL {
        let mut values = Vec::new();
        for session in corpus.sessions.iter().filter(|s| s.cfg.material == material) {
            for read in &session.reads {
                if tag_face_for_state(session.cfg.state, read.tag) == Face::Rear {
                    values.push(read.rssi_dbm);
                }
            }
        }
        let stats = box_stats(&values)?;
        println!(
            "  {:>12}: {:7.2} [{:7.2}, {:7.2}]  whiskers [{:7.2}, {:7.2}]  {} outliers",
            material.slug(),
            stats.median,
            stats.q1,
            stats.q3,
            stats.whisker_lo,
            stats.whisker_hi,
            stats.n_outliers
        );
    }
    println!("\n(the chips row shows the widest box: its metalized bag reflects wildly)");
    Ok(())
}
