//! Generate a full 30-session corpus (every material crossed with every
//! orientation state) and write it to disk as CSV + JSON manifests.
//!
//! ```bash
//! cargo run -p tagsight --example generate_corpus
//! ```

use tagsight::sim::generate_corpus;
use tagsight::ScenarioConfig;

fn main() -> anyhow::Result<()> {
    // Short sessions keep the example quick; the real corpus uses 300 s.
    let base = ScenarioConfig {
        duration_s: 20.0,
        ..ScenarioConfig::default()
    };
    let corpus = generate_corpus(&base, 42)?;
    println!(
        "{} sessions, {} reads total",
        corpus.sessions.len(),
        corpus.total_reads()
    );
    for session in corpus.sessions.iter().take(8) {
        println!("  {}: {} reads", session.id(), session.reads.len());
    }
    println!("  ...");

    let dir = std::env::temp_dir().join("tagsight_example_corpus");
    std::fs::create_dir_all(&dir)?;
    let mut total_bytes = 0u64;
    for session in &corpus.sessions {
        let manifest =
            tagsight::ingest::SessionManifest::for_config(session.id(), &session.cfg);
        let csv = tagsight::ingest::serialize_reads(&session.reads, &manifest.tags)?;
        total_bytes += csv.len() as u64;
        std::fs::write(dir.join(format!("{}.reads.csv", session.id())), csv)?;
        manifest.save(&dir.join(format!("{}.manifest.json", session.id())))?;
    }
    println!(
        "wrote {} files ({} kB of CSV) under {}",
        corpus.sessions.len() * 2,
        total_bytes / 1024,
        dir.display()
    );
    Ok(())
}
