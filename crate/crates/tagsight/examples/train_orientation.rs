//! Train the orientation random forest on a small synthetic corpus and
//! report train/validation/test accuracy plus the out-of-bag score.
//!
//! ```bash
//! cargo run -p tagsight --example train_orientation
//! ```

use tagsight::eval::{accuracy, confusion, split, SplitSpec};
use tagsight::features::{build_orientation_dataset, window_reads, WindowingOptions};
use tagsight::learn::{predict_forest, train_forest, ForestHyperparams};
use tagsight::sim::generate_corpus;
use tagsight::ScenarioConfig;

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig {
        duration_s: 40.0,
        ..ScenarioConfig::default()
    };
    let corpus = generate_corpus(&base, 21)?;
    let mut windows = Vec::new();
    for session in &corpus.sessions {
        let opts = WindowingOptions {
            session_id: session.id(),
            material: Some(session.cfg.material),
            state: Some(session.cfg.state),
            rx_floor_dbm: session.cfg.rx_floor_dbm,
            ..WindowingOptions::default()
        };
        windows.extend(window_reads(&session.reads, &opts)?.windows);
    }
    let parts = split(&windows, &SplitSpec { seed: 21, ..SplitSpec::default() })?;
    println!(
        "windows: {} -> holdout {} / train {} / val {} / test {}",
        windows.len(),
        parts.pipeline_test.len(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len()
    );

    let train = build_orientation_dataset(&parts.train, 3)?;
    let val = build_orientation_dataset(&parts.val, 3)?;
    let test = build_orientation_dataset(&parts.test, 3)?;

    // 30 trees keep the example quick; the full run uses 100.
    let hp = ForestHyperparams {
        n_trees: 30,
        seed: 4,
        ..ForestHyperparams::default()
    };
    let (model, report) = train_forest(&train.x, &train.y, &hp)?;

    let acc = |data: &tagsight::learn::Dataset| {
        let preds: Vec<usize> = data.x.iter().map(|r| predict_forest(&model, r)).collect();
        accuracy(&preds, &data.y)
    };
    println!("train accuracy: {:.4}", report.train_accuracy);
    println!("val accuracy:   {:.4}", acc(&val));
    println!("test accuracy:  {:.4}", acc(&test));
    println!("oob score:      {:.4}", report.oob_score.unwrap());

    let preds: Vec<usize> = test.x.iter().map(|r| predict_forest(&model, r)).collect();
    let cm = confusion(&preds, &test.y, 6);
    println!("\ntest confusion (rows = true state):");
    for (state, row) in cm.counts.iter().enumerate() {
        println!("  state {state}: {row:?}");
    }
    Ok(())
}
