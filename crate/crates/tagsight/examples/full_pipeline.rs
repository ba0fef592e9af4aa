//! The whole system end to end on a small corpus: simulate, featurize,
//! split, train the orientation forest and both material networks, then
//! run unified inference on the held-out windows.
//!
//! ```bash
//! cargo run -p tagsight --example full_pipeline
//! ```

use tagsight::eval::{split, SplitSpec};
use tagsight::features::{
    build_material_datasets, build_orientation_dataset, window_reads, WindowingOptions,
};
use tagsight::learn::{one_hot, train_forest, train_mlp, ForestHyperparams, MlpHyperparams};
use tagsight::pipeline::{infer_batch, select_tag};
use tagsight::sim::generate_corpus;
use tagsight::{MaterialClass, OrientationState, PipelineModels, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig {
        duration_s: 60.0,
        ..ScenarioConfig::default()
    };
    let corpus = generate_corpus(&base, 1)?;
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
    let parts = split(&windows, &SplitSpec { seed: 1, ..SplitSpec::default() })?;
    println!(
        "{} windows ({} held out for the unified pipeline)",
        windows.len(),
        parts.pipeline_test.len()
    );

    // Stage 1: orientation forest.
    let otrain = build_orientation_dataset(&parts.train, 3)?;
    let (orientation, oreport) = train_forest(
        &otrain.x,
        &otrain.y,
        &ForestHyperparams { n_trees: 40, seed: 2, ..ForestHyperparams::default() },
    )?;
    println!(
        "orientation forest: train {:.4}, oob {:.4}",
        oreport.train_accuracy,
        oreport.oob_score.unwrap()
    );

    // Stage 2: the two material networks.
    let mtrain = build_material_datasets(&parts.train, 3)?;
    let mval = build_material_datasets(&parts.val, 3)?;
    let k = MaterialClass::ALL.len();
    let mlp = |x: &tagsight::learn::Dataset,
                   v: &tagsight::learn::Dataset,
                   widths: Vec<usize>,
                   seed: u64| {
        train_mlp(
            &x.x,
            &one_hot(&x.y, k),
            &v.x,
            &one_hot(&v.y, k),
            &MlpHyperparams {
                layer_widths: widths,
                max_epochs: 12,
                seed,
                ..MlpHyperparams::default()
            },
        )
    };
    let (rear, _) = mlp(&mtrain.rear, &mval.rear, vec![4, 128, 64, 48, 5], 3)?;
    let (side, _) = mlp(&mtrain.side, &mval.side, vec![4, 128, 64, 64, 48, 5], 4)?;

    // Stage 3: unified inference over the holdout.
    let models = PipelineModels { orientation, side, rear, n_tags: 3 };
    let (results, summary) = infer_batch(&parts.pipeline_test, &models)?;
    println!(
        "holdout: orientation accuracy {:.4}, material accuracy {:.4}",
        summary.orientation_accuracy.unwrap(),
        summary.material_accuracy.unwrap()
    );

    println!("\nselection logic in action on the first five windows:");
    for (window, result) in parts.pipeline_test.iter().zip(&results).take(5) {
        let sel = select_tag(result.state, 3)?;
        println!(
            "  true ({:?}, state {}) -> predicted state {} -> {} via {:?} classifier -> {:?}",
            window.material.unwrap(),
            window.state.unwrap(),
            result.state,
            sel.tag,
            sel.classifier,
            result.material
        );
    }

    // Exhaustive view of the frozen selection table.
    println!("\nselection table (state -> tag/classifier):");
    for state in OrientationState::all() {
        let three = select_tag(state, 3)?;
        let two = select_tag(state, 2)?;
        println!(
            "  state {state}: 3-tag {} {:?} | 2-tag {} {:?}",
            three.tag, three.classifier, two.tag, two.classifier
        );
    }
    Ok(())
}
