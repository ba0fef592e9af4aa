//! Versioned model files: save a trained forest and network, reload them,
//! and assemble a pipeline bundle for the `infer` subcommand.
//!
//! ```bash
//! cargo run -p tagsight --example save_load_models
//! ```

use tagsight::learn::{
    forward, load_model, one_hot, predict_forest, save_model, train_forest, train_mlp,
    ForestHyperparams, MlpHyperparams, SavedModel,
};
use tagsight::pipeline::BundleManifest;

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("tagsight_example_models");
    std::fs::create_dir_all(&dir)?;

    // A small forest on a toy problem.
    let x: Vec<Vec<f64>> = (0..60)
        .map(|i| vec![f64::from(i % 6) * 2.0, -f64::from(i % 6), 0.5])
        .collect();
    let y: Vec<usize> = (0..60).map(|i| i % 6).collect();
    let (forest, _) = train_forest(
        &x,
        &y,
        &ForestHyperparams { n_trees: 9, seed: 1, ..ForestHyperparams::default() },
    )?;
    let forest_path = dir.join("toy_forest.json");
    save_model(&SavedModel::forest(forest.clone()), &forest_path)?;

    // A small network on the same labels, one-hot encoded.
    let (mlp, _) = train_mlp(
        &x.iter().map(|r| vec![r[0], r[1], r[2], 1.0]).collect::<Vec<_>>(),
        &one_hot(&y.iter().map(|&c| c % 5).collect::<Vec<_>>(), 5),
        &[],
        &[],
        &MlpHyperparams {
            layer_widths: vec![4, 16, 5],
            max_epochs: 5,
            seed: 2,
            ..MlpHyperparams::default()
        },
    )?;
    let mlp_path = dir.join("toy_mlp.json");
    save_model(&SavedModel::mlp(mlp.clone()), &mlp_path)?;

    // Reloaded models predict bit-identically.
    let SavedModel::Forest { model: forest2, .. } = load_model(&forest_path)? else {
        unreachable!()
    };
    let SavedModel::Mlp { model: mlp2, .. } = load_model(&mlp_path)? else {
        unreachable!()
    };
    let probe = vec![4.0, -2.0, 0.5];
    assert_eq!(predict_forest(&forest, &probe), predict_forest(&forest2, &probe));
    let probe4 = vec![4.0, -2.0, 0.5, 1.0];
    assert_eq!(forward(&mlp, &probe4), forward(&mlp2, &probe4));
    println!("round-tripped forest + network predict identically");
    println!("  {}", forest_path.display());
    println!("  {}", mlp_path.display());

    // The bundle manifest `infer --bundle` consumes.
    let bundle = BundleManifest {
        schema_version: 1,
        n_tags: 3,
        orientation_model: "orientation_3tag.json".into(),
        side_model: "material_side.json".into(),
        rear_model: "material_rear.json".into(),
    };
    let bundle_path = dir.join("bundle_3tag.json");
    bundle.save(&bundle_path)?;
    println!("wrote a pipeline bundle manifest: {}", bundle_path.display());
    println!("{}", std::fs::read_to_string(&bundle_path)?);
    Ok(())
}
