//! Train the rear-position material network, watch its loss curve, and
//! verify the backward pass against finite differences.
//!
//! ```bash
//! cargo run -p tagsight --example train_material
//! ```

use tagsight::eval::{split, SplitSpec};
use tagsight::features::{build_material_datasets, window_reads, WindowingOptions};
use tagsight::learn::{
    forward, gradient_check, one_hot, train_mlp, MlpHyperparams, MlpModel,
};
use tagsight::sim::generate_corpus;
use tagsight::{MaterialClass, ScenarioConfig};

fn main() -> anyhow::Result<()> {
    let base = ScenarioConfig {
        duration_s: 40.0,
        ..ScenarioConfig::default()
    };
    let corpus = generate_corpus(&base, 33)?;
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
    let parts = split(&windows, &SplitSpec { seed: 33, ..SplitSpec::default() })?;
    let train = build_material_datasets(&parts.train, 3)?.rear;
    let val = build_material_datasets(&parts.val, 3)?.rear;
    let test = build_material_datasets(&parts.test, 3)?.rear;
    println!(
        "rear-position samples: {} train / {} val / {} test",
        train.len(),
        val.len(),
        test.len()
    );

    let hp = MlpHyperparams {
        layer_widths: vec![4, 128, 64, 48, 5],
        max_epochs: 15,
        seed: 2,
        ..MlpHyperparams::default()
    };
    println!(
        "architecture {:?}: {} parameters",
        hp.layer_widths,
        MlpModel::init(&hp.layer_widths, 0).param_count()
    );
    let k = MaterialClass::ALL.len();
    let (model, report) = train_mlp(
        &train.x,
        &one_hot(&train.y, k),
        &val.x,
        &one_hot(&val.y, k),
        &hp,
    )?;
    for e in &report.epochs {
        println!(
            "  epoch {:>2}: train loss {:.4} acc {:.3} | val loss {:.4} acc {:.3}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy
        );
    }
    println!(
        "stopped at epoch {} (best validation weights restored)",
        report.stopping_epoch.unwrap()
    );

    let correct = test
        .x
        .iter()
        .zip(&test.y)
        .filter(|(row, &label)| {
            let probs = forward(&model, row);
            probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
                == label
        })
        .count();
    println!("test accuracy: {:.4}", correct as f64 / test.len() as f64);

    // Backward-pass sanity: analytic vs central finite differences on a
    // small random model and batch.
    let probe = MlpModel::init(&[4, 12, 8, 5], 9);
    let mut rng = tagsight::rng::stream(9, "example/gradient");
    use rand::Rng;
    let x: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..6).map(|_| rng.gen_range(0..k)).collect();
    println!(
        "gradient check on a small random model: max relative error {:.3e}",
        gradient_check(&probe, &x, &one_hot(&labels, k))?
    );
    Ok(())
}
