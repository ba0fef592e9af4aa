//! Synthetic UHF RFID package inspection, end to end.
//!
//! This crate simulates backscatter reads (RSSI + phase) from passive tags
//! on a boxed package, turns them into one-second feature windows, trains
//! orientation and material classifiers from scratch, and chains them into
//! a unified inference pipeline:
//!
//! 1. [`sim`] — seeded channel simulator: six package orientations, five
//!    content materials, per-face geometry/gain/occlusion effects.
//! 2. [`ingest`] — CSV read records and JSON session manifests; the
//!    boundary where real reader exports could replace the simulator.
//! 3. [`features`] — one-second windows with arithmetic RSSI statistics and
//!    circular phase statistics, plus classifier input vectors.
//! 4. [`learn`] — a bagged random-forest classifier (orientation) and a
//!    feedforward network trained with Adam (material), both from scratch,
//!    with versioned JSON serialization.
//! 5. [`pipeline`] — orientation inference, occlusion-driven tag selection,
//!    and material inference over a feature window.
//! 6. [`eval`] — stratified splits, accuracy/confusion metrics, 2-component
//!    PCA, box-plot statistics, and report emission.
//!
//! The `tagsight` binary wires these into subcommands (`simulate`,
//! `featurize`, `split`, `train`, `evaluate`, `infer`, `repro`); see
//! [`cli`]. Each major capability also has a runnable example:
//!
//! ```bash
//! cargo run --release -p tagsight --example simulate_reads
//! cargo run --release -p tagsight --example window_features
//! cargo run --release -p tagsight --example train_orientation
//! cargo run --release -p tagsight --example train_material
//! cargo run --release -p tagsight --example full_pipeline
//! ```
//!
//! All randomness flows from a single root seed split into named streams
//! ([`rng`]), so every stage is deterministic and independently
//! reproducible.

pub mod cli;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod pipeline;
pub mod rng;
pub mod sim;

pub use features::{FeatureWindow, TagFeatures};
pub use pipeline::{PipelineModels, PipelineResult};
pub use sim::{Face, MaterialClass, OrientationState, RawRead, ScenarioConfig, TagRole};
