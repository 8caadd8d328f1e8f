//! Experimental protocol: seeded train/test splits, accuracy, confusion
//! matrices, and the mel-count sweep / feature-ablation harnesses.

mod experiment;
mod metrics;
mod split;

pub use experiment::{
    compare_extras, run_cell, sweep_nmel, CellResult, CellSpec, ExperimentReport, FeatureCache,
    Hyperparams, ReportRow,
};
pub use metrics::{accuracy, confusion, ConfusionMatrix};
pub use split::{split_train_test, Split};
