//! Ranking metrics, model dispatch and multi-seed experiments.

mod experiment;
mod metrics;
mod models;

pub use experiment::{mean_std, run_experiment, ExperimentPlan, ResultRow, ResultTable, SeedResult};
pub use metrics::{average_precision, roc_auc};
pub use models::{ModelConfig, ModelKind, TrainedModel};
