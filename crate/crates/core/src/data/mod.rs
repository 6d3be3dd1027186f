//! Synthetic dataset factory for the respiratory-diagnosis use case and
//! loaders for externally supplied data.

mod build;
mod embedder;
pub mod io;
mod record;
pub mod schema;

pub use build::{build_dataset, partition_sizes, Split};
pub use embedder::{
    EmbedderSpec, EmbeddingTable, Prototype, SymptomState, SyntheticEmbedder, SyntheticParams,
};
pub use io::load_external;
pub use record::{Dataset, PatientRecord};
pub use schema::{default_ground_truth, Diagnosis};
