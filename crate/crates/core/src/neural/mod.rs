//! Dense feed-forward networks with sigmoid outputs, binary cross-entropy
//! backpropagation, inverted dropout and Adam.

mod adam;
pub mod checkpoint;
mod net;
mod train;

pub use adam::{AdamConfig, AdamState, ParamGroup};
pub use net::{bernoulli_log_probs, sigmoid, softplus, Activation, DenseNet, Forward, Gradients, Layer, LayerSpec, Mode};
pub use train::{train_bce, BatchConfig};
