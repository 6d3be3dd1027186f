//! Discriminative text model: every non-root variable is predicted from the
//! embedding by a neural classifier selected by its parents' values, and
//! posteriors come from Bayes' rule over the diagnosis combinations.

mod bank;
mod store;
mod train;

pub use bank::{Child, ClassifierBank, ClassifierMode, Configuration, Factor, NetKey};
pub use store::{BankManifest, NetEntry, MANIFEST};
pub use train::{init_bank, mean_nll, train_bank, train_from, used_nets, TrainConfig, TrainReport};
