use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::bank::{Child, ClassifierBank, ClassifierMode, Configuration, Factor, NetKey};
use crate::data::{Dataset, PatientRecord};
use crate::error::{Error, Result};
use crate::neural::{bernoulli_log_probs, sigmoid, Activation, AdamConfig, AdamState, DenseNet, Gradients, LayerSpec, Mode, ParamGroup};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Learning rate for the season prior (and, in ablated mode, the
    /// diagnosis tables). These scalars get no weight decay.
    pub prior_learning_rate: f64,
    pub seed: u64,
    /// Hidden width of the pneumonia net; 0 makes it a single layer.
    pub pneu_hidden: usize,
    pub pneu_dropout: f64,
    pub inf_dropout: f64,
    pub symptom_dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 256,
            learning_rate: 1e-2,
            weight_decay: 1e-3,
            prior_learning_rate: 0.05,
            seed: 0,
            pneu_hidden: 256,
            pneu_dropout: 0.7,
            inf_dropout: 0.7,
            symptom_dropout: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch size must be positive".into()));
        }
        let rates = [self.learning_rate, self.prior_learning_rate];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) || !(self.weight_decay >= 0.0) {
            return Err(Error::InvalidArgument("learning rates must be positive, weight decay non-negative".into()));
        }
        for p in [self.pneu_dropout, self.inf_dropout, self.symptom_dropout] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("dropout {p} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Layer layout of the classifier for `child`.
    pub fn architecture(&self, child: Child, d: usize) -> Vec<LayerSpec> {
        let dropout = match child {
            Child::Pneu => self.pneu_dropout,
            Child::Inf => self.inf_dropout,
            _ => self.symptom_dropout,
        };
        if child == Child::Pneu && self.pneu_hidden > 0 {
            vec![
                LayerSpec::new(d, self.pneu_hidden, Activation::Relu, dropout),
                LayerSpec::new(self.pneu_hidden, 1, Activation::Sigmoid, dropout),
            ]
        } else {
            vec![LayerSpec::new(d, 1, Activation::Sigmoid, dropout)]
        }
    }
}

/// Loss curves from one training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean per-record loss seen during each epoch (dropout active).
    pub epoch_loss: Vec<f64>,
}

/// Freshly initialized bank: Glorot nets, prior and tables at 0.5.
pub fn init_bank(mode: ClassifierMode, data: &Dataset, cfg: &TrainConfig) -> Result<ClassifierBank> {
    cfg.validate()?;
    let d = data.dim();
    let mut nets = BTreeMap::new();
    for (i, key) in ClassifierBank::net_keys(mode).into_iter().enumerate() {
        let mut r = rng::indexed_stream(cfg.seed, "init", i as u64);
        nets.insert(key, DenseNet::new(&cfg.architecture(key.child, d), &mut r)?);
    }
    Ok(ClassifierBank {
        mode,
        prior_logit: 0.0,
        table_logits: [[0.0; 2]; 2],
        nets,
        empty_text: data.empty_text.clone(),
    })
}

fn check_records(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("no training records".into()));
    }
    data.validate()
}

/// Trains a bank by minimizing the mean negative conditional log-likelihood
/// of each mini-batch with Adam.
pub fn train_bank(data: &Dataset, mode: ClassifierMode, cfg: &TrainConfig) -> Result<(ClassifierBank, TrainReport)> {
    let mut bank = init_bank(mode, data, cfg)?;
    let report = train_from(&mut bank, data, cfg)?;
    Ok((bank, report))
}

/// Continues training an existing bank.
pub fn train_from(bank: &mut ClassifierBank, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    check_records(data)?;
    if data.dim() != bank.dim() {
        return Err(Error::DimensionMismatch { expected: bank.dim(), actual: data.dim() });
    }
    let mut shuffle = rng::stream(cfg.seed, "shuffle");
    let mut dropout = rng::stream(cfg.seed, "dropout");
    let net_adam = AdamConfig::with_lr(cfg.learning_rate, cfg.weight_decay);
    let mut adams: BTreeMap<NetKey, AdamState> =
        bank.nets.iter().map(|(k, n)| (*k, AdamState::for_net(net_adam, n))).collect();
    let mut scalar_adam = AdamState::new(AdamConfig::with_lr(cfg.prior_learning_rate, 0.0), &[1, 4]);

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let w = 1.0 / batch.len() as f64;
            let mut grads: BTreeMap<NetKey, Gradients> = BTreeMap::new();
            let mut g_prior = [0.0];
            let mut g_table = [0.0; 4];
            let mut batch_loss = 0.0;
            for &i in batch {
                let r = &data.records[i];
                let x = data.text_or_empty(r).as_slice();
                for (f, level) in bank.factors(&Configuration::of(r)) {
                    let y = level as f64;
                    match f {
                        Factor::Prior => {
                            batch_loss -= w * bernoulli_log_probs(bank.prior_logit)[level];
                            g_prior[0] += w * (sigmoid(bank.prior_logit) - y);
                        }
                        Factor::Table { diagnosis, season } => {
                            let z = bank.table_logits[diagnosis.index()][season];
                            batch_loss -= w * bernoulli_log_probs(z)[level];
                            g_table[diagnosis.index() * 2 + season] += w * (sigmoid(z) - y);
                        }
                        Factor::Net(k) => {
                            let net = &bank.nets[&k];
                            let fw = net.forward(x, Mode::Train, &mut dropout)?;
                            let g = grads.entry(k).or_insert_with(|| Gradients::zeros_like(net));
                            batch_loss += net.accumulate_bce(&fw, y, w, g);
                        }
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged(format!("loss is {batch_loss} at epoch {epoch}, batch {b}")));
            }
            let located = |e: Error| Error::Diverged(format!("epoch {epoch}, batch {b}: {e}"));
            // Nets no record in the batch was routed through are left alone,
            // so their parameters (and Adam state) stay untouched.
            for (k, g) in &grads {
                adams.get_mut(k).unwrap().step_net(bank.nets.get_mut(k).unwrap(), g).map_err(located)?;
            }
            let mut prior = [bank.prior_logit];
            let mut table: Vec<f64> = bank.table_logits.iter().flatten().copied().collect();
            scalar_adam
                .step(&mut [
                    ParamGroup { name: "prior".into(), values: &mut prior, grad: &g_prior },
                    ParamGroup { name: "tables".into(), values: &mut table, grad: &g_table },
                ])
                .map_err(located)?;
            bank.prior_logit = prior[0];
            if bank.mode == ClassifierMode::Ablated {
                bank.table_logits = [[table[0], table[1]], [table[2], table[3]]];
            }
            total += batch_loss * batch.len() as f64;
        }
        report.epoch_loss.push(total / data.len() as f64);
    }
    Ok(report)
}

/// Mean negative conditional log-likelihood over `data`, dropout off.
pub fn mean_nll(bank: &ClassifierBank, data: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for r in &data.records {
        total += bank.record_nll(r)?;
    }
    Ok(total / data.len().max(1) as f64)
}

/// Classifiers any record in `records` is routed through.
pub fn used_nets(bank: &ClassifierBank, records: &[PatientRecord]) -> BTreeSet<NetKey> {
    records.iter().flat_map(|r| bank.routes(&Configuration::of(r))).collect()
}
