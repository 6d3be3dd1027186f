#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hybrid_bn::classifier::{ClassifierBank, ClassifierMode, NetKey};
use hybrid_bn::data::schema::extended_structure;
use hybrid_bn::data::{build_dataset, default_ground_truth, EmbedderSpec, Split, SyntheticEmbedder, SyntheticParams};
use hybrid_bn::discrete::{Assignment, Cpt, DiscreteBn};
use hybrid_bn::neural::{Activation, DenseNet, LayerSpec};
use hybrid_bn::Embedding;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random CPTs on the eight-variable use-case graph. Entries are kept away
/// from zero so every evidence set has positive probability.
pub fn random_network(rng: &mut impl Rng) -> DiscreteBn {
    let s = extended_structure();
    let cards: BTreeMap<&str, usize> = s.variables.iter().map(|v| (v.name.as_str(), v.cardinality())).collect();
    let cpts = s
        .variables
        .iter()
        .zip(&s.parents)
        .map(|(v, ps)| {
            let n_rows: usize = ps.iter().map(|p| cards[p.as_str()]).product();
            let rows = (0..n_rows)
                .map(|_| {
                    let raw: Vec<f64> = (0..v.cardinality()).map(|_| rng.random_range(0.02..1.0)).collect();
                    let z: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / z).collect()
                })
                .collect();
            Cpt { child: v.name.clone(), parents: ps.clone(), rows }
        })
        .collect();
    DiscreteBn::new(s.variables.clone(), cpts).unwrap()
}

/// Joint probability straight from the CPT tables, looking parents up by
/// name. Shares nothing with the library's inference code.
pub fn oracle_joint(bn: &DiscreteBn, levels: &BTreeMap<String, usize>) -> f64 {
    let mut p = 1.0;
    for cpt in bn.cpts() {
        let mut row = 0;
        for parent in &cpt.parents {
            let card = bn.variable(parent).unwrap().levels.len();
            row = row * card + levels[parent];
        }
        p *= cpt.rows[row][levels[&cpt.child]];
    }
    p
}

/// `P(query | evidence)` by brute-force summation of [`oracle_joint`].
pub fn oracle_posterior(bn: &DiscreteBn, query: &str, evidence: &Assignment) -> Vec<f64> {
    let names: Vec<String> = bn.variables().iter().map(|v| v.name.clone()).collect();
    let cards: Vec<usize> = bn.variables().iter().map(|v| v.levels.len()).collect();
    let total: usize = cards.iter().product();
    let q = names.iter().position(|n| n == query).unwrap();
    let mut dist = vec![0.0; cards[q]];
    for mut idx in 0..total {
        let mut levels = BTreeMap::new();
        for (name, &c) in names.iter().zip(&cards) {
            levels.insert(name.clone(), idx % c);
            idx /= c;
        }
        if evidence.iter().any(|(n, l)| levels[n] != l) {
            continue;
        }
        dist[levels[query]] += oracle_joint(bn, &levels);
    }
    let z: f64 = dist.iter().sum();
    dist.iter().map(|p| p / z).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn embedder(d: usize) -> EmbedderSpec {
    let params = SyntheticParams { d, ..SyntheticParams::default() };
    EmbedderSpec::Synthetic(SyntheticEmbedder::generate(&params).unwrap())
}

/// Masked train set and fully observed test set from the shipped ground truth.
pub fn split(n_train: usize, n_test: usize, d: usize, seed: u64) -> Split {
    build_dataset(&default_ground_truth(), &embedder(d), n_train, n_test, seed).unwrap()
}

pub fn random_embedding(rng: &mut impl Rng, d: usize) -> Embedding {
    Embedding::new((0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap()
}

/// Bank of randomly initialised one- or two-layer classifiers with random
/// prior and tables.
pub fn random_bank(mode: ClassifierMode, d: usize, hidden: usize, rng: &mut impl Rng) -> ClassifierBank {
    let specs = if hidden == 0 {
        vec![LayerSpec::new(d, 1, Activation::Sigmoid, 0.0)]
    } else {
        vec![
            LayerSpec::new(d, hidden, Activation::Relu, 0.0),
            LayerSpec::new(hidden, 1, Activation::Sigmoid, 0.0),
        ]
    };
    let mut nets = BTreeMap::new();
    for key in ClassifierBank::net_keys(mode) {
        let mut net = DenseNet::new(&specs, rng).unwrap();
        for layer in net.layers_mut() {
            layer.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        }
        nets.insert(key, net);
    }
    let table = [
        [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)],
        [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)],
    ];
    let empty = random_embedding(rng, d);
    ClassifierBank::from_parts(mode, rng.random_range(0.1..0.9), table, nets, empty).unwrap()
}

/// Bank whose every classifier outputs a fixed probability, whatever the input.
pub fn constant_bank(mode: ClassifierMode, d: usize, prob: impl Fn(NetKey) -> f64, prior: f64, table: [[f64; 2]; 2]) -> ClassifierBank {
    let spec = [LayerSpec::new(d, 1, Activation::Sigmoid, 0.0)];
    let mut nets = BTreeMap::new();
    for key in ClassifierBank::net_keys(mode) {
        let mut net = DenseNet::zeros(&spec).unwrap();
        let p = prob(key);
        net.layers_mut()[0].bias[0] = (p / (1.0 - p)).ln();
        nets.insert(key, net);
    }
    ClassifierBank::from_parts(mode, prior, table, nets, Embedding::zeros(d)).unwrap()
}

/// Largest relative error between backprop and central differences of the
/// BCE loss over the given parameter indices, and how many parameters were
/// skipped because the `±eps` step would cross a ReLU kink (where the
/// central difference is meaningless). A fixed `dropout_seed` replays the
/// same dropout masks for every evaluation. Handles nets with at most one
/// hidden layer.
pub fn gradient_check(net: &DenseNet, x: &[f64], label: f64, params: &[usize], dropout_seed: Option<u64>, eps: f64) -> (f64, usize) {
    use hybrid_bn::neural::{Activation, Mode};
    assert!(net.layers().len() <= 2);
    let mode = if dropout_seed.is_some() { Mode::Train } else { Mode::Infer };
    let seed = dropout_seed.unwrap_or(0);
    let loss = |n: &DenseNet| {
        let fw = n.forward(x, mode, &mut rng(seed)).unwrap();
        DenseNet::bce_loss(fw.output, label, 1.0)
    };
    let fw = net.forward(x, mode, &mut rng(seed)).unwrap();
    let (grads, _) = net.bce_grad(&fw, label, 1.0);
    let analytic = grads.flat();
    let first = &net.layers()[0];
    let first_len = first.weights.len() + first.bias.len();
    let crosses_kink = |k: usize| {
        if first.spec.activation != Activation::Relu || k >= first_len {
            return false;
        }
        let (unit, shift) = if k < first.weights.len() {
            (k / first.spec.inputs, eps * fw.layer_inputs()[0][k % first.spec.inputs].abs())
        } else {
            (k - first.weights.len(), eps)
        };
        fw.pre_activations()[0][unit].abs() <= shift * 1.01
    };
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for &k in params {
        if crosses_kink(k) {
            skipped += 1;
            continue;
        }
        let orig = *probe.param_mut(k);
        *probe.param_mut(k) = orig + eps;
        let up = loss(&probe);
        *probe.param_mut(k) = orig - eps;
        let down = loss(&probe);
        *probe.param_mut(k) = orig;
        let numeric = (up - down) / (2.0 * eps);
        let scale = analytic[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[k] - numeric).abs() / scale);
    }
    (worst, skipped)
}

/// Gaussian log-density through an explicit Gauss-Jordan inverse and the
/// determinant from the same elimination.
pub fn oracle_log_density(mean: &[f64], cov: &[Vec<f64>], x: &[f64]) -> f64 {
    let d = mean.len();
    let mut a: Vec<Vec<f64>> = cov.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect();
    let mut log_det = 0.0;
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        log_det += p.abs().ln();
        for j in 0..d {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..d {
            if i != col {
                let f = a[i][col];
                for j in 0..d {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut quad = 0.0;
    for i in 0..d {
        for j in 0..d {
            quad += diff[i] * inv[i][j] * diff[j];
        }
    }
    -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
}

/// Sample mean and ML covariance, regularized toward the identity.
pub fn regularized_moments(samples: &[Vec<f64>], alpha: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let c = samples.iter().map(|s| (s[i] - mean[i]) * (s[j] - mean[j])).sum::<f64>() / n;
                    (1.0 - alpha) * c + if i == j { alpha } else { 0.0 }
                })
                .collect()
        })
        .collect();
    (mean, cov)
}

/// Average precision straight from the definition: for each positive, the
/// precision among items scored at least as high. Assumes distinct scores.
pub fn oracle_ap(scores: &[f64], labels: &[u8]) -> f64 {
    let positives: Vec<usize> = (0..scores.len()).filter(|&i| labels[i] == 1).collect();
    let mut sum = 0.0;
    for &i in &positives {
        let above: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] >= scores[i]).collect();
        let hits = above.iter().filter(|&&j| labels[j] == 1).count();
        sum += hits as f64 / above.len() as f64;
    }
    sum / positives.len() as f64
}
