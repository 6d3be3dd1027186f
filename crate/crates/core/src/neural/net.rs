use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `(ln P(0), ln P(1))` of a Bernoulli with logit `z`.
pub fn bernoulli_log_probs(z: f64) -> [f64; 2] {
    [-softplus(z), -softplus(-z)]
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Shape of one dense layer. `dropout` is applied to the layer's input
/// during training (inverted dropout).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, dropout: f64) -> Self {
        LayerSpec { inputs, outputs, activation, dropout }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// A chain of dense layers ending in a single sigmoid unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Activations cached by a forward pass, consumed by backpropagation.
#[derive(Debug, Clone)]
pub struct Forward {
    pub output: f64,
    // per layer: input after dropout, pre-activation, activation
    inputs: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

/// Gradients shaped like a [`DenseNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(&other.layers) {
            w.iter_mut().zip(ow).for_each(|(x, y)| *x += scale * y);
            b.iter_mut().zip(ob).for_each(|(x, y)| *x += scale * y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (w, b) in &mut self.layers {
            w.iter_mut().chain(b.iter_mut()).for_each(|x| *x *= s);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

impl Forward {
    /// Per layer: the input after dropout.
    pub fn layer_inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Per layer: pre-activations.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }
}

impl DenseNet {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(specs)?;
        for layer in &mut net.layers {
            let bound = (6.0 / (layer.spec.inputs + layer.spec.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(specs: &[LayerSpec]) -> Result<Self> {
        validate_specs(specs)?;
        Ok(DenseNet {
            layers: specs
                .iter()
                .map(|&spec| Layer {
                    spec,
                    weights: vec![0.0; spec.inputs * spec.outputs],
                    bias: vec![0.0; spec.outputs],
                })
                .collect(),
        })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_specs(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.spec.inputs * l.spec.outputs || l.bias.len() != l.spec.outputs {
                return Err(Error::InvalidArgument(format!("layer {i} parameter shape")));
            }
            if l.weights.iter().chain(&l.bias).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    /// Mutable access to the `k`-th parameter in [`Self::flat_params`] order.
    pub fn param_mut(&mut self, mut k: usize) -> &mut f64 {
        for l in &mut self.layers {
            if k < l.weights.len() {
                return &mut l.weights[k];
            }
            k -= l.weights.len();
            if k < l.bias.len() {
                return &mut l.bias[k];
            }
            k -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    /// Forward pass. Dropout masks are drawn from `rng` in train mode only.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<Forward> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        let n = self.layers.len();
        let mut fw = Forward {
            output: 0.0,
            inputs: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
        };
        let mut current = x.to_vec();
        for layer in &self.layers {
            let p = layer.spec.dropout;
            let mask = if mode == Mode::Train && p > 0.0 {
                let keep = 1.0 - p;
                let m: Vec<f64> = (0..current.len())
                    .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                current.iter_mut().zip(&m).for_each(|(a, s)| *a *= s);
                Some(m)
            } else {
                None
            };
            let pre = affine(layer, &current);
            let post: Vec<f64> = pre.iter().map(|&z| layer.spec.activation.apply(z)).collect();
            fw.inputs.push(std::mem::replace(&mut current, post.clone()));
            fw.masks.push(mask);
            fw.pre.push(pre);
            fw.post.push(post);
        }
        fw.output = current[0];
        Ok(fw)
    }

    /// Dropout-free forward pass.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.predict_logit(x)?))
    }

    /// Dropout-free pre-activation of the output unit.
    pub fn predict_logit(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: x.len() });
        }
        let mut current = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            current = affine(layer, &current);
            if i < last {
                current.iter_mut().for_each(|z| *z = layer.spec.activation.apply(*z));
            }
        }
        Ok(current[0])
    }

    /// Loss `weight * BCE(output, label)` for a cached forward pass, with
    /// the output clamped to `[1e-12, 1 - 1e-12]` before the log.
    pub fn bce_loss(output: f64, label: f64, weight: f64) -> f64 {
        let p = output.clamp(1e-12, 1.0 - 1e-12);
        -weight * (label * p.ln() + (1.0 - label) * (1.0 - p).ln())
    }

    /// Adds `weight * dBCE/dθ` for one cached forward pass into `grads` and
    /// returns the loss.
    pub fn accumulate_bce(&self, fw: &Forward, label: f64, weight: f64, grads: &mut Gradients) -> f64 {
        let loss = Self::bce_loss(fw.output, label, weight);
        if weight == 0.0 {
            return loss;
        }
        // sigmoid output + BCE: dL/dz = w (p - y)
        let mut delta = vec![weight * (fw.output - label)];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &fw.inputs[l];
            let (gw, gb) = &mut grads.layers[l];
            let n_in = layer.spec.inputs;
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * n_in..(o + 1) * n_in];
                row.iter_mut().zip(input).for_each(|(g, &a)| *g += d * a);
            }
            if l == 0 {
                break;
            }
            let mut d_in = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * n_in..(o + 1) * n_in];
                d_in.iter_mut().zip(row).for_each(|(g, &w)| *g += d * w);
            }
            if let Some(mask) = &fw.masks[l] {
                d_in.iter_mut().zip(mask).for_each(|(g, &m)| *g *= m);
            }
            let prev = &self.layers[l - 1];
            delta = d_in
                .iter()
                .zip(&fw.pre[l - 1])
                .zip(&fw.post[l - 1])
                .map(|((&g, &z), &a)| g * prev.spec.activation.derivative(z, a))
                .collect();
        }
        loss
    }

    /// Gradients of `weight * BCE(output, label)` and the loss.
    pub fn bce_grad(&self, fw: &Forward, label: f64, weight: f64) -> (Gradients, f64) {
        let mut g = Gradients::zeros_like(self);
        let loss = self.accumulate_bce(fw, label, weight, &mut g);
        (g, loss)
    }
}

fn affine(layer: &Layer, input: &[f64]) -> Vec<f64> {
    let n_in = layer.spec.inputs;
    layer
        .bias
        .iter()
        .enumerate()
        .map(|(o, &b)| {
            let row = &layer.weights[o * n_in..(o + 1) * n_in];
            b + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>()
        })
        .collect()
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    let last = specs
        .last()
        .ok_or_else(|| Error::InvalidArgument("network needs at least one layer".into()))?;
    if last.outputs != 1 || last.activation != Activation::Sigmoid {
        return Err(Error::InvalidArgument(
            "final layer must be a single sigmoid unit".into(),
        ));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.inputs == 0 || s.outputs == 0 {
            return Err(Error::InvalidArgument(format!("layer {i} has a zero dimension")));
        }
        if !(0.0..1.0).contains(&s.dropout) {
            return Err(Error::InvalidArgument(format!("layer {i} dropout {} not in [0, 1)", s.dropout)));
        }
        if i > 0 && specs[i - 1].outputs != s.inputs {
            return Err(Error::DimensionMismatch { expected: specs[i - 1].outputs, actual: s.inputs });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn one_layer(d: usize) -> Vec<LayerSpec> {
        vec![LayerSpec::new(d, 1, Activation::Sigmoid, 0.0)]
    }

    #[test]
    fn zero_net_outputs_half() {
        let net = DenseNet::zeros(&[
            LayerSpec::new(5, 3, Activation::Relu, 0.0),
            LayerSpec::new(3, 1, Activation::Sigmoid, 0.0),
        ])
        .unwrap();
        assert_eq!(net.predict(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), 0.5);
        let mut unit = DenseNet::zeros(&one_layer(1)).unwrap();
        unit.layers_mut()[0].weights[0] = 1.0;
        assert_eq!(unit.predict(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn dimension_mismatch_reports_sizes() {
        let net = DenseNet::zeros(&one_layer(4)).unwrap();
        match net.predict(&[1.0, 2.0]) {
            Err(Error::DimensionMismatch { expected, actual }) => {
                assert_eq!((expected, actual), (4, 2))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_architectures() {
        assert!(DenseNet::zeros(&[LayerSpec::new(3, 2, Activation::Sigmoid, 0.0)]).is_err());
        assert!(DenseNet::zeros(&[LayerSpec::new(3, 1, Activation::Relu, 0.0)]).is_err());
        assert!(DenseNet::zeros(&[LayerSpec::new(3, 1, Activation::Sigmoid, 1.0)]).is_err());
        assert!(DenseNet::zeros(&[
            LayerSpec::new(3, 4, Activation::Relu, 0.0),
            LayerSpec::new(5, 1, Activation::Sigmoid, 0.0),
        ])
        .is_err());
    }

    #[test]
    fn bce_at_half_is_ln2() {
        let net = DenseNet::zeros(&one_layer(2)).unwrap();
        let fw = net.forward(&[0.3, 0.1], Mode::Infer, &mut rng::stream(0, "t")).unwrap();
        let (g, loss) = net.bce_grad(&fw, 1.0, 1.0);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(g.flat().iter().any(|&x| x != 0.0));
        let (g0, l0) = net.bce_grad(&fw, 1.0, 0.0);
        assert_eq!(l0, 0.0);
        assert!(g0.flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn saturated_output_loss_is_finite() {
        let mut net = DenseNet::zeros(&one_layer(1)).unwrap();
        net.layers_mut()[0].bias[0] = 800.0;
        let p = net.predict(&[0.0]).unwrap();
        assert_eq!(p, 1.0);
        let loss = DenseNet::bce_loss(p, 0.0, 1.0);
        assert!(loss.is_finite() && loss > 27.0);
    }

    #[test]
    fn infer_mode_ignores_dropout() {
        let specs = [
            LayerSpec::new(6, 8, Activation::Relu, 0.5),
            LayerSpec::new(8, 1, Activation::Sigmoid, 0.5),
        ];
        let net = DenseNet::new(&specs, &mut rng::stream(1, "init")).unwrap();
        let x = [0.1, -0.4, 0.9, 0.0, 1.2, -0.7];
        let a = net.forward(&x, Mode::Infer, &mut rng::stream(1, "a")).unwrap().output;
        let b = net.forward(&x, Mode::Infer, &mut rng::stream(2, "b")).unwrap().output;
        assert_eq!(a, b);
        let t1 = net.forward(&x, Mode::Train, &mut rng::stream(3, "d")).unwrap().output;
        let t2 = net.forward(&x, Mode::Train, &mut rng::stream(3, "d")).unwrap().output;
        assert_eq!(t1, t2);
    }
}
