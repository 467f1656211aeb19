//! Fully connected regression network with rectified-linear hidden layers,
//! a linear output, mean squared error backpropagation and Adam.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Weights are row-major: `weights[o * inputs + i]` connects input `i` to
/// output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum();
            out.push(z + self.biases[o]);
        }
    }
}

/// Adam hyperparameters and first and second moment estimates, shaped like
/// the layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<Layer>,
    pub v: Vec<Layer>,
}

impl Adam {
    fn new(layers: &[Layer]) -> Self {
        let shape = |l: &Layer| Layer::zeros(l.inputs, l.outputs);
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: layers.iter().map(shape).collect(),
            v: layers.iter().map(shape).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNetwork {
    pub layers: Vec<Layer>,
    pub adam: Adam,
    /// The network is fit to targets divided by this; `value` undoes it.
    #[serde(default = "unit_scale")]
    pub target_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Gradients shaped like the network's layers.
pub type Gradient = Vec<Layer>;

impl ValueNetwork {
    /// Kaiming He initialization: weights drawn from N(0, 2 / fan_in),
    /// biases zero. `sizes` lists input, hidden and output widths.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let layers: Vec<Layer> = sizes
            .windows(2)
            .map(|w| {
                let mut l = Layer::zeros(w[0], w[1]);
                let dist = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive fan-in");
                l.weights.iter_mut().for_each(|x| *x = dist.sample(rng));
                l
            })
            .collect();
        ValueNetwork::from_layers(layers)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        let adam = Adam::new(&layers);
        ValueNetwork {
            layers,
            adam,
            target_scale: 1.0,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.inputs).collect();
        s.extend(self.layers.last().map(|l| l.outputs));
        s
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs
    }

    /// Checks shapes after deserialization.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.layers.is_empty() || self.layers.last().is_some_and(|l| l.outputs != 1) {
            return bad("network needs at least one layer and a single output");
        }
        let consistent = |ls: &[Layer]| {
            ls.len() == self.layers.len()
                && ls.iter().zip(&self.layers).all(|(a, b)| {
                    a.inputs == b.inputs
                        && a.outputs == b.outputs
                        && a.weights.len() == a.inputs * a.outputs
                        && a.biases.len() == a.outputs
                })
        };
        if !consistent(&self.layers) || !consistent(&self.adam.m) || !consistent(&self.adam.v) {
            return bad("layer shapes are inconsistent");
        }
        if self.layers.windows(2).any(|w| w[0].outputs != w[1].inputs) {
            return bad("consecutive layer widths do not match");
        }
        if !(self.target_scale > 0.0) || !self.target_scale.is_finite() {
            return bad("target scale must be positive and finite");
        }
        Ok(())
    }

    /// Estimated value in target units: `forward(x) * target_scale`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.forward(x) * self.target_scale
    }

    /// Network output for one input.
    pub fn forward(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.inputs(), "input dimension mismatch");
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if k < last {
                next.iter_mut().for_each(|z| *z = z.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Mean squared error over a batch and its gradient.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> (f64, Gradient) {
        assert_eq!(xs.len(), ys.len());
        let mut grad: Gradient = self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
        let n = xs.len().max(1) as f64;
        let last = self.layers.len() - 1;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            assert_eq!(x.len(), self.inputs(), "input dimension mismatch");
            // Activations entering each layer, then the output.
            let mut acts: Vec<Vec<f64>> = vec![x.to_vec()];
            for (k, layer) in self.layers.iter().enumerate() {
                let mut z = Vec::new();
                layer.affine(&acts[k], &mut z);
                if k < last {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                }
                acts.push(z);
            }
            let err = acts[last + 1][0] - y;
            loss += err * err / n;
            let mut delta = vec![2.0 * err / n];
            for k in (0..=last).rev() {
                let layer = &self.layers[k];
                let input = &acts[k];
                let g = &mut grad[k];
                for o in 0..layer.outputs {
                    g.biases[o] += delta[o];
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += delta[o] * a;
                    }
                }
                if k == 0 {
                    break;
                }
                let mut back = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (b, w) in back.iter_mut().zip(row) {
                        *b += delta[o] * w;
                    }
                }
                // Rectifier derivative of the previous layer's output.
                for (b, a) in back.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *b = 0.0;
                    }
                }
                delta = back;
            }
        }
        (loss, grad)
    }

    /// One Adam update with learning rate `lr`.
    pub fn adam_step(&mut self, grad: &Gradient, lr: f64) {
        let a = &mut self.adam;
        a.step += 1;
        let t = a.step as i32;
        let (b1, b2, eps) = (a.beta1, a.beta2, a.epsilon);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                p[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        };
        for (((l, g), m), v) in self.layers.iter_mut().zip(grad).zip(&mut a.m).zip(&mut a.v) {
            update(&mut l.weights, &g.weights, &mut m.weights, &mut v.weights);
            update(&mut l.biases, &g.biases, &mut m.biases, &mut v.biases);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = ValueNetwork::new(&[21, 8, 1], &mut ChaCha8Rng::seed_from_u64(0));
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(net.forward(&[3.0; 21]), 0.0);
    }

    #[test]
    fn micro_network_by_hand() {
        // Hidden units: relu(2x + 1) and relu(-x + 0.5); output 3h1 - h2 + 0.25.
        let net = ValueNetwork::from_layers(vec![
            Layer {
                inputs: 1,
                outputs: 2,
                weights: vec![2.0, -1.0],
                biases: vec![1.0, 0.5],
            },
            Layer {
                inputs: 2,
                outputs: 1,
                weights: vec![3.0, -1.0],
                biases: vec![0.25],
            },
        ]);
        assert_eq!(net.forward(&[1.0]), 3.0 * 3.0 + 0.25);
        assert_eq!(net.forward(&[-1.0]), -1.5 + 0.25);
        assert_eq!(net.forward(&[0.0]), 3.0 - 0.5 + 0.25);
        net.validate().unwrap();
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = ValueNetwork::new(&[3, 4, 1], &mut rng);
        let before = net.layers.clone();
        let x = [0.5, -1.0, 2.0];
        let (_, g) = net.loss_and_gradient(&[&x], &[1.0]);
        net.adam_step(&g, 0.0);
        assert_eq!(net.layers, before);
    }
}
