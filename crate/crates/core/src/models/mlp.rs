//! Fully connected regression network trained with mini-batch Adam.
//!
//! Hidden layers use the chosen activation, the output is linear, and the
//! loss is half the mean squared error of the batch.

use std::fmt;
use std::str::FromStr;

use super::tree::check_xy;
use crate::error::{Error, Result};
use crate::states::RngStream;

const INIT_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;
const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::Domain(format!("unknown activation {s:?} (expected tanh or relu)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden_layers: vec![64, 64],
            activation: Activation::Relu,
            epochs: 200,
            batch_size: 128,
            step_size: 1e-3,
            seed: 0,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.contains(&0) {
            return Err(Error::Domain("hidden layer widths must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch_size must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Domain(format!("step_size must be positive, got {}", self.step_size)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let w = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            out.push(self.biases[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>());
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub params: MlpParams,
    pub layers: Vec<DenseLayer>,
}

impl Mlp {
    /// Fan-in scaled uniform initialization, `U(-1/sqrt(n_in), 1/sqrt(n_in))`.
    pub fn init(n_features: usize, params: &MlpParams) -> Result<Self> {
        params.validate()?;
        if n_features == 0 {
            return Err(Error::Domain("network needs at least one input".into()));
        }
        let mut rng = RngStream::new(params.seed, INIT_STREAM);
        let mut widths = vec![n_features];
        widths.extend(&params.hidden_layers);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut l = DenseLayer::zeros(w[0], w[1]);
                for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                    *v = rng.uniform_range(-bound, bound);
                }
                l
            })
            .collect();
        Ok(Self {
            params: params.clone(),
            layers,
        })
    }

    pub fn n_features(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Domain(format!(
                "network expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut acts = Vec::new();
        self.forward(x, &mut acts);
        acts.last().unwrap()[0]
    }

    /// Fills `acts` with the input followed by every layer's output.
    fn forward(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize_with(self.layers.len() + 1, Vec::new);
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = acts.split_at_mut(k + 1);
            layer.forward(&done[k], &mut rest[0]);
            if k < last {
                for v in rest[0].iter_mut() {
                    *v = self.params.activation.apply(*v);
                }
            }
        }
    }

    /// Batch loss `1/(2B) sum (f(x) - y)^2` and its gradient, shaped like `layers`.
    pub fn loss_and_gradient(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<DenseLayer>) {
        let mut grads: Vec<DenseLayer> = self.layers.iter().map(|l| DenseLayer::zeros(l.n_in, l.n_out)).collect();
        let mut acts = Vec::new();
        let mut delta = Vec::new();
        let mut next = Vec::new();
        let scale = 1.0 / x.len() as f64;
        let mut loss = 0.0;
        for (row, &target) in x.iter().zip(y) {
            self.forward(row, &mut acts);
            let err = acts.last().unwrap()[0] - target;
            loss += 0.5 * err * err * scale;
            delta.clear();
            delta.push(err * scale);
            for k in (0..self.layers.len()).rev() {
                let layer = &self.layers[k];
                let input = &acts[k];
                let g = &mut grads[k];
                for o in 0..layer.n_out {
                    let d = delta[o];
                    g.biases[o] += d;
                    let gw = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (w, a) in gw.iter_mut().zip(input) {
                        *w += d * a;
                    }
                }
                if k > 0 {
                    next.clear();
                    next.resize(layer.n_in, 0.0);
                    for o in 0..layer.n_out {
                        let d = delta[o];
                        let w = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                        for (n, wv) in next.iter_mut().zip(w) {
                            *n += d * wv;
                        }
                    }
                    for (n, a) in next.iter_mut().zip(input) {
                        *n *= self.params.activation.derivative(*a);
                    }
                    std::mem::swap(&mut delta, &mut next);
                }
            }
        }
        (loss, grads)
    }

    /// All weights and biases, layer by layer.
    pub fn flat_parameters(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat_parameters(&mut self, theta: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum();
        if theta.len() != total {
            return Err(Error::Dimension(format!("expected {total} parameters, got {}", theta.len())));
        }
        let mut it = theta.iter();
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *v = *it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }
}

pub(crate) fn flatten(layers: &[DenseLayer]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
        .collect()
}

/// Train a network from its seeded initialization. Zero epochs returns the
/// initialization unchanged.
pub fn fit_mlp(x: &[Vec<f64>], y: &[f64], params: &MlpParams) -> Result<Mlp> {
    let width = check_xy(x, y)?;
    let mut net = Mlp::init(width, params)?;
    let n = x.len();
    let mut theta = net.flat_parameters();
    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut t = 0i32;
    let mut rng = RngStream::new(params.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut bx: Vec<Vec<f64>> = Vec::with_capacity(params.batch_size);
    let mut by: Vec<f64> = Vec::with_capacity(params.batch_size);
    for epoch in 0..params.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(params.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.push(x[i].clone());
                by.push(y[i]);
            }
            let (loss, grads) = net.loss_and_gradient(&bx, &by);
            let g = flatten(&grads);
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Training(format!("non-finite loss at epoch {}", epoch + 1)));
            }
            t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            for k in 0..theta.len() {
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * g[k];
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
                theta[k] -= params.step_size * (m[k] / c1) / ((v[k] / c2).sqrt() + ADAM_EPS);
            }
            net.set_flat_parameters(&theta)?;
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite parameters after training".into()));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(seed: u64, n: usize, width: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = RngStream::new(seed, 9);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).collect();
        let y = x.iter().map(|r| r[0] * r[1] + 0.5 * r[0]).collect();
        (x, y)
    }

    fn fd_check(activation: Activation) {
        let (x, y) = data(1, 12, 3);
        let params = MlpParams { hidden_layers: vec![5, 4], activation, ..Default::default() };
        let net = Mlp::init(3, &params).unwrap();
        let (_, grads) = net.loss_and_gradient(&x, &y);
        let analytic = flatten(&grads);
        let theta = net.flat_parameters();
        let h = 1e-6;
        for k in 0..theta.len() {
            let mut probe = net.clone();
            let mut t = theta.clone();
            t[k] += h;
            probe.set_flat_parameters(&t).unwrap();
            let up = probe.loss_and_gradient(&x, &y).0;
            t[k] -= 2.0 * h;
            probe.set_flat_parameters(&t).unwrap();
            let down = probe.loss_and_gradient(&x, &y).0;
            let numeric = (up - down) / (2.0 * h);
            let err = (numeric - analytic[k]).abs();
            assert!(
                err <= 1e-5 * analytic[k].abs().max(1e-3),
                "{activation} param {k}: {numeric} vs {}",
                analytic[k]
            );
        }
    }

    #[test]
    fn gradient_matches_finite_differences_tanh() {
        fd_check(Activation::Tanh);
    }

    #[test]
    fn gradient_matches_finite_differences_relu() {
        fd_check(Activation::Relu);
    }

    #[test]
    fn forward_pass_matches_plain_matrix_products() {
        let p = MlpParams { hidden_layers: vec![6, 5], activation: Activation::Tanh, seed: 3, ..Default::default() };
        let net = Mlp::init(4, &p).unwrap();
        let (x, _) = data(6, 20, 4);
        for row in &x {
            let mut a = row.clone();
            for (k, l) in net.layers.iter().enumerate() {
                let mut z: Vec<f64> = (0..l.n_out)
                    .map(|o| l.biases[o] + (0..l.n_in).map(|i| l.weights[o * l.n_in + i] * a[i]).sum::<f64>())
                    .collect();
                if k + 1 < net.layers.len() {
                    z.iter_mut().for_each(|v| *v = v.tanh());
                }
                a = z;
            }
            assert!((net.predict(row).unwrap() - a[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_weights_give_bias_output() {
        let mut net = Mlp::init(3, &MlpParams { hidden_layers: vec![4], ..Default::default() }).unwrap();
        for l in &mut net.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        net.layers[1].biases[0] = 0.25;
        assert_eq!(net.predict(&[1.0, -2.0, 3.0]).unwrap(), 0.25);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (x, y) = data(2, 30, 4);
        let p = MlpParams { epochs: 0, seed: 5, ..Default::default() };
        assert_eq!(fit_mlp(&x, &y, &p).unwrap(), Mlp::init(4, &p).unwrap());
    }

    #[test]
    fn training_is_seeded_and_reduces_loss() {
        let (x, y) = data(3, 200, 3);
        let p = MlpParams { hidden_layers: vec![16], epochs: 60, batch_size: 32, step_size: 1e-2, seed: 11, ..Default::default() };
        let a = fit_mlp(&x, &y, &p).unwrap();
        let b = fit_mlp(&x, &y, &p).unwrap();
        assert_eq!(a, b);
        let before = Mlp::init(3, &p).unwrap().loss_and_gradient(&x, &y).0;
        let after = a.loss_and_gradient(&x, &y).0;
        assert!(after < 0.2 * before, "{before} -> {after}");
    }

    #[test]
    fn divergence_is_reported() {
        let (x, _) = data(4, 40, 3);
        let y = vec![1e200; 40];
        let p = MlpParams { hidden_layers: vec![4], epochs: 3, seed: 1, ..Default::default() };
        let err = fit_mlp(&x, &y, &p).unwrap_err();
        assert!(matches!(err, Error::Training(ref m) if m.contains("epoch 1")), "{err}");
    }

    #[test]
    fn invalid_params() {
        let (x, y) = data(5, 10, 2);
        for p in [
            MlpParams { hidden_layers: vec![0], ..Default::default() },
            MlpParams { batch_size: 0, ..Default::default() },
            MlpParams { step_size: -1.0, ..Default::default() },
        ] {
            assert!(fit_mlp(&x, &y, &p).is_err());
        }
        assert!("sigmoid".parse::<Activation>().is_err());
    }
}
