//! Multilayer perceptron regressor trained with Adam.
//!
//! The target is standardized internally. The output layer starts at zero,
//! so the initial prediction is the training mean. The returned weights are
//! the ones with the lowest full-batch training loss seen during training.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
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
    fn grad_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => (a > 0.0) as u8 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Rows per update; `None` is full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    /// L2 penalty on weights (biases excluded).
    #[serde(default = "default_l2")]
    pub l2: f64,
}

fn default_l2() -> f64 {
    1e-5
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: vec![64],
            activation: Activation::Tanh,
            epochs: 800,
            learning_rate: 0.005,
            batch_size: None,
            l2: default_l2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    /// `out × in`.
    w: DMatrix<f64>,
    b: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
    l2: f64,
    y_mean: f64,
    y_scale: f64,
    /// Full-batch loss (standardized target units) before each epoch.
    pub loss_history: Vec<f64>,
}

impl Mlp {
    /// Random hidden weights (Glorot uniform), zero output layer.
    pub fn init(inputs: usize, params: &MlpParams, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![inputs];
        sizes.extend(&params.hidden);
        sizes.push(1);
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = if l == last {
                    DMatrix::zeros(fan_out, fan_in)
                } else {
                    DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-a..a))
                };
                Layer { w, b: DVector::zeros(fan_out) }
            })
            .collect();
        Mlp {
            layers,
            activation: params.activation,
            l2: params.l2,
            y_mean: 0.0,
            y_scale: 1.0,
            loss_history: Vec::new(),
        }
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &MlpParams, seed: u64) -> Result<Mlp> {
        let n = y.len();
        let p = x.first().map_or(0, Vec::len);
        let mut model = Mlp::init(p, params, seed);
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        model.y_mean = y_mean;
        model.y_scale = if sd > 0.0 { sd } else { 1.0 };
        let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
        let ym = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / model.y_scale));

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut theta = model.params_flat();
        let mut m = vec![0.0; theta.len()];
        let mut v = vec![0.0; theta.len()];
        let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        let mut best = (f64::INFINITY, theta.clone());
        let mut history = Vec::with_capacity(params.epochs + 1);
        let batch = params.batch_size.filter(|&b| b > 0 && b < n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut step = 0i32;

        for _ in 0..params.epochs {
            let (loss, grad) = model.loss_and_grad_m(&xm, &ym);
            if !loss.is_finite() {
                return Err(Error::Diverged);
            }
            history.push(loss);
            if loss < best.0 {
                best = (loss, theta.clone());
            }
            let batches: Vec<Vec<f64>> = match batch {
                None => vec![grad],
                Some(bs) => {
                    order.shuffle(&mut rng);
                    order
                        .chunks(bs)
                        .map(|rows| {
                            let xb = xm.select_rows(rows);
                            let yb = DVector::from_iterator(rows.len(), rows.iter().map(|&r| ym[r]));
                            model.loss_and_grad_m(&xb, &yb).1
                        })
                        .collect()
                }
            };
            for (bi, g) in batches.into_iter().enumerate() {
                if bi > 0 {
                    // Mini-batch gradients after the first depend on the updated weights.
                    model.set_params_flat(&theta);
                }
                step += 1;
                let (c1, c2) = (1.0 - b1.powi(step), 1.0 - b2.powi(step));
                for k in 0..theta.len() {
                    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                    theta[k] -= params.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
                }
                model.set_params_flat(&theta);
            }
        }
        let (loss, _) = model.loss_and_grad_m(&xm, &ym);
        if !loss.is_finite() {
            return Err(Error::Diverged);
        }
        history.push(loss);
        if loss < best.0 {
            best = (loss, theta);
        }
        model.set_params_flat(&best.1);
        model.loss_history = history;
        Ok(model)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Weights then biases per layer; weights in column-major order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, theta: &[f64]) {
        assert_eq!(theta.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            for w in l.w.iter_mut() {
                *w = theta[k];
                k += 1;
            }
            for b in l.b.iter_mut() {
                *b = theta[k];
                k += 1;
            }
        }
    }

    /// Loss `mean((f(x) - y)^2) + l2/2 * sum(w^2)` on the raw network output
    /// (no target rescaling) and its gradient in [`Mlp::params_flat`] order.
    pub fn loss_and_grad(&self, x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
        let p = x.first().map_or(0, Vec::len);
        let xm = DMatrix::from_fn(x.len(), p, |i, j| x[i][j]);
        self.loss_and_grad_m(&xm, &DVector::from_column_slice(y))
    }

    fn forward(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = vec![x.clone()];
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = acts.last().unwrap() * l.w.transpose();
            for mut row in z.row_iter_mut() {
                row += l.b.transpose();
            }
            if li < last {
                z.apply(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
        }
        acts
    }

    fn loss_and_grad_m(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> (f64, Vec<f64>) {
        let n = x.nrows() as f64;
        let acts = self.forward(x);
        let out = acts.last().unwrap().column(0);
        let err = out - y;
        let wsq: f64 = self.layers.iter().map(|l| l.w.norm_squared()).sum();
        let loss = err.norm_squared() / n + 0.5 * self.l2 * wsq;

        let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(self.layers.len());
        let mut delta = DMatrix::from_column_slice(err.len(), 1, (err * (2.0 / n)).as_slice());
        for li in (0..self.layers.len()).rev() {
            let a_prev = &acts[li];
            let gw = delta.transpose() * a_prev + &self.layers[li].w * self.l2;
            let gb = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            grads.push((gw, gb));
            if li > 0 {
                let mut d = &delta * &self.layers[li].w;
                d.zip_apply(a_prev, |g, a| *g *= self.activation.grad_from_output(a));
                delta = d;
            }
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            flat.extend(gw.iter());
            flat.extend(gb.iter());
        }
        (loss, flat)
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let p = x[0].len();
        let xm = DMatrix::from_fn(x.len(), p, |i, j| x[i][j]);
        let acts = self.forward(&xm);
        acts.last()
            .unwrap()
            .column(0)
            .iter()
            .map(|v| self.y_mean + self.y_scale * v)
            .collect()
    }
}
