//! Fully connected ReLU network with an affine input scaling and a linear
//! output head, trained with Adam on mean squared error plus an L2 penalty.

use crate::error::{CoreError, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `weights[j]` holds the incoming weights of unit `j`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// Raw feature `x_k` enters as `input_scale[k]·x_k + input_shift[k]`.
    pub input_scale: Vec<f64>,
    pub input_shift: Vec<f64>,
    /// ReLU layers.
    pub hidden: Vec<Layer>,
    /// Linear output layer with a single unit.
    pub head: Layer,
}

/// Forward-pass intermediates: the scaled input, then per hidden layer the
/// pre-activations `s` and activations `v`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
    pub output: f64,
}

impl MlpModel {
    /// Uniform He initialization, identity input scaling.
    pub fn random(inputs: usize, widths: &[usize], rng: &mut impl Rng) -> Self {
        let mut hidden = vec![];
        let mut n_in = inputs;
        for &w in widths {
            hidden.push(random_layer(n_in, w, rng));
            n_in = w;
        }
        MlpModel {
            input_scale: vec![1.0; inputs],
            input_shift: vec![0.0; inputs],
            hidden,
            head: random_layer(n_in, 1, rng),
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.input_scale.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(Layer::outputs).collect()
    }

    pub fn scale_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.input_scale.iter().zip(&self.input_shift)).map(|(v, (a, b))| a * v + b).collect()
    }

    pub fn trace_scaled(&self, v0: &[f64]) -> Trace {
        let mut pre = vec![];
        let mut post = vec![];
        let mut v = v0.to_vec();
        for layer in &self.hidden {
            let s = layer.apply(&v);
            v = s.iter().map(|x| x.max(0.0)).collect();
            pre.push(s);
            post.push(v.clone());
        }
        let output = self.head.apply(&v)[0];
        Trace {
            input: v0.to_vec(),
            pre,
            post,
            output,
        }
    }

    /// Prediction for a raw (unscaled) feature vector.
    pub fn forward(&self, x: &[f64]) -> f64 {
        self.trace_scaled(&self.scale_input(x)).output
    }

    fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.hidden.iter().chain(std::iter::once(&self.head))
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.head))
    }

    /// Trainable parameters: per layer, weights row by row then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![];
        for l in self.layers() {
            l.weights.iter().for_each(|w| p.extend_from_slice(w));
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut k = 0;
        for l in self.layers_mut() {
            for w in l.weights.iter_mut() {
                let n = w.len();
                w.copy_from_slice(&p[k..k + n]);
                k += n;
            }
            let n = l.bias.len();
            l.bias.copy_from_slice(&p[k..k + n]);
            k += n;
        }
        assert_eq!(k, p.len(), "parameter vector length");
    }

    /// Mask over [`params`](Self::params) marking weights (penalized) as
    /// opposed to biases.
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut m = vec![];
        for l in self.layers() {
            l.weights.iter().for_each(|w| m.extend(std::iter::repeat_n(true, w.len())));
            m.extend(std::iter::repeat_n(false, l.bias.len()));
        }
        m
    }

    /// `mean_n (f(v_n) − t_n)² + l2·Σ W²` over already-scaled inputs, and its
    /// gradient with respect to [`params`](Self::params) by reverse-mode
    /// accumulation.
    pub fn loss_and_grad(&self, inputs: &[Vec<f64>], targets: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let n = inputs.len().max(1) as f64;
        let params = self.params();
        let mask = self.weight_mask();
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        // offsets of each layer in the parameter vector
        let mut offsets = vec![];
        let mut k = 0;
        for l in self.layers() {
            offsets.push(k);
            k += l.outputs() * (l.inputs() + 1);
        }
        let n_hidden = self.hidden.len();
        for (x, &t) in inputs.iter().zip(targets) {
            let tr = self.trace_scaled(x);
            let r = tr.output - t;
            loss += r * r / n;
            // delta at the head output
            let mut delta = vec![2.0 * r / n];
            for li in (0..=n_hidden).rev() {
                let layer = if li == n_hidden { &self.head } else { &self.hidden[li] };
                let below: &[f64] = if li == 0 { &tr.input } else { &tr.post[li - 1] };
                let base = offsets[li];
                let n_in = layer.inputs();
                for (j, &dj) in delta.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    for (i, &vi) in below.iter().enumerate() {
                        grad[base + j * n_in + i] += dj * vi;
                    }
                    grad[base + layer.outputs() * n_in + j] += dj;
                }
                if li == 0 {
                    break;
                }
                // back through the weights, then the ReLU of the layer below
                let pre = &tr.pre[li - 1];
                delta = (0..n_in)
                    .map(|i| {
                        if pre[i] > 0.0 {
                            delta.iter().enumerate().map(|(j, dj)| dj * layer.weights[j][i]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        for ((g, p), &is_w) in grad.iter_mut().zip(&params).zip(&mask) {
            if is_w {
                loss += l2 * p * p;
                *g += 2.0 * l2 * p;
            }
        }
        (loss, grad)
    }
}

fn random_layer(n_in: usize, n_out: usize, rng: &mut impl Rng) -> Layer {
    let limit = (6.0 / n_in.max(1) as f64).sqrt();
    Layer {
        weights: (0..n_out).map(|_| (0..n_in).map(|_| rng.random_range(-limit..limit)).collect()).collect(),
        bias: vec![0.0; n_out],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOptions {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop after this many epochs without a better validation loss.
    pub patience: usize,
    pub l2: f64,
    pub validation_fraction: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            hidden: vec![16, 16],
            learning_rate: 1e-3,
            epochs: 1000,
            patience: 50,
            l2: 1e-4,
            validation_fraction: 0.2,
            batch_size: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Loss on the training rows in scaled target units, penalty included.
    pub train_loss: f64,
    pub validation_loss: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Loss after each epoch, training rows.
    pub history: Vec<f64>,
}

/// Min-max scaling of each feature to `[0, 1]`; constant features map to 0.
pub fn min_max_scaling(inputs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = inputs.first().map_or(0, Vec::len);
    let mut scale = vec![1.0; dim];
    let mut shift = vec![0.0; dim];
    for k in 0..dim {
        let lo = inputs.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min);
        let hi = inputs.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            scale[k] = 1.0 / (hi - lo);
            shift[k] = -lo / (hi - lo);
        } else {
            scale[k] = 0.0;
            shift[k] = 0.0;
        }
    }
    (scale, shift)
}

/// Trains on raw features and targets. Features are min-max scaled and the
/// target standardized during training; both maps are folded into the
/// returned model, which therefore predicts raw targets from raw features.
pub fn train_mlp(inputs: &[Vec<f64>], targets: &[f64], opts: &TrainOptions) -> Result<(MlpModel, TrainReport)> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(CoreError::NotEnoughData(format!("{} inputs for {} targets", inputs.len(), targets.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (scale, shift) = min_max_scaling(inputs);
    let t_mean = targets.iter().sum::<f64>() / targets.len() as f64;
    let t_var = targets.iter().map(|t| (t - t_mean).powi(2)).sum::<f64>() / targets.len() as f64;
    let t_std = if t_var > 0.0 { t_var.sqrt() } else { 1.0 };
    let mut model = MlpModel::random(inputs[0].len(), &opts.hidden, &mut rng);
    model.input_scale = scale;
    model.input_shift = shift;
    let xs: Vec<Vec<f64>> = inputs.iter().map(|x| model.scale_input(x)).collect();
    let ts: Vec<f64> = targets.iter().map(|t| (t - t_mean) / t_std).collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if xs.len() >= 5 { ((xs.len() as f64) * opts.validation_fraction).round() as usize } else { 0 };
    let (val_idx, train_idx) = order.split_at(n_val);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) { (idx.iter().map(|&i| xs[i].clone()).collect(), idx.iter().map(|&i| ts[i]).collect()) };
    let (tx, tt) = pick(train_idx);
    let (vx, vt) = if n_val > 0 { pick(val_idx) } else { (tx.clone(), tt.clone()) };

    let mut p = model.params();
    let (mut m1, mut m2) = (vec![0.0; p.len()], vec![0.0; p.len()]);
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut step = 0i32;
    let mut best = (f64::INFINITY, p.clone(), 0usize);
    let mut history = vec![];
    let mut batch: Vec<usize> = (0..tx.len()).collect();
    let mut epochs_run = 0;
    for epoch in 0..opts.epochs {
        epochs_run = epoch + 1;
        batch.shuffle(&mut rng);
        for chunk in batch.chunks(opts.batch_size.max(1)) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| tx[i].clone()).collect();
            let bt: Vec<f64> = chunk.iter().map(|&i| tt[i]).collect();
            model.set_params(&p);
            let (loss, g) = model.loss_and_grad(&bx, &bt, opts.l2);
            if !loss.is_finite() {
                return Err(CoreError::Diverged { epoch, loss });
            }
            step += 1;
            for k in 0..p.len() {
                m1[k] = b1 * m1[k] + (1.0 - b1) * g[k];
                m2[k] = b2 * m2[k] + (1.0 - b2) * g[k] * g[k];
                let mh = m1[k] / (1.0 - b1.powi(step));
                let vh = m2[k] / (1.0 - b2.powi(step));
                p[k] -= opts.learning_rate * mh / (vh.sqrt() + eps);
            }
        }
        model.set_params(&p);
        let (train_loss, _) = model.loss_and_grad(&tx, &tt, opts.l2);
        let (val_loss, _) = model.loss_and_grad(&vx, &vt, 0.0);
        if !train_loss.is_finite() || !val_loss.is_finite() {
            return Err(CoreError::Diverged { epoch, loss: train_loss });
        }
        history.push(train_loss);
        if val_loss < best.0 {
            best = (val_loss, p.clone(), epoch);
        } else if epoch - best.2 >= opts.patience {
            break;
        }
    }
    model.set_params(&best.1);
    let (train_loss, _) = model.loss_and_grad(&tx, &tt, opts.l2);
    // fold the target standardization into the head; a constant target
    // folds to the constant itself
    let fold = if t_var > 0.0 { t_std } else { 0.0 };
    for w in model.head.weights[0].iter_mut() {
        *w *= fold;
    }
    model.head.bias[0] = model.head.bias[0] * fold + t_mean;
    Ok((
        model,
        TrainReport {
            train_loss,
            validation_loss: best.0,
            epochs_run,
            best_epoch: best.2,
            history,
        },
    ))
}
