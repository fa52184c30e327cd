//! Feed-forward network: dense ReLU stack → 1-D max-pool → dropout → sigmoid unit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::matrix::{normalized_weights, Matrix};
use super::Classifier;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

pub const LOSS_CLIP: f64 = 1e-7;

/// Binary cross-entropy with the score clipped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss<T: Scalar>(score: T, label: bool) -> T {
    let p = clip(score);
    if label {
        -p.ln()
    } else {
        -(T::one() - p).ln()
    }
}

#[inline]
fn clip<T: Scalar>(p: T) -> T {
    let lo = T::of(LOSS_CLIP);
    p.max(lo).min(T::one() - lo)
}

#[inline]
fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpHyperParams {
    /// Widths of the ReLU layers.
    pub hidden: Vec<usize>,
    /// Max-pool window and stride applied to the last hidden layer (1 disables it).
    pub pool_size: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for MlpHyperParams {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32, 16],
            pool_size: 2,
            dropout_rate: 0.1,
            epochs: 20,
            batch_size: 16,
            adam: AdamConfig::default(),
        }
    }
}

impl MlpHyperParams {
    /// 52 → 16 → 1 network trained for 5 epochs; the default boosting base learner.
    pub fn small() -> Self {
        Self { hidden: vec![16], pool_size: 1, dropout_rate: 0.0, epochs: 5, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let last = *self.hidden.last().ok_or_else(|| invalid("at least one hidden layer is required"))?;
        if self.hidden.contains(&0) {
            return Err(invalid("hidden widths must be positive"));
        }
        if self.pool_size == 0 || last % self.pool_size != 0 {
            return Err(invalid(format!("pool size {} must divide the last width {last}", self.pool_size)));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(invalid("dropout rate must lie in [0, 1)"));
        }
        if self.batch_size < 1 {
            return Err(invalid("batch size must be at least 1"));
        }
        if self.epochs < 1 {
            return Err(invalid("epochs must be at least 1"));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0)
            || !(0.0..1.0).contains(&a.beta1)
            || !(0.0..1.0).contains(&a.beta2)
            || !(a.epsilon > 0.0)
        {
            return Err(invalid("adam needs learning_rate > 0, betas in [0, 1) and epsilon > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Offsets of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseShape {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: usize,
    pub bias: usize,
}

fn dense_shapes(n_inputs: usize, hidden: &[usize], pool: usize) -> Vec<DenseShape> {
    let mut widths = vec![n_inputs];
    widths.extend_from_slice(hidden);
    let mut shapes = Vec::new();
    let mut at = 0;
    for pair in widths.windows(2) {
        let (i, o) = (pair[0], pair[1]);
        shapes.push(DenseShape { inputs: i, outputs: o, weights: at, bias: at + i * o });
        at += i * o + o;
    }
    let pooled = hidden.last().copied().unwrap_or(n_inputs) / pool;
    shapes.push(DenseShape { inputs: pooled, outputs: 1, weights: at, bias: at + pooled });
    shapes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Mlp<T> {
    pub n_inputs: usize,
    pub hyper: MlpHyperParams,
    pub seed: u64,
    pub shapes: Vec<DenseShape>,
    /// All weights and biases; layer `l` occupies `shapes[l]`.
    pub params: Vec<T>,
    /// (positives, negatives) seen in training.
    pub class_balance: (usize, usize),
    /// Weighted training loss in eval mode after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Activations<T> {
    /// `layers[0]` is the input; `layers[l]` the ReLU output of hidden layer `l`.
    pub layers: Vec<Vec<T>>,
    pub pool_argmax: Vec<usize>,
    pub pooled: Vec<T>,
    pub mask: Vec<T>,
    pub logit: T,
    pub score: T,
}

impl<T: Scalar> Mlp<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(n_inputs: usize, hyper: &MlpHyperParams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let shapes = dense_shapes(n_inputs, &hyper.hidden, hyper.pool_size);
        let last = shapes.last().unwrap();
        let mut params = vec![T::zero(); last.bias + 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &shapes {
            let limit = (6.0 / (s.inputs + s.outputs) as f64).sqrt();
            for p in &mut params[s.weights..s.bias] {
                *p = T::of(rng.gen_range(-limit..=limit));
            }
        }
        Ok(Self {
            n_inputs,
            hyper: hyper.clone(),
            seed,
            shapes,
            params,
            class_balance: (0, 0),
            epoch_losses: Vec::new(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn n_hidden(&self) -> usize {
        self.shapes.len() - 1
    }

    /// Forward pass. Dropout is applied only in `Mode::Train`, with inverted scaling.
    pub fn forward<R: Rng>(&self, x: &[T], mode: Mode, rng: &mut R) -> Result<Activations<T>> {
        if x.len() != self.n_inputs {
            return Err(Error::Dimension { expected: self.n_inputs, got: x.len() });
        }
        let mut layers: Vec<Vec<T>> = Vec::with_capacity(self.n_hidden() + 1);
        layers.push(x.to_vec());
        for s in &self.shapes[..self.n_hidden()] {
            let input = layers.last().unwrap();
            let w = &self.params[s.weights..s.bias];
            let b = &self.params[s.bias..s.bias + s.outputs];
            let out: Vec<T> = (0..s.outputs)
                .map(|o| {
                    let row = &w[o * s.inputs..(o + 1) * s.inputs];
                    let z = row.iter().zip(input).fold(b[o], |acc, (&wi, &xi)| acc + wi * xi);
                    z.max(T::zero())
                })
                .collect();
            layers.push(out);
        }
        let last = layers.last().unwrap();
        let pool = self.hyper.pool_size;
        let mut pool_argmax = Vec::with_capacity(last.len() / pool);
        let mut pooled = Vec::with_capacity(last.len() / pool);
        for g in 0..last.len() / pool {
            let mut best = g * pool;
            for k in g * pool + 1..(g + 1) * pool {
                if last[k] > last[best] {
                    best = k;
                }
            }
            pool_argmax.push(best);
            pooled.push(last[best]);
        }
        let rate = self.hyper.dropout_rate;
        let mask: Vec<T> = match mode {
            Mode::Train if rate > 0.0 => {
                let keep = T::of(1.0 / (1.0 - rate));
                (0..pooled.len()).map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep }).collect()
            }
            _ => vec![T::one(); pooled.len()],
        };
        let out = self.shapes.last().unwrap();
        let w = &self.params[out.weights..out.bias];
        let logit =
            pooled.iter().zip(&mask).zip(w).fold(self.params[out.bias], |acc, ((&p, &m), &wi)| acc + wi * p * m);
        let score = sigmoid(logit);
        Ok(Activations { layers, pool_argmax, pooled, mask, logit, score })
    }

    /// Deterministic score (dropout off).
    pub fn predict(&self, x: &[T]) -> Result<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(x, Mode::Eval, &mut rng)?.score)
    }

    /// Adds `weight · ∂bce/∂θ` for one sample into `grads`.
    pub fn backward(&self, act: &Activations<T>, label: bool, weight: T, grads: &mut [T]) {
        let lo = T::of(LOSS_CLIP);
        let p = act.score;
        if p < lo || p > T::one() - lo {
            // Clipped loss is flat in θ.
            return;
        }
        let y = if label { T::one() } else { T::zero() };
        let delta = weight * (p - y);

        let out = self.shapes.last().unwrap();
        let last = act.layers.last().unwrap();
        let mut d_last = vec![T::zero(); last.len()];
        grads[out.bias] = grads[out.bias] + delta;
        for g in 0..act.pooled.len() {
            let d = act.pooled[g] * act.mask[g];
            grads[out.weights + g] = grads[out.weights + g] + delta * d;
            let back = delta * self.params[out.weights + g] * act.mask[g];
            d_last[act.pool_argmax[g]] = d_last[act.pool_argmax[g]] + back;
        }

        let mut d_out = d_last;
        for l in (0..self.n_hidden()).rev() {
            let s = self.shapes[l];
            let input = &act.layers[l];
            let output = &act.layers[l + 1];
            let mut d_in = vec![T::zero(); s.inputs];
            for o in 0..s.outputs {
                // ReLU gate: zero output means the unit was inactive.
                if !(output[o] > T::zero()) {
                    continue;
                }
                let dz = d_out[o];
                if dz == T::zero() {
                    continue;
                }
                grads[s.bias + o] = grads[s.bias + o] + dz;
                let row = s.weights + o * s.inputs;
                for i in 0..s.inputs {
                    grads[row + i] = grads[row + i] + dz * input[i];
                    d_in[i] = d_in[i] + dz * self.params[row + i];
                }
            }
            d_out = d_in;
        }
    }

    /// Weighted mean loss over a data set in eval mode.
    pub fn mean_loss(&self, x: &Matrix<T>, y: &[bool], w: &[T]) -> Result<T> {
        let mut total = T::zero();
        let mut mass = T::zero();
        for i in 0..x.rows() {
            total = total + w[i] * bce_loss(self.predict(x.row(i))?, y[i]);
            mass = mass + w[i];
        }
        Ok(total / mass)
    }
}

impl<T: Scalar> Classifier<T> for Mlp<T> {
    fn predict_score(&self, x: &[T]) -> Result<T> {
        self.predict(x)
    }
}

/// Mini-batch Adam on the weighted binary cross-entropy.
pub fn train_mlp<T: Scalar>(
    x: &Matrix<T>,
    y: &[bool],
    weights: Option<&[T]>,
    hp: &MlpHyperParams,
    seed: u64,
) -> Result<Mlp<T>> {
    if x.rows() == 0 {
        return Err(invalid("cannot train on an empty data set"));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension { expected: x.rows(), got: y.len() });
    }
    let positives = y.iter().filter(|&&l| l).count();
    if positives == 0 || positives == y.len() {
        return Err(invalid("MLP training needs both classes"));
    }
    let w = normalized_weights(weights, x.rows())?;
    let mut model = Mlp::init(x.cols(), hp, seed)?;
    model.class_balance = (positives, y.len() - positives);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    let mut adam = AdamState::new(model.n_params(), hp.adam);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut grads = vec![T::zero(); model.n_params()];
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hp.batch_size) {
            grads.iter_mut().for_each(|g| *g = T::zero());
            let scale = T::one() / T::of_usize(batch.len());
            for &i in batch {
                let act = model.forward(x.row(i), Mode::Train, &mut rng)?;
                model.backward(&act, y[i], w[i] * scale, &mut grads);
            }
            adam.step(&mut model.params, &grads)?;
        }
        let loss = model.mean_loss(x, y, &w)?;
        model.epoch_losses.push(loss.as_f64());
    }
    Ok(model)
}
