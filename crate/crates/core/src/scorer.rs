//! Scoring functions `f: features -> (0,1)`.
//!
//! Both kinds share one parameter layout. For each layer, the row-major
//! `out × in` weight matrix is followed by the `out` biases. Hidden layers use
//! `tanh`; the single output unit goes through the logistic sigmoid. A linear
//! scorer is the one-layer case `[d, 1]`, so its weights are `w_1..w_d, bias`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{PaucError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Linear,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    pub kind: ScorerKind,
    pub layer_dims: Vec<usize>,
    pub weights: Vec<f64>,
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn param_count(layer_dims: &[usize]) -> usize {
    layer_dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

impl ScorerParams {
    /// All-zero parameters; every input scores exactly 0.5.
    pub fn zeros(kind: ScorerKind, layer_dims: Vec<usize>) -> Result<Self> {
        validate_layout(kind, &layer_dims)?;
        let weights = vec![0.0; param_count(&layer_dims)];
        Ok(Self {
            kind,
            layer_dims,
            weights,
        })
    }

    pub fn linear(dims: usize) -> Result<Self> {
        Self::zeros(ScorerKind::Linear, vec![dims, 1])
    }

    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn init(kind: ScorerKind, layer_dims: Vec<usize>, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(kind, layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offset = 0;
        for w in params.layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let len = fan_out * (fan_in + 1);
            for p in &mut params.weights[offset..offset + len] {
                *p = rng.random_range(-bound..=bound);
            }
            offset += len;
        }
        Ok(params)
    }

    pub fn from_parts(kind: ScorerKind, layer_dims: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        validate_layout(kind, &layer_dims)?;
        let expected = param_count(&layer_dims);
        if weights.len() != expected {
            return Err(PaucError::DimensionMismatch {
                expected,
                got: weights.len(),
            });
        }
        Ok(Self {
            kind,
            layer_dims,
            weights,
        })
    }

    /// Checks a deserialised value.
    pub fn validate(&self) -> Result<()> {
        validate_layout(self.kind, &self.layer_dims)?;
        let expected = param_count(&self.layer_dims);
        if self.weights.len() != expected {
            return Err(PaucError::DimensionMismatch {
                expected,
                got: self.weights.len(),
            });
        }
        Ok(())
    }

    pub fn input_dims(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut act = x.to_vec();
        let mut next = Vec::new();
        let mut offset = 0;
        let layers = self.layer_dims.len() - 1;
        for (l, w) in self.layer_dims.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let mat = &self.weights[offset..offset + n_out * n_in];
            let bias = &self.weights[offset + n_out * n_in..offset + n_out * (n_in + 1)];
            next.clear();
            for o in 0..n_out {
                let z = dot(&mat[o * n_in..(o + 1) * n_in], &act) + bias[o];
                next.push(if l + 1 < layers { z.tanh() } else { z });
            }
            std::mem::swap(&mut act, &mut next);
            offset += n_out * (n_in + 1);
        }
        Ok(sigmoid(act[0]))
    }

    /// Score and its gradient with respect to every weight.
    pub fn score_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.weights.len()];
        let f = self.backprop(x, &mut grad, |f| f * (1.0 - f))?;
        Ok((f, grad))
    }

    /// Forward pass, then accumulates `upstream(f) · ∂logit/∂θ` into `grad`.
    ///
    /// `upstream` receives the sigmoid output and returns the derivative of
    /// the caller's loss with respect to the pre-sigmoid logit.
    pub(crate) fn backprop(
        &self,
        x: &[f64],
        grad: &mut [f64],
        upstream: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        self.check_input(x)?;
        let layers = self.layer_dims.len() - 1;
        // activations[l] is the input to layer l
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(layers + 1);
        activations.push(x.to_vec());
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for (l, w) in self.layer_dims.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            offsets.push(offset);
            let mat = &self.weights[offset..offset + n_out * n_in];
            let bias = &self.weights[offset + n_out * n_in..offset + n_out * (n_in + 1)];
            let input = &activations[l];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let z = dot(&mat[o * n_in..(o + 1) * n_in], input) + bias[o];
                    if l + 1 < layers {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            activations.push(out);
            offset += n_out * (n_in + 1);
        }
        let f = sigmoid(activations[layers][0]);

        let mut delta = vec![upstream(f)];
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let off = offsets[l];
            let input = &activations[l];
            for o in 0..n_out {
                let d = delta[o];
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (g, &a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[off + n_out * n_in + o] += d;
            }
            if l > 0 {
                let mat = &self.weights[off..off + n_out * n_in];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|o| mat[o * n_in + i] * delta[o]).sum();
                        let a = input[i];
                        back * (1.0 - a * a)
                    })
                    .collect();
            }
        }
        Ok(f)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dims() {
            return Err(PaucError::DimensionMismatch {
                expected: self.input_dims(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Scores every row of `ds`.
    pub fn score_dataset(&self, ds: &Dataset) -> Result<Vec<f64>> {
        (0..ds.len()).map(|i| self.score(ds.row(i))).collect()
    }

    /// Class-split scores `(positives, negatives)`.
    pub fn score_classes(&self, ds: &Dataset) -> Result<(Vec<f64>, Vec<f64>)> {
        let pos = ds
            .pos_ids()
            .iter()
            .map(|&i| self.score(ds.row(i)))
            .collect::<Result<_>>()?;
        let neg = ds
            .neg_ids()
            .iter()
            .map(|&i| self.score(ds.row(i)))
            .collect::<Result<_>>()?;
        Ok((pos, neg))
    }
}

fn validate_layout(kind: ScorerKind, layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 || layer_dims.contains(&0) {
        return Err(PaucError::invalid(format!(
            "layer_dims must have at least two positive widths, got {layer_dims:?}"
        )));
    }
    if *layer_dims.last().unwrap() != 1 {
        return Err(PaucError::invalid("the output layer must have width 1"));
    }
    if kind == ScorerKind::Linear && layer_dims.len() != 2 {
        return Err(PaucError::invalid("a linear scorer has layer_dims [d, 1]"));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean binary cross-entropy of `params` on `ds`.
pub fn cross_entropy(params: &ScorerParams, ds: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..ds.len() {
        let f = params.score(ds.row(i))?;
        let y = f64::from(ds.label(i));
        total -= y * f.ln() + (1.0 - y) * (1.0 - f).ln();
    }
    Ok(total / ds.len() as f64)
}

/// Minibatch gradient descent on binary cross-entropy.
///
/// Rows are reshuffled every epoch with a generator seeded by `seed`.
pub fn warmup_logistic(
    params: &ScorerParams,
    ds: &Dataset,
    epochs: usize,
    lr: f64,
    batch_size: usize,
    seed: u64,
) -> Result<ScorerParams> {
    use rand::seq::SliceRandom;

    let mut out = params.clone();
    if epochs == 0 || lr == 0.0 {
        return Ok(out);
    }
    let batch_size = batch_size.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut grad = vec![0.0; out.num_params()];
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                let y = f64::from(ds.label(i));
                out.backprop(ds.row(i), &mut grad, |f| f - y)?;
            }
            let scale = lr / chunk.len() as f64;
            for (w, g) in out.weights.iter_mut().zip(&grad) {
                *w -= scale * g;
            }
        }
    }
    Ok(out)
}
