//! Hashed bag-of-tokens features and a multinomial logistic regression model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Sample;
use crate::error::{Error, Result};
use crate::lexical::tokenize;

pub const DEFAULT_HASH_DIM: usize = 2048;

/// Sparse feature vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec {
    pub idx: Vec<u32>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn from_dense(dense: &[f64]) -> Self {
        let mut v = SparseVec::default();
        for (i, &x) in dense.iter().enumerate() {
            if x != 0.0 {
                v.idx.push(i as u32);
                v.val.push(x);
            }
        }
        v
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&i, &x) in self.idx.iter().zip(&self.val) {
            out[i as usize] = x;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().map(|&i| i as usize).zip(self.val.iter().copied())
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Featurizer {
    pub hash_dim: usize,
    /// Append the sample's standardized index row after the hashed block.
    pub concat_indices: bool,
}

impl Featurizer {
    pub fn dim(&self, n_indices: usize) -> usize {
        self.hash_dim + if self.concat_indices { n_indices } else { 0 }
    }

    /// L2-normalized hashed token counts; the second text of a pair hashes
    /// into its own namespace.
    pub fn featurize(&self, sample: &Sample, index_row: Option<&[f64]>) -> Result<SparseVec> {
        let mut counts = vec![0.0f64; self.hash_dim];
        let texts = [(b"p:" as &[u8], Some(sample.text.as_str())), (b"h:", sample.text_pair.as_deref())];
        for (ns, text) in texts {
            let Some(text) = text else { continue };
            for tok in tokenize(text).tokens {
                let slot = fnv1a(&[ns, tok.as_bytes()]) % self.hash_dim as u64;
                counts[slot as usize] += 1.0;
            }
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            counts.iter_mut().for_each(|c| *c /= norm);
        }
        let mut v = SparseVec::from_dense(&counts);
        if self.concat_indices {
            let row = index_row.ok_or_else(|| Error::Coverage {
                id: sample.id.clone(),
                what: "index matrix (needed for concatenated features)".into(),
            })?;
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    v.idx.push((self.hash_dim + j) as u32);
                    v.val.push(x);
                }
            }
        }
        Ok(v)
    }
}

/// Class-by-feature weights plus per-class bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub classes: usize,
    pub features: usize,
    /// Row-major `classes x features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(classes: usize, features: usize) -> Self {
        ModelParams {
            classes,
            features,
            weights: vec![0.0; classes * features],
            bias: vec![0.0; classes],
        }
    }

    /// Small uniform weights in [-0.01, 0.01); bias zero.
    pub fn init(classes: usize, features: usize, rng: &mut impl Rng) -> Self {
        let mut p = ModelParams::zeros(classes, features);
        for w in &mut p.weights {
            *w = rng.random_range(-0.01..0.01);
        }
        p
    }

    pub fn logits(&self, x: &SparseVec) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let row = &self.weights[c * self.features..(c + 1) * self.features];
                self.bias[c] + x.iter().map(|(i, v)| row[i] * v).sum::<f64>()
            })
            .collect()
    }

    pub fn probabilities(&self, x: &SparseVec) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Cross-entropy of the true class.
    pub fn loss(&self, x: &SparseVec, label: usize) -> f64 {
        let z = self.logits(x);
        log_sum_exp(&z) - z[label]
    }

    pub fn predict(&self, x: &SparseVec) -> usize {
        let z = self.logits(x);
        crate::importance::argmax_by(&z, |v| v).unwrap_or(0)
    }

    pub fn zero_gradient(&self) -> Gradient {
        Gradient {
            weights: vec![0.0; self.weights.len()],
            bias: vec![0.0; self.classes],
        }
    }

    /// Adds `scale * d loss(x, label) / d params` to `grad`.
    pub fn accumulate_gradient(&self, x: &SparseVec, label: usize, scale: f64, grad: &mut Gradient) {
        let p = self.probabilities(x);
        for (c, pc) in p.iter().enumerate() {
            let delta = scale * (pc - if c == label { 1.0 } else { 0.0 });
            grad.bias[c] += delta;
            let row = &mut grad.weights[c * self.features..(c + 1) * self.features];
            for (i, v) in x.iter() {
                row[i] += delta * v;
            }
        }
    }

    /// Gradient step plus decoupled weight decay on the weights (not bias).
    pub fn apply(&mut self, grad: &Gradient, learning_rate: f64, weight_decay: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= learning_rate * g + learning_rate * weight_decay * *w;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= learning_rate * g;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Weighted mean cross-entropy `sum(w_i l_i) / sum(w_i)` and its gradient.
/// Returns `None` when the weights sum to zero.
pub fn weighted_loss_and_gradient(
    params: &ModelParams,
    batch: &[(&SparseVec, usize)],
    weights: &[f64],
) -> Option<(f64, Gradient)> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut grad = params.zero_gradient();
    let mut loss = 0.0;
    for (&(x, y), &w) in batch.iter().zip(weights) {
        let scale = w / total;
        loss += scale * params.loss(x, y);
        params.accumulate_gradient(x, y, scale, &mut grad);
    }
    Some((loss, grad))
}

pub fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|v| (v - lse).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;

    fn sample(text: &str) -> Sample {
        Sample {
            id: "x".into(),
            text: text.into(),
            text_pair: None,
            label: 0,
            split: Split::Train,
        }
    }

    #[test]
    fn feature_dimensions() {
        let f = Featurizer { hash_dim: 2048, concat_indices: false };
        assert_eq!(f.dim(16), 2048);
        let v = f.featurize(&sample("a b c"), None).unwrap();
        assert!(v.idx.iter().all(|&i| (i as usize) < 2048));

        let f = Featurizer { hash_dim: 2048, concat_indices: true };
        assert_eq!(f.dim(16), 2048 + 16);
        let row: Vec<f64> = (1..=16).map(f64::from).collect();
        let v = f.featurize(&sample("a b c"), Some(&row)).unwrap();
        assert_eq!(v.to_dense(f.dim(16))[2048 + 15], 16.0);
        assert!(f.featurize(&sample("a"), None).is_err());
    }

    #[test]
    fn identical_texts_identical_features() {
        let f = Featurizer { hash_dim: 64, concat_indices: false };
        let a = f.featurize(&sample("The cat sat."), None).unwrap();
        let b = f.featurize(&sample("the CAT sat"), None).unwrap();
        assert_eq!(a, b);
        let norm: f64 = a.val.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn confident_prediction_has_zero_loss() {
        let mut p = ModelParams::zeros(2, 1);
        p.bias = vec![1000.0, -1000.0];
        let x = SparseVec::default();
        assert_eq!(p.loss(&x, 0), 0.0);
        assert_eq!(p.predict(&x), 0);
    }

    #[test]
    fn zero_weight_batch_is_degenerate() {
        let p = ModelParams::zeros(2, 1);
        let x = SparseVec::from_dense(&[1.0]);
        assert!(weighted_loss_and_gradient(&p, &[(&x, 0)], &[0.0]).is_none());
    }
}
