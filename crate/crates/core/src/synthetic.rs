//! Synthetic two-class text task with a known difficulty driver.
//!
//! Every sample gets `k` standard-normal index values. One of them (the
//! planted index) controls how many of the sample's tokens come from its
//! class vocabulary rather than a shared noise vocabulary: the higher the
//! value, the fewer informative tokens and the harder the sample. The other
//! indices are unrelated to the text.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{Dataset, IndexMatrix, Sample, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub n_indices: usize,
    pub planted: usize,
    pub tokens_per_sample: usize,
    /// Slope of the logistic map from planted value to signal fraction.
    pub steepness: f64,
    pub class_vocab: usize,
    pub noise_vocab: usize,
    /// Fraction of training samples whose label is flipped; the flipped ones
    /// are those with the most extreme planted values.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_train: 1400,
            n_validation: 300,
            n_test: 300,
            n_indices: 20,
            planted: 7,
            tokens_per_sample: 4,
            steepness: 1.5,
            class_vocab: 30,
            noise_vocab: 200,
            label_noise: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedTask {
    pub dataset: Dataset,
    /// Raw (unstandardized) index values in dataset order.
    pub indices: IndexMatrix,
    pub planted: usize,
    /// Ids of training samples whose label was flipped.
    pub flipped: Vec<String>,
}

/// Probability that a token carries class signal, given the planted value.
pub fn signal_fraction(planted_value: f64, steepness: f64) -> f64 {
    1.0 / (1.0 + (steepness * planted_value).exp())
}

pub fn planted_task(cfg: &PlantedConfig) -> Result<PlantedTask> {
    if cfg.planted >= cfg.n_indices {
        return Err(Error::Argument(format!(
            "planted index {} out of range for {} indices",
            cfg.planted, cfg.n_indices
        )));
    }
    if !(0.0..=1.0).contains(&cfg.label_noise) {
        return Err(Error::Argument(format!("label noise must lie in [0, 1], got {}", cfg.label_noise)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_train + cfg.n_validation + cfg.n_test;
    let mut samples = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let split = if i < cfg.n_train {
            Split::Train
        } else if i < cfg.n_train + cfg.n_validation {
            Split::Validation
        } else {
            Split::Test
        };
        let row: Vec<f64> = (0..cfg.n_indices).map(|_| rng.sample(StandardNormal)).collect();
        let label = rng.random_range(0..2usize);
        let q = signal_fraction(row[cfg.planted], cfg.steepness);
        let words: Vec<String> = (0..cfg.tokens_per_sample)
            .map(|_| {
                if rng.random::<f64>() < q {
                    format!("c{label}w{}", rng.random_range(0..cfg.class_vocab))
                } else {
                    format!("nw{}", rng.random_range(0..cfg.noise_vocab))
                }
            })
            .collect();
        samples.push(Sample {
            id: format!("p{i:05}"),
            text: words.join(" "),
            text_pair: None,
            label,
            split,
        });
        rows.push(row);
    }

    let mut train: Vec<usize> = (0..cfg.n_train).collect();
    train.sort_by(|&a, &b| {
        rows[b][cfg.planted]
            .abs()
            .total_cmp(&rows[a][cfg.planted].abs())
            .then(a.cmp(&b))
    });
    let n_flip = (cfg.label_noise * cfg.n_train as f64).round() as usize;
    let mut flipped = Vec::with_capacity(n_flip);
    for &i in &train[..n_flip] {
        samples[i].label = 1 - samples[i].label;
        flipped.push(samples[i].id.clone());
    }

    let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let names = (0..cfg.n_indices).map(|j| format!("index_{j:02}")).collect();
    Ok(PlantedTask {
        dataset: Dataset::new(samples)?,
        indices: IndexMatrix::from_rows(ids, names, &rows)?,
        planted: cfg.planted,
        flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let cfg = PlantedConfig {
            seed: 3,
            ..Default::default()
        };
        let a = planted_task(&cfg).unwrap();
        let b = planted_task(&cfg).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.dataset.len(), 2000);
        assert_eq!(a.indices.n_cols(), 20);
        assert_eq!(a.dataset.positions_in(Split::Train).len(), 1400);
        assert_eq!(a.dataset.positions_in(Split::Validation).len(), 300);
        assert!(a.flipped.is_empty());
    }

    #[test]
    fn easy_samples_carry_more_class_tokens() {
        let t = planted_task(&PlantedConfig::default()).unwrap();
        let signal = |s: &Sample| s.text.split(' ').filter(|w| w.starts_with('c')).count();
        let (mut easy, mut hard) = (0, 0);
        for (i, s) in t.dataset.samples().iter().enumerate() {
            match t.indices.get(i, 7) {
                v if v < -1.0 => easy += signal(s),
                v if v > 1.0 => hard += signal(s),
                _ => {}
            }
        }
        assert!(easy > 3 * hard);
    }

    #[test]
    fn noise_flips_extreme_training_labels() {
        let cfg = PlantedConfig {
            label_noise: 0.2,
            ..Default::default()
        };
        let t = planted_task(&cfg).unwrap();
        assert_eq!(t.flipped.len(), 280);
        let clean = planted_task(&PlantedConfig::default()).unwrap();
        let changed = t
            .dataset
            .samples()
            .iter()
            .zip(clean.dataset.samples())
            .filter(|(a, b)| a.label != b.label)
            .count();
        assert_eq!(changed, 280);
        assert!(t.flipped.iter().all(|id| t.dataset.samples()[t.dataset.position(id).unwrap()].split == Split::Train));
    }
}
