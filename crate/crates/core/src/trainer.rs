//! The training loop.
//!
//! Each step draws a mini-batch, computes per-sample cross-entropy, turns the
//! batch's difficulty scores into curriculum weights, and takes a gradient
//! step on the weighted mean loss. At fixed points in every epoch the model
//! is scored on the validation split; those losses re-estimate the index
//! importance factors, and the training losses of every sample are recorded.
//!
//! Until the first importance estimate exists every weight is 1 and subset
//! curricula use the full pool.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{ColumnStats, Dataset, IndexMatrix, Split};
use crate::difficulty::{Aggregation, ArgmaxMode, DifficultyScore, LossTraces};
use crate::error::{Error, Result};
use crate::importance::{
    estimate_rho_correlation, estimate_rho_lasso, ImportanceMethod, ImportanceVector, DEFAULT_LAMBDA,
};
use crate::model::{weighted_loss_and_gradient, Featurizer, ModelParams, SparseVec, DEFAULT_HASH_DIM};
use crate::schedule::{CurriculumConfig, CurriculumKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub validation_steps_per_epoch: usize,
    pub importance_method: ImportanceMethod,
    pub lambda: f64,
    pub aggregation: Aggregation,
    pub argmax_mode: ArgmaxMode,
    pub curriculum: CurriculumConfig,
    pub concat_indices: bool,
    pub hash_dim: usize,
    /// Record loss traces for validation and test samples as well.
    pub trace_all_splits: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 16,
            learning_rate: 0.1,
            weight_decay: 0.01,
            seed: 0,
            validation_steps_per_epoch: 2,
            importance_method: ImportanceMethod::Optimization,
            lambda: DEFAULT_LAMBDA,
            aggregation: Aggregation::Max,
            argmax_mode: ArgmaxMode::Signed,
            curriculum: CurriculumConfig::default(),
            concat_indices: false,
            hash_dim: DEFAULT_HASH_DIM,
            trace_all_splits: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.to_owned()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.validation_steps_per_epoch == 0 {
            return bad("validation_steps_per_epoch must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive finite number");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be non-negative");
        }
        if self.hash_dim == 0 {
            return bad("hash_dim must be positive");
        }
        self.curriculum.validate()
    }

    pub fn featurizer(&self) -> Featurizer {
        Featurizer {
            hash_dim: self.hash_dim,
            concat_indices: self.concat_indices,
        }
    }

    /// Hex SHA-256 of the JSON form; stamped into checkpoints.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub step: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub step: usize,
    pub val_accuracy: f64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub config: TrainConfig,
    pub index_names: Vec<String>,
    pub index_stats: Vec<ColumnStats>,
    pub rho_trajectory: Vec<ImportanceVector>,
    pub loss_traces: LossTraces,
    pub metric_history: Vec<MetricPoint>,
    /// Highest validation accuracy seen; the earlier step wins ties.
    pub best: Option<Checkpoint>,
    pub final_params: ModelParams,
    pub total_steps: usize,
    pub skipped_updates: usize,
}

impl TrainRecord {
    /// Best checkpoint parameters, or the final ones when training never
    /// reached a validation point.
    pub fn best_params(&self) -> &ModelParams {
        self.best.as_ref().map_or(&self.final_params, |c| &c.params)
    }

    pub fn final_rho(&self) -> Option<&ImportanceVector> {
        self.rho_trajectory.last()
    }

    /// Writes `step,index_name,rho` rows in step order.
    pub fn write_rho_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "index_name", "rho"])?;
        for snap in &self.rho_trajectory {
            for (name, r) in self.index_names.iter().zip(&snap.rho) {
                w.write_record([&snap.step.to_string(), name.as_str(), &r.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<rho trajectory>", e))?;
        Ok(())
    }

    pub fn write_metrics_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step", "epoch", "train_loss", "val_loss", "val_accuracy"])?;
        for m in &self.metric_history {
            w.write_record([
                m.step.to_string(),
                m.epoch.to_string(),
                m.train_loss.to_string(),
                m.val_loss.to_string(),
                m.val_accuracy.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<metrics>", e))?;
        Ok(())
    }
}

/// Per-sample cross-entropy and accuracy over a split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitScore {
    pub losses: Vec<f64>,
    pub predictions: Vec<usize>,
    pub accuracy: f64,
}

impl SplitScore {
    pub fn mean_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len().max(1) as f64
    }
}

pub fn validate(params: &ModelParams, features: &[&SparseVec], labels: &[usize]) -> Result<SplitScore> {
    if features.is_empty() {
        return Err(Error::Argument("cannot score an empty split".into()));
    }
    let losses = features.iter().zip(labels).map(|(x, &y)| params.loss(x, y)).collect();
    let predictions: Vec<usize> = features.iter().map(|x| params.predict(x)).collect();
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(SplitScore {
        losses,
        predictions,
        accuracy: correct as f64 / labels.len() as f64,
    })
}

/// Featurizes every sample in dataset order. `z` must be row-aligned with
/// the dataset.
pub fn featurize_dataset(dataset: &Dataset, z: &IndexMatrix, featurizer: &Featurizer) -> Result<Vec<SparseVec>> {
    check_alignment(dataset, z)?;
    dataset
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| featurizer.featurize(s, Some(z.row(i))))
        .collect()
}

fn check_alignment(dataset: &Dataset, z: &IndexMatrix) -> Result<()> {
    let aligned = z.n_rows() == dataset.len()
        && dataset.samples().iter().zip(z.sample_ids()).all(|(s, id)| &s.id == id);
    if !aligned {
        return Err(Error::Alignment("index matrix rows do not follow dataset order".into()));
    }
    Ok(())
}

/// Scores one split of the dataset with the given parameters.
pub fn score_split(
    params: &ModelParams,
    dataset: &Dataset,
    features: &[SparseVec],
    split: Split,
) -> Result<SplitScore> {
    let pos = dataset.positions_in(split);
    let xs: Vec<&SparseVec> = pos.iter().map(|&p| &features[p]).collect();
    let ys: Vec<usize> = pos.iter().map(|&p| dataset.samples()[p].label).collect();
    validate(params, &xs, &ys)
}

/// Step boundaries (1-based, within an epoch) after which validation runs.
pub fn validation_points(steps_per_epoch: usize, per_epoch: usize) -> Vec<usize> {
    (1..=per_epoch)
        .map(|v| (v * steps_per_epoch).div_ceil(per_epoch))
        .collect()
}

pub fn steps_per_epoch(n_train: usize, batch_size: usize) -> usize {
    n_train.div_ceil(batch_size)
}

/// Fresh generator for a run; parameter init and every shuffle draw from it.
pub fn run_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Trains with linguistic difficulty recomputed from each importance
/// estimate. `z` must be standardized and row-aligned with `dataset`.
pub fn train(dataset: &Dataset, z: &IndexMatrix, cfg: &TrainConfig) -> Result<TrainRecord> {
    Trainer::new(dataset, z, cfg, None)?.run()
}

/// Trains with a fixed difficulty per training sample (for example the mean
/// loss of an earlier run). Importance factors are still estimated and
/// recorded, but do not drive the curriculum.
pub fn train_with_difficulty(
    dataset: &Dataset,
    z: &IndexMatrix,
    cfg: &TrainConfig,
    difficulty: &DifficultyScore,
) -> Result<TrainRecord> {
    Trainer::new(dataset, z, cfg, Some(difficulty.values.clone()))?.run()
}

struct Trainer<'a> {
    dataset: &'a Dataset,
    cfg: &'a TrainConfig,
    features: Vec<SparseVec>,
    train_pos: Vec<usize>,
    val_pos: Vec<usize>,
    trace_pos: Vec<usize>,
    train_ids: Vec<String>,
    z_train: IndexMatrix,
    z_val: IndexMatrix,
    fixed_difficulty: Option<Vec<f64>>,
}

impl<'a> Trainer<'a> {
    fn new(
        dataset: &'a Dataset,
        z: &IndexMatrix,
        cfg: &'a TrainConfig,
        fixed_difficulty: Option<Vec<f64>>,
    ) -> Result<Self> {
        cfg.validate()?;
        check_alignment(dataset, z)?;
        if !z.is_standardized() {
            return Err(Error::Argument(
                "index matrix must be standardized (fit on the training split) before training".into(),
            ));
        }
        if dataset.num_classes() < 2 {
            return Err(Error::Argument("training needs at least two classes".into()));
        }
        let train_pos = dataset.positions_in(Split::Train);
        let val_pos = dataset.positions_in(Split::Validation);
        if train_pos.is_empty() || val_pos.is_empty() {
            return Err(Error::Argument("train and validation splits must be non-empty".into()));
        }
        if let Some(d) = &fixed_difficulty {
            if d.len() != train_pos.len() {
                return Err(Error::Shape(format!(
                    "{} difficulty values for {} training samples",
                    d.len(),
                    train_pos.len()
                )));
            }
        }
        let spe = steps_per_epoch(train_pos.len(), cfg.batch_size);
        if cfg.epochs > 0 && spe < cfg.validation_steps_per_epoch {
            return Err(Error::Argument(format!(
                "{spe} steps per epoch cannot hold {} validation points; lower batch_size",
                cfg.validation_steps_per_epoch
            )));
        }
        let trace_pos = if cfg.trace_all_splits {
            (0..dataset.len()).collect()
        } else {
            train_pos.clone()
        };
        let samples = dataset.samples();
        Ok(Trainer {
            dataset,
            cfg,
            features: featurize_dataset(dataset, z, &cfg.featurizer())?,
            train_ids: train_pos.iter().map(|&p| samples[p].id.clone()).collect(),
            z_train: z.select_rows(&train_pos),
            z_val: z.select_rows(&val_pos),
            train_pos,
            val_pos,
            trace_pos,
            fixed_difficulty,
        })
    }

    fn label(&self, pos: usize) -> usize {
        self.dataset.samples()[pos].label
    }

    fn losses_at(&self, params: &ModelParams, positions: &[usize]) -> Vec<f64> {
        positions
            .iter()
            .map(|&p| params.loss(&self.features[p], self.label(p)))
            .collect()
    }

    fn estimate(&self, val_losses: &[f64], step: usize) -> Result<ImportanceVector> {
        match self.cfg.importance_method {
            ImportanceMethod::Correlation => estimate_rho_correlation(&self.z_val, val_losses, step),
            ImportanceMethod::Optimization => {
                // the fit has no intercept; validation columns are only
                // approximately zero-mean, so the loss level would leak in
                let mean = val_losses.iter().sum::<f64>() / val_losses.len() as f64;
                let centered: Vec<f64> = val_losses.iter().map(|l| l - mean).collect();
                estimate_rho_lasso(&self.z_val, &centered, self.cfg.lambda, step)
            }
        }
    }

    fn needs_difficulty(&self) -> bool {
        let kind = self.cfg.curriculum.kind;
        kind.is_weighting() || kind.is_subset()
    }

    fn run(self) -> Result<TrainRecord> {
        let cfg = self.cfg;
        let n_train = self.train_pos.len();
        let spe = steps_per_epoch(n_train, cfg.batch_size);
        let total_steps = cfg.epochs * spe;
        let val_points = validation_points(spe, cfg.validation_steps_per_epoch);
        let dim = cfg.featurizer().dim(self.z_train.n_cols());

        let mut rng = run_rng(cfg.seed);
        let mut params = ModelParams::init(self.dataset.num_classes(), dim, &mut rng);
        let mut difficulty: Option<Vec<f64>> = self.fixed_difficulty.clone();
        let mut trajectory = Vec::new();
        let trace_ids = self.trace_pos.iter().map(|&p| self.dataset.samples()[p].id.clone()).collect();
        let mut traces = LossTraces::new(trace_ids);
        let mut history = Vec::new();
        let mut best: Option<Checkpoint> = None;
        let mut skipped = 0;
        let mut step = 0;

        for epoch in 0..cfg.epochs {
            // subset curricula fix their pool at the epoch's midpoint progress
            let t_pool = (epoch as f64 + 0.5) / cfg.epochs as f64;
            let mut pool: Vec<usize> = match &difficulty {
                Some(d) => cfg.curriculum.subset(d, &self.train_ids, t_pool),
                None => None,
            }
            .unwrap_or_else(|| (0..n_train).collect());
            pool.shuffle(&mut rng);
            let mut cursor = 0;

            for s in 0..spe {
                if cursor >= pool.len() {
                    pool.shuffle(&mut rng);
                    cursor = 0;
                }
                let end = (cursor + cfg.batch_size).min(pool.len());
                let batch = &pool[cursor..end];
                cursor = end;

                let t = step as f64 / total_steps as f64;
                let weights: Vec<f64> = match (&difficulty, cfg.curriculum.kind.is_weighting()) {
                    (Some(d), true) => batch.iter().map(|&i| cfg.curriculum.weight(d[i], t)).collect(),
                    _ => vec![1.0; batch.len()],
                };
                let examples: Vec<(&SparseVec, usize)> = batch
                    .iter()
                    .map(|&i| {
                        let p = self.train_pos[i];
                        (&self.features[p], self.label(p))
                    })
                    .collect();
                match weighted_loss_and_gradient(&params, &examples, &weights) {
                    Some((_, grad)) => params.apply(&grad, cfg.learning_rate, cfg.weight_decay),
                    None => {
                        skipped += 1;
                        log::warn!("step {step}: every curriculum weight in the batch is zero; update skipped");
                    }
                }
                step += 1;

                if !val_points.contains(&(s + 1)) {
                    continue;
                }
                let val_xs: Vec<&SparseVec> = self.val_pos.iter().map(|&p| &self.features[p]).collect();
                let val_ys: Vec<usize> = self.val_pos.iter().map(|&p| self.label(p)).collect();
                let val = validate(&params, &val_xs, &val_ys)?;
                let rho = self.estimate(&val.losses, step)?;
                if self.fixed_difficulty.is_none() && self.needs_difficulty() {
                    let score = cfg.aggregation.apply(&self.z_train, &rho, cfg.argmax_mode)?;
                    difficulty = Some(score.values);
                }
                trajectory.push(rho);

                let snapshot = self.losses_at(&params, &self.trace_pos);
                let train_loss = if cfg.trace_all_splits {
                    let train = self.losses_at(&params, &self.train_pos);
                    train.iter().sum::<f64>() / n_train as f64
                } else {
                    snapshot.iter().sum::<f64>() / n_train as f64
                };
                traces.push(step, snapshot);
                history.push(MetricPoint {
                    step,
                    epoch,
                    train_loss,
                    val_loss: val.mean_loss(),
                    val_accuracy: val.accuracy,
                });
                if best.as_ref().is_none_or(|b| val.accuracy > b.val_accuracy) {
                    best = Some(Checkpoint {
                        step,
                        val_accuracy: val.accuracy,
                        params: params.clone(),
                    });
                }
            }
        }
        if !params.is_finite() {
            return Err(Error::Degenerate("training diverged to non-finite parameters; lower learning_rate".into()));
        }

        Ok(TrainRecord {
            config: cfg.clone(),
            index_names: self.z_train.index_names().to_vec(),
            index_stats: self.z_train.stats().map(<[_]>::to_vec).unwrap_or_default(),
            rho_trajectory: trajectory,
            loss_traces: traces,
            metric_history: history,
            best,
            final_params: params,
            total_steps,
            skipped_updates: skipped,
        })
    }
}

/// On-disk form of a trained model, with everything evaluation needs to
/// rebuild features for new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub config: TrainConfig,
    pub index_names: Vec<String>,
    pub index_stats: Vec<ColumnStats>,
    pub step: usize,
    pub val_accuracy: Option<f64>,
    pub params: ModelParams,
}

pub const CHECKPOINT_FORMAT: &str = "curricula-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

impl CheckpointFile {
    pub fn from_record(record: &TrainRecord) -> Self {
        CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: record.config.hash(),
            config: record.config.clone(),
            index_names: record.index_names.clone(),
            index_stats: record.index_stats.clone(),
            step: record.best.as_ref().map_or(0, |b| b.step),
            val_accuracy: record.best.as_ref().map(|b| b.val_accuracy),
            params: record.best_params().clone(),
        }
    }

    pub fn write(&self, writer: impl std::io::Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read(reader: impl std::io::Read) -> Result<Self> {
        let ck: CheckpointFile = serde_json::from_reader(reader)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Unsupported(format!(
                "checkpoint format {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                ck.format, ck.version
            )));
        }
        if ck.config.hash() != ck.config_hash {
            return Err(Error::Unsupported("checkpoint config hash does not match its config".into()));
        }
        Ok(ck)
    }

    /// Whether the checkpoint came from an actual run of plain training.
    pub fn is_trained_baseline(&self) -> bool {
        self.config.curriculum.kind == CurriculumKind::None && self.step > 0
    }
}

/// Maps sample id to position for quick lookups.
pub fn id_positions(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{standardize_on_split, Sample};

    fn toy() -> (Dataset, IndexMatrix) {
        let mut samples = Vec::new();
        for i in 0..40 {
            let label = i % 2;
            let split = match i % 5 {
                3 => Split::Validation,
                4 => Split::Test,
                _ => Split::Train,
            };
            let word = if label == 0 { "apple" } else { "stone" };
            samples.push(Sample {
                id: format!("s{i:02}"),
                text: format!("{word} {word} filler{}", i % 7),
                text_pair: None,
                label,
                split,
            });
        }
        let d = Dataset::new(samples).unwrap();
        let rows: Vec<Vec<f64>> = (0..d.len()).map(|i| vec![(i % 9) as f64, (i * 7 % 5) as f64]).collect();
        let m = IndexMatrix::from_rows(d.ids(), vec!["a".into(), "b".into()], &rows).unwrap();
        let z = standardize_on_split(&m, &d, Split::Train).unwrap();
        (d, z)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 4,
            hash_dim: 64,
            ..Default::default()
        }
    }

    #[test]
    fn validation_points_are_evenly_spaced() {
        assert_eq!(validation_points(6, 2), [3, 6]);
        assert_eq!(validation_points(5, 2), [3, 5]);
        assert_eq!(validation_points(2, 2), [1, 2]);
    }

    #[test]
    fn zero_epochs_leaves_init() {
        let (d, z) = toy();
        let c = TrainConfig { epochs: 0, ..cfg() };
        let rec = train(&d, &z, &c).unwrap();
        assert!(rec.rho_trajectory.is_empty());
        assert!(rec.best.is_none());
        let dim = c.featurizer().dim(2);
        assert_eq!(rec.final_params, ModelParams::init(2, dim, &mut run_rng(c.seed)));
    }

    #[test]
    fn same_seed_same_record() {
        let (d, z) = toy();
        let c = TrainConfig {
            curriculum: CurriculumConfig::of_kind(CurriculumKind::Gaussian),
            ..cfg()
        };
        let a = train(&d, &z, &c).unwrap();
        let b = train(&d, &z, &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trajectory_and_trace_cadence() {
        let (d, z) = toy();
        let rec = train(&d, &z, &cfg()).unwrap();
        assert_eq!(rec.rho_trajectory.len(), 3 * 2);
        assert!(rec.rho_trajectory.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(rec.loss_traces.steps.len(), 6);
        assert_eq!(rec.loss_traces.sample_ids.len(), d.split(Split::Train).count());
        assert!(rec.best.is_some());
    }

    #[test]
    fn learns_separable_toy() {
        let (d, z) = toy();
        let c = TrainConfig {
            epochs: 30,
            learning_rate: 1.0,
            weight_decay: 0.0,
            ..cfg()
        };
        let rec = train(&d, &z, &c).unwrap();
        let features = featurize_dataset(&d, &z, &c.featurizer()).unwrap();
        let score = score_split(&rec.final_params, &d, &features, Split::Test).unwrap();
        assert_eq!(score.accuracy, 1.0);
    }

    #[test]
    fn every_curriculum_kind_runs() {
        let (d, z) = toy();
        for kind in CurriculumKind::ALL {
            let c = TrainConfig {
                curriculum: CurriculumConfig::of_kind(kind),
                ..cfg()
            };
            let rec = train(&d, &z, &c).unwrap();
            assert_eq!(rec.rho_trajectory.len(), 6, "{kind}");
        }
    }

    #[test]
    fn rejects_unstandardized_or_misaligned_matrix() {
        let (d, z) = toy();
        let raw = IndexMatrix::new(d.ids(), vec!["a".into()], vec![1.0; d.len()]).unwrap();
        assert!(train(&d, &raw, &cfg()).is_err());
        let mut rows: Vec<usize> = (0..d.len()).collect();
        rows.swap(0, 1);
        assert!(matches!(train(&d, &z.select_rows(&rows), &cfg()), Err(Error::Alignment(_))));
    }

    #[test]
    fn rejects_too_coarse_batches() {
        let (d, z) = toy();
        let c = TrainConfig { batch_size: 1000, ..cfg() };
        assert!(train(&d, &z, &c).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let (d, z) = toy();
        let rec = train(&d, &z, &cfg()).unwrap();
        let ck = CheckpointFile::from_record(&rec);
        let mut buf = Vec::new();
        ck.write(&mut buf).unwrap();
        let back = CheckpointFile::read(buf.as_slice()).unwrap();
        assert_eq!(back, ck);
        assert!(back.is_trained_baseline());
        let tampered = String::from_utf8(buf).unwrap().replace("\"epochs\": 3", "\"epochs\": 4");
        assert!(CheckpointFile::read(tampered.as_bytes()).is_err());
    }
}
