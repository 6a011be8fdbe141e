//! Curricula: difficulty and training progress to per-sample weights, or to
//! the subset of the training pool that is currently available.
//!
//! Progress `t` runs from 0 at the first step to 1 at the end of training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 10.0;
pub const DEFAULT_GAMMA: f64 = 8.0;
pub const DEFAULT_COMPETENCE_C0: f64 = 0.1;
pub const DEFAULT_WARMUP: f64 = 0.2;
/// Share dropped from each end of the difficulty ranking by data selection.
pub const DATA_SELECTION_TAIL: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurriculumKind {
    None,
    Sigmoid,
    NegSigmoid,
    Gaussian,
    Sampling,
    Competence,
    DataSelection,
}

impl CurriculumKind {
    pub const ALL: [CurriculumKind; 7] = [
        CurriculumKind::None,
        CurriculumKind::Sigmoid,
        CurriculumKind::NegSigmoid,
        CurriculumKind::Gaussian,
        CurriculumKind::Sampling,
        CurriculumKind::Competence,
        CurriculumKind::DataSelection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CurriculumKind::None => "none",
            CurriculumKind::Sigmoid => "sigmoid",
            CurriculumKind::NegSigmoid => "neg_sigmoid",
            CurriculumKind::Gaussian => "gaussian",
            CurriculumKind::Sampling => "sampling",
            CurriculumKind::Competence => "competence",
            CurriculumKind::DataSelection => "data_selection",
        }
    }

    /// Acts through loss weights rather than through the sample pool.
    pub fn is_weighting(self) -> bool {
        matches!(
            self,
            CurriculumKind::Sigmoid | CurriculumKind::NegSigmoid | CurriculumKind::Gaussian
        )
    }

    pub fn is_subset(self) -> bool {
        matches!(
            self,
            CurriculumKind::Sampling | CurriculumKind::Competence | CurriculumKind::DataSelection
        )
    }
}

impl fmt::Display for CurriculumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CurriculumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        CurriculumKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::Argument(format!("unknown curriculum {s:?}")))
    }
}

/// Growth law of the competence baseline. Both are stand-ins; neither is a
/// reconstruction of a published competence function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompetenceShape {
    #[default]
    Linear,
    Sqrt,
}

impl FromStr for CompetenceShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CompetenceShape::Linear),
            "sqrt" => Ok(CompetenceShape::Sqrt),
            other => Err(Error::Argument(format!("unknown competence shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    pub kind: CurriculumKind,
    pub beta: f64,
    pub gamma: f64,
    pub competence_c0: f64,
    pub competence_shape: CompetenceShape,
    pub warmup_fraction: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            kind: CurriculumKind::None,
            beta: DEFAULT_BETA,
            gamma: DEFAULT_GAMMA,
            competence_c0: DEFAULT_COMPETENCE_C0,
            competence_shape: CompetenceShape::Linear,
            warmup_fraction: DEFAULT_WARMUP,
        }
    }
}

impl CurriculumConfig {
    pub fn of_kind(kind: CurriculumKind) -> Self {
        CurriculumConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return bad(format!("beta must be a finite value >= 1, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be a finite value > 0, got {}", self.gamma));
        }
        if !(self.competence_c0 > 0.0 && self.competence_c0 <= 1.0) {
            return bad(format!("competence_c0 must lie in (0, 1], got {}", self.competence_c0));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction must lie in [0, 1), got {}", self.warmup_fraction));
        }
        Ok(())
    }

    /// Weight of a sample with difficulty `s` at progress `t`; 1 for
    /// non-weighting kinds.
    pub fn weight(&self, s: f64, t: f64) -> f64 {
        match self.kind {
            CurriculumKind::Sigmoid => weight_sigmoid(s, t, self.beta),
            CurriculumKind::NegSigmoid => weight_neg_sigmoid(s, t, self.beta),
            CurriculumKind::Gaussian => weight_gaussian(s, t, self.gamma),
            _ => 1.0,
        }
    }

    /// Positions available for sampling at progress `t`; `None` for kinds
    /// that keep the full pool.
    pub fn subset(&self, difficulty: &[f64], ids: &[String], t: f64) -> Option<Vec<usize>> {
        match self.kind {
            CurriculumKind::Sampling => Some(subset_sampling(difficulty, ids, t)),
            CurriculumKind::Competence => Some(subset_competence(difficulty, ids, t, self)),
            CurriculumKind::DataSelection => Some(subset_data_selection(difficulty, ids, t, self)),
            _ => None,
        }
    }
}

/// Rises with difficulty; the curve shifts left as training progresses.
pub fn weight_sigmoid(s: f64, t: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (-s - t * beta).exp())
}

/// Falls with difficulty: easy samples first, harder ones admitted over time.
pub fn weight_neg_sigmoid(s: f64, t: f64, beta: f64) -> f64 {
    1.0 / (1.0 + (s - t * beta).exp())
}

/// Peaks at medium difficulty; the variance starts at 1 and grows with `t`.
pub fn weight_gaussian(s: f64, t: f64, gamma: f64) -> f64 {
    (-s * s / (2.0 * (1.0 + t * gamma))).exp()
}

/// `sum(w * loss) / sum(w)`.
pub fn weighted_mean_loss(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() || losses.is_empty() {
        return Err(Error::Argument(format!(
            "weighted_mean_loss: {} losses, {} weights",
            losses.len(),
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("all sample weights are zero".into()));
    }
    if weights.iter().all(|&w| w == weights[0]) {
        // equal weights cancel; skip them so the plain mean comes out bit-exact
        return Ok(losses.iter().sum::<f64>() / losses.len() as f64);
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| w * l).sum::<f64>() / total)
}

/// Positions sorted easiest first; equal difficulty falls back to id order.
pub fn rank_by_difficulty(difficulty: &[f64], ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..difficulty.len()).collect();
    order.sort_by(|&a, &b| {
        difficulty[a]
            .total_cmp(&difficulty[b])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order
}

fn easiest(difficulty: &[f64], ids: &[String], count: usize) -> Vec<usize> {
    let mut keep = rank_by_difficulty(difficulty, ids);
    keep.truncate(count.clamp(1, difficulty.len().max(1)).min(difficulty.len()));
    keep.sort_unstable();
    keep
}

/// The `ceil(t * n)` easiest samples (at least one).
pub fn subset_sampling(difficulty: &[f64], ids: &[String], t: f64) -> Vec<usize> {
    let n = difficulty.len();
    // guard against t * n landing a hair above an integer
    let count = (t.clamp(0.0, 1.0) * n as f64 - 1e-9).ceil().max(0.0) as usize;
    easiest(difficulty, ids, count)
}

pub fn competence(t: f64, cfg: &CurriculumConfig) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let c0 = cfg.competence_c0;
    match cfg.competence_shape {
        CompetenceShape::Linear => c0 + (1.0 - c0) * t,
        CompetenceShape::Sqrt => c0 + (1.0 - c0) * t.sqrt(),
    }
}

/// Samples whose rank-based empirical CDF value `r / n` is at most the
/// current competence (at least one sample).
pub fn subset_competence(difficulty: &[f64], ids: &[String], t: f64, cfg: &CurriculumConfig) -> Vec<usize> {
    let n = difficulty.len();
    let count = (competence(t, cfg) * n as f64 + 1e-9).floor() as usize;
    easiest(difficulty, ids, count)
}

/// All samples during warm-up; afterwards the middle band of the difficulty
/// ranking, dropping 30% from each end.
pub fn subset_data_selection(difficulty: &[f64], ids: &[String], t: f64, cfg: &CurriculumConfig) -> Vec<usize> {
    let n = difficulty.len();
    if t < cfg.warmup_fraction || n < 3 {
        return (0..n).collect();
    }
    let tail = (DATA_SELECTION_TAIL * n as f64 + 1e-9).floor() as usize;
    let ranked = rank_by_difficulty(difficulty, ids);
    let mut keep = ranked[tail..n - tail].to_vec();
    keep.sort_unstable();
    keep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i:02}")).collect()
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(weight_sigmoid(0.0, 0.0, 10.0), 0.5);
        assert!(close(weight_sigmoid(-2.0, 0.2, 10.0), 0.5));
        assert!(close(weight_sigmoid(3.0, 0.0, 10.0), 1.0 / (1.0 + (-3.0f64).exp())));
        assert!((weight_sigmoid(3.0, 0.0, 10.0) - 0.95257).abs() < 1e-5);
    }

    #[test]
    fn neg_sigmoid_examples() {
        assert_eq!(weight_neg_sigmoid(0.0, 0.0, 10.0), 0.5);
        assert!(close(weight_neg_sigmoid(2.0, 0.2, 10.0), 0.5));
        assert!((weight_neg_sigmoid(-3.0, 0.0, 10.0) - 0.95257).abs() < 1e-5);
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(weight_gaussian(0.0, 0.7, 8.0), 1.0);
        assert!(close(weight_gaussian(1.0, 0.0, 8.0), (-0.5f64).exp()));
        assert!(close(weight_gaussian(2.0, 1.0, 3.0), (-0.5f64).exp()));
        assert!(((-0.5f64).exp() - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn weighted_mean_examples() {
        assert_eq!(weighted_mean_loss(&[2.0, 4.0], &[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(weighted_mean_loss(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), 3.5);
        assert_eq!(weighted_mean_loss(&[1.7], &[0.3]).unwrap(), 1.7);
        assert!(matches!(weighted_mean_loss(&[1.0, 2.0], &[0.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(weighted_mean_loss(&[], &[]).is_err());
    }

    fn one_to_ten() -> Vec<f64> {
        (1..=10).map(f64::from).collect()
    }

    #[test]
    fn sampling_examples() {
        let d = one_to_ten();
        assert_eq!(subset_sampling(&d, &ids(10), 0.3), [0, 1, 2]);
        assert_eq!(subset_sampling(&d, &ids(10), 1.0), (0..10).collect::<Vec<_>>());
        // s03 and s01 tie at the cutoff; the lower id wins
        let d = [0.0, 1.0, 2.0, 1.0];
        assert_eq!(subset_sampling(&d, &ids(4), 0.5), [0, 1]);
    }

    #[test]
    fn competence_examples() {
        let cfg = CurriculumConfig {
            competence_c0: 0.1,
            ..CurriculumConfig::of_kind(CurriculumKind::Competence)
        };
        assert!(close(competence(0.5, &cfg), 0.55));
        assert_eq!(subset_competence(&one_to_ten(), &ids(10), 0.5, &cfg), [0, 1, 2, 3, 4]);
        assert_eq!(subset_competence(&one_to_ten(), &ids(10), 0.0, &cfg), [0]);
        let sqrt = CurriculumConfig {
            competence_shape: CompetenceShape::Sqrt,
            ..cfg
        };
        assert_eq!(subset_competence(&one_to_ten(), &ids(10), 1.0, &sqrt).len(), 10);
        assert_eq!(subset_competence(&one_to_ten(), &ids(10), 1.0, &cfg).len(), 10);
    }

    #[test]
    fn data_selection_examples() {
        let cfg = CurriculumConfig::of_kind(CurriculumKind::DataSelection);
        assert_eq!(subset_data_selection(&one_to_ten(), &ids(10), 0.5, &cfg), [3, 4, 5, 6]);
        assert_eq!(subset_data_selection(&one_to_ten(), &ids(10), 0.1, &cfg).len(), 10);
        assert_eq!(subset_data_selection(&[3.0, 1.0], &ids(2), 0.9, &cfg), [0, 1]);
    }

    #[test]
    fn config_validation() {
        assert!(CurriculumConfig::default().validate().is_ok());
        let bad_beta = CurriculumConfig { beta: 0.5, ..Default::default() };
        assert!(bad_beta.validate().is_err());
        let bad_gamma = CurriculumConfig { gamma: 0.0, ..Default::default() };
        assert!(bad_gamma.validate().is_err());
        let bad_warm = CurriculumConfig { warmup_fraction: 1.0, ..Default::default() };
        assert!(bad_warm.validate().is_err());
    }

    #[test]
    fn kind_parsing() {
        for k in CurriculumKind::ALL {
            assert_eq!(k.as_str().parse::<CurriculumKind>().unwrap(), k);
        }
        assert_eq!("neg-sigmoid".parse::<CurriculumKind>().unwrap(), CurriculumKind::NegSigmoid);
        assert!("superloss".parse::<CurriculumKind>().is_err());
    }
}
