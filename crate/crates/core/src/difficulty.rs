//! Per-sample difficulty scores.
//!
//! Linguistic difficulty aggregates standardized indices with importance
//! factors, either by taking the single most important index or by a
//! normalized weighted sum. Loss difficulty averages each sample's recorded
//! training losses.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::IndexMatrix;
use crate::error::{Error, Result};
use crate::importance::ImportanceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DifficultySource {
    LingMax,
    LingWeighted,
    Loss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyScore {
    pub values: Vec<f64>,
    pub source: DifficultySource,
}

/// How the max aggregation picks its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgmaxMode {
    /// Largest signed rho. A negatively correlated index is never chosen.
    #[default]
    Signed,
    /// Extension: largest |rho|, with the column sign-flipped when rho is
    /// negative so the score still rises with loss.
    Absolute,
}

impl std::str::FromStr for ArgmaxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed" => Ok(ArgmaxMode::Signed),
            "absolute" => Ok(ArgmaxMode::Absolute),
            other => Err(Error::Argument(format!("unknown argmax mode {other:?}"))),
        }
    }
}

/// How importance factors combine index columns into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Weighted,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Aggregation::Max),
            "weighted" | "average" => Ok(Aggregation::Weighted),
            other => Err(Error::Argument(format!("unknown aggregation {other:?}"))),
        }
    }
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Max => "max",
            Aggregation::Weighted => "weighted",
        }
    }

    pub fn apply(self, z: &IndexMatrix, rho: &ImportanceVector, mode: ArgmaxMode) -> Result<DifficultyScore> {
        match self {
            Aggregation::Max => aggregate_max_with(z, rho, mode),
            Aggregation::Weighted => aggregate_weighted(z, rho),
        }
    }
}

fn check_shape(z: &IndexMatrix, rho: &ImportanceVector) -> Result<()> {
    if rho.len() != z.n_cols() {
        return Err(Error::Shape(format!(
            "{} importance factors for {} index columns",
            rho.len(),
            z.n_cols()
        )));
    }
    Ok(())
}

/// Column chosen by the max aggregation, skipping zero-variance columns.
pub fn select_max_index(z: &IndexMatrix, rho: &ImportanceVector, mode: ArgmaxMode) -> Result<usize> {
    check_shape(z, rho)?;
    let flags = z.zero_variance_flags();
    let key = |r: f64| match mode {
        ArgmaxMode::Signed => r,
        ArgmaxMode::Absolute => r.abs(),
    };
    let mut best: Option<(usize, f64)> = None;
    for (j, &r) in rho.rho.iter().enumerate() {
        if flags[j] {
            continue;
        }
        if best.is_none_or(|(_, b)| key(r) > b) {
            best = Some((j, key(r)));
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| Error::Degenerate("every index column has zero variance".into()))
}

pub fn aggregate_max(z: &IndexMatrix, rho: &ImportanceVector) -> Result<DifficultyScore> {
    aggregate_max_with(z, rho, ArgmaxMode::Signed)
}

pub fn aggregate_max_with(z: &IndexMatrix, rho: &ImportanceVector, mode: ArgmaxMode) -> Result<DifficultyScore> {
    let j = select_max_index(z, rho, mode)?;
    let sign = if mode == ArgmaxMode::Absolute && rho.rho[j] < 0.0 {
        -1.0
    } else {
        1.0
    };
    Ok(DifficultyScore {
        values: (0..z.n_rows()).map(|i| sign * z.get(i, j)).collect(),
        source: DifficultySource::LingMax,
    })
}

/// `S_i = sum_j rho_j Z_ij / sqrt(sum_j rho_j^2)`; all zeros when rho is zero.
pub fn aggregate_weighted(z: &IndexMatrix, rho: &ImportanceVector) -> Result<DifficultyScore> {
    check_shape(z, rho)?;
    let norm = rho.rho.iter().map(|r| r * r).sum::<f64>().sqrt();
    let values = if norm == 0.0 {
        vec![0.0; z.n_rows()]
    } else {
        (0..z.n_rows())
            .map(|i| z.row(i).iter().zip(&rho.rho).map(|(v, r)| v * r).sum::<f64>() / norm)
            .collect()
    };
    Ok(DifficultyScore {
        values,
        source: DifficultySource::LingWeighted,
    })
}

/// Recorded per-sample training losses, one column per snapshot step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTraces {
    pub sample_ids: Vec<String>,
    pub steps: Vec<usize>,
    /// `losses[snapshot][sample]`.
    pub losses: Vec<Vec<f64>>,
}

impl LossTraces {
    pub fn new(sample_ids: Vec<String>) -> Self {
        LossTraces {
            sample_ids,
            steps: Vec::new(),
            losses: Vec::new(),
        }
    }

    pub fn push(&mut self, step: usize, losses: Vec<f64>) {
        debug_assert_eq!(losses.len(), self.sample_ids.len());
        self.steps.push(step);
        self.losses.push(losses);
    }

    /// All snapshots of one sample, keyed by id.
    pub fn by_sample(&self) -> HashMap<&str, Vec<f64>> {
        self.sample_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.losses.iter().map(|snap| snap[i]).collect()))
            .collect()
    }

    /// Writes `sample_id,step,loss` rows, grouped by step.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["sample_id", "step", "loss"])?;
        for (step, snap) in self.steps.iter().zip(&self.losses) {
            for (id, loss) in self.sample_ids.iter().zip(snap) {
                w.write_record([id.as_str(), &step.to_string(), &loss.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<loss traces>", e))?;
        Ok(())
    }
}

/// Reads `sample_id,step,loss` rows into per-sample snapshot lists.
pub fn read_loss_traces(reader: impl std::io::Read) -> Result<HashMap<String, Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: HashMap<String, Vec<(usize, f64)>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::Parse {
            path: "<loss traces>".into(),
            line,
            message: format!("bad {what}"),
        };
        if rec.len() != 3 {
            return Err(bad("record width"));
        }
        let step: usize = rec[1].trim().parse().map_err(|_| bad("step"))?;
        let loss: f64 = rec[2].trim().parse().map_err(|_| bad("loss"))?;
        out.entry(rec[0].to_owned()).or_default().push((step, loss));
    }
    Ok(out
        .into_iter()
        .map(|(id, mut snaps)| {
            snaps.sort_by_key(|s| s.0);
            (id, snaps.into_iter().map(|s| s.1).collect())
        })
        .collect())
}

/// Mean recorded loss of every sample in `sample_ids`, in that order.
pub fn loss_difficulty(traces: &HashMap<String, Vec<f64>>, sample_ids: &[String]) -> Result<DifficultyScore> {
    let values = sample_ids
        .iter()
        .map(|id| match traces.get(id) {
            Some(snaps) if !snaps.is_empty() => Ok(snaps.iter().sum::<f64>() / snaps.len() as f64),
            _ => Err(Error::Coverage {
                id: id.clone(),
                what: "loss traces".into(),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DifficultyScore {
        values,
        source: DifficultySource::Loss,
    })
}

/// Writes `sample_id,score` rows.
pub fn write_difficulty_csv(ids: &[String], score: &DifficultyScore, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sample_id", "score"])?;
    for (id, v) in ids.iter().zip(&score.values) {
        w.write_record([id.as_str(), &v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<difficulty>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::importance::ImportanceMethod;

    fn rho(v: &[f64]) -> ImportanceVector {
        ImportanceVector {
            rho: v.to_vec(),
            method: ImportanceMethod::Correlation,
            step: 0,
            lambda: None,
        }
    }

    fn one_row(v: &[f64]) -> IndexMatrix {
        IndexMatrix::from_rows(
            vec!["s".into()],
            (0..v.len()).map(|j| format!("c{j}")).collect(),
            &[v.to_vec()],
        )
        .unwrap()
    }

    #[test]
    fn max_selects_most_important() {
        let s = aggregate_max(&one_row(&[5., 7., 9.]), &rho(&[0.1, 0.9, -0.3])).unwrap();
        assert_eq!(s.values, [7.0]);
        let s = aggregate_max(&one_row(&[5., 7., 9.]), &rho(&[0.2, 0.2, 0.2])).unwrap();
        assert_eq!(s.values, [5.0]);
        let s = aggregate_max(&one_row(&[3.5]), &rho(&[-0.4])).unwrap();
        assert_eq!(s.values, [3.5]);
    }

    #[test]
    fn max_absolute_mode_flips_sign() {
        let s = aggregate_max_with(&one_row(&[5., 7.]), &rho(&[0.1, -0.9]), ArgmaxMode::Absolute).unwrap();
        assert_eq!(s.values, [-7.0]);
    }

    #[test]
    fn max_skips_zero_variance_columns() {
        let m = IndexMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["const".into(), "x".into()],
            &[vec![1.0, 1.0], vec![1.0, 3.0]],
        )
        .unwrap();
        let z = crate::corpus::standardize(&m, &["a".to_string(), "b".to_string()].into()).unwrap();
        let s = aggregate_max(&z, &rho(&[0.9, 0.1])).unwrap();
        assert_eq!(s.values, [-1.0, 1.0]);

        let c = IndexMatrix::from_rows(vec!["a".into(), "b".into()], vec!["c".into()], &[vec![2.0], vec![2.0]]).unwrap();
        let zc = crate::corpus::standardize(&c, &["a".to_string(), "b".to_string()].into()).unwrap();
        assert!(matches!(aggregate_max(&zc, &rho(&[0.5])), Err(Error::Degenerate(_))));
    }

    #[test]
    fn weighted_examples() {
        let s = aggregate_weighted(&one_row(&[1.0, 1.0]), &rho(&[3.0, 4.0])).unwrap();
        assert!((s.values[0] - 1.4).abs() < 1e-15);
        let s = aggregate_weighted(&one_row(&[-2.5]), &rho(&[0.3])).unwrap();
        assert_eq!(s.values, [-2.5]);
        let s = aggregate_weighted(&one_row(&[1.0, 2.0]), &rho(&[0.0, 0.0])).unwrap();
        assert_eq!(s.values, [0.0]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(aggregate_weighted(&one_row(&[1.0]), &rho(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn loss_difficulty_means() {
        let traces: HashMap<String, Vec<f64>> =
            [("a".to_string(), vec![2.0, 4.0]), ("b".to_string(), vec![1.5])].into();
        let s = loss_difficulty(&traces, &["a".into(), "b".into()]).unwrap();
        assert_eq!(s.values, [3.0, 1.5]);
        assert!(matches!(
            loss_difficulty(&traces, &["c".into()]),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn loss_traces_csv_round_trip() {
        let mut t = LossTraces::new(vec!["a".into(), "b".into()]);
        t.push(5, vec![0.5, 1.0]);
        t.push(10, vec![0.25, 2.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = read_loss_traces(buf.as_slice()).unwrap();
        assert_eq!(back["a"], [0.5, 0.25]);
        assert_eq!(back["b"], [1.0, 2.0]);
    }
}
