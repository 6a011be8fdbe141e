//! Index-set reduction.
//!
//! Two routes: rank indices by how steeply a trained baseline's accuracy
//! changes across bins of the index (keep the steepest), or cluster
//! mutually correlated indices and keep one representative per cluster.

use std::io::Write;

use crate::corpus::{Dataset, IndexMatrix, Split};
use crate::error::{Error, Result};
use crate::evaluation::{binned_balanced_accuracy, DEFAULT_MIN_COUNT};
use crate::importance::pearson;
use crate::model::{Featurizer, ModelParams};
use crate::schedule::CurriculumKind;
use crate::trainer::{featurize_dataset, score_split, CheckpointFile, TrainRecord};

pub const DEFAULT_KEEP_FRACTION: f64 = 0.30;
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.3;

/// Pairwise Pearson correlations between columns; unit diagonal.
pub fn correlation_matrix(z: &IndexMatrix) -> Result<Vec<Vec<f64>>> {
    let k = z.n_cols();
    if k == 0 {
        return Err(Error::Argument("correlation matrix of zero columns".into()));
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|j| z.column(j)).collect();
    let mut r = vec![vec![1.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let v = pearson(&cols[a], &cols[b])?;
            r[a][b] = v;
            r[b][a] = v;
        }
    }
    Ok(r)
}

/// `1 - |r|`, so strongly anti-correlated indices count as near.
pub fn correlation_distance(r: &[Vec<f64>]) -> Vec<Vec<f64>> {
    r.iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(b, v)| if a == b { 0.0 } else { 1.0 - v.abs() })
                .collect()
        })
        .collect()
}

fn check_distance(d: &[Vec<f64>]) -> Result<()> {
    let k = d.len();
    for (a, row) in d.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Argument("distance matrix is not square".into()));
        }
        if row[a] != 0.0 {
            return Err(Error::Argument(format!("distance diagonal entry {a} is not zero")));
        }
        for (b, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Argument(format!("distance ({a}, {b}) = {v} is not a finite non-negative value")));
            }
            if (v - d[b][a]).abs() > 1e-12 {
                return Err(Error::Argument(format!("distance matrix is not symmetric at ({a}, {b})")));
            }
        }
    }
    Ok(())
}

/// Flat complete-linkage clustering: keep merging the closest pair of
/// clusters (cluster distance = largest member-pair distance) while that
/// distance is at most `threshold`. Equal distances merge the pair with the
/// lowest member indices first.
///
/// Returns a cluster label per item; labels are numbered in order of each
/// cluster's lowest member.
pub fn complete_linkage_clusters(distance: &[Vec<f64>], threshold: f64) -> Result<Vec<usize>> {
    check_distance(distance)?;
    let k = distance.len();
    // slot i holds the cluster whose lowest member is i
    let mut d: Vec<Vec<f64>> = distance.to_vec();
    let mut active = vec![true; k];
    let mut owner: Vec<usize> = (0..k).collect();

    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            if !active[a] {
                continue;
            }
            for b in a + 1..k {
                if active[b] && best.is_none_or(|(_, _, v)| d[a][b] < v) {
                    best = Some((a, b, d[a][b]));
                }
            }
        }
        let Some((a, b, height)) = best else { break };
        if height > threshold {
            break;
        }
        for c in 0..k {
            if active[c] && c != a && c != b {
                let merged = d[a][c].max(d[b][c]);
                d[a][c] = merged;
                d[c][a] = merged;
            }
        }
        active[b] = false;
        for o in owner.iter_mut() {
            if *o == b {
                *o = a;
            }
        }
    }

    let mut label_of_slot = vec![usize::MAX; k];
    let mut next = 0;
    Ok(owner
        .iter()
        .map(|&slot| {
            if label_of_slot[slot] == usize::MAX {
                label_of_slot[slot] = next;
                next += 1;
            }
            label_of_slot[slot]
        })
        .collect())
}

/// Members of each cluster, in label order.
pub fn cluster_members(labels: &[usize]) -> Vec<Vec<usize>> {
    let n_clusters = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut members = vec![Vec::new(); n_clusters];
    for (i, &l) in labels.iter().enumerate() {
        members[l].push(i);
    }
    members
}

/// One index per cluster: the highest `rank_hint` when given, otherwise the
/// member with the highest mean |r| to the rest of its cluster. Ties go to
/// the lowest position.
pub fn select_representatives(
    labels: &[usize],
    corr: &[Vec<f64>],
    names: &[String],
    rank_hint: Option<&[f64]>,
) -> Result<Vec<String>> {
    if labels.len() != names.len() || corr.len() != names.len() {
        return Err(Error::Shape("labels, correlations and names disagree in length".into()));
    }
    if rank_hint.is_some_and(|h| h.len() != names.len()) {
        return Err(Error::Shape("rank hint length differs from index count".into()));
    }
    let reps = cluster_members(labels)
        .into_iter()
        .map(|members| {
            let score = |i: usize| match rank_hint {
                Some(h) => h[i],
                None if members.len() == 1 => 0.0,
                None => {
                    let others = members.iter().filter(|&&j| j != i);
                    others.map(|&j| corr[i][j].abs()).sum::<f64>() / (members.len() - 1) as f64
                }
            };
            let mut best = members[0];
            for &i in &members[1..] {
                if score(i) > score(best) {
                    best = i;
                }
            }
            names[best].clone()
        })
        .collect();
    Ok(reps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFilter {
    pub labels: Vec<usize>,
    pub representatives: Vec<String>,
}

/// Correlation clustering of the columns of `z` and representative choice.
pub fn cluster_filter(z: &IndexMatrix, threshold: f64, rank_hint: Option<&[f64]>) -> Result<ClusterFilter> {
    let corr = correlation_matrix(z)?;
    let labels = complete_linkage_clusters(&correlation_distance(&corr), threshold)?;
    let representatives = select_representatives(&labels, &corr, z.index_names(), rank_hint)?;
    Ok(ClusterFilter {
        labels,
        representatives,
    })
}

impl ClusterFilter {
    /// `index,cluster` rows.
    pub fn write_csv(&self, names: &[String], writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "cluster"])?;
        for (n, l) in names.iter().zip(&self.labels) {
            w.write_record([n.as_str(), &l.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<clusters>", e))?;
        Ok(())
    }
}

/// Number of indices kept out of `k` for a keep fraction: the rounded-up
/// share, at least one. The slack keeps 0.3 * 10 at 3 rather than 4.
pub fn keep_count(k: usize, keep_fraction: f64) -> usize {
    ((keep_fraction * k as f64 - 1e-9).ceil() as usize).clamp(1.min(k), k)
}

/// Accuracy-trend slope of every column, sorted by |slope| descending
/// (ties by column position). Columns that collapse to one bin score 0.
pub fn rank_by_trend(
    z: &IndexMatrix,
    predictions: &[usize],
    labels: &[usize],
    m: usize,
    min_count: usize,
) -> Result<Vec<(String, f64)>> {
    let mut ranked = (0..z.n_cols())
        .map(|j| {
            let report = binned_balanced_accuracy(predictions, labels, &z.column(j), m, min_count)?;
            Ok((j, report.trend_slope.unwrap_or(0.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .map(|(j, s)| (z.index_names()[j].clone(), s))
        .collect())
}

/// The pieces of a trained model that the trend filter needs.
#[derive(Debug, Clone, Copy)]
pub struct Baseline<'a> {
    pub params: &'a ModelParams,
    pub featurizer: Featurizer,
    pub curriculum: CurriculumKind,
    pub trained: bool,
}

impl<'a> From<&'a TrainRecord> for Baseline<'a> {
    fn from(r: &'a TrainRecord) -> Self {
        Baseline {
            params: r.best_params(),
            featurizer: r.config.featurizer(),
            curriculum: r.config.curriculum.kind,
            trained: r.best.is_some(),
        }
    }
}

impl<'a> From<&'a CheckpointFile> for Baseline<'a> {
    fn from(c: &'a CheckpointFile) -> Self {
        Baseline {
            params: &c.params,
            featurizer: c.config.featurizer(),
            curriculum: c.config.curriculum.kind,
            trained: c.step > 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendFilter {
    pub kept: Vec<String>,
    /// Every index with its slope, steepest first.
    pub ranking: Vec<(String, f64)>,
}

impl TrendFilter {
    /// `index,slope` rows in rank order.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "slope"])?;
        for (n, s) in &self.ranking {
            w.write_record([n.as_str(), &s.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<trend ranking>", e))?;
        Ok(())
    }
}

/// Scores the validation split with a plain-trained baseline, ranks every
/// index by accuracy-trend steepness and keeps the top `keep_fraction`.
pub fn filter_by_trend(
    dataset: &Dataset,
    z: &IndexMatrix,
    baseline: Baseline<'_>,
    m: usize,
    keep_fraction: f64,
) -> Result<TrendFilter> {
    if !baseline.trained {
        return Err(Error::Argument("trend filtering needs a trained baseline model".into()));
    }
    if baseline.curriculum != CurriculumKind::None {
        return Err(Error::Argument(format!(
            "trend filtering needs a baseline trained without a curriculum, got {}",
            baseline.curriculum
        )));
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Argument(format!("keep fraction must lie in (0, 1], got {keep_fraction}")));
    }
    let features = featurize_dataset(dataset, z, &baseline.featurizer)?;
    let scored = score_split(baseline.params, dataset, &features, Split::Validation)?;
    let val_pos = dataset.positions_in(Split::Validation);
    let labels: Vec<usize> = val_pos.iter().map(|&p| dataset.samples()[p].label).collect();
    let ranking = rank_by_trend(&z.select_rows(&val_pos), &scored.predictions, &labels, m, DEFAULT_MIN_COUNT)?;
    let kept = ranking
        .iter()
        .take(keep_count(z.n_cols(), keep_fraction))
        .map(|(n, _)| n.clone())
        .collect();
    Ok(TrendFilter { kept, ranking })
}
