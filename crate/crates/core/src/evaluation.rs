//! Difficulty-balanced evaluation.
//!
//! Samples are partitioned into equal-width bins of a difficulty metric and
//! accuracy is averaged over bins instead of over samples, so that whatever
//! difficulty range dominates the split cannot dominate the score.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_MIN_COUNT: usize = 5;

/// `m` equal-width bins over `[min, max]`: `m + 1` edges. Constant input
/// gives the single bin `[v, v]`.
pub fn bin_edges(values: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::Argument("bin count must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::Argument("cannot bin an empty value list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("bin values must be finite".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(vec![lo, hi]);
    }
    let width = (hi - lo) / m as f64;
    let mut edges: Vec<f64> = (0..m).map(|b| lo + b as f64 * width).collect();
    edges.push(hi);
    Ok(edges)
}

/// Bin of `x`: `edges[b] <= x < edges[b + 1]`, with the last bin closed.
pub fn assign_bin(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    // number of interior edges at or below x
    let above = edges[1..bins].partition_point(|&e| e <= x);
    above.min(bins - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub correct: usize,
}

impl Bin {
    pub fn accuracy(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.correct as f64 / self.count as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinReport {
    pub edges: Vec<f64>,
    /// Member counts of the equal-width bins before merging.
    pub pre_merge_counts: Vec<usize>,
    /// Surviving bins after small ones were merged, ordered by edge.
    pub bins: Vec<Bin>,
    pub plain_accuracy: f64,
    pub balanced_accuracy: f64,
    /// Least-squares slope of bin accuracy against bin position; `None`
    /// with fewer than two bins.
    pub trend_slope: Option<f64>,
}

impl BinReport {
    /// `bin_lo,bin_hi,count,accuracy` rows followed by a `#` summary line.
    pub fn write_csv(&self, mut writer: impl Write) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(["bin_lo", "bin_hi", "count", "accuracy"])?;
            for b in &self.bins {
                w.write_record([
                    b.lo.to_string(),
                    b.hi.to_string(),
                    b.count.to_string(),
                    b.accuracy().to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<bin report>", e))?;
        }
        let slope = self.trend_slope.map_or("NA".to_owned(), |s| s.to_string());
        writeln!(
            writer,
            "# plain_accuracy={} balanced_accuracy={} trend_slope={slope}",
            self.plain_accuracy, self.balanced_accuracy
        )
        .map_err(|e| Error::io("<bin report>", e))?;
        Ok(())
    }
}

/// Absorbs bins with fewer than `min_count` members into a neighbour (the
/// smaller one; left on ties), smallest offender first, until every bin
/// meets the minimum or one bin remains.
fn merge_small_bins(mut bins: Vec<Bin>, min_count: usize) -> Vec<Bin> {
    loop {
        if bins.len() <= 1 {
            return bins;
        }
        let offender = bins
            .iter()
            .enumerate()
            .filter(|(_, b)| b.count < min_count.max(1))
            .min_by_key(|(i, b)| (b.count, *i))
            .map(|(i, _)| i);
        let Some(i) = offender else { return bins };
        let j = match (i.checked_sub(1), (i + 1 < bins.len()).then_some(i + 1)) {
            (Some(l), Some(r)) => {
                if bins[r].count < bins[l].count {
                    r
                } else {
                    l
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => unreachable!("more than one bin"),
        };
        let (a, b) = (i.min(j), i.max(j));
        let merged = Bin {
            lo: bins[a].lo,
            hi: bins[b].hi,
            count: bins[a].count + bins[b].count,
            correct: bins[a].correct + bins[b].correct,
        };
        bins[a] = merged;
        bins.remove(b);
    }
}

/// OLS slope of `y` against positions `0..n`.
pub fn ols_slope(y: &[f64]) -> Option<f64> {
    let n = y.len();
    if n < 2 {
        return None;
    }
    let mx = (n - 1) as f64 / 2.0;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

pub fn binned_balanced_accuracy(
    predictions: &[usize],
    labels: &[usize],
    difficulty: &[f64],
    m: usize,
    min_count: usize,
) -> Result<BinReport> {
    if predictions.len() != labels.len() || labels.len() != difficulty.len() {
        return Err(Error::Argument(format!(
            "misaligned inputs: {} predictions, {} labels, {} difficulty values",
            predictions.len(),
            labels.len(),
            difficulty.len()
        )));
    }
    let edges = bin_edges(difficulty, m)?;
    let mut bins: Vec<Bin> = edges
        .windows(2)
        .map(|w| Bin {
            lo: w[0],
            hi: w[1],
            count: 0,
            correct: 0,
        })
        .collect();
    for ((p, y), &d) in predictions.iter().zip(labels).zip(difficulty) {
        let b = &mut bins[assign_bin(&edges, d)];
        b.count += 1;
        b.correct += usize::from(p == y);
    }
    let pre_merge_counts = bins.iter().map(|b| b.count).collect();
    let bins = merge_small_bins(bins, min_count);
    let accs: Vec<f64> = bins.iter().map(Bin::accuracy).collect();
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(BinReport {
        edges,
        pre_merge_counts,
        balanced_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
        trend_slope: ols_slope(&accs),
        bins,
        plain_accuracy: correct as f64 / labels.len() as f64,
    })
}

pub fn accuracy_trend_slope(report: &BinReport) -> Result<f64> {
    let accs: Vec<f64> = report.bins.iter().map(Bin::accuracy).collect();
    ols_slope(&accs).ok_or_else(|| {
        Error::Degenerate(format!(
            "accuracy trend needs at least two bins, report has {}",
            report.bins.len()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_from_accuracies(accs: &[f64]) -> BinReport {
        BinReport {
            edges: vec![],
            pre_merge_counts: vec![],
            bins: accs
                .iter()
                .map(|&a| Bin {
                    lo: 0.0,
                    hi: 0.0,
                    count: 10,
                    correct: (a * 10.0).round() as usize,
                })
                .collect(),
            plain_accuracy: 0.0,
            balanced_accuracy: 0.0,
            trend_slope: None,
        }
    }

    #[test]
    fn equal_width_edges() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(bin_edges(&v, 5).unwrap(), [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(bin_edges(&[3.0, 3.0], 4).unwrap(), [3.0, 3.0]);
        assert!(bin_edges(&[], 3).is_err());
        assert!(bin_edges(&[1.0], 0).is_err());
    }

    #[test]
    fn assignment_respects_half_open_bins() {
        let e = [0.0, 2.0, 4.0];
        assert_eq!(assign_bin(&e, 0.0), 0);
        assert_eq!(assign_bin(&e, 1.99), 0);
        assert_eq!(assign_bin(&e, 2.0), 1);
        assert_eq!(assign_bin(&e, 4.0), 1);
        assert_eq!(assign_bin(&[3.0, 3.0], 3.0), 0);
    }

    #[test]
    fn macro_mean_over_bins() {
        // bin 0: 10/10, bin 1: 5/10
        let mut preds = vec![1; 20];
        let labels = vec![1; 20];
        let diff: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 1.0 }).collect();
        preds[10..15].fill(0);
        let r = binned_balanced_accuracy(&preds, &labels, &diff, 2, 5).unwrap();
        assert_eq!(r.balanced_accuracy, 0.75);
    }

    #[test]
    fn skewed_split_example() {
        let labels = vec![1usize; 100];
        let preds: Vec<usize> = (0..100).map(|i| usize::from(i < 90)).collect();
        let diff: Vec<f64> = (0..100).map(|i| if i < 90 { 0.0 } else { 1.0 }).collect();
        let r = binned_balanced_accuracy(&preds, &labels, &diff, 2, 5).unwrap();
        assert_eq!(r.plain_accuracy, 0.9);
        assert_eq!(r.balanced_accuracy, 0.5);
    }

    #[test]
    fn small_bins_merge_into_smaller_neighbour() {
        // counts 6, 2, 3, 6 with min 5: the 2 merges into the 3, giving 6,5,6
        let diff: Vec<f64> = [vec![0.0; 6], vec![1.5; 2], vec![2.5; 3], vec![4.0; 6]].concat();
        let n = diff.len();
        let r = binned_balanced_accuracy(&vec![0; n], &vec![0; n], &diff, 4, 5).unwrap();
        assert_eq!(r.pre_merge_counts, [6, 2, 3, 6]);
        let counts: Vec<usize> = r.bins.iter().map(|b| b.count).collect();
        assert_eq!(counts, [6, 5, 6]);
        assert_eq!(r.bins[1].lo, 1.0);
        assert_eq!(r.bins[1].hi, 3.0);
    }

    #[test]
    fn trend_slopes() {
        let s = accuracy_trend_slope(&report_from_accuracies(&[0.9, 0.8, 0.7])).unwrap();
        assert!((s + 0.1).abs() < 1e-12);
        assert_eq!(accuracy_trend_slope(&report_from_accuracies(&[0.6, 0.6, 0.6])).unwrap(), 0.0);
        let s = accuracy_trend_slope(&report_from_accuracies(&[0.5, 0.9])).unwrap();
        assert!((s - 0.4).abs() < 1e-12);
        assert!(accuracy_trend_slope(&report_from_accuracies(&[0.5])).is_err());
    }

    #[test]
    fn csv_has_summary_line() {
        let r = binned_balanced_accuracy(&[1, 0], &[1, 1], &[0.0, 1.0], 1, 5).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_lo,bin_hi,count,accuracy\n"));
        assert!(text.trim_end().ends_with("trend_slope=NA"));
    }
}
