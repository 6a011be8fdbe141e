//! Datasets, linguistic index matrices, and column standardization.
//!
//! A [`Dataset`] is loaded from JSON-lines and keeps its samples grouped by
//! split (train, then validation, then test), preserving file order inside
//! each group. That grouped order is the canonical row order: every
//! [`IndexMatrix`] loaded against a dataset is re-aligned to it.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix for indices computed on the first text of a pair.
pub const PREMISE_TAG: &str = "(P)";
/// Suffix for indices computed on the second text of a pair.
pub const HYPOTHESIS_TAG: &str = "(H)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Argument(format!(
                "unknown split {other:?} (expected train, validation or test)"
            ))),
        }
    }
}

/// One labeled text, or text pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_pair: Option<String>,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    positions: HashMap<String, usize>,
    num_classes: usize,
}

impl Dataset {
    /// Builds a dataset, grouping samples by split while keeping their
    /// relative order. Fails on duplicate ids.
    pub fn new(mut samples: Vec<Sample>) -> Result<Self> {
        // stable: file order survives inside each split
        samples.sort_by_key(|s| s.split);
        let mut positions = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if positions.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        let num_classes = samples.iter().map(|s| s.label + 1).max().unwrap_or(0);
        Ok(Dataset {
            samples,
            positions,
            num_classes,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of classes, taken as one more than the largest label seen.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// True when any sample carries a second text.
    pub fn is_pair(&self) -> bool {
        self.samples.iter().any(|s| s.text_pair.is_some())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> + '_ {
        self.samples.iter().filter(move |s| s.split == split)
    }

    /// Row positions (in dataset order) of the samples in `split`.
    pub fn positions_in(&self, split: Split) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

/// Parses JSON-lines dataset records. `source` only labels error messages.
pub fn read_dataset(reader: impl BufRead, source: impl Into<PathBuf>) -> Result<Dataset> {
    let source = source.into();
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: source.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        samples.push(sample);
    }
    Dataset::new(samples)
}

/// Frozen per-column standardization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    /// Population standard deviation (divisor n).
    pub std: f64,
    /// Column was constant on the fit rows; its standardized values are 0.
    pub zero_variance: bool,
}

impl ColumnStats {
    fn apply(&self, x: f64) -> f64 {
        if self.zero_variance {
            0.0
        } else {
            (x - self.mean) / self.std
        }
    }
}

/// An n×k table of index values, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMatrix {
    sample_ids: Vec<String>,
    index_names: Vec<String>,
    /// Row-major.
    values: Vec<f64>,
    stats: Option<Vec<ColumnStats>>,
    standardized: bool,
}

impl IndexMatrix {
    pub fn new(sample_ids: Vec<String>, index_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let (n, k) = (sample_ids.len(), index_names.len());
        if values.len() != n * k {
            return Err(Error::Shape(format!(
                "{} values for a {n}x{k} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: sample_ids[pos / k].clone(),
                column: index_names[pos % k].clone(),
            });
        }
        Ok(IndexMatrix {
            sample_ids,
            index_names,
            values,
            stats: None,
            standardized: false,
        })
    }

    /// Builds a matrix from rows; convenient for small hand-made inputs.
    pub fn from_rows(sample_ids: Vec<String>, index_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let k = index_names.len();
        if rows.len() != sample_ids.len() || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Shape("ragged rows".into()));
        }
        IndexMatrix::new(sample_ids, index_names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.index_names.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn index_names(&self) -> &[String] {
        &self.index_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let k = self.n_cols();
        &self.values[row * k..(row + 1) * k]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn column_position(&self, name: &str) -> Option<usize> {
        self.index_names.iter().position(|n| n == name)
    }

    pub fn stats(&self) -> Option<&[ColumnStats]> {
        self.stats.as_deref()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Per-column flag: constant on the rows standardization was fitted on.
    pub fn zero_variance_flags(&self) -> Vec<bool> {
        match &self.stats {
            Some(stats) => stats.iter().map(|s| s.zero_variance).collect(),
            None => vec![false; self.n_cols()],
        }
    }

    /// Keeps the given rows, in the given order. Stats carry over.
    pub fn select_rows(&self, rows: &[usize]) -> IndexMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        IndexMatrix {
            sample_ids: rows.iter().map(|&r| self.sample_ids[r].clone()).collect(),
            index_names: self.index_names.clone(),
            values,
            stats: self.stats.clone(),
            standardized: self.standardized,
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<IndexMatrix> {
        let cols = names
            .iter()
            .map(|n| {
                self.column_position(n)
                    .ok_or_else(|| Error::Argument(format!("unknown index {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            values.extend(cols.iter().map(|&c| self.get(r, c)));
        }
        Ok(IndexMatrix {
            sample_ids: self.sample_ids.clone(),
            index_names: names.to_vec(),
            values,
            stats: self
                .stats
                .as_ref()
                .map(|s| cols.iter().map(|&c| s[c]).collect()),
            standardized: self.standardized,
        })
    }

    /// Transforms every row with previously fitted stats (for held-out data).
    pub fn apply_stats(&self, stats: &[ColumnStats]) -> Result<IndexMatrix> {
        if stats.len() != self.n_cols() {
            return Err(Error::Shape(format!(
                "{} column stats for {} columns",
                stats.len(),
                self.n_cols()
            )));
        }
        let k = self.n_cols();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &x)| stats[i % k].apply(x))
            .collect();
        Ok(IndexMatrix {
            sample_ids: self.sample_ids.clone(),
            index_names: self.index_names.clone(),
            values,
            stats: Some(stats.to_vec()),
            standardized: true,
        })
    }
}

pub fn load_index_matrix(path: impl AsRef<Path>, dataset: &Dataset) -> Result<IndexMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_index_matrix(file, path, dataset)
}

/// Reads the `sample_id,<name1>,...` CSV and aligns its rows to `dataset`.
/// Rows for ids the dataset does not contain are ignored.
pub fn read_index_matrix(reader: impl Read, source: impl Into<PathBuf>, dataset: &Dataset) -> Result<IndexMatrix> {
    let source = source.into();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.clone(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("sample_id") {
        return Err(parse_err(1, "header must start with \"sample_id\"".into()));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let k = names.len();

    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != k + 1 {
            return Err(parse_err(line, format!("expected {} fields, found {}", k + 1, record.len())));
        }
        let id = record[0].to_owned();
        let mut row = Vec::with_capacity(k);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("column {:?}: {cell:?} is not a number", names[j])))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: id,
                    column: names[j].clone(),
                });
            }
            row.push(v);
        }
        if rows.insert(id.clone(), row).is_some() {
            return Err(Error::DuplicateId(id));
        }
    }

    let mut values = Vec::with_capacity(dataset.len() * k);
    for s in dataset.samples() {
        let row = rows.get(&s.id).ok_or_else(|| Error::Coverage {
            id: s.id.clone(),
            what: source.display().to_string(),
        })?;
        values.extend_from_slice(row);
    }
    IndexMatrix::new(dataset.ids(), names, values)
}

/// Writes the CSV form. Values use the shortest representation that parses
/// back to the identical float.
pub fn write_index_matrix(m: &IndexMatrix, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["sample_id".to_owned()];
    header.extend(m.index_names.iter().cloned());
    w.write_record(&header)?;
    for r in 0..m.n_rows() {
        let mut rec = vec![m.sample_ids[r].clone()];
        rec.extend(m.row(r).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<index matrix>", e))?;
    Ok(())
}

/// Joins the per-text matrices of a pair dataset column-wise, tagging names
/// with [`PREMISE_TAG`] and [`HYPOTHESIS_TAG`].
pub fn concatenate_pair_indices(a: &IndexMatrix, b: &IndexMatrix) -> Result<IndexMatrix> {
    if a.sample_ids != b.sample_ids {
        return Err(Error::Alignment(
            "pair index matrices do not list the same samples in the same order".into(),
        ));
    }
    let index_names = a
        .index_names
        .iter()
        .map(|n| format!("{n} {PREMISE_TAG}"))
        .chain(b.index_names.iter().map(|n| format!("{n} {HYPOTHESIS_TAG}")))
        .collect();
    let mut values = Vec::with_capacity(a.values.len() + b.values.len());
    for r in 0..a.n_rows() {
        values.extend_from_slice(a.row(r));
        values.extend_from_slice(b.row(r));
    }
    let stats = match (&a.stats, &b.stats) {
        (Some(sa), Some(sb)) => Some(sa.iter().chain(sb).copied().collect()),
        _ => None,
    };
    Ok(IndexMatrix {
        sample_ids: a.sample_ids.clone(),
        index_names,
        values,
        stats,
        standardized: a.standardized && b.standardized,
    })
}

/// Fits population mean and standard deviation on the rows whose ids are in
/// `fit_ids`, then transforms every row.
pub fn standardize(m: &IndexMatrix, fit_ids: &HashSet<String>) -> Result<IndexMatrix> {
    if fit_ids.is_empty() {
        return Err(Error::Argument("standardization fit set is empty".into()));
    }
    let fit_rows: Vec<usize> = (0..m.n_rows())
        .filter(|&r| fit_ids.contains(&m.sample_ids[r]))
        .collect();
    if fit_rows.len() != fit_ids.len() {
        return Err(Error::Argument(format!(
            "{} of {} fit ids are not in the matrix",
            fit_ids.len() - fit_rows.len(),
            fit_ids.len()
        )));
    }
    let stats = fit_column_stats(m, &fit_rows);
    m.apply_stats(&stats)
}

/// Convenience: standardize on the rows of one split.
pub fn standardize_on_split(m: &IndexMatrix, dataset: &Dataset, split: Split) -> Result<IndexMatrix> {
    let ids = dataset.split(split).map(|s| s.id.clone()).collect();
    standardize(m, &ids)
}

fn fit_column_stats(m: &IndexMatrix, rows: &[usize]) -> Vec<ColumnStats> {
    let n = rows.len() as f64;
    (0..m.n_cols())
        .map(|c| {
            let mean = rows.iter().map(|&r| m.get(r, c)).sum::<f64>() / n;
            let var = rows.iter().map(|&r| (m.get(r, c) - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            let scale = rows.iter().map(|&r| m.get(r, c).abs()).fold(0.0, f64::max);
            // relative cut: a constant column can still leave rounding dust
            let zero_variance = std == 0.0 || std <= 1e-12 * scale;
            ColumnStats {
                mean,
                std,
                zero_variance,
            }
        })
        .collect()
}
