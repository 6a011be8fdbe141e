//! Post-hoc analysis of importance trajectories: which indices lead in the
//! early, middle and late stages of training, which change the most between
//! stages, and which move together.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::filtering::complete_linkage_clusters;
use crate::trainer::TrainRecord;

pub const STAGE_NAMES: [&str; 3] = ["early", "middle", "late"];
pub const DEFAULT_TOP_K: usize = 3;
const RELATIVE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RhoTrajectory {
    steps: Vec<usize>,
    /// `values[snapshot][index]`
    values: Vec<Vec<f64>>,
    index_names: Vec<String>,
}

impl RhoTrajectory {
    pub fn new(steps: Vec<usize>, values: Vec<Vec<f64>>, index_names: Vec<String>) -> Result<Self> {
        if steps.len() != values.len() {
            return Err(Error::Shape(format!("{} steps but {} snapshots", steps.len(), values.len())));
        }
        if steps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("trajectory steps must be strictly increasing".into()));
        }
        for (s, row) in values.iter().enumerate() {
            if row.len() != index_names.len() {
                return Err(Error::Shape(format!(
                    "snapshot {s} has {} values for {} indices",
                    row.len(),
                    index_names.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: format!("step {}", steps[s]),
                    column: index_names[j].clone(),
                });
            }
        }
        Ok(RhoTrajectory {
            steps,
            values,
            index_names,
        })
    }

    pub fn from_record(record: &TrainRecord) -> Result<Self> {
        RhoTrajectory::new(
            record.rho_trajectory.iter().map(|r| r.step).collect(),
            record.rho_trajectory.iter().map(|r| r.rho.clone()).collect(),
            record.index_names.clone(),
        )
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn index_names(&self) -> &[String] {
        &self.index_names
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Series of one index over all snapshots.
    pub fn series(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

/// Reads the `step,index_name,rho` CSV written by training. Index order is
/// the order of first appearance.
pub fn read_rho_csv(reader: impl Read) -> Result<RhoTrajectory> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["step", "index_name", "rho"] {
        return Err(Error::Parse {
            path: "<rho trajectory>".into(),
            line: 1,
            message: format!("expected header step,index_name,rho, got {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut names: Vec<String> = Vec::new();
    let mut name_pos: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_step: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |message: String| Error::Parse {
            path: "<rho trajectory>".into(),
            line,
            message,
        };
        let step: usize = rec[0].parse().map_err(|e| bad(format!("step {:?}: {e}", &rec[0])))?;
        let rho: f64 = rec[2].parse().map_err(|e| bad(format!("rho {:?}: {e}", &rec[2])))?;
        let j = *name_pos.entry(rec[1].to_owned()).or_insert_with(|| {
            names.push(rec[1].to_owned());
            names.len() - 1
        });
        by_step.entry(step).or_default().push((j, rho));
    }
    let k = names.len();
    let mut steps = Vec::new();
    let mut values = Vec::new();
    for (step, entries) in by_step {
        let mut row = vec![f64::NAN; k];
        for (j, v) in entries {
            if !row[j].is_nan() {
                return Err(Error::DuplicateId(format!("{} at step {step}", names[j])));
            }
            row[j] = v;
        }
        if let Some(j) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::Coverage {
                id: names[j].clone(),
                what: format!("rho value at step {step}"),
            });
        }
        steps.push(step);
        values.push(row);
    }
    RhoTrajectory::new(steps, values, names)
}

/// Snapshot counts of the three stages: `n/3`, `n/3`, remainder.
pub fn stage_sizes(n: usize) -> [usize; 3] {
    let third = n / 3;
    [third, third, n - 2 * third]
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageMeans {
    pub index_names: Vec<String>,
    pub sizes: [usize; 3],
    /// `means[stage][index]`
    pub means: [Vec<f64>; 3],
}

/// Mean ρ of every index over each third of the snapshots.
pub fn stage_means(traj: &RhoTrajectory) -> Result<StageMeans> {
    let n = traj.len();
    if n < 3 {
        return Err(Error::Argument(format!("stage analysis needs at least 3 snapshots, got {n}")));
    }
    let sizes = stage_sizes(n);
    let k = traj.index_names.len();
    let mut start = 0;
    let means = sizes.map(|size| {
        let rows = &traj.values[start..start + size];
        start += size;
        (0..k)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / size as f64)
            .collect()
    });
    Ok(StageMeans {
        index_names: traj.index_names.clone(),
        sizes,
        means,
    })
}

/// Per stage, index names by stage mean descending (ties by name), cut to
/// `k_top`.
pub fn top_k_per_stage(sm: &StageMeans, k_top: usize) -> [Vec<(String, f64)>; 3] {
    sm.means.clone().map(|means| {
        let mut ranked: Vec<(String, f64)> = sm.index_names.iter().cloned().zip(means).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k_top);
        ranked
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageChange {
    pub index: String,
    /// Earlier and later stage, as positions into [`STAGE_NAMES`].
    pub stages: (usize, usize),
    /// Later mean minus earlier mean.
    pub change: f64,
    pub relative_change: f64,
}

impl StageChange {
    pub fn stage_pair(&self) -> String {
        format!("{}-{}", STAGE_NAMES[self.stages.0], STAGE_NAMES[self.stages.1])
    }
}

/// Largest stage-to-stage move of every index, biggest |change| first
/// (ties by name). Within an index, equal moves keep the earliest pair.
pub fn max_change_indices(sm: &StageMeans) -> Vec<StageChange> {
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut out: Vec<StageChange> = sm
        .index_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut best: Option<StageChange> = None;
            for (a, b) in PAIRS {
                let earlier = sm.means[a][j];
                let change = sm.means[b][j] - earlier;
                if best.as_ref().is_none_or(|c| change.abs() > c.change.abs()) {
                    best = Some(StageChange {
                        index: name.clone(),
                        stages: (a, b),
                        change,
                        relative_change: change / earlier.abs().max(RELATIVE_EPS),
                    });
                }
            }
            best.expect("three stage pairs")
        })
        .collect();
    out.sort_by(|a, b| {
        b.change
            .abs()
            .total_cmp(&a.change.abs())
            .then_with(|| a.index.cmp(&b.index))
    });
    out
}

/// Mean over snapshots of `|a - b|`.
pub fn trajectory_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

pub fn trajectory_distance_matrix(traj: &RhoTrajectory) -> Vec<Vec<f64>> {
    let k = traj.index_names.len();
    let series: Vec<Vec<f64>> = (0..k).map(|j| traj.series(j)).collect();
    let mut d = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a + 1..k {
            let v = trajectory_distance(&series[a], &series[b]);
            d[a][b] = v;
            d[b][a] = v;
        }
    }
    d
}

/// Complete-linkage clusters of indices whose ρ trajectories stay close.
pub fn cluster_trajectories(traj: &RhoTrajectory, threshold: f64) -> Result<Vec<usize>> {
    if traj.index_names.len() < 2 {
        return Err(Error::Argument("trajectory clustering needs at least 2 indices".into()));
    }
    if traj.is_empty() {
        return Err(Error::Argument("trajectory clustering needs at least one snapshot".into()));
    }
    complete_linkage_clusters(&trajectory_distance_matrix(traj), threshold)
}

/// `stage,rank,index,mean_rho` (rank from 1).
pub fn write_stage_tsv(top: &[Vec<(String, f64)>; 3], writer: impl Write) -> Result<()> {
    let mut w = tsv_writer(writer);
    w.write_record(["stage", "rank", "index", "mean_rho"])?;
    for (stage, ranked) in STAGE_NAMES.iter().zip(top) {
        for (rank, (name, mean)) in ranked.iter().enumerate() {
            w.write_record([*stage, &(rank + 1).to_string(), name, &mean.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<stage report>", e))?;
    Ok(())
}

/// `index,stage_pair,change,relative_change`.
pub fn write_change_tsv(changes: &[StageChange], writer: impl Write) -> Result<()> {
    let mut w = tsv_writer(writer);
    w.write_record(["index", "stage_pair", "change", "relative_change"])?;
    for c in changes {
        w.write_record([
            c.index.clone(),
            c.stage_pair(),
            c.change.to_string(),
            c.relative_change.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<change report>", e))?;
    Ok(())
}

/// `index,cluster`.
pub fn write_cluster_tsv(names: &[String], labels: &[usize], writer: impl Write) -> Result<()> {
    let mut w = tsv_writer(writer);
    w.write_record(["index", "cluster"])?;
    for (n, l) in names.iter().zip(labels) {
        w.write_record([n.as_str(), &l.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<cluster report>", e))?;
    Ok(())
}

fn tsv_writer<W: Write>(writer: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer)
}
