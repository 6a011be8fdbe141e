//! Index importance factors estimated from validation loss.
//!
//! Two estimators: per-index Pearson correlation with the loss vector, and
//! an L1-regularized least-squares fit of the loss on all indices jointly,
//! solved by cyclic coordinate descent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::IndexMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const LASSO_TOLERANCE: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMethod {
    Correlation,
    Optimization,
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceMethod::Correlation => "correlation",
            ImportanceMethod::Optimization => "optimization",
        })
    }
}

impl FromStr for ImportanceMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(ImportanceMethod::Correlation),
            "optimization" | "lasso" => Ok(ImportanceMethod::Optimization),
            other => Err(Error::Argument(format!("unknown importance method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub rho: Vec<f64>,
    pub method: ImportanceMethod,
    pub step: usize,
    /// L1 strength; only set for the optimization method.
    pub lambda: Option<f64>,
}

impl ImportanceVector {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Position of the largest |rho|, ties to the lowest position.
    pub fn argmax_abs(&self) -> Option<usize> {
        argmax_by(&self.rho, |r| r.abs())
    }
}

pub(crate) fn argmax_by(xs: &[f64], key: impl Fn(f64) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        let k = key(x);
        if best.is_none_or(|(_, b)| k > b) {
            best = Some((i, k));
        }
    }
    best.map(|(i, _)| i)
}

fn centered_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (mean, ss, scale)
}

fn is_constant(ss: f64, n: usize, scale: f64) -> bool {
    ss == 0.0 || (ss / n as f64).sqrt() <= 1e-12 * scale
}

/// Sample Pearson correlation. A constant argument yields 0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "pearson: lengths {} and {} differ",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument("pearson: need at least two points".into()));
    }
    let (mx, sxx, scale_x) = centered_moments(x);
    let (my, syy, scale_y) = centered_moments(y);
    if is_constant(sxx, x.len(), scale_x) || is_constant(syy, y.len(), scale_y) {
        return Ok(0.0);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn check_rows(z: &IndexMatrix, loss: &[f64]) -> Result<()> {
    if z.n_rows() != loss.len() {
        return Err(Error::Shape(format!(
            "{} index rows but {} losses",
            z.n_rows(),
            loss.len()
        )));
    }
    Ok(())
}

/// rho_j = pearson(loss, column j), independently for every column.
pub fn estimate_rho_correlation(z: &IndexMatrix, loss: &[f64], step: usize) -> Result<ImportanceVector> {
    check_rows(z, loss)?;
    let rho = (0..z.n_cols())
        .map(|j| pearson(loss, &z.column(j)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ImportanceVector {
        rho,
        method: ImportanceMethod::Correlation,
        step,
        lambda: None,
    })
}

/// Value of `||loss - Z rho||^2 + lambda * ||rho||_1`.
pub fn lasso_objective(z: &IndexMatrix, loss: &[f64], rho: &[f64], lambda: f64) -> f64 {
    let rss: f64 = (0..z.n_rows())
        .map(|i| {
            let fit: f64 = z.row(i).iter().zip(rho).map(|(a, b)| a * b).sum();
            (loss[i] - fit).powi(2)
        })
        .sum();
    rss + lambda * rho.iter().map(|r| r.abs()).sum::<f64>()
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimizes `||loss - Z rho||^2 + lambda * ||rho||_1` (no 1/n factor) by
/// cyclic coordinate descent from rho = 0.
pub fn estimate_rho_lasso(z: &IndexMatrix, loss: &[f64], lambda: f64, step: usize) -> Result<ImportanceVector> {
    let rho = lasso_coordinate_descent(z, loss, lambda, LASSO_TOLERANCE, LASSO_MAX_SWEEPS)?;
    Ok(ImportanceVector {
        rho,
        method: ImportanceMethod::Optimization,
        step,
        lambda: Some(lambda),
    })
}

pub fn lasso_coordinate_descent(
    z: &IndexMatrix,
    loss: &[f64],
    lambda: f64,
    tolerance: f64,
    max_sweeps: usize,
) -> Result<Vec<f64>> {
    check_rows(z, loss)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("lambda must be a finite non-negative number, got {lambda}")));
    }
    if loss.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("loss vector contains non-finite values".into()));
    }
    let (n, k) = (z.n_rows(), z.n_cols());
    let columns: Vec<Vec<f64>> = (0..k).map(|j| z.column(j)).collect();
    let sq_norms: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut rho = vec![0.0; k];
    let mut residual = loss.to_vec();

    for _ in 0..max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..k {
            if sq_norms[j] == 0.0 {
                continue;
            }
            let col = &columns[j];
            // correlation of column j with the partial residual (rho_j removed)
            let c: f64 = (0..n).map(|i| col[i] * residual[i]).sum::<f64>() + sq_norms[j] * rho[j];
            let updated = soft_threshold(c, lambda / 2.0) / sq_norms[j];
            let delta = updated - rho[j];
            if delta != 0.0 {
                for i in 0..n {
                    residual[i] -= col[i] * delta;
                }
                rho[j] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < tolerance {
            break;
        }
    }
    Ok(rho)
}

/// The single column whose scaled fit `Z_i * rho_i` leaves the smallest
/// residual; ties go to the lowest position.
pub fn best_single_index(z: &IndexMatrix, loss: &[f64], rho: &ImportanceVector) -> Result<usize> {
    check_rows(z, loss)?;
    if z.n_cols() == 0 {
        return Err(Error::Argument("best_single_index: matrix has no columns".into()));
    }
    if rho.len() != z.n_cols() {
        return Err(Error::Shape(format!(
            "{} importance factors for {} columns",
            rho.len(),
            z.n_cols()
        )));
    }
    let residuals: Vec<f64> = (0..z.n_cols())
        .map(|j| {
            (0..z.n_rows())
                .map(|i| (loss[i] - z.get(i, j) * rho.rho[j]).powi(2))
                .sum()
        })
        .collect();
    Ok(argmax_by(&residuals, |r| -r).expect("non-empty"))
}
