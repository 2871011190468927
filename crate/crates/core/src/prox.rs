//! Closed-form KL proximal operators for the four constraint families of the
//! capacity-constrained barycenter problem, all evaluated in the log domain on
//! `n × n*` couplings (rows: all nodes, columns: support nodes).
//!
//! Each operator takes its input by value and returns the projected matrix so
//! callers can chain them without extra copies.

use ndarray::{Array1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::logdomain::{col_lse, log_mul, lse_slice, LogMatrix, NEG_INF};

/// The two couplings of the barycenter problem: `pi1` moves `ρ_t` to `p`,
/// `pi2` moves `ν` to `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPair {
    pub pi1: LogMatrix,
    pub pi2: LogMatrix,
}

impl CouplingPair {
    pub fn new(pi1: LogMatrix, pi2: LogMatrix) -> Result<Self> {
        if pi1.dim() != pi2.dim() {
            return Err(Error::ShapeMismatch(pi1.dim(), pi2.dim()));
        }
        Ok(CouplingPair { pi1, pi2 })
    }
}

/// Output of [`prox_barycenter_columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProjection {
    pub pair: CouplingPair,
    /// `ln p`, length `n*`.
    pub log_p: Array1<f64>,
    /// Columns where exactly one coupling had zero mass; both are zeroed there.
    pub half_empty_columns: Vec<usize>,
}

/// Rescales every row so that row sums equal `target`. Rows with zero target
/// become all `NEG_INF`.
pub fn prox_marginal_rows(mut pi: LogMatrix, target: &[f64]) -> Result<LogMatrix> {
    if target.len() != pi.nrows() {
        return Err(Error::LengthMismatch(target.len(), pi.nrows()));
    }
    for (i, (mut row, &t)) in pi
        .as_array_mut()
        .rows_mut()
        .into_iter()
        .zip(target)
        .enumerate()
    {
        if t == 0.0 {
            row.fill(NEG_INF);
            continue;
        }
        let s = match row.as_slice() {
            Some(r) => lse_slice(r),
            None => lse_slice(&row.to_vec()),
        };
        if s == NEG_INF {
            return Err(Error::InfeasibleRow { row: i, target: t });
        }
        let shift = t.ln() - s;
        row.mapv_inplace(|x| log_mul(x, shift));
    }
    Ok(pi)
}

/// Projects the pair onto `{π1ᵀ1 = π2ᵀ1 = p}` under the `(ω, 1 − ω)`-weighted
/// KL geometry: `p` is the entrywise weighted geometric mean of the two
/// column-sum vectors and every column is rescaled to match it.
pub fn prox_barycenter_columns(pair: CouplingPair, omega: f64) -> Result<ColumnProjection> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "omega must lie in (0, 1), got {omega}"
        )));
    }
    let CouplingPair { mut pi1, mut pi2 } = pair;
    let a = col_lse(pi1.as_array().view());
    let b = col_lse(pi2.as_array().view());
    let mut half_empty = Vec::new();
    let log_p: Array1<f64> = a
        .iter()
        .zip(b.iter())
        .enumerate()
        .map(|(j, (&x, &y))| {
            if x == NEG_INF || y == NEG_INF {
                if x != y {
                    half_empty.push(j);
                }
                NEG_INF
            } else {
                omega * x + (1.0 - omega) * y
            }
        })
        .collect();
    rescale_columns(&mut pi1, &a, &log_p);
    rescale_columns(&mut pi2, &b, &log_p);
    Ok(ColumnProjection {
        pair: CouplingPair { pi1, pi2 },
        log_p,
        half_empty_columns: half_empty,
    })
}

fn rescale_columns(pi: &mut LogMatrix, current: &Array1<f64>, wanted: &Array1<f64>) {
    let shift: Vec<f64> = current
        .iter()
        .zip(wanted.iter())
        .map(|(&c, &w)| {
            if w == NEG_INF {
                NEG_INF
            } else if c == NEG_INF {
                // nothing to scale; the column stays empty
                0.0
            } else {
                w - c
            }
        })
        .collect();
    for mut row in pi.as_array_mut().rows_mut() {
        for (x, &s) in row.iter_mut().zip(&shift) {
            *x = log_mul(*x, s);
        }
    }
}

/// Entrywise `min(π, C̃)` with `log_cap = ln C̃` (`+∞` for unbounded, `NEG_INF` for blocked).
pub fn prox_capacity(mut pi: LogMatrix, log_cap: ArrayView2<f64>) -> Result<LogMatrix> {
    if pi.dim() != log_cap.dim() {
        return Err(Error::ShapeMismatch(pi.dim(), log_cap.dim()));
    }
    let m = pi.as_array_mut();
    match (m.as_slice_mut(), log_cap.as_slice()) {
        (Some(x), Some(c)) => x.iter_mut().zip(c).for_each(|(x, &c)| *x = x.min(c)),
        _ => m.zip_mut_with(&log_cap, |x, &c| *x = x.min(c)),
    }
    Ok(pi)
}

/// Scales column `j` by `min(storage_j / colsum_j, 1)`. Empty columns are left alone.
pub fn prox_storage(mut pi: LogMatrix, storage: &[f64]) -> Result<LogMatrix> {
    if storage.len() != pi.ncols() {
        return Err(Error::LengthMismatch(storage.len(), pi.ncols()));
    }
    if storage.iter().all(|&s| s == f64::INFINITY) {
        return Ok(pi);
    }
    let sums = col_lse(pi.as_array().view());
    let shift: Vec<f64> = sums
        .iter()
        .zip(storage)
        .map(|(&c, &s)| {
            if c == NEG_INF || s == f64::INFINITY {
                0.0
            } else if s == 0.0 {
                NEG_INF
            } else {
                (s.ln() - c).min(0.0)
            }
        })
        .collect();
    if shift.iter().any(|&s| s != 0.0) {
        for mut row in pi.as_array_mut().rows_mut() {
            for (x, &s) in row.iter_mut().zip(&shift) {
                *x = log_mul(*x, s);
            }
        }
    }
    Ok(pi)
}

/// Column sums of a log matrix in the linear domain (test and diagnostic helper).
pub fn linear_col_sums(pi: &LogMatrix) -> Array1<f64> {
    pi.to_linear().sum_axis(Axis(0))
}
