//! Entropic transport distance between two measures, used for per-step cost reporting.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::logdomain::lse_slice;
use crate::measure::negative_entropy;

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// `⟨C, π⟩ + γ H(π)`.
    pub value: f64,
    /// `⟨C, π⟩` alone.
    pub transport: f64,
    pub plan: Array2<f64>,
    pub iterations: usize,
}

/// Log-domain Sinkhorn scaling on the supports of `mu` (rows) and `nu` (columns).
/// Stops once `‖π1 − μ‖₁ + ‖πᵀ1 − ν‖₁ ≤ eps`.
pub fn sinkhorn_distance(
    mu: &[f64],
    nu: &[f64],
    cost: ArrayView2<f64>,
    gamma: f64,
    eps: f64,
    max_inner: usize,
) -> Result<SinkhornResult> {
    let n = cost.nrows();
    if cost.ncols() != nu.len() {
        return Err(Error::LengthMismatch(cost.ncols(), nu.len()));
    }
    if mu.len() != n {
        return Err(Error::LengthMismatch(mu.len(), n));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let rows: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 0.0).collect();
    let cols: Vec<usize> = (0..nu.len()).filter(|&j| nu[j] > 0.0).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(Error::EmptySupport);
    }
    let log_k = Array2::from_shape_fn((rows.len(), cols.len()), |(a, b)| {
        -cost[[rows[a], cols[b]]] / gamma
    });
    let log_mu: Vec<f64> = rows.iter().map(|&i| mu[i].ln()).collect();
    let log_nu: Vec<f64> = cols.iter().map(|&j| nu[j].ln()).collect();
    let mut f = Array1::<f64>::zeros(rows.len());
    let mut g = Array1::<f64>::zeros(cols.len());
    let mut buf = Vec::with_capacity(rows.len().max(cols.len()));

    let mut iterations = 0;
    loop {
        // rows: f_i = ln μ_i − lse_j(K_ij + g_j)
        for a in 0..rows.len() {
            buf.clear();
            buf.extend((0..cols.len()).map(|b| log_k[[a, b]] + g[b]));
            f[a] = log_mu[a] - lse_slice(&buf);
        }
        // columns: g_j = ln ν_j − lse_i(K_ij + f_i)
        for b in 0..cols.len() {
            buf.clear();
            buf.extend((0..rows.len()).map(|a| log_k[[a, b]] + f[a]));
            g[b] = log_nu[b] - lse_slice(&buf);
        }
        iterations += 1;

        // columns are exact after the g-update, so only rows carry error
        let mut err = 0.0;
        for a in 0..rows.len() {
            buf.clear();
            buf.extend((0..cols.len()).map(|b| log_k[[a, b]] + f[a] + g[b]));
            err += (lse_slice(&buf).exp() - mu[rows[a]]).abs();
        }
        if err <= eps {
            break;
        }
        if iterations >= max_inner {
            return Err(Error::MaxInnerIterations(iterations));
        }
    }

    let mut plan = Array2::zeros((n, nu.len()));
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            plan[[i, j]] = (log_k[[a, b]] + f[a] + g[b]).exp();
        }
    }
    let transport = crate::measure::transport_cost(plan.view(), cost)?;
    let value = transport + gamma * negative_entropy(plan.view());
    Ok(SinkhornResult {
        value,
        transport,
        plan,
        iterations,
    })
}
