//! Probability vectors on nodes, and the divergences used for stopping and reporting.

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Tolerance on `|Σ μ − 1|` accepted at construction.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A full-length probability vector over the nodes of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure(Vec<f64>);

impl Measure {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SimplexViolation("measure is empty".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::SimplexViolation(format!(
                "entry {i} is {v} (must be finite and >= 0)"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::SimplexViolation(format!(
                "entries sum to {sum}, expected 1 within {SIMPLEX_TOLERANCE:e}"
            )));
        }
        Ok(Measure(values))
    }

    /// Unit mass at `node`.
    pub fn dirac(n: usize, node: usize) -> Self {
        let mut v = vec![0.0; n];
        v[node] = 1.0;
        Measure(v)
    }

    /// Uniform mass over `nodes`.
    pub fn uniform_on(n: usize, nodes: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        let w = 1.0 / nodes.len() as f64;
        for &i in nodes {
            v[i] = w;
        }
        Measure(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Measure {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// `½ Σ |a_i − b_i|`.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Generalized KL divergence `Σ π ln(π/ξ) − π + ξ` with `0 ln 0 = 0`.
pub fn kl_divergence(pi: ArrayView2<f64>, xi: ArrayView2<f64>) -> Result<f64> {
    if pi.dim() != xi.dim() {
        return Err(Error::ShapeMismatch(pi.dim(), xi.dim()));
    }
    let mut total = 0.0;
    for ((idx, &p), &x) in pi.indexed_iter().zip(xi.iter()) {
        if !(x > 0.0) {
            return Err(Error::NonpositiveReference(idx.0, idx.1));
        }
        if p > 0.0 {
            total += p * (p / x).ln();
        }
        total += x - p;
    }
    Ok(total)
}

/// Negative entropy `Σ π (ln π − 1)` with `0 ln 0 = 0`.
pub fn negative_entropy(pi: ArrayView2<f64>) -> f64 {
    pi.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * (p.ln() - 1.0))
        .sum()
}

/// `⟨C, π⟩`; zero entries of `π` contribute nothing.
pub fn transport_cost(pi: ArrayView2<f64>, cost: ArrayView2<f64>) -> Result<f64> {
    if pi.dim() != cost.dim() {
        return Err(Error::ShapeMismatch(pi.dim(), cost.dim()));
    }
    Ok(pi
        .iter()
        .zip(cost.iter())
        .filter(|(&p, _)| p != 0.0)
        .map(|(p, c)| p * c)
        .sum())
}
