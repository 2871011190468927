//! Sufficient conditions for the inner solver to converge from a given state.

use std::fmt;

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::graph::Support;

#[derive(Debug, Clone, PartialEq)]
pub struct NodeDiagnostic {
    pub node: usize,
    pub mass: f64,
    /// Total capacity leaving this node towards the support (row total).
    pub outgoing_capacity: f64,
    /// `None` for nodes outside the support, which have no storage column.
    pub storage: Option<f64>,
    pub capacity_ok: bool,
    pub storage_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub nodes: Vec<NodeDiagnostic>,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn violations(&self) -> impl Iterator<Item = &NodeDiagnostic> {
        self.nodes.iter().filter(|d| !(d.capacity_ok && d.storage_ok))
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", if self.feasible { "feasible" } else { "infeasible" })?;
        for d in self.violations() {
            write!(f, "  node {}: mass {}", d.node, d.mass)?;
            if !d.capacity_ok {
                write!(f, ", outgoing capacity {} not > mass", d.outgoing_capacity)?;
            }
            if !d.storage_ok {
                let s = d.storage.unwrap_or(f64::INFINITY);
                write!(f, ", storage {s} not > mass")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks, per node, that capacity leaving a mass-holding node strictly exceeds
/// its mass and that every support node's storage strictly exceeds its current
/// mass. `cap` is `n × n*` (rows are sources), `storage` has length `n*`.
pub fn feasibility_check(
    rho_t: &[f64],
    cap: ArrayView2<f64>,
    storage: &[f64],
    support: &Support,
) -> Result<FeasibilityReport> {
    let n = rho_t.len();
    if cap.nrows() != n || cap.ncols() != support.len() {
        return Err(Error::ShapeMismatch(cap.dim(), (n, support.len())));
    }
    if storage.len() != support.len() {
        return Err(Error::LengthMismatch(storage.len(), support.len()));
    }
    let mut column_of = vec![None; n];
    for (col, &node) in support.indices().iter().enumerate() {
        column_of[node] = Some(col);
    }
    let nodes: Vec<NodeDiagnostic> = (0..n)
        .map(|i| {
            let mass = rho_t[i];
            let outgoing_capacity: f64 = cap.row(i).sum();
            let storage = column_of[i].map(|c| storage[c]);
            NodeDiagnostic {
                node: i,
                mass,
                outgoing_capacity,
                storage,
                capacity_ok: mass <= 0.0 || outgoing_capacity > mass,
                storage_ok: storage.is_none_or(|s| s > mass),
            }
        })
        .collect();
    let feasible = nodes.iter().all(|d| d.capacity_ok && d.storage_ok);
    Ok(FeasibilityReport { nodes, feasible })
}
