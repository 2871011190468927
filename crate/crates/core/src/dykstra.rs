//! Log-domain Dykstra iterations for one capacity-constrained barycenter step.
//!
//! The projections cycle in a fixed order, one per iteration `k`:
//!
//! | `k mod 4` | set            | couplings      | corrections |
//! |-----------|----------------|----------------|-------------|
//! | 0         | row marginals  | `π1` and `π2`  | `q1`, `q2`  |
//! | 1         | shared columns | both, jointly  | `q3`, `q4`  |
//! | 2         | edge capacity  | `π1` only      | `q5`        |
//! | 3         | node storage   | `π1` and `π2`  | `q6`, `q7`  |
//!
//! Every projection is applied to `π + q` and the correction is then advanced
//! by `π_before − π_after`. Entries that have become `NEG_INF` stay there for
//! good (all four operators are multiplicative or clamp from above), so their
//! corrections are never read again and are left untouched.

use ndarray::{Array1, Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::logdomain::{add, col_lse, lse_slice, LogMatrix, NEG_INF};
use crate::prox::{
    prox_barycenter_columns, prox_capacity, prox_marginal_rows, prox_storage, CouplingPair,
};

pub const DEFAULT_INNER_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_INNER: usize = 50_000;

/// Inputs of one barycenter step. Rows index all `n` nodes, columns the `n*`
/// support nodes.
#[derive(Debug, Clone, Copy)]
pub struct BarycenterProblem<'a> {
    pub rho_t: &'a [f64],
    pub nu: &'a [f64],
    pub cost: ArrayView2<'a, f64>,
    pub capacity: ArrayView2<'a, f64>,
    pub storage: &'a [f64],
}

impl BarycenterProblem<'_> {
    fn validate(&self) -> Result<()> {
        let (rows, cols) = self.cost.dim();
        if self.capacity.dim() != (rows, cols) {
            return Err(Error::ShapeMismatch(self.cost.dim(), self.capacity.dim()));
        }
        if self.rho_t.len() != rows {
            return Err(Error::LengthMismatch(self.rho_t.len(), rows));
        }
        if self.nu.len() != rows {
            return Err(Error::LengthMismatch(self.nu.len(), rows));
        }
        if self.storage.len() != cols {
            return Err(Error::LengthMismatch(self.storage.len(), cols));
        }
        if cols == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DykstraParams {
    pub omega: f64,
    pub gamma: f64,
    pub eps: f64,
    pub max_inner: usize,
    /// `false` runs plain iterated Bregman projections (all corrections pinned to zero).
    pub corrections: bool,
}

impl DykstraParams {
    pub fn new(omega: f64, gamma: f64) -> Self {
        DykstraParams {
            omega,
            gamma,
            eps: DEFAULT_INNER_EPS,
            max_inner: DEFAULT_MAX_INNER,
            corrections: true,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_max_inner(mut self, max_inner: usize) -> Self {
        self.max_inner = max_inner;
        self
    }

    pub fn without_corrections(mut self) -> Self {
        self.corrections = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in (0, 1), got {}",
                self.omega
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterResult {
    /// The barycenter on the support, length `n*`.
    pub p: Vec<f64>,
    /// `n × n*` plan from `ρ_t` to `p`.
    pub pi1: Array2<f64>,
    /// `n × n*` plan from `ν` to `p`.
    pub pi2: Array2<f64>,
    /// Number of single projections performed.
    pub inner_iterations: usize,
    pub converged: bool,
    /// Columns reported half-empty by the last shared-column projection.
    pub half_empty_columns: usize,
}

/// Mutable iterate of the Dykstra cycle.
#[derive(Debug, Clone)]
pub struct DykstraState {
    pair: CouplingPair,
    q: [LogMatrix; 7],
    log_p: Array1<f64>,
    k: usize,
    half_empty: usize,
}

impl DykstraState {
    /// Starts from `π1 = π2 = ξ` (given as `ln ξ`), zero log-corrections and `ln p = 0`.
    pub fn new(log_xi: LogMatrix) -> Self {
        let shape = log_xi.dim();
        DykstraState {
            pair: CouplingPair {
                pi1: log_xi.clone(),
                pi2: log_xi,
            },
            q: std::array::from_fn(|_| LogMatrix::zeros(shape)),
            log_p: Array1::zeros(shape.1),
            k: 0,
            half_empty: 0,
        }
    }

    pub fn pi1(&self) -> &LogMatrix {
        &self.pair.pi1
    }

    pub fn pi2(&self) -> &LogMatrix {
        &self.pair.pi2
    }

    /// Correction `q_{index+1}` (0-based index into `q1..q7`).
    pub fn correction(&self, index: usize) -> &LogMatrix {
        &self.q[index]
    }

    pub fn log_p(&self) -> &Array1<f64> {
        &self.log_p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Performs the projection selected by `k mod 4`, then advances `k`.
    pub fn step(&mut self, ctx: &StepContext, params: &DykstraParams) -> Result<()> {
        let use_q = params.corrections;
        match self.k % 4 {
            0 => {
                corrected(&mut self.pair.pi1, &mut self.q[0], use_q, |m| {
                    prox_marginal_rows(m, ctx.rho_t)
                })?;
                corrected(&mut self.pair.pi2, &mut self.q[1], use_q, |m| {
                    prox_marginal_rows(m, ctx.nu)
                })?;
            }
            1 => {
                let before = self.pair.clone();
                let arg = if use_q {
                    CouplingPair {
                        pi1: add(&self.pair.pi1, &self.q[2])?,
                        pi2: add(&self.pair.pi2, &self.q[3])?,
                    }
                } else {
                    before.clone()
                };
                let out = prox_barycenter_columns(arg, params.omega)?;
                self.log_p = out.log_p;
                self.half_empty = out.half_empty_columns.len();
                self.pair = out.pair;
                if use_q {
                    advance_correction(&mut self.q[2], &before.pi1, &self.pair.pi1);
                    advance_correction(&mut self.q[3], &before.pi2, &self.pair.pi2);
                }
            }
            2 => {
                corrected(&mut self.pair.pi1, &mut self.q[4], use_q, |m| {
                    prox_capacity(m, ctx.log_capacity.view())
                })?;
            }
            _ => {
                corrected(&mut self.pair.pi1, &mut self.q[5], use_q, |m| {
                    prox_storage(m, ctx.storage)
                })?;
                corrected(&mut self.pair.pi2, &mut self.q[6], use_q, |m| {
                    prox_storage(m, ctx.storage)
                })?;
            }
        }
        self.k += 1;
        Ok(())
    }

    /// `(‖ln p − ln(π1ᵀ1)‖₁, |ln(1ᵀ π1 1)|)`.
    pub fn residuals(&self) -> (f64, f64) {
        let cols = col_lse(self.pair.pi1.as_array().view());
        let marginal_gap: f64 = self
            .log_p
            .iter()
            .zip(cols.iter())
            .map(|(&a, &b)| {
                if a == b {
                    0.0
                } else {
                    (a - b).abs()
                }
            })
            .sum();
        let total = lse_slice(cols.as_slice().expect("contiguous"));
        (marginal_gap, total.abs())
    }
}

/// Per-step data shared by every projection, precomputed once.
#[derive(Debug, Clone)]
pub struct StepContext<'a> {
    pub rho_t: &'a [f64],
    pub nu: &'a [f64],
    pub log_capacity: Array2<f64>,
    pub storage: &'a [f64],
}

impl<'a> StepContext<'a> {
    pub fn new(problem: &BarycenterProblem<'a>) -> Self {
        StepContext {
            rho_t: problem.rho_t,
            nu: problem.nu,
            log_capacity: problem.capacity.mapv(f64::ln),
            storage: problem.storage,
        }
    }
}

fn corrected<F>(pi: &mut LogMatrix, q: &mut LogMatrix, use_q: bool, prox: F) -> Result<()>
where
    F: FnOnce(LogMatrix) -> Result<LogMatrix>,
{
    if use_q {
        let arg = add(pi, q)?;
        let after = prox(arg)?;
        advance_correction(q, pi, &after);
        *pi = after;
    } else {
        let arg = std::mem::replace(pi, LogMatrix::zeros((0, 0)));
        *pi = prox(arg)?;
    }
    Ok(())
}

/// `q ← q + (π_before − π_after)` on entries that are still alive.
fn advance_correction(q: &mut LogMatrix, before: &LogMatrix, after: &LogMatrix) {
    let (b, a) = (before.as_array(), after.as_array());
    if let (Some(q), Some(b), Some(a)) = (q.as_array_mut().as_slice_mut(), b.as_slice(), a.as_slice()) {
        for ((q, &b), &a) in q.iter_mut().zip(b).zip(a) {
            if a != NEG_INF {
                *q += b - a;
            }
        }
        return;
    }
    Zip::from(q.as_array_mut())
        .and(before.as_array())
        .and(after.as_array())
        .for_each(|q, &b, &a| {
            if a != NEG_INF {
                *q += b - a;
            }
        });
}

/// Runs the Dykstra cycle from `π1 = π2 = exp(−C/γ)` until both
/// `‖ln p − ln(π1ᵀ1)‖₁ ≤ eps` and `|ln(1ᵀπ1 1)| ≤ eps`, checked after each
/// complete cycle, or until `max_inner` projections have been made.
pub fn dykstra_barycenter_step(
    problem: &BarycenterProblem,
    params: &DykstraParams,
) -> Result<BarycenterResult> {
    problem.validate()?;
    params.validate()?;
    let ctx = StepContext::new(problem);
    let log_xi = LogMatrix::from_log(problem.cost.mapv(|c| -c / params.gamma))?;
    let mut state = DykstraState::new(log_xi);
    let mut converged = false;
    while state.k < params.max_inner {
        if state.k > 0 && state.k % 4 == 0 {
            let (gap, total) = state.residuals();
            if gap <= params.eps && total <= params.eps {
                converged = true;
                break;
            }
        }
        state.step(&ctx, params)?;
    }
    if !converged && state.k % 4 == 0 {
        let (gap, total) = state.residuals();
        converged = gap <= params.eps && total <= params.eps;
    }
    Ok(finish(state, problem.capacity, converged))
}

fn finish(state: DykstraState, capacity: ArrayView2<f64>, converged: bool) -> BarycenterResult {
    let mut pi1 = state.pair.pi1.to_linear();
    // exp(ln c) can land one ulp above c
    pi1.zip_mut_with(&capacity, |x, &c| *x = x.min(c));
    BarycenterResult {
        p: state.log_p.iter().map(|v| v.exp()).collect(),
        pi1,
        pi2: state.pair.pi2.to_linear(),
        inner_iterations: state.k,
        converged,
        half_empty_columns: state.half_empty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    const INF: f64 = f64::INFINITY;

    fn two_node(cap01: f64) -> (Array2<f64>, Array2<f64>) {
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        let cap = array![[INF, cap01], [INF, INF]];
        (cost, cap)
    }

    #[test]
    fn fixed_point_when_already_at_target() {
        let (cost, cap) = two_node(INF);
        let rho = [0.3, 0.7];
        let problem = BarycenterProblem {
            rho_t: &rho,
            nu: &rho,
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        let r = dykstra_barycenter_step(&problem, &DykstraParams::new(0.1, 1e-3)).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.p[0], 0.3, epsilon = 1e-5);
        assert_abs_diff_eq!(r.p[1], 0.7, epsilon = 1e-5);
        assert!(r.pi1[[0, 1]] < 1e-12 && r.pi1[[1, 0]] < 1e-12);
        for (a, b) in r.pi1.iter().zip(r.pi2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5);
        }
    }

    #[test]
    fn adjacent_mass_jumps_in_one_step() {
        let (cost, cap) = two_node(INF);
        let problem = BarycenterProblem {
            rho_t: &[1.0, 0.0],
            nu: &[0.0, 1.0],
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        let r = dykstra_barycenter_step(&problem, &DykstraParams::new(0.1, 1e-3)).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.p[0], 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(r.p[1], 1.0, epsilon = 1e-3);
    }

    #[test]
    fn capacity_halves_the_jump() {
        let (cost, cap) = two_node(0.5);
        let problem = BarycenterProblem {
            rho_t: &[1.0, 0.0],
            nu: &[0.0, 1.0],
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        let params = DykstraParams::new(0.1, 1e-3);
        let r = dykstra_barycenter_step(&problem, &params).unwrap();
        assert!(r.converged);
        assert!(r.pi1[[0, 1]] <= 0.5);
        assert_abs_diff_eq!(r.pi1[[0, 1]], 0.5, epsilon = 1e-5);
        assert_abs_diff_eq!(r.p[0], 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(r.p[1], 0.5, epsilon = 1e-4);
    }

    #[test]
    fn bookkeeping_identity_every_step() {
        let cost = array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let cap = array![[INF, 0.3, 0.0], [0.2, INF, 0.4], [0.0, 0.5, INF]];
        let rho = [0.5, 0.3, 0.2];
        let nu = [0.1, 0.2, 0.7];
        let storage = [INF, 0.45, INF];
        let problem = BarycenterProblem {
            rho_t: &rho,
            nu: &nu,
            cost: cost.view(),
            capacity: cap.view(),
            storage: &storage,
        };
        let params = DykstraParams::new(0.3, 0.5);
        let ctx = StepContext::new(&problem);
        let mut state = DykstraState::new(LogMatrix::from_log(cost.mapv(|c| -c / 0.5)).unwrap());
        let slots: [&[usize]; 4] = [&[0, 1], &[2, 3], &[4], &[5, 6]];
        for _ in 0..200 {
            let before = state.clone();
            state.step(&ctx, &params).unwrap();
            for &qi in slots[before.k() % 4] {
                // q1, q3, q5, q6 correct π1; q2, q4, q7 correct π2
                let coupling = |s: &DykstraState| {
                    if [0, 2, 4, 5].contains(&qi) {
                        s.pi1().clone()
                    } else {
                        s.pi2().clone()
                    }
                };
                let (pb, pa) = (coupling(&before), coupling(&state));
                let (qb, qa) = (before.correction(qi), state.correction(qi));
                for idx in 0..9 {
                    let (i, j) = (idx / 3, idx % 3);
                    let a = pa.as_array()[[i, j]];
                    if a == NEG_INF {
                        continue;
                    }
                    let dq = qa.as_array()[[i, j]] - qb.as_array()[[i, j]];
                    let dp = pb.as_array()[[i, j]] - a;
                    assert!((dq - dp).abs() <= 1e-12 * (1.0 + dp.abs() + qb.as_array()[[i, j]].abs()));
                }
            }
            // untouched corrections keep their values
            for qi in 0..7 {
                if !slots[before.k() % 4].contains(&qi) {
                    assert_eq!(before.correction(qi), state.correction(qi));
                }
            }
        }
    }

    #[test]
    fn blocked_entries_never_revive() {
        let cost = array![[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]];
        let cap = array![[INF, INF, 0.0], [INF, INF, INF], [0.0, INF, INF]];
        let rho = [0.6, 0.4, 0.0];
        let nu = [0.0, 0.0, 1.0];
        let problem = BarycenterProblem {
            rho_t: &rho,
            nu: &nu,
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF, INF],
        };
        let params = DykstraParams::new(0.2, 0.1);
        let ctx = StepContext::new(&problem);
        let mut state = DykstraState::new(LogMatrix::from_log(cost.mapv(|c| -c / 0.1)).unwrap());
        for _ in 0..400 {
            state.step(&ctx, &params).unwrap();
            if state.k() >= 3 {
                assert_eq!(state.pi1().as_array()[[0, 2]], NEG_INF);
                assert_eq!(state.pi1().as_array()[[2, 0]], NEG_INF);
            }
        }
    }

    #[test]
    fn reports_non_convergence() {
        let (cost, cap) = two_node(INF);
        let problem = BarycenterProblem {
            rho_t: &[1.0, 0.0],
            nu: &[0.0, 1.0],
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        let params = DykstraParams::new(0.5, 1e-3).with_eps(1e-15).with_max_inner(8);
        let r = dykstra_barycenter_step(&problem, &params).unwrap();
        assert!(!r.converged);
        assert_eq!(r.inner_iterations, 8);
    }

    #[test]
    fn infeasible_row_propagates() {
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        // row 1 holds mass but may send it nowhere
        let cap = array![[INF, INF], [0.0, 0.0]];
        let problem = BarycenterProblem {
            rho_t: &[0.5, 0.5],
            nu: &[0.5, 0.5],
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        let err = dykstra_barycenter_step(&problem, &DykstraParams::new(0.5, 0.1)).unwrap_err();
        assert!(matches!(err, Error::InfeasibleRow { row: 1, .. }));
    }

    #[test]
    fn rejects_bad_parameters_and_shapes() {
        let (cost, cap) = two_node(INF);
        let problem = BarycenterProblem {
            rho_t: &[1.0, 0.0],
            nu: &[0.0, 1.0],
            cost: cost.view(),
            capacity: cap.view(),
            storage: &[INF, INF],
        };
        assert!(dykstra_barycenter_step(&problem, &DykstraParams::new(1.0, 0.1)).is_err());
        assert!(dykstra_barycenter_step(&problem, &DykstraParams::new(0.5, 0.0)).is_err());
        let bad = BarycenterProblem {
            storage: &[INF],
            ..problem
        };
        assert!(dykstra_barycenter_step(&bad, &DykstraParams::new(0.5, 0.1)).is_err());
    }
}
