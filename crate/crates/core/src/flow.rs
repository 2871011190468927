//! The outer attraction loop: one constrained barycenter solve per step,
//! parameter schedules, and mid-run mutations of the problem.

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dykstra::{
    dykstra_barycenter_step, BarycenterProblem, DykstraParams, DEFAULT_INNER_EPS,
    DEFAULT_MAX_INNER,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_capacity_matrix, new_support, shortest_path_costs, CostMatrix, Edge, Graph,
    DEFAULT_ZERO_THRESHOLD,
};
use crate::measure::{negative_entropy, transport_cost, tv_distance, Measure};
use crate::sinkhorn::sinkhorn_distance;

pub const DEFAULT_OUTER_EPS: f64 = 1e-3;
pub const DEFAULT_MAX_OUTER: usize = 500;
pub const DEFAULT_GAMMA: f64 = 1e-3;
/// Bounds applied to the decaying schedules unless overridden.
pub const DEFAULT_CLAMP: [f64; 2] = [1e-3, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant { value: f64 },
    InverseT,
    InverseLogT,
}

/// A parameter as a function of the step counter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    /// `[min, max]`. When absent, constants are used as given and the decaying
    /// kinds are clamped to [`DEFAULT_CLAMP`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<[f64; 2]>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            kind: ScheduleKind::Constant { value },
            clamp: None,
        }
    }

    pub fn inverse_t() -> Self {
        Schedule {
            kind: ScheduleKind::InverseT,
            clamp: None,
        }
    }

    pub fn inverse_log_t() -> Self {
        Schedule {
            kind: ScheduleKind::InverseLogT,
            clamp: None,
        }
    }

    pub fn with_clamp(mut self, min: f64, max: f64) -> Self {
        self.clamp = Some([min, max]);
        self
    }

    fn bounds(&self) -> [f64; 2] {
        match (self.clamp, self.kind) {
            (Some(c), _) => c,
            (None, ScheduleKind::Constant { .. }) => [f64::NEG_INFINITY, f64::INFINITY],
            (None, _) => DEFAULT_CLAMP,
        }
    }

    fn validate(&self, name: &str, upper_open: Option<f64>) -> Result<()> {
        let [lo, hi] = self.bounds();
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::Config(format!("{name} clamp [{lo}, {hi}] is not ordered")));
        }
        let check = |v: f64, what: &str| -> Result<()> {
            let ok = v > 0.0 && upper_open.is_none_or(|u| v < u) && v.is_finite();
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {what} {v} is out of range")))
            }
        };
        if let ScheduleKind::Constant { value } = self.kind {
            check(value.clamp(lo, hi), "value")?;
        } else {
            check(lo, "clamp minimum")?;
            check(hi, "clamp maximum")?;
        }
        Ok(())
    }
}

/// `constant → value`, `inverse_t → 1/(t+2)`, `inverse_log_t → 1/ln(t+2)`,
/// then clamped.
pub fn evaluate_schedule(s: &Schedule, t: usize) -> f64 {
    let x = (t + 2) as f64;
    let v = match s.kind {
        ScheduleKind::Constant { value } => value,
        ScheduleKind::InverseT => 1.0 / x,
        ScheduleKind::InverseLogT => 1.0 / x.ln(),
    };
    let [lo, hi] = s.bounds();
    v.clamp(lo, hi)
}

/// A change to the problem applied between two steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Mutation {
    ReplaceNu {
        nu: Vec<f64>,
    },
    ReplaceRho {
        rho: Vec<f64>,
    },
    RemoveEdge {
        src: usize,
        dst: usize,
        /// Also remove `dst → src`.
        #[serde(default)]
        both: bool,
    },
    AddEdge {
        src: usize,
        dst: usize,
        weight: f64,
        #[serde(default)]
        capacity: Option<f64>,
        #[serde(default)]
        both: bool,
    },
    SetCapacity {
        src: usize,
        dst: usize,
        /// `None` lifts the bound.
        capacity: Option<f64>,
        #[serde(default)]
        both: bool,
    },
    SetStorage {
        node: usize,
        storage: Option<f64>,
    },
    SetOmega {
        value: f64,
    },
}

impl Mutation {
    pub fn name(&self) -> &'static str {
        match self {
            Mutation::ReplaceNu { .. } => "replace_nu",
            Mutation::ReplaceRho { .. } => "replace_rho",
            Mutation::RemoveEdge { .. } => "remove_edge",
            Mutation::AddEdge { .. } => "add_edge",
            Mutation::SetCapacity { .. } => "set_capacity",
            Mutation::SetStorage { .. } => "set_storage",
            Mutation::SetOmega { .. } => "set_omega",
        }
    }

    fn changes_topology(&self) -> bool {
        matches!(self, Mutation::RemoveEdge { .. } | Mutation::AddEdge { .. })
    }
}

/// A mutation applied right before trace row `at` is computed (`at ≥ 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub at: usize,
    #[serde(flatten)]
    pub mutation: Mutation,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub graph: Graph,
    pub rho0: Measure,
    pub nu: Measure,
    pub omega: Schedule,
    pub gamma: Schedule,
    pub eps_outer: f64,
    pub eps_inner: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub zero_threshold: f64,
    /// Also report an unconstrained entropic distance between consecutive measures.
    pub sinkhorn_costs: bool,
    /// Keep each step's plan and capacity matrix in the trace.
    pub keep_plans: bool,
    pub events: Vec<Event>,
}

impl FlowConfig {
    pub fn new(graph: Graph, rho0: Measure, nu: Measure, omega: Schedule) -> Self {
        FlowConfig {
            graph,
            rho0,
            nu,
            omega,
            gamma: Schedule::constant(DEFAULT_GAMMA),
            eps_outer: DEFAULT_OUTER_EPS,
            eps_inner: DEFAULT_INNER_EPS,
            max_outer: DEFAULT_MAX_OUTER,
            max_inner: DEFAULT_MAX_INNER,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            sinkhorn_costs: false,
            keep_plans: false,
            events: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n();
        if self.rho0.len() != n {
            return Err(Error::Config(format!(
                "rho0 has length {}, graph has {n} nodes",
                self.rho0.len()
            )));
        }
        if self.nu.len() != n {
            return Err(Error::Config(format!(
                "nu has length {}, graph has {n} nodes",
                self.nu.len()
            )));
        }
        self.omega.validate("omega", Some(1.0))?;
        self.gamma.validate("gamma", None)?;
        for (name, v) in [("eps_outer", self.eps_outer), ("eps_inner", self.eps_inner)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.zero_threshold >= 0.0) {
            return Err(Error::Config("zero_threshold must be >= 0".into()));
        }
        let mut prev = 0;
        for e in &self.events {
            if e.at <= prev {
                return Err(Error::Config(format!(
                    "event indices must be >= 1 and strictly increasing (got {} after {prev})",
                    e.at
                )));
            }
            prev = e.at;
            match &e.mutation {
                Mutation::ReplaceNu { nu: v } | Mutation::ReplaceRho { rho: v } => {
                    if v.len() != n {
                        return Err(Error::Config(format!(
                            "{} at t={} has length {}, graph has {n} nodes",
                            e.mutation.name(),
                            e.at,
                            v.len()
                        )));
                    }
                    Measure::new(v.clone())?;
                }
                Mutation::SetOmega { value } => {
                    Schedule::constant(*value).validate("omega", Some(1.0))?;
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxOuter,
    Infeasible,
}

impl FlowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowStatus::Converged => "converged",
            FlowStatus::MaxOuter => "max_outer",
            FlowStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub support: Vec<usize>,
    /// `n × n*` plan from the previous measure onto the support.
    pub pi1: Array2<f64>,
    pub capacity: Array2<f64>,
}

/// Trace row `t`: the step from `ρ_{t−1}` to `ρ_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub rho: Vec<f64>,
    /// `½‖ν − ρ_t‖₁` against the target in force for this step.
    pub tv: f64,
    /// `⟨C, π1⟩ + γ H(π1)` of the converged plan.
    pub cost_plan: f64,
    pub cost_sinkhorn: Option<f64>,
    pub omega: f64,
    pub gamma: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub wall_ms: f64,
    pub support_size: usize,
    pub event: Option<&'static str>,
    pub plan: Option<StepPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub rho0: Vec<f64>,
    /// TV between `ρ0` and the initial target.
    pub tv0: f64,
    pub steps: Vec<StepRecord>,
    pub status: FlowStatus,
    /// Set when the run stopped on an infeasible step.
    pub diagnostic: Option<String>,
}

impl FlowTrace {
    pub fn final_rho(&self) -> &[f64] {
        self.steps.last().map_or(&self.rho0, |s| &s.rho)
    }

    pub fn final_tv(&self) -> f64 {
        self.steps.last().map_or(self.tv0, |s| s.tv)
    }

    /// `ρ0, ρ1, …` in order.
    pub fn snapshots(&self) -> Vec<&[f64]> {
        std::iter::once(self.rho0.as_slice())
            .chain(self.steps.iter().map(|s| s.rho.as_slice()))
            .collect()
    }
}

struct FlowState {
    graph: Graph,
    cost: CostMatrix,
    nu: Vec<f64>,
    rho: Vec<f64>,
    omega: Schedule,
}

impl FlowState {
    fn apply(&mut self, m: &Mutation) -> Result<()> {
        let pairs = |src: usize, dst: usize, both: bool| {
            let mut v = vec![(src, dst)];
            if both {
                v.push((dst, src));
            }
            v
        };
        match m {
            Mutation::ReplaceNu { nu } => self.nu = nu.clone(),
            Mutation::ReplaceRho { rho } => self.rho = rho.clone(),
            Mutation::RemoveEdge { src, dst, both } => {
                for (a, b) in pairs(*src, *dst, *both) {
                    self.graph.remove_edge(a, b)?;
                }
            }
            Mutation::AddEdge {
                src,
                dst,
                weight,
                capacity,
                both,
            } => {
                for (a, b) in pairs(*src, *dst, *both) {
                    let e = Edge::new(a, b, *weight).with_capacity(capacity.unwrap_or(f64::INFINITY));
                    self.graph.add_edge(e)?;
                }
            }
            Mutation::SetCapacity {
                src,
                dst,
                capacity,
                both,
            } => {
                for (a, b) in pairs(*src, *dst, *both) {
                    self.graph
                        .set_capacity(a, b, capacity.unwrap_or(f64::INFINITY))?;
                }
            }
            Mutation::SetStorage { node, storage } => {
                self.graph
                    .set_storage(*node, storage.unwrap_or(f64::INFINITY))?;
            }
            Mutation::SetOmega { value } => self.omega = Schedule::constant(*value),
        }
        if m.changes_topology() {
            self.cost = shortest_path_costs(&self.graph)?;
        }
        Ok(())
    }
}

/// Runs the flow from `rho0` until `½‖ν − ρ_t‖₁ ≤ eps_outer` or `max_outer`
/// steps. Pending events keep the loop alive until they have been applied.
pub fn run_flow(config: &FlowConfig) -> Result<FlowTrace> {
    config.validate()?;
    let mut state = FlowState {
        cost: shortest_path_costs(&config.graph)?,
        graph: config.graph.clone(),
        nu: config.nu.as_slice().to_vec(),
        rho: config.rho0.as_slice().to_vec(),
        omega: config.omega,
    };
    let tv0 = tv_distance(&state.rho, &state.nu)?;
    let mut trace = FlowTrace {
        rho0: state.rho.clone(),
        tv0,
        steps: Vec::new(),
        status: FlowStatus::MaxOuter,
        diagnostic: None,
    };
    let mut events = config.events.iter().peekable();
    let mut tv = tv0;
    let mut t = 0;
    loop {
        if tv <= config.eps_outer && events.peek().is_none() {
            trace.status = FlowStatus::Converged;
            break;
        }
        if t >= config.max_outer {
            trace.status = FlowStatus::MaxOuter;
            break;
        }
        let started = Instant::now();
        let mut event = None;
        if let Some(e) = events.next_if(|e| e.at == t + 1) {
            state
                .apply(&e.mutation)
                .map_err(|err| Error::Config(format!("{} at t={}: {err}", e.mutation.name(), e.at)))?;
            event = Some(e.mutation.name());
        }

        let adj = state.graph.adjacency();
        let support = new_support(&state.rho, &adj, config.zero_threshold)?;
        let cost = state.cost.columns(&support);
        let capacity = build_capacity_matrix(&state.graph, &adj, &support);
        let storage = support.gather(state.graph.storage());
        let omega = evaluate_schedule(&state.omega, t);
        let gamma = evaluate_schedule(&config.gamma, t);
        let params = DykstraParams::new(omega, gamma)
            .with_eps(config.eps_inner)
            .with_max_inner(config.max_inner);
        let problem = BarycenterProblem {
            rho_t: &state.rho,
            nu: &state.nu,
            cost: cost.view(),
            capacity: capacity.view(),
            storage: &storage,
        };
        let result = match dykstra_barycenter_step(&problem, &params) {
            Ok(r) => r,
            Err(err @ Error::InfeasibleRow { .. }) => {
                trace.status = FlowStatus::Infeasible;
                trace.diagnostic = Some(format!("step {}: {err}", t + 1));
                break;
            }
            Err(err) => return Err(err),
        };

        let next = support.scatter(&result.p, state.graph.n());
        if result.converged {
            let sum: f64 = next.iter().sum();
            let tolerance = 10.0 * config.eps_inner;
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::MassDrift { sum, tolerance });
            }
        }
        let cost_plan = transport_cost(result.pi1.view(), cost.view())?
            + gamma * negative_entropy(result.pi1.view());
        let cost_sinkhorn = if config.sinkhorn_costs {
            sinkhorn_distance(
                &state.rho,
                &next,
                state.cost.as_array().view(),
                gamma,
                config.eps_inner,
                config.max_inner,
            )
            .ok()
            .map(|r| r.value)
        } else {
            None
        };
        tv = tv_distance(&next, &state.nu)?;
        t += 1;
        trace.steps.push(StepRecord {
            t,
            rho: next.clone(),
            tv,
            cost_plan,
            cost_sinkhorn,
            omega,
            gamma,
            inner_iterations: result.inner_iterations,
            inner_converged: result.converged,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            support_size: support.len(),
            event,
            plan: config.keep_plans.then(|| StepPlan {
                support: support.indices().to_vec(),
                pi1: result.pi1,
                capacity,
            }),
        });
        state.rho = next;
    }
    Ok(trace)
}

/// Runs independent flows concurrently; results keep the input order.
pub fn run_batch(configs: &[FlowConfig]) -> Vec<Result<FlowTrace>> {
    configs.par_iter().map(run_flow).collect()
}
