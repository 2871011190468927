//! Capacity-constrained Wasserstein attraction flows on directed graphs.
//!
//! Each step of a flow moves mass from the current measure `ρ_t` towards a
//! target `ν` by solving an entropy-regularized barycenter problem between
//! the two, restricted to nodes reachable in one hop and subject to edge
//! capacities and node storage limits. The inner problem is solved with
//! Dykstra's algorithm carried out entirely on logarithms, so that very small
//! regularization parameters do not underflow.

pub mod dykstra;
pub mod error;
pub mod feasibility;
pub mod flow;
pub mod generators;
pub mod graph;
pub mod logdomain;
pub mod measure;
pub mod prox;
pub mod runspec;
pub mod sinkhorn;

pub use dykstra::{dykstra_barycenter_step, BarycenterProblem, BarycenterResult, DykstraParams};
pub use error::{Error, Result};
pub use feasibility::{feasibility_check, FeasibilityReport};
pub use flow::{
    evaluate_schedule, run_batch, run_flow, Event, FlowConfig, FlowStatus, FlowTrace, Mutation,
    Schedule, StepRecord,
};
pub use graph::{shortest_path_costs, CostMatrix, Edge, Graph, Support};
pub use logdomain::LogMatrix;
pub use measure::{tv_distance, Measure};
pub use sinkhorn::sinkhorn_distance;
pub use generators::{generate, GeneratorKind, GeneratorOptions};
pub use runspec::{write_outputs, RunSpec};
