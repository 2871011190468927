//! JSON run specifications and the files a run writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dykstra::{DEFAULT_INNER_EPS, DEFAULT_MAX_INNER};
use crate::error::{Error, Result};
use crate::flow::{
    Event, FlowConfig, FlowTrace, Schedule, DEFAULT_GAMMA, DEFAULT_MAX_OUTER, DEFAULT_OUTER_EPS,
};
use crate::graph::{Graph, GraphFile, DEFAULT_ZERO_THRESHOLD};
use crate::measure::Measure;

pub const TRACE_HEADER: &str =
    "t,tv,cost_plan,cost_sinkhorn,omega,gamma,inner_iters,wall_ms,support_size,event";

/// Either an inline graph or a path to a graph file, relative to the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Inline(GraphFile),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub trace_csv: bool,
    #[serde(default = "yes")]
    pub snapshots_json: bool,
    #[serde(default)]
    pub sinkhorn_costs: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: default_out_dir(),
            trace_csv: true,
            snapshots_json: true,
            sinkhorn_costs: false,
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Free-form note, e.g. what the instance reproduces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: GraphSource,
    pub rho0: Vec<f64>,
    pub nu: Vec<f64>,
    pub omega: Schedule,
    #[serde(default = "default_gamma")]
    pub gamma: Schedule,
    #[serde(default = "default_eps_outer")]
    pub eps_outer: f64,
    #[serde(default = "default_eps_inner")]
    pub eps_inner: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_max_inner")]
    pub max_inner: usize,
    #[serde(default = "default_zero_threshold")]
    pub zero_threshold: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<Event>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_gamma() -> Schedule {
    Schedule::constant(DEFAULT_GAMMA)
}
fn default_eps_outer() -> f64 {
    DEFAULT_OUTER_EPS
}
fn default_eps_inner() -> f64 {
    DEFAULT_INNER_EPS
}
fn default_max_outer() -> usize {
    DEFAULT_MAX_OUTER
}
fn default_max_inner() -> usize {
    DEFAULT_MAX_INNER
}
fn default_zero_threshold() -> f64 {
    DEFAULT_ZERO_THRESHOLD
}

impl RunSpec {
    pub fn new(graph: GraphFile, rho0: Vec<f64>, nu: Vec<f64>, omega: Schedule) -> Self {
        RunSpec {
            description: None,
            graph: GraphSource::Inline(graph),
            rho0,
            nu,
            omega,
            gamma: default_gamma(),
            eps_outer: DEFAULT_OUTER_EPS,
            eps_inner: DEFAULT_INNER_EPS,
            max_outer: DEFAULT_MAX_OUTER,
            max_inner: DEFAULT_MAX_INNER,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            events: Vec::new(),
            output: OutputSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a spec; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let spec = Self::from_json(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((spec, base))
    }

    pub fn graph(&self, base: &Path) -> Result<Graph> {
        let file = match &self.graph {
            GraphSource::Inline(g) => g.clone(),
            GraphSource::Path(p) => {
                let full = base.join(p);
                let text = fs::read_to_string(&full)
                    .map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", full.display())))?
            }
        };
        Graph::try_from(file)
    }

    /// Validates everything and builds the solver configuration.
    pub fn to_flow_config(&self, base: &Path) -> Result<FlowConfig> {
        let graph = self.graph(base)?;
        let rho0 = Measure::new(self.rho0.clone())
            .map_err(|e| Error::Config(format!("rho0: {e}")))?;
        let nu = Measure::new(self.nu.clone()).map_err(|e| Error::Config(format!("nu: {e}")))?;
        let config = FlowConfig {
            graph,
            rho0,
            nu,
            omega: self.omega,
            gamma: self.gamma,
            eps_outer: self.eps_outer,
            eps_inner: self.eps_inner,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            zero_threshold: self.zero_threshold,
            sinkhorn_costs: self.output.sinkhorn_costs,
            keep_plans: false,
            events: self.events.clone(),
        };
        config.validate()?;
        Ok(config)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One line per step under [`TRACE_HEADER`]; absent values are left empty.
pub fn write_trace_csv<W: Write>(trace: &FlowTrace, mut w: W) -> Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for s in &trace.steps {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{:.3},{},{}",
            s.t,
            s.tv,
            s.cost_plan,
            opt(s.cost_sinkhorn),
            s.omega,
            s.gamma,
            s.inner_iterations,
            s.wall_ms,
            s.support_size,
            s.event.unwrap_or("")
        )?;
    }
    Ok(())
}

/// `[ρ0, ρ1, …]` as a JSON array of arrays.
pub fn write_snapshots_json<W: Write>(trace: &FlowTrace, w: W) -> Result<()> {
    serde_json::to_writer(w, &trace.snapshots())?;
    Ok(())
}

/// Writes the enabled outputs into `dir`, creating it if needed.
pub fn write_outputs(trace: &FlowTrace, output: &OutputSpec, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    if output.trace_csv {
        let f = fs::File::create(dir.join("trace.csv"))?;
        write_trace_csv(trace, std::io::BufWriter::new(f))?;
    }
    if output.snapshots_json {
        let f = fs::File::create(dir.join("snapshots.json"))?;
        write_snapshots_json(trace, std::io::BufWriter::new(f))?;
    }
    Ok(())
}
