use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use netwa_core::graph::{build_capacity_matrix, new_support};
use netwa_core::{
    feasibility_check, generate, run_flow, write_outputs, FlowStatus, GeneratorKind,
    GeneratorOptions, RunSpec, Schedule,
};

/// Overrides the output directory from the spec (the `--out` flag still wins).
const OUT_DIR_ENV: &str = "NETWA_OUT_DIR";

#[derive(Parser)]
#[command(name = "netwa", version, about = "Capacity-constrained Wasserstein attraction flows on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a flow from a JSON spec and write trace.csv / snapshots.json.
    Run(RunArgs),
    /// Write a ready-to-run spec for a built-in experiment.
    Generate(GenerateArgs),
    /// Validate a spec and report whether its initial state is feasible.
    Check {
        spec: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    spec: PathBuf,
    /// Outer tolerance on the TV distance to the target.
    #[arg(long)]
    eps: Option<f64>,
    /// Inner (Dykstra) tolerance.
    #[arg(long)]
    eps_inner: Option<f64>,
    /// Constant omega, replacing the spec's schedule.
    #[arg(long)]
    omega: Option<f64>,
    /// Constant gamma, replacing the spec's schedule.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    /// Also report an independent Sinkhorn cost between consecutive measures.
    #[arg(long)]
    sinkhorn_costs: bool,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated constant omegas; runs them in parallel, one
    /// subdirectory `omega_<value>` per run.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    sweep_omega: Vec<f64>,
}

#[derive(Args)]
struct GenerateArgs {
    /// star, path, grid, cycle, two_path, small_dwn or random.
    kind: String,
    /// Size parameter (grid is k x k).
    k: Option<usize>,
    /// Capacity on every link (two_path).
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace the default measures by seeded random ones.
    #[arg(long)]
    random_supports: bool,
    /// Output file; stdout if omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Generate(args) => cmd_generate(&args).map(|_| 0),
        Command::Check { spec } => cmd_check(&spec),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn status_code(status: FlowStatus) -> u8 {
    match status {
        FlowStatus::Converged => 0,
        FlowStatus::MaxOuter => 2,
        FlowStatus::Infeasible => 3,
    }
}

fn apply_overrides(spec: &mut RunSpec, args: &RunArgs) {
    if let Some(v) = args.eps {
        spec.eps_outer = v;
    }
    if let Some(v) = args.eps_inner {
        spec.eps_inner = v;
    }
    if let Some(v) = args.omega {
        spec.omega = Schedule::constant(v);
    }
    if let Some(v) = args.gamma {
        spec.gamma = Schedule::constant(v);
    }
    if let Some(v) = args.max_outer {
        spec.max_outer = v;
    }
    if let Some(v) = args.max_inner {
        spec.max_inner = v;
    }
    if args.sinkhorn_costs {
        spec.output.sinkhorn_costs = true;
    }
}

fn output_dir(spec: &RunSpec, base: &Path, flag: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    base.join(&spec.output.dir)
}

fn run_one(spec: &RunSpec, base: &Path, dir: &Path) -> anyhow::Result<FlowStatus> {
    let config = spec.to_flow_config(base)?;
    let trace = run_flow(&config)?;
    write_outputs(&trace, &spec.output, dir)
        .with_context(|| format!("writing outputs to {}", dir.display()))?;
    println!(
        "{}: {} after {} steps, tv {:.3e}",
        dir.display(),
        trace.status.as_str(),
        trace.steps.len(),
        trace.final_tv()
    );
    if let Some(d) = &trace.diagnostic {
        eprintln!("{d}");
    }
    Ok(trace.status)
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<u8> {
    let (mut spec, base) = RunSpec::load(&args.spec)?;
    apply_overrides(&mut spec, args);
    let dir = output_dir(&spec, &base, args.out.as_deref());
    if args.sweep_omega.is_empty() {
        return Ok(status_code(run_one(&spec, &base, &dir)?));
    }
    let runs: Vec<(RunSpec, PathBuf)> = args
        .sweep_omega
        .iter()
        .map(|&w| {
            let mut s = spec.clone();
            s.omega = Schedule::constant(w);
            (s, dir.join(format!("omega_{w}")))
        })
        .collect();
    let results: Vec<anyhow::Result<FlowStatus>> = runs
        .par_iter()
        .map(|(s, d)| run_one(s, &base, d))
        .collect();
    let mut code = 0;
    let mut failed = false;
    for ((_, d), r) in runs.iter().zip(results) {
        match r {
            Ok(status) => code = code.max(status_code(status)),
            Err(e) => {
                eprintln!("error: {}: {e:#}", d.display());
                failed = true;
            }
        }
    }
    Ok(if failed { 1 } else { code })
}

fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let kind: GeneratorKind = args.kind.parse()?;
    let mut opts = GeneratorOptions {
        seed: args.seed,
        random_supports: args.random_supports,
        cap: args.cap,
        ..Default::default()
    };
    if let Some(k) = args.k {
        opts.k = k;
    }
    let spec = generate(kind, &opts)?;
    let text = spec.to_json()?;
    match &args.out {
        Some(path) => {
            fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_check(path: &Path) -> anyhow::Result<u8> {
    let (spec, base) = RunSpec::load(path)?;
    let config = spec.to_flow_config(&base)?;
    let rho = config.rho0.as_slice();
    let adj = config.graph.adjacency();
    let support = new_support(rho, &adj, config.zero_threshold)?;
    let cap = build_capacity_matrix(&config.graph, &adj, &support);
    let storage = support.gather(config.graph.storage());
    let report = feasibility_check(rho, cap.view(), &storage, &support)?;
    print!("{report}");
    if !report.feasible {
        bail!("initial state does not satisfy the sufficient feasibility conditions");
    }
    Ok(0)
}
