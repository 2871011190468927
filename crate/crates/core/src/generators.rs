//! Ready-to-run instances: small showcase graphs and larger random benchmarks.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::{Event, Mutation, Schedule};
use crate::graph::GraphFile;
use crate::runspec::RunSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Star,
    Path,
    Grid,
    Cycle,
    TwoPath,
    SmallDwn,
    Random,
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "star" => GeneratorKind::Star,
            "path" => GeneratorKind::Path,
            "grid" => GeneratorKind::Grid,
            "cycle" => GeneratorKind::Cycle,
            "two_path" => GeneratorKind::TwoPath,
            "small_dwn" => GeneratorKind::SmallDwn,
            "random" => GeneratorKind::Random,
            other => return Err(Error::UnknownKind(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    /// Size parameter; ignored by `two_path` and `small_dwn`.
    pub k: usize,
    pub seed: u64,
    /// Replace the default measures by seeded random ones.
    pub random_supports: bool,
    /// Link capacity for `two_path`.
    pub cap: Option<f64>,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            k: 7,
            seed: 0,
            random_supports: false,
            cap: None,
        }
    }
}

pub fn generate(kind: GeneratorKind, opts: &GeneratorOptions) -> Result<RunSpec> {
    let needs_k = !matches!(kind, GeneratorKind::TwoPath | GeneratorKind::SmallDwn);
    if needs_k && opts.k < 2 {
        return Err(Error::InvalidParameter(format!("k must be >= 2, got {}", opts.k)));
    }
    let mut spec = match kind {
        GeneratorKind::Star => star(opts.k),
        GeneratorKind::Path => path(opts.k)?,
        GeneratorKind::Grid => grid(opts.k),
        GeneratorKind::Cycle => cycle(opts.k),
        GeneratorKind::TwoPath => two_path(opts.cap),
        GeneratorKind::SmallDwn => small_dwn(),
        GeneratorKind::Random => random_graph(opts.k, opts.seed),
    };
    if opts.random_supports {
        let n = spec.rho0.len();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
        spec.rho0 = random_measure(n, &mut rng);
        spec.nu = random_measure(n, &mut rng);
    }
    Ok(spec)
}

fn dirac(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn uniform_on(n: usize, nodes: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &i in nodes {
        v[i] = 1.0 / nodes.len() as f64;
    }
    v
}

fn undirected(n: usize, edges: Vec<(usize, usize, f64, Option<f64>)>) -> GraphFile {
    GraphFile {
        n,
        edges,
        storage: None,
        undirected: true,
    }
}

/// Each node joins the support with probability 1/2 and gets a uniform weight;
/// at least one node is always kept.
fn random_measure(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Center `0` joined to `k − 1` leaves; all mass starts at the center and ends
/// spread evenly over the leaves.
pub fn star(k: usize) -> RunSpec {
    let edges = (1..k).map(|i| (0, i, 1.0, None)).collect();
    let leaves: Vec<usize> = (1..k).collect();
    let mut spec = RunSpec::new(
        undirected(k, edges),
        dirac(k, 0),
        uniform_on(k, &leaves),
        Schedule::constant(0.1),
    );
    spec.description = Some(format!("star with {} leaves, center to leaves", k - 1));
    spec
}

/// Mass on the middle node(s) moving to the two ends, with storage 0.3 on node `k − 3`.
pub fn path(k: usize) -> Result<RunSpec> {
    if k < 4 {
        return Err(Error::InvalidParameter(format!("path needs k >= 4, got {k}")));
    }
    let edges = (0..k - 1).map(|i| (i, i + 1, 1.0, None)).collect();
    let mut graph = undirected(k, edges);
    let mut storage = vec![None; k];
    storage[k - 3] = Some(0.3);
    graph.storage = Some(storage);
    let middle: Vec<usize> = if k % 2 == 1 {
        vec![k / 2]
    } else {
        vec![k / 2 - 1, k / 2]
    };
    let mut spec = RunSpec::new(
        graph,
        uniform_on(k, &middle),
        uniform_on(k, &[0, k - 1]),
        Schedule::constant(0.1),
    );
    spec.description = Some(format!("path of {k} nodes, middle to ends, storage 0.3 at node {}", k - 3));
    Ok(spec)
}

/// Source `0`, target `3`. The direct route `0-1-2-3` has unit weights, the
/// detour `0-4-5-3` weights 1.2, so it is longer but still brings mass closer.
pub fn two_path(cap: Option<f64>) -> RunSpec {
    let edges = vec![
        (0, 1, 1.0, cap),
        (1, 2, 1.0, cap),
        (2, 3, 1.0, cap),
        (0, 4, 1.2, cap),
        (4, 5, 1.2, cap),
        (5, 3, 1.2, cap),
    ];
    let mut spec = RunSpec::new(
        undirected(6, edges),
        dirac(6, 0),
        dirac(6, 3),
        Schedule::constant(0.1),
    );
    spec.description = Some(match cap {
        Some(c) => format!("two routes from node 0 to node 3, link capacity {c}"),
        None => "two routes from node 0 to node 3, no capacities".into(),
    });
    spec
}

/// `k × k` lattice, node `r·k + c`; corner to opposite corner.
pub fn grid(k: usize) -> RunSpec {
    let mut edges = Vec::new();
    for r in 0..k {
        for c in 0..k {
            let i = r * k + c;
            if c + 1 < k {
                edges.push((i, i + 1, 1.0, None));
            }
            if r + 1 < k {
                edges.push((i, i + k, 1.0, None));
            }
        }
    }
    let n = k * k;
    let mut spec = RunSpec::new(
        undirected(n, edges),
        dirac(n, 0),
        dirac(n, n - 1),
        Schedule::inverse_t(),
    );
    spec.gamma = Schedule::constant(0.1);
    spec.description = Some(format!("{k}x{k} grid"));
    spec
}

/// Ring of `k` nodes; node `0` to the antipodal node.
pub fn cycle(k: usize) -> RunSpec {
    let edges = (0..k).map(|i| (i, (i + 1) % k, 1.0, None)).collect();
    let mut graph = undirected(k, edges);
    if k == 2 {
        graph.edges.truncate(1);
    }
    let mut spec = RunSpec::new(graph, dirac(k, 0), dirac(k, k / 2), Schedule::inverse_t());
    spec.gamma = Schedule::constant(0.1);
    spec.description = Some(format!("cycle of {k} nodes"));
    spec
}

/// Seeded random spanning tree plus about `k/2` extra links, unit weights.
pub fn random_graph(k: usize, seed: u64) -> RunSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    let mut present = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for idx in 1..k {
        let a = order[idx];
        let b = order[rng.gen_range(0..idx)];
        present.insert((a.min(b), a.max(b)));
        edges.push((a, b, 1.0, None));
    }
    let max_edges = k * (k - 1) / 2;
    let mut extra = (k / 2).min(max_edges - (k - 1));
    while extra > 0 {
        let a = rng.gen_range(0..k);
        let b = rng.gen_range(0..k);
        if a != b && present.insert((a.min(b), a.max(b))) {
            edges.push((a, b, 1.0, None));
            extra -= 1;
        }
    }
    let mut spec = RunSpec::new(
        undirected(k, edges),
        dirac(k, order[0]),
        dirac(k, order[k - 1]),
        Schedule::inverse_t(),
    );
    spec.gamma = Schedule::constant(0.1);
    spec.description = Some(format!("random connected graph, {k} nodes, seed {seed}"));
    spec
}

/// Synthetic water network: two sources feed a pumping/valve layer, three
/// tanks and four demand sectors. Unit weights; the real topology's weights
/// are not available, so this only mirrors its layered structure.
///
/// Nodes: 0–1 sources, 2–3 actuators, 4–6 tanks, 7–10 demand sectors.
pub fn small_dwn() -> RunSpec {
    let links = [
        (0, 2),
        (1, 3),
        (2, 3),
        (2, 4),
        (2, 5),
        (3, 5),
        (3, 6),
        (4, 7),
        (4, 8),
        (5, 8),
        (5, 9),
        (6, 9),
        (6, 10),
        (4, 5),
    ];
    let edges = links.iter().map(|&(a, b)| (a, b, 1.0, None)).collect();
    let mut spec = RunSpec::new(
        undirected(11, edges),
        uniform_on(11, &[0, 1]),
        vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1, 0.2, 0.2, 0.15, 0.15],
        Schedule::constant(0.75),
    );
    spec.events = vec![Event {
        at: 2,
        mutation: Mutation::SetOmega { value: 0.1 },
    }];
    spec.description = Some(
        "synthetic small water network (sources, actuators, tanks, demand sectors); \
         omega 0.75 for the first step, then 0.1"
            .into(),
    );
    spec
}
