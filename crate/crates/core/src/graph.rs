//! Directed weighted graphs with per-edge capacities and per-node storage.
//!
//! Node indices run over `0..n`. Capacities and storage use `f64::INFINITY`
//! for "unbounded". The adjacency used for support restriction always carries
//! self-loops (mass may stay where it is).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default threshold below which `(Ā ρ)_j` is treated as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    /// Cost per unit of mass sent over the edge.
    pub weight: f64,
    /// Upper bound on mass sent over the edge in one step.
    pub capacity: f64,
}

impl Edge {
    pub fn new(src: usize, dst: usize, weight: f64) -> Self {
        Edge {
            src,
            dst,
            weight,
            capacity: f64::INFINITY,
        }
    }

    pub fn with_capacity(mut self, capacity: f64) -> Self {
        self.capacity = capacity;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    storage: Vec<f64>,
}

impl Graph {
    /// Builds and validates a graph. `storage` of `None` means every node is unbounded.
    pub fn new(n: usize, edges: Vec<Edge>, storage: Option<Vec<f64>>) -> Result<Self> {
        let storage = storage.unwrap_or_else(|| vec![f64::INFINITY; n]);
        let g = Graph { n, edges, storage };
        g.validate()?;
        Ok(g)
    }

    /// Same as [`Graph::new`] but every edge is inserted in both directions.
    pub fn undirected(n: usize, edges: Vec<Edge>, storage: Option<Vec<f64>>) -> Result<Self> {
        let mut both = Vec::with_capacity(edges.len() * 2);
        for e in edges {
            both.push(e);
            both.push(Edge { src: e.dst, dst: e.src, ..e });
        }
        Graph::new(n, both, storage)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn storage(&self) -> &[f64] {
        &self.storage
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.src == src && e.dst == dst)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut seen = HashMap::with_capacity(self.edges.len());
        for e in &self.edges {
            Self::check_edge(self.n, e)?;
            if seen.insert((e.src, e.dst), ()).is_some() {
                return Err(Error::DuplicateEdge {
                    src: e.src,
                    dst: e.dst,
                });
            }
        }
        if self.storage.len() != self.n {
            return Err(Error::StorageLength {
                expected: self.n,
                got: self.storage.len(),
            });
        }
        for (node, &value) in self.storage.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(Error::InvalidStorage { node, value });
            }
        }
        self.check_connected()
    }

    fn check_edge(n: usize, e: &Edge) -> Result<()> {
        if e.src >= n || e.dst >= n {
            return Err(Error::NodeOutOfRange {
                src: e.src,
                dst: e.dst,
                n,
            });
        }
        if e.src == e.dst {
            return Err(Error::SelfLoop {
                src: e.src,
                dst: e.dst,
            });
        }
        if !e.weight.is_finite() || e.weight < 0.0 {
            return Err(Error::InvalidWeight {
                src: e.src,
                dst: e.dst,
                weight: e.weight,
            });
        }
        if e.capacity.is_nan() || e.capacity < 0.0 {
            return Err(Error::InvalidCapacity {
                src: e.src,
                dst: e.dst,
                capacity: e.capacity,
            });
        }
        Ok(())
    }

    /// Weak connectivity: every node reachable from node 0 ignoring directions.
    fn check_connected(&self) -> Result<()> {
        let mut nbrs = vec![Vec::new(); self.n];
        for e in &self.edges {
            nbrs[e.src].push(e.dst);
            nbrs[e.dst].push(e.src);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &nbrs[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(node) => Err(Error::Disconnected { node }),
            None => Ok(()),
        }
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_graph(self)
    }

    pub fn remove_edge(&mut self, src: usize, dst: usize) -> Result<()> {
        let pos = self
            .edges
            .iter()
            .position(|e| e.src == src && e.dst == dst)
            .ok_or(Error::EdgeNotFound { src, dst })?;
        let removed = self.edges.remove(pos);
        if let Err(e) = self.check_connected() {
            self.edges.insert(pos, removed);
            return Err(e);
        }
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<()> {
        Self::check_edge(self.n, &edge)?;
        if self.edge(edge.src, edge.dst).is_some() {
            return Err(Error::DuplicateEdge {
                src: edge.src,
                dst: edge.dst,
            });
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn set_capacity(&mut self, src: usize, dst: usize, capacity: f64) -> Result<()> {
        if capacity.is_nan() || capacity < 0.0 {
            return Err(Error::InvalidCapacity { src, dst, capacity });
        }
        let e = self
            .edges
            .iter_mut()
            .find(|e| e.src == src && e.dst == dst)
            .ok_or(Error::EdgeNotFound { src, dst })?;
        e.capacity = capacity;
        Ok(())
    }

    pub fn set_storage(&mut self, node: usize, value: f64) -> Result<()> {
        if node >= self.n {
            return Err(Error::Config(format!("storage node {node} out of range")));
        }
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidStorage { node, value });
        }
        self.storage[node] = value;
        Ok(())
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let cap = e.capacity.is_finite().then_some(e.capacity);
                    (e.src, e.dst, e.weight, cap)
                })
                .collect(),
            storage: Some(
                self.storage
                    .iter()
                    .map(|s| s.is_finite().then_some(*s))
                    .collect(),
            ),
            undirected: false,
        }
    }
}

/// On-disk graph layout. `null` capacities and storage entries mean unbounded.
///
/// ```json
/// { "n": 3, "edges": [[0, 1, 1.0, null], [1, 2, 1.0, 0.5]], "storage": [null, 0.3, null] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64, Option<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<Vec<Option<f64>>>,
    /// Duplicate every listed edge in the reverse direction.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undirected: bool,
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;

    fn try_from(file: GraphFile) -> Result<Graph> {
        let edges = file
            .edges
            .iter()
            .map(|&(src, dst, weight, cap)| Edge {
                src,
                dst,
                weight,
                capacity: cap.unwrap_or(f64::INFINITY),
            })
            .collect();
        let storage = file
            .storage
            .map(|s| s.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect());
        if file.undirected {
            Graph::undirected(file.n, edges, storage)
        } else {
            Graph::new(file.n, edges, storage)
        }
    }
}

/// Boolean `Ā = A + I`; entry `(i, j)` is true iff `i == j` or edge `i -> j` exists.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjacency {
    n: usize,
    mask: Vec<bool>,
}

impl Adjacency {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n();
        let mut mask = vec![false; n * n];
        for i in 0..n {
            mask[i * n + i] = true;
        }
        for e in g.edges() {
            mask[e.src * n + e.dst] = true;
        }
        Adjacency { n, mask }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.n + j]
    }

    /// `(Ā^T ρ)_j = Σ_i Ā_ij ρ_i`: mass that can reach node `j` in one step.
    pub fn reachable_mass(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &r) in rho.iter().enumerate() {
            if r == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                if self.get(i, j) {
                    *o += r;
                }
            }
        }
        out
    }
}

/// Sorted, duplicate-free node indices of the next measure's support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Support(Vec<usize>);

impl Support {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySupport);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSupport(
                "indices must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidSupport(format!("index {bad} >= {n}")));
        }
        Ok(Support(indices))
    }

    pub fn full(n: usize) -> Self {
        Support((0..n).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Picks the support entries out of a full-length vector.
    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.0.iter().map(|&j| full[j]).collect()
    }

    /// Writes support-restricted values into a zero vector of length `n`.
    pub fn scatter(&self, values: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&j, &v) in self.0.iter().zip(values) {
            out[j] = v;
        }
        out
    }
}

/// Support of the next measure: nodes reachable in one step from mass above
/// `zero_threshold`, plus every node that currently holds any positive mass
/// (so that no row of the coupling is left without a destination).
pub fn new_support(rho: &[f64], adj: &Adjacency, zero_threshold: f64) -> Result<Support> {
    if rho.len() != adj.n() {
        return Err(Error::LengthMismatch(rho.len(), adj.n()));
    }
    let reach = adj.reachable_mass(rho);
    let idx: Vec<usize> = (0..adj.n())
        .filter(|&j| reach[j] > zero_threshold || rho[j] > 0.0)
        .collect();
    Support::new(idx, adj.n())
}

/// Capacity matrix restricted to the support columns (rows: source nodes,
/// columns: destination support nodes). Non-edges get exactly zero capacity;
/// the diagonal (mass staying put) is unbounded.
pub fn build_capacity_matrix(graph: &Graph, adj: &Adjacency, support: &Support) -> Array2<f64> {
    let n = graph.n();
    let mut col_of = vec![usize::MAX; n];
    for (c, &j) in support.indices().iter().enumerate() {
        col_of[j] = c;
    }
    let mut cap = Array2::zeros((n, support.len()));
    for (c, &j) in support.indices().iter().enumerate() {
        cap[[j, c]] = f64::INFINITY;
    }
    for e in graph.edges() {
        let c = col_of[e.dst];
        if c != usize::MAX {
            debug_assert!(adj.get(e.src, e.dst));
            cap[[e.src, c]] = e.capacity;
        }
    }
    cap
}

/// Dense matrix of directed shortest-path distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(Array2<f64>);

impl CostMatrix {
    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    /// The `n × n*` slice keeping only the support columns.
    pub fn columns(&self, support: &Support) -> Array2<f64> {
        self.0.select(ndarray::Axis(1), support.indices())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All-pairs directed shortest paths, one label-setting pass per source.
pub fn shortest_path_costs(graph: &Graph) -> Result<CostMatrix> {
    let n = graph.n();
    let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        out_edges[e.src].push((e.dst, e.weight));
    }
    let mut dist = Array2::from_elem((n, n), f64::INFINITY);
    let mut heap = BinaryHeap::new();
    for s in 0..n {
        let mut row = dist.row_mut(s);
        row[s] = 0.0;
        heap.push(HeapItem { dist: 0.0, node: s });
        while let Some(HeapItem { dist: d, node: u }) = heap.pop() {
            if d > row[u] {
                continue;
            }
            for &(v, w) in &out_edges[u] {
                let nd = d + w;
                if nd < row[v] {
                    row[v] = nd;
                    heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
        if let Some(t) = row.iter().position(|d| d.is_infinite()) {
            return Err(Error::UnreachablePair { from: s, to: t });
        }
    }
    Ok(CostMatrix(dist))
}
