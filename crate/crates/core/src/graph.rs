//! Watts-Strogatz small-world graphs.
//!
//! A graph starts as a ring lattice where every vertex links to its `k`
//! nearest neighbours on each side, then each lattice edge is rewired with
//! probability `p`. Rewiring preserves the edge count, and only connected
//! outcomes are kept.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Whole-graph rewiring attempts before giving up on connectivity.
pub const MAX_REWIRE_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingLatticeSpec {
    pub n: usize,
    pub k: usize,
}

impl RingLatticeSpec {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let spec = Self { n, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n <= 2 * self.k || self.n > u32::MAX as usize {
            return Err(Error::InvalidSpec {
                n: self.n,
                k: self.k,
            });
        }
        Ok(())
    }
}

/// An undirected simple graph stored as a sorted list of `(a, b)` pairs with
/// `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WsGraph {
    n: usize,
    k: usize,
    p: f64,
    edges: Vec<(u32, u32)>,
}

impl WsGraph {
    /// Builds a graph from an arbitrary edge list. Pairs are canonicalized to
    /// `a < b` and sorted; self-loops, duplicates and out-of-range vertices
    /// are rejected.
    pub fn from_edges(n: usize, k: usize, p: f64, edges: Vec<(u32, u32)>) -> Result<Self> {
        let mut edges: Vec<(u32, u32)> = edges
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidInput(format!("duplicate edge {:?}", w[0])));
            }
        }
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            if b as usize >= n {
                return Err(Error::InvalidInput(format!("vertex {b} out of range for N = {n}")));
            }
        }
        Ok(Self { n, k, p, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        let e = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&e).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        deg
    }

    /// Renders the text format: a `ws <N> <k> <p> <seed>` header line
    /// followed by one `a b` pair per line.
    pub fn to_text(&self, seed: u64) -> String {
        let mut out = String::with_capacity(16 + 12 * self.edges.len());
        writeln!(out, "ws {} {} {:.16e} {}", self.n, self.k, self.p, seed).unwrap();
        for &(a, b) in &self.edges {
            writeln!(out, "{a} {b}").unwrap();
        }
        out
    }

    /// Parses the text format, returning the graph and its seed.
    pub fn from_text(text: &str) -> Result<(Self, u64)> {
        let bad = |msg: String| Error::InvalidInput(format!("graph file: {msg}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "ws" {
            return Err(bad(format!("bad header {header:?}")));
        }
        let n: usize = fields[1].parse().map_err(|_| bad("bad N".into()))?;
        let k: usize = fields[2].parse().map_err(|_| bad("bad k".into()))?;
        let p: f64 = fields[3].parse().map_err(|_| bad("bad p".into()))?;
        let seed: u64 = fields[4].parse().map_err(|_| bad("bad seed".into()))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<u32> {
                s.and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("bad edge on line {}", lineno + 2)))
            };
            let a = parse(it.next())?;
            let b = parse(it.next())?;
            if it.next().is_some() || a >= b {
                return Err(bad(format!("line {} is not an `a b` pair with a < b", lineno + 2)));
            }
            edges.push((a, b));
        }
        let sorted = edges.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(bad("edges not sorted".into()));
        }
        Ok((Self::from_edges(n, k, p, edges)?, seed))
    }

    pub fn write_text(&self, seed: u64, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(seed)).map_err(|e| Error::io(path, e))
    }
}

/// The `p = 0` ring lattice.
pub fn build_ring_lattice(spec: RingLatticeSpec) -> Result<WsGraph> {
    spec.validate()?;
    let n = spec.n as u32;
    let mut edges = Vec::with_capacity(spec.n * spec.k);
    for a in 0..n {
        for j in 1..=spec.k as u32 {
            edges.push((a, (a + j) % n));
        }
    }
    WsGraph::from_edges(spec.n, spec.k, 0.0, edges)
}

/// Rewires a ring lattice with probability `p` per edge, retrying the whole
/// sweep with fresh randomness until the result is connected.
pub fn rewire(lattice: &WsGraph, p: f64, rng: &mut RngStream) -> Result<WsGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("rewiring probability {p} outside [0, 1]")));
    }
    if lattice.p != 0.0 {
        return Err(Error::InvalidInput("rewire expects a p = 0 ring lattice".into()));
    }
    if p == 0.0 {
        return Ok(lattice.clone());
    }
    for _ in 0..MAX_REWIRE_ATTEMPTS {
        let candidate = rewire_once(lattice, p, rng);
        if is_connected(&candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::ConnectivityExhausted {
        n: lattice.n,
        k: lattice.k,
        p,
        attempts: MAX_REWIRE_ATTEMPTS,
    })
}

/// One Watts-Strogatz sweep: vertices in order, each with its `k` clockwise
/// lattice edges.
fn rewire_once(lattice: &WsGraph, p: f64, rng: &mut RngStream) -> WsGraph {
    let n = lattice.n;
    let mut adj: Vec<Vec<u32>> = vec![Vec::with_capacity(2 * lattice.k + 2); n];
    for &(a, b) in &lattice.edges {
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    for a in 0..n {
        for j in 1..=lattice.k {
            let b = (a + j) % n;
            if rng.uniform() >= p {
                continue;
            }
            // a is already joined to every other vertex: nothing to rewire to.
            if adj[a].len() >= n - 1 {
                continue;
            }
            let c = loop {
                let c = rng.index(n);
                if c != a && c != b && !adj[a].contains(&(c as u32)) {
                    break c;
                }
            };
            remove_value(&mut adj[a], b as u32);
            remove_value(&mut adj[b], a as u32);
            adj[a].push(c as u32);
            adj[c].push(a as u32);
        }
    }
    let mut edges = Vec::with_capacity(n * lattice.k);
    for (a, nbrs) in adj.iter().enumerate() {
        for &b in nbrs {
            if (a as u32) < b {
                edges.push((a as u32, b));
            }
        }
    }
    edges.sort_unstable();
    WsGraph {
        n,
        k: lattice.k,
        p,
        edges,
    }
}

fn remove_value(list: &mut Vec<u32>, value: u32) {
    if let Some(pos) = list.iter().position(|&v| v == value) {
        list.swap_remove(pos);
    }
}

/// Ring lattice followed by [`rewire`].
pub fn watts_strogatz(spec: RingLatticeSpec, p: f64, rng: &mut RngStream) -> Result<WsGraph> {
    let lattice = build_ring_lattice(spec)?;
    rewire(&lattice, p, rng)
}

/// Breadth-first reachability from vertex 0.
pub fn is_connected(graph: &WsGraph) -> bool {
    let n = graph.n;
    if n == 0 {
        return true;
    }
    let mut offsets = vec![0usize; n + 1];
    for &(a, b) in &graph.edges {
        offsets[a as usize + 1] += 1;
        offsets[b as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut nbrs = vec![0u32; offsets[n]];
    for &(a, b) in &graph.edges {
        nbrs[fill[a as usize]] = b;
        fill[a as usize] += 1;
        nbrs[fill[b as usize]] = a;
        fill[b as usize] += 1;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = stack.pop() {
        for &u in &nbrs[offsets[v]..offsets[v + 1]] {
            let u = u as usize;
            if !seen[u] {
                seen[u] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    reached == n
}

/// Signed adjacency `A` with `A_ab = +1`, `A_ba = -1` for every edge with
/// `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedAdjacency {
    n: usize,
    arcs: Vec<(u32, u32)>,
}

impl OrientedAdjacency {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Arcs `(a, b)` carrying `+1`; the reverse direction carries `-1`.
    pub fn arcs(&self) -> &[(u32, u32)] {
        &self.arcs
    }

    pub fn sign(&self, a: u32, b: u32) -> i8 {
        if a < b {
            if self.arcs.binary_search(&(a, b)).is_ok() {
                return 1;
            }
        } else if b < a && self.arcs.binary_search(&(b, a)).is_ok() {
            return -1;
        }
        0
    }

    pub fn nnz(&self) -> usize {
        2 * self.arcs.len()
    }

    /// Row-major dense `N x N` matrix of signs.
    pub fn to_dense(&self) -> Vec<i8> {
        let n = self.n;
        let mut m = vec![0i8; n * n];
        for &(a, b) in &self.arcs {
            m[a as usize * n + b as usize] = 1;
            m[b as usize * n + a as usize] = -1;
        }
        m
    }
}

pub fn orient(graph: &WsGraph) -> OrientedAdjacency {
    OrientedAdjacency {
        n: graph.n,
        arcs: graph.edges.clone(),
    }
}
