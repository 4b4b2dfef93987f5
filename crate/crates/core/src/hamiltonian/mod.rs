//! Random-hopping Hamiltonians `H = iS` on Watts-Strogatz graphs.
//!
//! `S` is real and skew-symmetric: each undirected edge `{a, b}` with
//! `a < b` carries one Gaussian weight `r` and contributes `S_ab = r`,
//! `S_ba = -r`. The diagonal is identically zero.

mod corpus;

pub use corpus::{read_corpus, read_record, write_corpus, write_record, CorpusReader};

use crate::error::{Error, Result};
use crate::graph::{self, RingLatticeSpec, WsGraph};
use crate::rng::{derive_stream, sample_gaussian, RngStream};

/// Parameters a coupling matrix was generated from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub seed: u64,
}

/// Skew-symmetric coupling matrix stored by its upper-triangle support.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    provenance: Provenance,
    /// `(a, b, r)` with `a < b`, sorted by `(a, b)`.
    couplings: Vec<(u32, u32, f64)>,
}

impl CouplingMatrix {
    /// Builds a matrix from upper-triangle couplings. Entries must have
    /// `a < b < N`, be finite and be unique.
    pub fn from_couplings(provenance: Provenance, mut couplings: Vec<(u32, u32, f64)>) -> Result<Self> {
        couplings.sort_unstable_by_key(|&(a, b, _)| (a, b));
        for w in couplings.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidInput(format!("duplicate coupling ({}, {})", w[0].0, w[0].1)));
            }
        }
        for &(a, b, r) in &couplings {
            if a >= b || b as usize >= provenance.n {
                return Err(Error::InvalidInput(format!(
                    "coupling ({a}, {b}) is not an upper-triangle entry for N = {}",
                    provenance.n
                )));
            }
            if !r.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite coupling at ({a}, {b})")));
            }
        }
        Ok(Self {
            provenance,
            couplings,
        })
    }

    pub fn n(&self) -> usize {
        self.provenance.n
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn couplings(&self) -> &[(u32, u32, f64)] {
        &self.couplings
    }

    pub fn nnz(&self) -> usize {
        2 * self.couplings.len()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        match self
            .couplings
            .binary_search_by_key(&(lo as u32, hi as u32), |&(x, y, _)| (x, y))
        {
            Ok(i) => sign * self.couplings[i].2,
            Err(_) => 0.0,
        }
    }

    /// Row-major dense `N x N` matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for &(a, b, r) in &self.couplings {
            m[a as usize * n + b as usize] = r;
            m[b as usize * n + a as usize] = -r;
        }
        m
    }

    /// Row-major flattening into a length-`N^2` vector, zeros included.
    pub fn flatten(&self) -> Vec<f64> {
        self.to_dense()
    }

    /// Inverse of [`flatten`](Self::flatten). The vector must be exactly
    /// skew-symmetric.
    pub fn from_flat(provenance: Provenance, flat: &[f64]) -> Result<Self> {
        let n = provenance.n;
        if flat.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: flat.len(),
            });
        }
        let mut couplings = Vec::new();
        for a in 0..n {
            if flat[a * n + a] != 0.0 {
                return Err(Error::InvalidInput(format!("nonzero diagonal at {a}")));
            }
            for b in a + 1..n {
                let r = flat[a * n + b];
                if flat[b * n + a] != -r {
                    return Err(Error::InvalidInput(format!("entries ({a}, {b}) not skew-symmetric")));
                }
                if r != 0.0 {
                    couplings.push((a as u32, b as u32, r));
                }
            }
        }
        Self::from_couplings(provenance, couplings)
    }

    /// Squared Frobenius norm, `2 * sum r^2`.
    pub fn frobenius_sq(&self) -> f64 {
        2.0 * self.couplings.iter().map(|c| c.2 * c.2).sum::<f64>()
    }
}

/// Variance of the hopping weights, `(N - 1) / (2 N k)`.
pub fn coupling_variance(n: usize, k: usize) -> f64 {
    (n as f64 - 1.0) / (2.0 * n as f64 * k as f64)
}

/// Attaches one Gaussian weight per edge, in sorted edge order.
pub fn assign_weights(graph: &WsGraph, seed: u64, rng: &mut RngStream) -> CouplingMatrix {
    let variance = coupling_variance(graph.n(), graph.k());
    let couplings = graph
        .edges()
        .iter()
        .map(|&(a, b)| {
            // variance is finite and positive for any valid graph
            let r = sample_gaussian(rng, 0.0, variance).expect("valid variance");
            (a, b, r)
        })
        .collect();
    CouplingMatrix {
        provenance: Provenance {
            n: graph.n(),
            k: graph.k(),
            p: graph.p(),
            seed,
        },
        couplings,
    }
}

/// Stream index used for the graph of a sample seed.
pub const GRAPH_STREAM: u64 = 0;

/// Stream index of weight realization `r` for a sample seed.
pub fn weight_stream(realization: u64) -> u64 {
    1 + realization
}

/// Generates the graph for `seed`, reproducibly.
pub fn sample_graph(n: usize, k: usize, p: f64, seed: u64) -> Result<WsGraph> {
    let mut rng = derive_stream(seed, GRAPH_STREAM);
    graph::watts_strogatz(RingLatticeSpec::new(n, k)?, p, &mut rng)
}

/// Weight realization `realization` on a given graph generated from `seed`.
pub fn sample_weights(graph: &WsGraph, seed: u64, realization: u64) -> CouplingMatrix {
    let mut rng = derive_stream(seed, weight_stream(realization));
    assign_weights(graph, seed, &mut rng)
}

/// One fully reproducible Hamiltonian: graph and weight realization 0 of
/// `seed`. This is the recipe behind every corpus record.
pub fn sample_hamiltonian(n: usize, k: usize, p: f64, seed: u64) -> Result<CouplingMatrix> {
    let graph = sample_graph(n, k, p, seed)?;
    Ok(sample_weights(&graph, seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ring_lattice, orient};

    fn prov(n: usize) -> Provenance {
        Provenance {
            n,
            k: 1,
            p: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn weight_variance_formula() {
        assert_eq!(coupling_variance(1000, 2), 0.24975);
        assert_eq!(coupling_variance(100, 2), 0.2475);
    }

    #[test]
    fn triangle_has_six_nonzeros() {
        let g = WsGraph::from_edges(3, 1, 0.0, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut rng = derive_stream(0, 0);
        let s = assign_weights(&g, 0, &mut rng);
        let dense = s.to_dense();
        assert_eq!(dense.iter().filter(|&&x| x != 0.0).count(), 6);
        assert_eq!(s.couplings().len(), 3);
    }

    #[test]
    fn skew_symmetric_exactly_and_support_matches_graph() {
        let g = sample_graph(50, 2, 0.3, 99).unwrap();
        let s = sample_weights(&g, 99, 4);
        let n = 50;
        let m = s.to_dense();
        let a = orient(&g);
        for i in 0..n {
            assert_eq!(m[i * n + i], 0.0);
            for j in 0..n {
                assert_eq!(m[i * n + j], -m[j * n + i]);
                assert_eq!(m[i * n + j] != 0.0, a.sign(i as u32, j as u32) != 0);
                assert_eq!(s.get(i, j), m[i * n + j]);
            }
        }
        assert_eq!(s.nnz(), 2 * n * 2);
    }

    #[test]
    fn ensemble_weight_variance() {
        let g = build_ring_lattice(RingLatticeSpec { n: 100, k: 2 }).unwrap();
        let mut draws = Vec::new();
        for r in 0..50 {
            draws.extend(sample_weights(&g, 5, r).couplings().iter().map(|c| c.2));
        }
        assert_eq!(draws.len(), 10_000);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var / 0.2475 - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn flatten_two_by_two() {
        let s = CouplingMatrix::from_couplings(prov(2), vec![(0, 1, 0.75)]).unwrap();
        assert_eq!(s.flatten(), vec![0.0, 0.75, -0.75, 0.0]);
    }

    #[test]
    fn flatten_norm_and_round_trip() {
        let s = sample_hamiltonian(30, 2, 0.5, 8).unwrap();
        let flat = s.flatten();
        let sq: f64 = flat.iter().map(|x| x * x).sum();
        let expected = 2.0 * s.couplings().iter().map(|c| c.2 * c.2).sum::<f64>();
        assert!((sq - expected).abs() <= 1e-12 * expected);
        let back = CouplingMatrix::from_flat(*s.provenance(), &flat).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_malformed_couplings() {
        assert!(CouplingMatrix::from_couplings(prov(3), vec![(1, 0, 1.0)]).is_err());
        assert!(CouplingMatrix::from_couplings(prov(3), vec![(0, 3, 1.0)]).is_err());
        assert!(CouplingMatrix::from_couplings(prov(3), vec![(0, 1, f64::NAN)]).is_err());
        assert!(CouplingMatrix::from_couplings(prov(3), vec![(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(CouplingMatrix::from_flat(prov(2), &[0.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_hamiltonian(40, 2, 0.1, 1234).unwrap();
        let b = sample_hamiltonian(40, 2, 0.1, 1234).unwrap();
        assert_eq!(a, b);
        let c = sample_hamiltonian(40, 2, 0.1, 1235).unwrap();
        assert_ne!(a, c);
    }
}
