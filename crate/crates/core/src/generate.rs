//! Instance generators. Every term has operator norm at most 1.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hamiltonian::{LocalHamiltonian, LocalTerm};
use crate::linalg::{random_hermitian, spectral_norm};
use crate::pauli::{PauliString, C64};
use crate::rng::rng_from_seed;
use crate::threshold::WeightedGraph;

/// `(XX + YY + ZZ) / 3`.
pub fn heisenberg_term() -> DMatrix<C64> {
    let m = (1..=3).fold(DMatrix::zeros(4, 4), |acc, c| acc + PauliString::from_colors(&[c, c], 2).to_matrix());
    m / C64::new(3.0, 0.0)
}

fn on_edges(n: usize, edges: &[(usize, usize)], mut term: impl FnMut() -> DMatrix<C64>) -> Result<LocalHamiltonian> {
    let terms = edges.iter().map(|&(u, v)| LocalTerm::new(vec![u, v], term())).collect();
    LocalHamiltonian::new(n, 2, 2, terms)
}

fn unit_random_term(rng: &mut crate::rng::Rng) -> DMatrix<C64> {
    let m = random_hermitian(4, rng);
    let s = spectral_norm(&m);
    m / C64::new(s, 0.0)
}

pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

/// Row-major `rows × cols` grid, nearest-neighbour edges.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = r * cols + c;
            if c + 1 < cols {
                e.push((u, u + 1));
            }
            if r + 1 < rows {
                e.push((u, u + cols));
            }
        }
    }
    e
}

/// Qubits on a complete graph, one random unit-norm term per pair.
pub fn complete_random(n: usize, seed: u64) -> Result<LocalHamiltonian> {
    let mut rng = rng_from_seed(seed);
    on_edges(n, &complete_edges(n), || unit_random_term(&mut rng))
}

pub fn complete_heisenberg(n: usize) -> Result<LocalHamiltonian> {
    on_edges(n, &complete_edges(n), heisenberg_term)
}

pub fn grid_heisenberg(rows: usize, cols: usize) -> Result<LocalHamiltonian> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("grid dimensions must be positive".into()));
    }
    on_edges(rows * cols, &grid_edges(rows, cols), heisenberg_term)
}

/// Grid plus one random diagonal per cell (a planar triangulation of the
/// grid), random unit-norm terms.
pub fn planar_random(rows: usize, cols: usize, seed: u64) -> Result<LocalHamiltonian> {
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter("grid dimensions must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = grid_edges(rows, cols);
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols.saturating_sub(1) {
            let u = r * cols + c;
            if rng.random_bool(0.5) {
                edges.push((u, u + cols + 1));
            } else {
                edges.push((u + 1, u + cols));
            }
        }
    }
    on_edges(rows * cols, &edges, || unit_random_term(&mut rng))
}

/// Unit-weight graphs for Quantum Max-Cut.
pub fn complete_graph(n: usize) -> WeightedGraph {
    WeightedGraph {
        n,
        edges: complete_edges(n).into_iter().map(|(u, v)| (u, v, 1.0)).collect(),
    }
}

pub fn cycle_graph(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::Parameter(format!("a cycle needs at least 3 vertices, got {n}")));
    }
    Ok(WeightedGraph {
        n,
        edges: (0..n).map(|u| (u, (u + 1) % n, 1.0)).collect(),
    })
}

/// Erdős–Rényi graph with weights uniform in `[0.5, 1.5)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = rng_from_seed(seed);
    let edges = complete_edges(n)
        .into_iter()
        .filter_map(|(u, v)| rng.random_bool(p).then(|| (u, v, rng.random_range(0.5..1.5))))
        .collect();
    WeightedGraph::new(n, edges)
}
