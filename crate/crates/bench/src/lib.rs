//! Fixed-seed inputs shared by the kernel benches.

use meanfield::generate::complete_random;
use meanfield::linalg::random_hermitian;
use meanfield::relax::AffineRow;
use meanfield::rng::rng_from_seed;
use meanfield::{ColorTensor, ConstraintSet, LocalHamiltonian};
use nalgebra::DMatrix;
use rand::Rng;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_tensor(n: usize, seed: u64) -> ColorTensor {
    ColorTensor::from_matrix(&random_matrix(n, n, seed))
}

pub fn complete_instance(n: usize, seed: u64) -> LocalHamiltonian {
    complete_random(n, seed).expect("valid size")
}

/// Random two-local instance with `terms` terms on `n` qubits.
pub fn sparse_instance(n: usize, terms: usize, seed: u64) -> LocalHamiltonian {
    let mut rng = rng_from_seed(seed);
    let list = (0..terms)
        .map(|_| {
            let support = rand::seq::index::sample(&mut rng, n, 2).into_vec();
            meanfield::LocalTerm::new(support, random_hermitian(4, &mut rng))
        })
        .collect();
    LocalHamiltonian::new(n, 2, 2, list).expect("valid instance")
}

/// Box constraints around a random point, so the set is feasible.
pub fn feasible_constraints(atoms: usize, rows: usize, seed: u64) -> ConstraintSet {
    let mut rng = rng_from_seed(seed);
    let centre: Vec<[f64; 3]> = (0..atoms)
        .map(|_| std::array::from_fn(|_| rng.random_range(-0.4..0.4)))
        .collect();
    let list = (0..rows)
        .map(|_| {
            let terms: Vec<(usize, usize, f64)> =
                (0..3).map(|_| (rng.random_range(0..atoms), rng.random_range(1..=3), rng.random_range(-1.0..1.0))).collect();
            let at: f64 = terms.iter().map(|&(a, c, w)| w * centre[a][c - 1]).sum();
            AffineRow { terms, lo: at - 0.05, hi: at + 0.05 }
        })
        .collect();
    ConstraintSet::new(atoms, 2, list, 1e-3)
}
