//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::pauli::C64;
use crate::rng::Rng;

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

pub fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Natural-log Shannon entropy of a probability vector; entries at or below
/// `1e-300` contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 1e-300)
        .map(|&x| -x * x.ln())
        .sum()
}

/// Natural-log von Neumann entropy of a density matrix.
pub fn von_neumann_entropy(rho: &DMatrix<C64>) -> f64 {
    let vals: Vec<f64> = hermitian_eigenvalues(rho)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    shannon_entropy(&vals)
}

/// `ln Σ exp(x_i)` evaluated stably.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let mx = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

pub fn kron_all(ms: &[DMatrix<C64>]) -> DMatrix<C64> {
    ms.iter()
        .fold(DMatrix::from_element(1, 1, C64::new(1.0, 0.0)), |acc, m| {
            acc.kronecker(m)
        })
}

fn gaussian(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE-like).
pub fn random_hermitian(dim: usize, rng: &mut Rng) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_unit_vector(dim: usize, rng: &mut Rng) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let nrm = v.norm();
    v / C64::new(nrm, 0.0)
}

/// Random full-rank density matrix from a square Ginibre matrix.
pub fn random_density_matrix(dim: usize, rng: &mut Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho / C64::new(tr, 0.0)
}
