//! Dense and matrix-free exact oracles: ground energies, free energies,
//! expectation values and reduced density matrices.

use nalgebra::{DMatrix, DVector};

use crate::decomposition::{product_energy, PauliDecomposition};
use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, log_sum_exp, symmetric_eigen};
use crate::pauli::C64;
use crate::rng::rng_from_seed;
use crate::state::{dense_dim, DenseState, ProductState, MAX_MIXED_DIM, MAX_PURE_DIM};

/// Above this dimension the ground state is found by restarted Lanczos.
pub const DENSE_EIGEN_MAX: usize = 512;
/// Residual target for returned ground states.
pub const GROUND_RESIDUAL_TOL: f64 = 1e-9;

/// Offsets splitting a global basis index into the digits on `sites` (in
/// the given order, first most significant) and the remaining digits.
/// `global = local[i] + rest[r]`.
pub fn index_maps(n: usize, d: usize, sites: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let weight = |u: usize| d.pow((n - 1 - u) as u32);
    let mut local = vec![0usize];
    for &u in sites {
        local = local
            .iter()
            .flat_map(|&base| (0..d).map(move |x| base + x * weight(u)))
            .collect();
    }
    let mut in_sites = vec![false; n];
    for &u in sites {
        in_sites[u] = true;
    }
    let mut rest = vec![0usize];
    for u in (0..n).filter(|&u| !in_sites[u]) {
        rest = rest
            .iter()
            .flat_map(|&base| (0..d).map(move |x| base + x * weight(u)))
            .collect();
    }
    (local, rest)
}

/// `y += H x` without forming `H`.
pub fn apply_hamiltonian(h: &LocalHamiltonian, x: &[C64], y: &mut [C64]) {
    let mut buf_in = Vec::new();
    let mut buf_out = Vec::new();
    for t in h.terms() {
        let (local, rest) = index_maps(h.n(), h.d(), &t.support);
        let dim = local.len();
        buf_in.resize(dim, C64::new(0.0, 0.0));
        buf_out.resize(dim, C64::new(0.0, 0.0));
        for &r in &rest {
            for (i, &l) in local.iter().enumerate() {
                buf_in[i] = x[l + r];
            }
            for i in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dim {
                    acc += t.matrix[(i, j)] * buf_in[j];
                }
                buf_out[i] = acc;
            }
            for (i, &l) in local.iter().enumerate() {
                y[l + r] += buf_out[i];
            }
        }
    }
}

/// Dense `d^n × d^n` matrix of `H` (mixed-state dimension cap).
pub fn assemble_dense(h: &LocalHamiltonian) -> Result<DMatrix<C64>> {
    let dim = dense_dim(h.d(), h.n(), MAX_MIXED_DIM, "dense Hamiltonian")?;
    let mut m = DMatrix::zeros(dim, dim);
    for t in h.terms() {
        let (local, rest) = index_maps(h.n(), h.d(), &t.support);
        for &r in &rest {
            for (i, &li) in local.iter().enumerate() {
                for (j, &lj) in local.iter().enumerate() {
                    m[(li + r, lj + r)] += t.matrix[(i, j)];
                }
            }
        }
    }
    Ok(m)
}

fn residual(h: &LocalHamiltonian, v: &DVector<C64>, lambda: f64) -> f64 {
    let mut hv = vec![C64::new(0.0, 0.0); v.len()];
    apply_hamiltonian(h, v.as_slice(), &mut hv);
    hv.iter()
        .zip(v.iter())
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Minimum eigenvalue of `H` and a unit eigenvector.
pub fn exact_ground(h: &LocalHamiltonian) -> Result<(f64, DenseState)> {
    let dim = dense_dim(h.d(), h.n(), MAX_PURE_DIM, "ground-state solve")?;
    if dim <= DENSE_EIGEN_MAX {
        let m = assemble_dense(h)?;
        let (vals, vecs) = hermitian_eigen(&m);
        let v = vecs.column(0).into_owned();
        return Ok((vals[0], DenseState::Pure(v)));
    }
    let (lambda, v) = lanczos_ground(h, dim)?;
    Ok((lambda, DenseState::Pure(v)))
}

/// Explicitly restarted Lanczos with full reorthogonalization.
fn lanczos_ground(h: &LocalHamiltonian, dim: usize) -> Result<(f64, DVector<C64>)> {
    let krylov = 40.min(dim);
    let mut rng = rng_from_seed(0x1a2c_705);
    let mut start = crate::linalg::random_unit_vector(dim, &mut rng);
    let mut best = (f64::INFINITY, start.clone());
    for _restart in 0..500 {
        let mut basis: Vec<DVector<C64>> = Vec::with_capacity(krylov);
        let mut alpha = Vec::with_capacity(krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov);
        basis.push(start.clone());
        for j in 0..krylov {
            let mut w = DVector::<C64>::zeros(dim);
            apply_hamiltonian(h, basis[j].as_slice(), w.as_mut_slice());
            let a = basis[j].dotc(&w).re;
            alpha.push(a);
            // two passes of Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for b in &basis {
                    let c = b.dotc(&w);
                    w.axpy(-c, b, C64::new(1.0, 0.0));
                }
            }
            let nb = w.norm();
            if j + 1 == krylov || nb < 1e-12 {
                break;
            }
            beta.push(nb);
            basis.push(w / C64::new(nb, 0.0));
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let (vals, vecs) = symmetric_eigen(&t);
        let mut v = DVector::<C64>::zeros(dim);
        for (i, b) in basis.iter().take(m).enumerate() {
            v.axpy(C64::new(vecs[(i, 0)], 0.0), b, C64::new(1.0, 0.0));
        }
        let nv = v.norm();
        v /= C64::new(nv, 0.0);
        let lambda = vals[0];
        let res = residual(h, &v, lambda);
        if lambda <= best.0 {
            best = (lambda, v.clone());
        }
        if res <= GROUND_RESIDUAL_TOL {
            return Ok((lambda, v));
        }
        start = v;
    }
    let res = residual(h, &best.1, best.0);
    if res <= 1e-8 {
        return Ok(best);
    }
    Err(Error::Internal(format!("Lanczos did not converge (residual {res:.2e})")))
}

/// `Tr[H ρ]` for a dense state.
pub fn expectation(h: &LocalHamiltonian, state: &DenseState) -> Result<f64> {
    let dim = dense_dim(h.d(), h.n(), MAX_PURE_DIM, "expectation")?;
    if state.dim() != dim {
        return Err(Error::DimensionMismatch(format!("state dim {} vs {dim}", state.dim())));
    }
    match state {
        DenseState::Pure(v) => {
            let mut hv = vec![C64::new(0.0, 0.0); dim];
            apply_hamiltonian(h, v.as_slice(), &mut hv);
            Ok(v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum())
        }
        DenseState::Mixed(_) => Ok(h
            .terms()
            .iter()
            .map(|t| {
                let r = reduced_density(state, h.n(), h.d(), &t.support);
                (&t.matrix * r).trace().re
            })
            .sum()),
    }
}

/// Reduced density matrix on `sites`, factors in the order given.
pub fn reduced_density(state: &DenseState, n: usize, d: usize, sites: &[usize]) -> DMatrix<C64> {
    let (local, rest) = index_maps(n, d, sites);
    let dim = local.len();
    let mut out = DMatrix::zeros(dim, dim);
    match state {
        DenseState::Pure(v) => {
            for &r in &rest {
                for (i, &li) in local.iter().enumerate() {
                    let a = v[li + r];
                    if a == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for (j, &lj) in local.iter().enumerate() {
                        out[(i, j)] += a * v[lj + r].conj();
                    }
                }
            }
        }
        DenseState::Mixed(m) => {
            for &r in &rest {
                for (i, &li) in local.iter().enumerate() {
                    for (j, &lj) in local.iter().enumerate() {
                        out[(i, j)] += m[(li + r, lj + r)];
                    }
                }
            }
        }
    }
    out
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be positive and finite, got {beta}")));
    }
    Ok(())
}

/// `F = −(1/β) ln Tr e^{−βH}`.
pub fn exact_free_energy(h: &LocalHamiltonian, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let vals = hermitian_eigenvalues(&assemble_dense(h)?);
    Ok(free_energy_from_spectrum(&vals, beta))
}

pub fn free_energy_from_spectrum(vals: &[f64], beta: f64) -> f64 {
    -log_sum_exp(vals.iter().map(|&e| -beta * e)) / beta
}

/// Gibbs state `e^{−βH}/Z` and the free energy.
pub fn gibbs_state(h: &LocalHamiltonian, beta: f64) -> Result<(f64, DenseState)> {
    check_beta(beta)?;
    let (vals, vecs) = hermitian_eigen(&assemble_dense(h)?);
    let f = free_energy_from_spectrum(&vals, beta);
    let weights: Vec<f64> = vals.iter().map(|&e| (-beta * (e + f)).exp()).collect();
    let dim = vals.len();
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for (i, &w) in weights.iter().enumerate() {
        if w < 1e-300 {
            continue;
        }
        let col = vecs.column(i);
        rho += &col * col.adjoint() * C64::new(w, 0.0);
    }
    let tr = rho.trace().re;
    rho /= C64::new(tr, 0.0);
    Ok((f, DenseState::Mixed(rho)))
}

/// `Tr[Hσ] − Σ_u S(ρ_u)/β` for a product state `σ`.
pub fn product_free_energy(pd: &PauliDecomposition, s: &ProductState, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let e = product_energy(pd, s)?;
    let entropy: f64 = (0..s.n()).map(|u| s.entropy(u)).sum();
    Ok(e - entropy / beta)
}
