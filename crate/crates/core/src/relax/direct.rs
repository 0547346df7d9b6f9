//! Direct product-state minimization, witness expansion and rounding.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::cut::RefinementAtlas;
use crate::decomposition::{local_field, pauli_decompose, product_energy, PauliDecomposition};
use crate::exact::product_free_energy;
use crate::hamiltonian::LocalHamiltonian;
use crate::linalg::{hermitian_eigen, log_sum_exp};
use crate::pauli::{single_qudit_basis, C64};
use crate::rng::child_rng;
use crate::state::{bloch_from_density, density_from_bloch, ProductState};

/// Local fields of every qudit: `E = constant_u + field_u · α_u`.
pub fn all_local_fields(pd: &PauliDecomposition, s: &ProductState) -> Vec<Vec<f64>> {
    let mut fields = vec![vec![0.0; pd.d * pd.d - 1]; pd.n];
    for t in &pd.terms {
        for (c, v) in &t.coeffs {
            for (pos, (&cp, &u)) in c.iter().zip(&t.support).enumerate() {
                if cp == 0 {
                    continue;
                }
                let mut acc = *v;
                for (p, (&ci, &w)) in c.iter().zip(&t.support).enumerate() {
                    if p != pos && ci != 0 {
                        acc *= s.alphas[w][ci - 1];
                    }
                }
                fields[u][cp - 1] += acc;
            }
        }
    }
    fields
}

fn energy(pd: &PauliDecomposition, s: &ProductState) -> f64 {
    product_energy(pd, s).expect("state matches decomposition")
}

fn field_operator(field: &[f64], d: usize, basis: &[DMatrix<C64>]) -> DMatrix<C64> {
    let mut f = DMatrix::<C64>::zeros(d, d);
    for (i, &x) in field.iter().enumerate() {
        f += &basis[i + 1] * C64::new(x, 0.0);
    }
    f
}

/// Pure state minimizing `field · α`, or `None` for a zero field.
pub fn pure_minimizer(field: &[f64], d: usize) -> Option<Vec<f64>> {
    let nrm = field.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm <= 1e-15 {
        return None;
    }
    if d == 2 {
        return Some(field.iter().map(|x| -x / nrm).collect());
    }
    let basis = single_qudit_basis(d);
    let (_, vecs) = hermitian_eigen(&field_operator(field, d, &basis));
    let psi = vecs.column(0);
    Some(basis[1..].iter().map(|s| (psi.adjoint() * s * psi)[(0, 0)].re).collect())
}

/// Minimizer of `field · α − S(ρ)/β`: the Gibbs state of the local field.
pub fn gibbs_minimizer(field: &[f64], d: usize, beta: f64) -> Vec<f64> {
    let nrm = field.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return vec![0.0; d * d - 1];
    }
    if d == 2 {
        let t = (beta * nrm).tanh();
        return field.iter().map(|x| -t * x / nrm).collect();
    }
    let basis = single_qudit_basis(d);
    let (vals, vecs) = hermitian_eigen(&field_operator(field, d, &basis));
    let lse = log_sum_exp(vals.iter().map(|v| -beta * v));
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for (j, &v) in vals.iter().enumerate() {
        let col = vecs.column(j);
        rho += (&col * col.adjoint()) * C64::new((-beta * v - lse).exp(), 0.0);
    }
    bloch_from_density(&rho)
}

/// Euclidean projection of a Bloch vector onto the state set.
pub fn project_bloch(alpha: &[f64], d: usize) -> Vec<f64> {
    if d == 2 {
        let nrm = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        return if nrm > 1.0 { alpha.iter().map(|x| x / nrm).collect() } else { alpha.to_vec() };
    }
    // Frobenius distance is proportional to Bloch distance, so project the
    // spectrum onto the simplex
    let (vals, vecs) = hermitian_eigen(&density_from_bloch(alpha, d));
    if vals[0] >= 0.0 {
        return alpha.to_vec();
    }
    let p = project_simplex(&vals);
    let mut rho = DMatrix::<C64>::zeros(d, d);
    for (j, &w) in p.iter().enumerate() {
        let col = vecs.column(j);
        rho += (&col * col.adjoint()) * C64::new(w, 0.0);
    }
    bloch_from_density(&rho)
}

fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projected gradient descent with backtracking followed by exact
/// coordinate sweeps. Returns the final energy and the energy after every
/// accepted step.
pub fn descend(pd: &PauliDecomposition, mut s: ProductState, iters: usize) -> (f64, ProductState, Vec<f64>) {
    let mut e = energy(pd, &s);
    let mut history = vec![e];
    let mut step = 1.0;
    for _ in 0..iters {
        let fields = all_local_fields(pd, &s);
        if fields.iter().flatten().all(|x| x.abs() < 1e-14) {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let cand = ProductState {
                d: s.d,
                alphas: s
                    .alphas
                    .iter()
                    .zip(&fields)
                    .map(|(a, f)| project_bloch(&a.iter().zip(f).map(|(x, g)| x - step * g).collect::<Vec<_>>(), s.d))
                    .collect(),
            };
            let ec = energy(pd, &cand);
            if ec < e {
                let gain = e - ec;
                s = cand;
                e = ec;
                history.push(e);
                step *= 1.5;
                accepted = gain > 1e-13 * e.abs().max(1.0);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    for _ in 0..200 {
        let before = e;
        for u in 0..s.n() {
            if let Some(a) = pure_minimizer(&local_field(pd, &s, u), s.d) {
                let old = std::mem::replace(&mut s.alphas[u], a);
                let ec = energy(pd, &s);
                if ec <= e {
                    e = ec;
                } else {
                    s.alphas[u] = old;
                }
            }
        }
        history.push(e);
        if before - e <= 1e-13 * e.abs().max(1.0) {
            break;
        }
    }
    (e, s, history)
}

/// Best product-state energy found from `restarts` random pure starts.
pub fn gs_direct(h: &LocalHamiltonian, restarts: usize, iters: usize, seed: u64) -> (f64, ProductState) {
    gs_direct_pd(&pauli_decompose(h), restarts, iters, seed)
}

pub fn gs_direct_pd(pd: &PauliDecomposition, restarts: usize, iters: usize, seed: u64) -> (f64, ProductState) {
    let runs: Vec<(f64, ProductState)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(seed, &[r as u64]);
            let start = ProductState::random_pure(pd.n, pd.d, &mut rng);
            let (e, s, _) = descend(pd, start, iters);
            (e, s)
        })
        .collect();
    best_of(runs)
}

fn best_of(runs: Vec<(f64, ProductState)>) -> (f64, ProductState) {
    runs.into_iter()
        .reduce(|best, x| if x.0 < best.0 { x } else { best })
        .expect("at least one run")
}

/// Coordinate sweeps replacing each factor by the Gibbs state of its local
/// field; the product free energy never increases.
pub fn mean_field_sweeps(pd: &PauliDecomposition, mut s: ProductState, beta: f64, sweeps: usize) -> (f64, ProductState) {
    let mut f = product_free_energy(pd, &s, beta).expect("state matches decomposition");
    for _ in 0..sweeps {
        let before = f;
        for u in 0..s.n() {
            let a = gibbs_minimizer(&local_field(pd, &s, u), s.d, beta);
            let old = std::mem::replace(&mut s.alphas[u], a);
            let fc = product_free_energy(pd, &s, beta).expect("state matches decomposition");
            if fc <= f {
                f = fc;
            } else {
                s.alphas[u] = old;
            }
        }
        if before - f <= 1e-13 * f.abs().max(1.0) {
            break;
        }
    }
    (f, s)
}

/// Best product free energy found by mean-field sweeps from random mixed
/// starts.
pub fn fe_direct(pd: &PauliDecomposition, beta: f64, restarts: usize, sweeps: usize, seed: u64) -> (f64, ProductState) {
    let runs: Vec<(f64, ProductState)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = child_rng(seed, &[r as u64]);
            let start = if r == 0 {
                ProductState::maximally_mixed(pd.n, pd.d)
            } else {
                ProductState::random_mixed(pd.n, pd.d, &mut rng)
            };
            mean_field_sweeps(pd, start, beta, sweeps)
        })
        .collect();
    best_of(runs)
}

/// Copies each atom's Bloch vector to all of its vertices.
pub fn expand_witness(atlas: &RefinementAtlas, compressed: &[Vec<f64>], d: usize) -> ProductState {
    ProductState {
        d,
        alphas: atlas.atom_of.iter().map(|&a| compressed[a].clone()).collect(),
    }
}

/// Sweeps qudits in index order, replacing each factor by the pure state
/// minimizing its local field. The energy never increases.
pub fn round_to_pure(s: &ProductState, pd: &PauliDecomposition) -> ProductState {
    let mut out = s.clone();
    for u in 0..out.n() {
        let a = match pure_minimizer(&local_field(pd, &out, u), out.d) {
            Some(a) => a,
            None => purify(&out.alphas[u], out.d),
        };
        out.alphas[u] = a;
    }
    out
}

/// A pure state close to the given one (used where the energy is flat).
fn purify(alpha: &[f64], d: usize) -> Vec<f64> {
    if d == 2 {
        let nrm = alpha.iter().map(|x| x * x).sum::<f64>().sqrt();
        return if nrm > 0.0 { alpha.iter().map(|x| x / nrm).collect() } else { vec![0.0, 0.0, 1.0] };
    }
    let (_, vecs) = hermitian_eigen(&density_from_bloch(alpha, d));
    let psi = vecs.column(d - 1);
    let basis = single_qudit_basis(d);
    basis[1..].iter().map(|s| (psi.adjoint() * s * psi)[(0, 0)].re).collect()
}
