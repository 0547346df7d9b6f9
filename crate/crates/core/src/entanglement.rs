//! Numerical experiment for the measure-and-prepare map that turns an
//! arbitrary state into a separable one: measure a random subset of qubits
//! in random Pauli bases, keep the outcomes, and replace the rest by the
//! single-qubit marginals of the post-measurement state.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng as _;
use serde::Serialize;

use crate::decomposition::{pauli_decompose, product_energy, PauliDecomposition};
use crate::error::{Error, Result};
use crate::exact::{expectation, index_maps, reduced_density};
use crate::hamiltonian::{LocalHamiltonian, LocalTerm};
use crate::linalg::shannon_entropy;
use crate::pauli::C64;
use crate::rng::child_rng;
use crate::state::{bloch_entropy, bloch_from_density, DenseState, ProductState};

/// Largest qubit count accepted by the experiment.
pub const MAX_EB_QUBITS: usize = 14;

#[derive(Clone, Debug, Serialize)]
pub struct EbTrial {
    pub measured: Vec<usize>,
    /// Pauli basis per measured qubit: 1 = X, 2 = Y, 3 = Z.
    pub bases: Vec<usize>,
    /// `Tr[H η_{C,b}]`.
    pub energy: f64,
    /// `|Tr[H ρ] − Tr[H η_{C,b}]|`.
    pub abs_diff: f64,
    /// `S(η_{C,b})`.
    pub entropy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EbReport {
    pub n_qubits: usize,
    pub l: usize,
    pub trials: usize,
    pub energy_rho: f64,
    pub entropy_rho: f64,
    /// Energy of the averaged separable state `σ`.
    pub energy_sigma: f64,
    /// `|Tr[H(ρ − σ)]|`.
    pub sigma_abs_diff: f64,
    /// Mean over trials of `|Tr[H(ρ − η_{C,b})]|`; bounds `sigma_abs_diff`.
    pub mean_abs_diff: f64,
    /// `(2kl/n)|J|_1 + (6k·d^{3k}·log d/√l)·n^{k/2}‖J‖_F`, with `log d`
    /// taken as 1 for qubits. Absent for `l = 0`.
    pub bound: Option<f64>,
    /// `min_t S(η_t) − S(ρ)`.
    pub min_entropy_gap: f64,
    pub entropy_monotone: bool,
    pub per_trial: Vec<EbTrial>,
}

/// Rewrites a qudit Hamiltonian with `d = 2^m` as a qubit Hamiltonian on
/// `n·m` qubits; qudit `u` becomes qubits `u·m .. u·m+m`.
pub fn unfold_to_qubits(h: &LocalHamiltonian) -> Result<LocalHamiltonian> {
    if h.d() == 2 {
        return Ok(h.clone());
    }
    let m = crate::pauli::qubits_per_qudit(h.d())?;
    let terms = h
        .terms()
        .iter()
        .map(|t| {
            let support = t.support.iter().flat_map(|&u| (u * m)..(u * m + m)).collect();
            LocalTerm::new(support, t.matrix.clone())
        })
        .collect();
    LocalHamiltonian::new(h.n() * m, 2, h.k() * m, terms)
}

/// Explicit upper bound on the energy error of the separable approximation.
pub fn eb_bound(h: &LocalHamiltonian, l: usize) -> Option<f64> {
    if l == 0 {
        return None;
    }
    let (n, k, d) = (h.n() as f64, h.k() as f64, h.d() as f64);
    let log_d = if h.d() == 2 { 1.0 } else { d.ln() };
    let first = 2.0 * k * l as f64 / n * h.l1_norm();
    let second = 6.0 * k * d.powf(3.0 * k) * log_d / (l as f64).sqrt() * n.powf(k / 2.0) * h.frobenius_norm();
    Some(first + second)
}

/// Rows are `⟨b,±|`: applying this maps the `±1` eigenvectors of the basis
/// Pauli to `|0⟩`, `|1⟩`.
fn basis_rotation(b: usize) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    match b {
        1 => DMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]),
        2 => DMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., -s), c(s, 0.), c(0., s)]),
        _ => DMatrix::identity(2, 2),
    }
}

fn apply_qubit_gate_vec(v: &mut DVector<C64>, n: usize, q: usize, g: &DMatrix<C64>) {
    let bit = 1usize << (n - 1 - q);
    for i in 0..v.len() {
        if i & bit == 0 {
            let (a, b) = (v[i], v[i | bit]);
            v[i] = g[(0, 0)] * a + g[(0, 1)] * b;
            v[i | bit] = g[(1, 0)] * a + g[(1, 1)] * b;
        }
    }
}

fn apply_qubit_gate_mat(m: &mut DMatrix<C64>, n: usize, q: usize, g: &DMatrix<C64>) {
    let bit = 1usize << (n - 1 - q);
    let dim = m.nrows();
    for col in 0..dim {
        for i in 0..dim {
            if i & bit == 0 {
                let (a, b) = (m[(i, col)], m[(i | bit, col)]);
                m[(i, col)] = g[(0, 0)] * a + g[(0, 1)] * b;
                m[(i | bit, col)] = g[(1, 0)] * a + g[(1, 1)] * b;
            }
        }
    }
    let gd = g.adjoint();
    for row in 0..dim {
        for j in 0..dim {
            if j & bit == 0 {
                let (a, b) = (m[(row, j)], m[(row, j | bit)]);
                m[(row, j)] = a * gd[(0, 0)] + b * gd[(1, 0)];
                m[(row, j | bit)] = a * gd[(0, 1)] + b * gd[(1, 1)];
            }
        }
    }
}

struct Outcome {
    prob: f64,
    state: ProductState,
    entropy_rest: f64,
}

fn outcomes(rho: &DenseState, n: usize, measured: &[usize], bases: &[usize]) -> Vec<Outcome> {
    let rotated = match rho {
        DenseState::Pure(v) => {
            let mut v = v.clone();
            for (&q, &b) in measured.iter().zip(bases) {
                apply_qubit_gate_vec(&mut v, n, q, &basis_rotation(b));
            }
            DenseState::Pure(v)
        }
        DenseState::Mixed(m) => {
            let mut m = m.clone();
            for (&q, &b) in measured.iter().zip(bases) {
                apply_qubit_gate_mat(&mut m, n, q, &basis_rotation(b));
            }
            DenseState::Mixed(m)
        }
    };
    let rest_sites: Vec<usize> = (0..n).filter(|u| !measured.contains(u)).collect();
    let nrest = rest_sites.len();
    let (local, rest) = index_maps(n, 2, measured);
    let mut out = Vec::with_capacity(local.len());
    for (z, &lz) in local.iter().enumerate() {
        let cond = match &rotated {
            DenseState::Pure(v) => {
                let phi = DVector::from_iterator(rest.len(), rest.iter().map(|&r| v[lz + r]));
                let p = phi.norm_squared();
                (p, (p > 1e-15).then(|| DenseState::Pure(phi / C64::new(p.sqrt(), 0.0))))
            }
            DenseState::Mixed(m) => {
                let block = DMatrix::from_fn(rest.len(), rest.len(), |i, j| m[(lz + rest[i], lz + rest[j])]);
                let p = block.trace().re;
                (p, (p > 1e-15).then(|| DenseState::Mixed(block / C64::new(p, 0.0))))
            }
        };
        let (prob, Some(cond)) = cond else {
            continue;
        };
        let mut alphas = vec![vec![0.0; 3]; n];
        for (i, (&q, &b)) in measured.iter().zip(bases).enumerate() {
            let outcome_bit = (z >> (measured.len() - 1 - i)) & 1;
            alphas[q][b - 1] = if outcome_bit == 0 { 1.0 } else { -1.0 };
        }
        let mut entropy_rest = 0.0;
        for (j, &u) in rest_sites.iter().enumerate() {
            let tau = reduced_density(&cond, nrest, 2, &[j]);
            alphas[u] = bloch_from_density(&tau);
            entropy_rest += bloch_entropy(&alphas[u], 2);
        }
        out.push(Outcome {
            prob,
            state: ProductState { d: 2, alphas },
            entropy_rest,
        });
    }
    out
}

/// Runs the experiment for `trials` random `(C, b)` draws.
pub fn eb_experiment(h: &LocalHamiltonian, rho: &DenseState, l: usize, trials: usize, seed: u64) -> Result<EbReport> {
    let hq = unfold_to_qubits(h)?;
    let n = hq.n();
    if n > MAX_EB_QUBITS {
        return Err(Error::size("entanglement-breaking experiment qubits", n, MAX_EB_QUBITS));
    }
    if rho.dim() != 1usize << n {
        return Err(Error::DimensionMismatch(format!("state dim {} vs 2^{n}", rho.dim())));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let pd: PauliDecomposition = pauli_decompose(&hq);
    let energy_rho = expectation(&hq, rho)?;
    let entropy_rho = rho.entropy();
    let mut per_trial = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = child_rng(seed, &[t as u64]);
        let m = rng.random_range(0..=l.min(n));
        let mut measured: Vec<usize> = sample(&mut rng, n, m).into_vec();
        measured.sort_unstable();
        let bases: Vec<usize> = (0..m).map(|_| rng.random_range(1..=3)).collect();
        let outs = outcomes(rho, n, &measured, &bases);
        let mut energy = 0.0;
        let mut probs = Vec::with_capacity(outs.len());
        let mut entropy = 0.0;
        for o in &outs {
            energy += o.prob * product_energy(&pd, &o.state)?;
            entropy += o.prob * o.entropy_rest;
            probs.push(o.prob);
        }
        entropy += shannon_entropy(&probs);
        per_trial.push(EbTrial {
            measured,
            bases,
            energy,
            abs_diff: (energy_rho - energy).abs(),
            entropy,
        });
    }
    let energy_sigma = per_trial.iter().map(|t| t.energy).sum::<f64>() / trials as f64;
    let mean_abs_diff = per_trial.iter().map(|t| t.abs_diff).sum::<f64>() / trials as f64;
    let min_entropy_gap = per_trial
        .iter()
        .map(|t| t.entropy - entropy_rho)
        .fold(f64::INFINITY, f64::min);
    Ok(EbReport {
        n_qubits: n,
        l,
        trials,
        energy_rho,
        entropy_rho,
        energy_sigma,
        sigma_abs_diff: (energy_rho - energy_sigma).abs(),
        mean_abs_diff,
        bound: eb_bound(&hq, l),
        min_entropy_gap,
        entropy_monotone: min_entropy_gap >= -1e-9,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_ground;
    use crate::linalg::{hermitian_eigen, von_neumann_entropy};
    use crate::pauli::PauliString;
    use crate::rng::rng_from_seed;

    fn heisenberg_complete(n: usize) -> LocalHamiltonian {
        let m = PauliString::from_colors(&[1, 1], 2).to_matrix()
            + PauliString::from_colors(&[2, 2], 2).to_matrix()
            + PauliString::from_colors(&[3, 3], 2).to_matrix();
        let mut terms = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                terms.push(LocalTerm::new(vec![u, v], m.clone()));
            }
        }
        LocalHamiltonian::new(n, 2, 2, terms).unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_zero_difference() {
        let h = LocalHamiltonian::empty(3, 2, 2).unwrap();
        let mut rng = rng_from_seed(1);
        let v = crate::linalg::random_unit_vector(8, &mut rng);
        let r = eb_experiment(&h, &DenseState::Pure(v), 2, 20, 5).unwrap();
        assert!(r.per_trial.iter().all(|t| t.abs_diff == 0.0));
    }

    #[test]
    fn product_input_without_measurement_is_unchanged() {
        let h = heisenberg_complete(4);
        let mut rng = rng_from_seed(2);
        let s = ProductState::random_mixed(4, 2, &mut rng);
        let rho = DenseState::Mixed(s.to_dense().unwrap());
        let r = eb_experiment(&h, &rho, 0, 5, 9).unwrap();
        assert!(r.per_trial.iter().all(|t| t.abs_diff < 1e-12));
        assert!(r.bound.is_none());
    }

    /// Builds `η_{C,b}` as a dense matrix and compares its entropy and energy
    /// with the block formula used by the experiment.
    #[test]
    fn block_entropy_matches_dense_eta() {
        let h = heisenberg_complete(4);
        let (_, ground) = exact_ground(&h).unwrap();
        let measured = vec![1, 3];
        let bases = vec![1, 2];
        let outs = outcomes(&ground, 4, &measured, &bases);
        let mut eta = DMatrix::<C64>::zeros(16, 16);
        for o in &outs {
            eta += o.state.to_dense().unwrap() * C64::new(o.prob, 0.0);
        }
        let probs: Vec<f64> = outs.iter().map(|o| o.prob).collect();
        let block: f64 = shannon_entropy(&probs) + outs.iter().map(|o| o.prob * o.entropy_rest).sum::<f64>();
        assert!((von_neumann_entropy(&eta) - block).abs() < 1e-9);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (vals, _) = hermitian_eigen(&eta);
        assert!(vals[0] > -1e-12);
    }

    #[test]
    fn ground_state_experiment_respects_bound() {
        let h = heisenberg_complete(5);
        let (_, ground) = exact_ground(&h).unwrap();
        let r = eb_experiment(&h, &ground, 2, 40, 3).unwrap();
        assert!(r.entropy_monotone);
        assert!(r.sigma_abs_diff <= r.mean_abs_diff + 1e-12);
        assert!(r.mean_abs_diff <= r.bound.unwrap());
    }

    #[test]
    fn qudit_hamiltonian_unfolds() {
        let mut rng = rng_from_seed(4);
        let m = crate::linalg::random_hermitian(16, &mut rng);
        let h = LocalHamiltonian::new(2, 4, 2, vec![LocalTerm::new(vec![0, 1], m)]).unwrap();
        let hq = unfold_to_qubits(&h).unwrap();
        assert_eq!((hq.n(), hq.k()), (4, 4));
        let a = exact_ground(&h).unwrap().0;
        let b = exact_ground(&hq).unwrap().0;
        assert!((a - b).abs() < 1e-10);
    }
}
