//! Product states in generalized Bloch coordinates and dense oracle states.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, random_density_matrix, random_unit_vector, shannon_entropy};
use crate::pauli::{single_qudit_basis, C64};
use crate::rng::Rng;

/// PSD tolerance for product-state validation.
pub const PSD_TOL: f64 = 1e-9;

/// Largest pure-state dimension handled by the dense oracles.
pub const MAX_PURE_DIM: usize = 1 << 22;
/// Largest mixed-state dimension handled by the dense oracles.
pub const MAX_MIXED_DIM: usize = 1 << 12;

/// One Bloch vector per qudit: `ρ_u = I/d + Σ_i α_u[i-1] σ_i / d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub d: usize,
    pub alphas: Vec<Vec<f64>>,
}

impl ProductState {
    pub fn maximally_mixed(n: usize, d: usize) -> Self {
        ProductState {
            d,
            alphas: vec![vec![0.0; d * d - 1]; n],
        }
    }

    /// Checks lengths and the PSD condition of every factor.
    pub fn new(d: usize, alphas: Vec<Vec<f64>>) -> Result<Self> {
        let s = ProductState { d, alphas };
        s.validate()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.d * self.d - 1;
        for (u, a) in self.alphas.iter().enumerate() {
            if a.len() != len {
                return Err(Error::DimensionMismatch(format!(
                    "qudit {u} has {} Bloch components, expected {len}",
                    a.len()
                )));
            }
            if self.d == 2 {
                let nrm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 1.0 + PSD_TOL {
                    return Err(Error::InvalidInput(format!("qudit {u} Bloch norm {nrm} exceeds 1")));
                }
            } else {
                let lo = hermitian_eigenvalues(&density_from_bloch(a, self.d))[0];
                if lo < -PSD_TOL {
                    return Err(Error::InvalidInput(format!("qudit {u} has negative eigenvalue {lo}")));
                }
            }
        }
        Ok(())
    }

    pub fn density(&self, u: usize) -> DMatrix<C64> {
        density_from_bloch(&self.alphas[u], self.d)
    }

    /// Natural-log entropy of factor `u`.
    pub fn entropy(&self, u: usize) -> f64 {
        bloch_entropy(&self.alphas[u], self.d)
    }

    /// Uniformly random pure product state.
    pub fn random_pure(n: usize, d: usize, rng: &mut Rng) -> Self {
        let basis = single_qudit_basis(d);
        let alphas = (0..n)
            .map(|_| {
                let v = random_unit_vector(d, rng);
                let rho = &v * v.adjoint();
                bloch_from_density_with(&rho, &basis)
            })
            .collect();
        ProductState { d, alphas }
    }

    /// Random mixed product state: each factor is a random density matrix,
    /// occasionally replaced by a pure one.
    pub fn random_mixed(n: usize, d: usize, rng: &mut Rng) -> Self {
        let basis = single_qudit_basis(d);
        let alphas = (0..n)
            .map(|_| {
                let rho = if rng.random_bool(0.2) {
                    let v = random_unit_vector(d, rng);
                    &v * v.adjoint()
                } else {
                    random_density_matrix(d, rng)
                };
                bloch_from_density_with(&rho, &basis)
            })
            .collect();
        ProductState { d, alphas }
    }

    /// Dense `d^n` density matrix `⊗_u ρ_u`.
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let dim = dense_dim(self.d, self.n(), MAX_MIXED_DIM, "product state as dense matrix")?;
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for u in 0..self.n() {
            acc = acc.kronecker(&self.density(u));
        }
        debug_assert_eq!(acc.nrows(), dim);
        Ok(acc)
    }
}

/// `d^n` checked against a limit.
pub fn dense_dim(d: usize, n: usize, limit: usize, what: &str) -> Result<usize> {
    let mut dim: usize = 1;
    for _ in 0..n {
        dim = dim.checked_mul(d).filter(|&x| x <= limit).ok_or_else(|| {
            Error::size(format!("{what} (d={d}, n={n})"), usize::MAX.min(d.saturating_pow(n as u32)), limit)
        })?;
    }
    Ok(dim)
}

pub fn density_from_bloch(alpha: &[f64], d: usize) -> DMatrix<C64> {
    let basis = single_qudit_basis(d);
    let mut rho = DMatrix::<C64>::identity(d, d);
    for (i, &a) in alpha.iter().enumerate() {
        rho += &basis[i + 1] * C64::new(a, 0.0);
    }
    rho / C64::new(d as f64, 0.0)
}

pub fn bloch_from_density(rho: &DMatrix<C64>) -> Vec<f64> {
    bloch_from_density_with(rho, &single_qudit_basis(rho.nrows()))
}

fn bloch_from_density_with(rho: &DMatrix<C64>, basis: &[DMatrix<C64>]) -> Vec<f64> {
    basis[1..].iter().map(|s| (rho * s).trace().re).collect()
}

/// Entropy of a single factor given its Bloch vector.
pub fn bloch_entropy(alpha: &[f64], d: usize) -> f64 {
    if d == 2 {
        let r = alpha.iter().map(|x| x * x).sum::<f64>().sqrt().min(1.0);
        return shannon_entropy(&[(1.0 + r) / 2.0, (1.0 - r) / 2.0]);
    }
    let vals: Vec<f64> = hermitian_eigenvalues(&density_from_bloch(alpha, d))
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    shannon_entropy(&vals)
}

/// Dense oracle state.
#[derive(Clone, Debug)]
pub enum DenseState {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

impl DenseState {
    pub fn pure(v: DVector<C64>) -> Result<Self> {
        if v.len() > MAX_PURE_DIM {
            return Err(Error::size("pure dense state", v.len(), MAX_PURE_DIM));
        }
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("state norm {} is not 1", v.norm())));
        }
        Ok(DenseState::Pure(v))
    }

    pub fn mixed(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() > MAX_MIXED_DIM {
            return Err(Error::size("mixed dense state", m.nrows(), MAX_MIXED_DIM));
        }
        if (m.trace().re - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("density matrix trace is not 1".into()));
        }
        let dev = (&m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if dev > 1e-9 {
            return Err(Error::InvalidInput("density matrix is not Hermitian".into()));
        }
        if hermitian_eigenvalues(&m).first().is_some_and(|&v| v < -1e-9) {
            return Err(Error::InvalidInput("density matrix is not PSD".into()));
        }
        Ok(DenseState::Mixed(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            DenseState::Pure(v) => v.len(),
            DenseState::Mixed(m) => m.nrows(),
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match self {
            DenseState::Pure(v) => v * v.adjoint(),
            DenseState::Mixed(m) => m.clone(),
        }
    }

    /// Natural-log von Neumann entropy.
    pub fn entropy(&self) -> f64 {
        match self {
            DenseState::Pure(_) => 0.0,
            DenseState::Mixed(m) => {
                let (vals, _) = hermitian_eigen(m);
                shannon_entropy(&vals.into_iter().map(|v| v.max(0.0)).collect::<Vec<_>>())
            }
        }
    }
}
