//! Magnetization constraint sets over per-atom Bloch vectors.

use serde::Serialize;

use crate::linalg::hermitian_eigenvalues;
use crate::state::density_from_bloch;

/// `lo ≤ Σ coeff · α_atom[component-1] ≤ hi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineRow {
    /// `(atom, component, coeff)` with `component ≥ 1`.
    pub terms: Vec<(usize, usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

impl AffineRow {
    pub fn eval(&self, x: &[Vec<f64>]) -> f64 {
        self.terms.iter().map(|&(a, c, w)| w * x[a][c - 1]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[Vec<f64>]) -> f64 {
        let v = self.eval(x);
        (self.lo - v).max(v - self.hi).max(0.0)
    }
}

/// Variables are one Bloch vector per atom; every atom is implicitly
/// constrained to a valid density matrix.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSet {
    pub num_atoms: usize,
    pub d: usize,
    pub rows: Vec<AffineRow>,
    /// Volume cutoff radius for the feasibility search.
    pub inner_radius: f64,
    /// Entropy weight per atom (its size).
    pub weights: Vec<f64>,
}

impl ConstraintSet {
    pub fn new(num_atoms: usize, d: usize, rows: Vec<AffineRow>, inner_radius: f64) -> Self {
        ConstraintSet {
            num_atoms,
            d,
            rows,
            inner_radius,
            weights: vec![1.0; num_atoms],
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.num_atoms);
        self.weights = weights;
        self
    }

    pub fn components(&self) -> usize {
        self.d * self.d - 1
    }

    /// Largest row violation and the largest PSD violation (negative
    /// eigenvalue magnitude, or Bloch-norm excess for qubits).
    pub fn max_violation(&self, x: &[Vec<f64>]) -> (f64, f64) {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let psd = x
            .iter()
            .map(|a| psd_violation(a, self.d))
            .fold(0.0, f64::max);
        (rows, psd)
    }

    /// Checks `x` against every constraint with tolerance `tol`.
    pub fn satisfied_by(&self, x: &[Vec<f64>], tol: f64) -> bool {
        if x.len() != self.num_atoms || x.iter().any(|a| a.len() != self.components()) {
            return false;
        }
        let (r, p) = self.max_violation(x);
        r <= tol && p <= tol
    }
}

/// PSD violation of one Bloch vector.
pub fn psd_violation(alpha: &[f64], d: usize) -> f64 {
    if d == 2 {
        (alpha.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).max(0.0)
    } else {
        (-hermitian_eigenvalues(&density_from_bloch(alpha, d))[0]).max(0.0)
    }
}
