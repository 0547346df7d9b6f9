//! k-local Hamiltonians as lists of Hermitian terms on hyperedges.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::pauli::{qubits_per_qudit, C64};

/// Entrywise tolerance for the Hermiticity check at load time.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalTerm {
    pub support: Vec<usize>,
    pub matrix: DMatrix<C64>,
}

impl LocalTerm {
    pub fn new(support: Vec<usize>, matrix: DMatrix<C64>) -> Self {
        LocalTerm { support, matrix }
    }

    /// Real-valued term, convenient for tests and generators.
    pub fn real(support: Vec<usize>, matrix: DMatrix<f64>) -> Self {
        LocalTerm {
            support,
            matrix: matrix.map(|x| C64::new(x, 0.0)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    n: usize,
    d: usize,
    k: usize,
    terms: Vec<LocalTerm>,
    norms: Vec<f64>,
}

/// Reorders the tensor factors of a `d^k` square matrix: factor `p` of the
/// output is factor `perm[p]` of the input.
pub fn permute_factors(m: &DMatrix<C64>, d: usize, perm: &[usize]) -> DMatrix<C64> {
    let k = perm.len();
    let dim = m.nrows();
    let digits = |idx: usize| -> Vec<usize> {
        (0..k).map(|p| (idx / d.pow((k - 1 - p) as u32)) % d).collect()
    };
    let compose = |ds: &[usize]| ds.iter().fold(0usize, |acc, &x| acc * d + x);
    let remap = |idx: usize| {
        let out = digits(idx);
        let mut inp = vec![0; k];
        for p in 0..k {
            inp[perm[p]] = out[p];
        }
        compose(&inp)
    };
    let map: Vec<usize> = (0..dim).map(remap).collect();
    DMatrix::from_fn(dim, dim, |i, j| m[(map[i], map[j])])
}

impl LocalHamiltonian {
    /// Validates terms, sorts each support, merges duplicate supports by
    /// summation and drops terms that end up exactly zero.
    pub fn new(n: usize, d: usize, k: usize, terms: Vec<LocalTerm>) -> Result<Self> {
        qubits_per_qudit(d)?;
        if k == 0 {
            return Err(Error::InvalidInput("locality k must be at least 1".into()));
        }
        if k > n && !terms.is_empty() {
            return Err(Error::InvalidInput(format!("k = {k} exceeds n = {n}")));
        }
        let dim = d.pow(k as u32);
        let mut merged: BTreeMap<Vec<usize>, DMatrix<C64>> = BTreeMap::new();
        for t in terms {
            if t.support.len() != k {
                return Err(Error::InvalidInput(format!(
                    "term support {:?} has {} sites, instance k = {k}",
                    t.support,
                    t.support.len()
                )));
            }
            if let Some(&bad) = t.support.iter().find(|&&u| u >= n) {
                return Err(Error::InvalidInput(format!("site {bad} out of range (n = {n})")));
            }
            if t.matrix.nrows() != dim || t.matrix.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "term on {:?} must be {dim}x{dim}, got {}x{}",
                    t.support,
                    t.matrix.nrows(),
                    t.matrix.ncols()
                )));
            }
            if t.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("term on {:?} has non-finite entries", t.support)));
            }
            let dev = (&t.matrix - t.matrix.adjoint())
                .iter()
                .fold(0.0f64, |a, z| a.max(z.norm()));
            if dev > HERMITIAN_TOL {
                return Err(Error::NonHermitian {
                    support: t.support,
                    deviation: dev,
                });
            }
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by_key(|&p| t.support[p]);
            let sorted: Vec<usize> = order.iter().map(|&p| t.support[p]).collect();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!("repeated site in support {:?}", t.support)));
            }
            let herm = (&t.matrix + t.matrix.adjoint()) * C64::new(0.5, 0.0);
            let matrix = if order.iter().enumerate().all(|(i, &p)| i == p) {
                herm
            } else {
                permute_factors(&herm, d, &order)
            };
            merged
                .entry(sorted)
                .and_modify(|m| *m += &matrix)
                .or_insert(matrix);
        }
        let terms: Vec<LocalTerm> = merged
            .into_iter()
            .filter(|(_, m)| m.iter().any(|z| z.norm() > 0.0))
            .map(|(support, matrix)| LocalTerm { support, matrix })
            .collect();
        let norms = terms.iter().map(|t| spectral_norm(&t.matrix)).collect();
        Ok(LocalHamiltonian {
            n,
            d,
            k,
            terms,
            norms,
        })
    }

    pub fn empty(n: usize, d: usize, k: usize) -> Result<Self> {
        Self::new(n, d, k, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Spectral norms `J_e`, one per term.
    pub fn term_norms(&self) -> &[f64] {
        &self.norms
    }

    /// `|J|_1 = Σ_e J_e`.
    pub fn l1_norm(&self) -> f64 {
        self.norms.iter().sum()
    }

    /// `‖J‖_F = (Σ_e J_e²)^{1/2}`.
    pub fn frobenius_norm(&self) -> f64 {
        self.norms.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Hilbert-space dimension `d^n`, or `None` on overflow.
    pub fn hilbert_dim(&self) -> Option<usize> {
        (self.d as u128)
            .checked_pow(self.n as u32)
            .filter(|&v| v <= usize::MAX as u128)
            .map(|v| v as usize)
    }

    /// Keeps the terms selected by `keep`.
    pub fn filter_terms(&self, mut keep: impl FnMut(usize, &LocalTerm) -> bool) -> Self {
        let mut terms = Vec::new();
        let mut norms = Vec::new();
        for (i, t) in self.terms.iter().enumerate() {
            if keep(i, t) {
                terms.push(t.clone());
                norms.push(self.norms[i]);
            }
        }
        LocalHamiltonian {
            n: self.n,
            d: self.d,
            k: self.k,
            terms,
            norms,
        }
    }

    /// Restricts to the sites in `sites` (sorted, distinct), keeping only
    /// terms supported inside them and relabelling sites `0..sites.len()` in
    /// order.
    pub fn induced(&self, sites: &[usize]) -> Self {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in sites.iter().enumerate() {
            index[old] = new;
        }
        let mut terms = Vec::new();
        let mut norms = Vec::new();
        for (t, &nrm) in self.terms.iter().zip(&self.norms) {
            if t.support.iter().all(|&u| index[u] != usize::MAX) {
                terms.push(LocalTerm {
                    support: t.support.iter().map(|&u| index[u]).collect(),
                    matrix: t.matrix.clone(),
                });
                norms.push(nrm);
            }
        }
        LocalHamiltonian {
            n: sites.len(),
            d: self.d,
            k: self.k,
            terms,
            norms,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        file.into_hamiltonian()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}

/// On-disk instance format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermFile {
    pub support: Vec<usize>,
    pub matrix_re: Vec<Vec<f64>>,
    #[serde(default)]
    pub matrix_im: Option<Vec<Vec<f64>>>,
}

impl InstanceFile {
    pub fn into_hamiltonian(self) -> Result<LocalHamiltonian> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            let rows = t.matrix_re.len();
            if t.matrix_re.iter().any(|r| r.len() != rows) {
                return Err(Error::InvalidInput(format!("matrix_re of {:?} is not square", t.support)));
            }
            let im = match &t.matrix_im {
                Some(im) => {
                    if im.len() != rows || im.iter().any(|r| r.len() != rows) {
                        return Err(Error::InvalidInput(format!(
                            "matrix_im of {:?} does not match matrix_re",
                            t.support
                        )));
                    }
                    Some(im)
                }
                None => None,
            };
            let m = DMatrix::from_fn(rows, rows, |i, j| {
                C64::new(t.matrix_re[i][j], im.map_or(0.0, |im| im[i][j]))
            });
            terms.push(LocalTerm::new(t.support, m));
        }
        LocalHamiltonian::new(self.n, self.d, self.k, terms)
    }
}

impl From<&LocalHamiltonian> for InstanceFile {
    fn from(h: &LocalHamiltonian) -> Self {
        let terms = h
            .terms
            .iter()
            .map(|t| {
                let dim = t.matrix.nrows();
                let grab = |f: fn(&C64) -> f64| {
                    (0..dim)
                        .map(|i| (0..dim).map(|j| f(&t.matrix[(i, j)])).collect())
                        .collect()
                };
                TermFile {
                    support: t.support.clone(),
                    matrix_re: grab(|z| z.re),
                    matrix_im: Some(grab(|z| z.im)),
                }
            })
            .collect();
        InstanceFile {
            n: h.n,
            d: h.d,
            k: h.k,
            terms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    fn pauli(colors: &[usize]) -> DMatrix<C64> {
        PauliString::from_colors(colors, 2).to_matrix()
    }

    #[test]
    fn merges_duplicates_and_drops_zero_terms() {
        let a = pauli(&[3, 3]);
        let h = LocalHamiltonian::new(
            3,
            2,
            2,
            vec![
                LocalTerm::new(vec![0, 1], a.clone()),
                LocalTerm::new(vec![0, 1], a.clone()),
                LocalTerm::new(vec![1, 2], a.clone()),
                LocalTerm::new(vec![1, 2], -a.clone()),
            ],
        )
        .unwrap();
        assert_eq!(h.num_terms(), 1);
        assert!((h.term_norms()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unsorted_support_permutes_factors() {
        let h = LocalHamiltonian::new(2, 2, 2, vec![LocalTerm::new(vec![1, 0], pauli(&[1, 3]))]).unwrap();
        assert_eq!(h.terms()[0].support, vec![0, 1]);
        assert!((&h.terms()[0].matrix - pauli(&[3, 1])).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian_and_bad_dimension() {
        let mut m = pauli(&[1]);
        m[(0, 1)] = C64::new(2.0, 0.0);
        assert!(matches!(
            LocalHamiltonian::new(1, 2, 1, vec![LocalTerm::new(vec![0], m)]),
            Err(Error::NonHermitian { .. })
        ));
        assert!(matches!(
            LocalHamiltonian::empty(2, 3, 1),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn json_round_trip() {
        let h = LocalHamiltonian::new(2, 2, 2, vec![LocalTerm::new(vec![0, 1], pauli(&[2, 1]))]).unwrap();
        let back = LocalHamiltonian::from_json_str(&h.to_json_string()).unwrap();
        assert_eq!(back.terms(), h.terms());
    }

    #[test]
    fn induced_relabels_sites() {
        let z = pauli(&[3, 3]);
        let h = LocalHamiltonian::new(
            4,
            2,
            2,
            vec![LocalTerm::new(vec![1, 3], z.clone()), LocalTerm::new(vec![0, 1], z)],
        )
        .unwrap();
        let sub = h.induced(&[1, 3]);
        assert_eq!(sub.n(), 2);
        assert_eq!(sub.num_terms(), 1);
        assert_eq!(sub.terms()[0].support, vec![0, 1]);
    }
}
