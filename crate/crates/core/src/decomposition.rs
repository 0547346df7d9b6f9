//! Pauli-basis expansion of a local Hamiltonian and the product-state energy
//! polynomial.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::pauli::{color_tuple, PauliString, C64};
use crate::state::ProductState;

/// Coefficients below this magnitude are treated as zero.
pub const COEFF_EPS: f64 = 1e-14;

/// One single-qudit color per support position; `0` is the identity.
pub type Color = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermCoefficients {
    pub support: Vec<usize>,
    /// Nonzero `(color, h^c_e)` pairs with `h^c_e = d^{-k} Tr[h_e σ^c]`.
    pub coeffs: Vec<(Color, f64)>,
}

/// Dense k-dimensional real array over `[n]^k`, row-major with the first
/// index most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorTensor {
    pub n: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl ColorTensor {
    pub fn zeros(n: usize, k: usize) -> Self {
        ColorTensor {
            n,
            k,
            data: vec![0.0; n.pow(k as u32)],
        }
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Row-major view as an `n × n` matrix (k = 2 only).
    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.k, 2);
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        ColorTensor {
            n,
            k: 2,
            data: (0..n * n).map(|i| m[(i / n, i % n)]).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PauliDecomposition {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub terms: Vec<TermCoefficients>,
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

/// Smallest permutation of a color tuple; color classes are keyed by it.
pub fn canonical_color(c: &[usize]) -> Color {
    let mut v = c.to_vec();
    v.sort_unstable();
    v
}

/// Expands every term in the generalized Pauli basis.
pub fn pauli_decompose(h: &LocalHamiltonian) -> PauliDecomposition {
    let (d, k) = (h.d(), h.k());
    let ncolors = (d * d).pow(k as u32);
    let scale = 1.0 / (d.pow(k as u32) as f64);
    let strings: Vec<(Color, PauliString)> = (0..ncolors)
        .map(|flat| {
            let c = color_tuple(flat, k, d);
            let p = PauliString::from_colors(&c, d);
            (c, p)
        })
        .collect();
    let terms = h
        .terms()
        .iter()
        .map(|t| {
            let coeffs = strings
                .iter()
                .filter_map(|(c, p)| {
                    let v = p.trace_with(&t.matrix).re * scale;
                    (v.abs() > COEFF_EPS).then(|| (c.clone(), v))
                })
                .collect();
            TermCoefficients {
                support: t.support.clone(),
                coeffs,
            }
        })
        .collect();
    PauliDecomposition {
        n: h.n(),
        d,
        k,
        terms,
    }
}

impl PauliDecomposition {
    /// `Σ_c h^c_e σ^c` for term `i`.
    pub fn reconstruct_term(&self, i: usize) -> DMatrix<C64> {
        let dim = self.d.pow(self.k as u32);
        let mut m = DMatrix::zeros(dim, dim);
        for (c, v) in &self.terms[i].coeffs {
            PauliString::from_colors(c, self.d).accumulate(*v, &mut m);
        }
        m
    }

    /// Every color tuple that carries a nonzero coefficient in the symmetric
    /// storage (all position permutations of the per-term colors).
    pub fn colors(&self) -> BTreeSet<Color> {
        let perms = permutations(self.k);
        let mut out = BTreeSet::new();
        for t in &self.terms {
            for (c, _) in &t.coeffs {
                for p in &perms {
                    out.insert(p.iter().map(|&i| c[i]).collect());
                }
            }
        }
        out
    }

    /// Color classes (keyed by their sorted tuple) with their weight
    /// `#distinct permutations / k!`. The identity class is excluded.
    pub fn color_classes(&self) -> Vec<(Color, f64)> {
        let perms = permutations(self.k);
        let mut classes: BTreeSet<Color> = BTreeSet::new();
        for t in &self.terms {
            for (c, _) in &t.coeffs {
                if c.iter().any(|&x| x != 0) {
                    classes.insert(canonical_color(c));
                }
            }
        }
        classes
            .into_iter()
            .map(|c| {
                let distinct: BTreeSet<Color> = perms
                    .iter()
                    .map(|p| p.iter().map(|&i| c[i]).collect())
                    .collect();
                let w = distinct.len() as f64 / factorial(self.k) as f64;
                (c, w)
            })
            .collect()
    }

    /// Sum of all identity coefficients (the state-independent energy).
    pub fn constant(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.coeffs.iter())
            .filter(|(c, _)| c.iter().all(|&x| x == 0))
            .map(|(_, v)| v)
            .sum()
    }

    /// Symmetric-storage array `M^c` with `M^{c∘π}_{e∘π} = h^c_e` for every
    /// permutation `π` of the support positions.
    pub fn color_tensor(&self, color: &[usize]) -> ColorTensor {
        let perms = permutations(self.k);
        let mut t = ColorTensor::zeros(self.n, self.k);
        for term in &self.terms {
            for (c, v) in &term.coeffs {
                for p in &perms {
                    if p.iter().enumerate().all(|(pos, &i)| c[i] == color[pos]) {
                        let idx: Vec<usize> = p.iter().map(|&i| term.support[i]).collect();
                        let off = t.offset(&idx);
                        t.data[off] = *v;
                    }
                }
            }
        }
        t
    }

    /// Per-class symmetric arrays, keyed by class representative.
    pub fn class_tensors(&self) -> BTreeMap<Color, (f64, ColorTensor)> {
        self.color_classes()
            .into_iter()
            .map(|(c, w)| {
                let t = self.color_tensor(&c);
                (c, (w, t))
            })
            .collect()
    }
}

/// `Σ_e Σ_c h^c_e Π_j α^{c_j}_{e_j}` with `α^0 = 1`, equal to `Tr[H ⊗ρ_u]`.
pub fn product_energy(pd: &PauliDecomposition, s: &ProductState) -> Result<f64> {
    if s.n() != pd.n || s.d != pd.d {
        return Err(Error::DimensionMismatch(format!(
            "state has n={}, d={}; decomposition has n={}, d={}",
            s.n(),
            s.d,
            pd.n,
            pd.d
        )));
    }
    Ok(pd
        .terms
        .iter()
        .map(|t| {
            t.coeffs
                .iter()
                .map(|(c, v)| {
                    c.iter()
                        .zip(&t.support)
                        .fold(*v, |acc, (&ci, &u)| if ci == 0 { acc } else { acc * s.alphas[u][ci - 1] })
                })
                .sum::<f64>()
        })
        .sum())
}

/// Gradient of the energy with respect to `α_u`: entry `i-1` is the
/// coefficient multiplying `α_u[i-1]`. Since the energy is affine in each
/// `α_u`, `E = constant_u + field · α_u`.
pub fn local_field(pd: &PauliDecomposition, s: &ProductState, u: usize) -> Vec<f64> {
    let mut field = vec![0.0; pd.d * pd.d - 1];
    for t in &pd.terms {
        let Some(pos) = t.support.iter().position(|&x| x == u) else {
            continue;
        };
        for (c, v) in &t.coeffs {
            if c[pos] == 0 {
                continue;
            }
            let mut acc = *v;
            for (p, (&ci, &w)) in c.iter().zip(&t.support).enumerate() {
                if p != pos && ci != 0 {
                    acc *= s.alphas[w][ci - 1];
                }
            }
            field[c[pos] - 1] += acc;
        }
    }
    field
}
