//! Cut decomposition of every Pauli color class of a local Hamiltonian.

use rayon::prelude::*;
use serde::Serialize;

use super::fk::{fk_decompose, tensor_fk_decompose, CutDecomposition, FkOptions};
use crate::decomposition::{pauli_decompose, Color, PauliDecomposition};
use crate::error::{Error, Result};
use crate::hamiltonian::LocalHamiltonian;
use crate::rng::derive_seed;
use crate::state::ProductState;

/// Decomposition of one color class. The class energy is
/// `weight · Σ_{distinct e} M^c_e Π_p α^{c_p}_{e_p}`.
#[derive(Clone, Debug, Serialize)]
pub struct ClassCut {
    pub color: Color,
    pub weight: f64,
    pub decomposition: CutDecomposition,
}

impl ClassCut {
    /// Bound on `|Σ_{distinct e} W_e Π α|` over all product states:
    /// `‖W‖_{∞→1}` plus the repeated-index mass.
    pub fn residual_bound(&self) -> f64 {
        let s = &self.decomposition.stats;
        s.inf_to_one + s.repeated_index_mass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HamiltonianCutDecomposition {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    /// State-independent energy (identity coefficients).
    pub constant: f64,
    pub classes: Vec<ClassCut>,
}

/// Largest supported locality for the decomposition.
pub const MAX_CUT_K: usize = 3;

fn color_tag(c: &[usize]) -> u64 {
    c.iter().fold(0xc0105u64, |acc, &x| acc.wrapping_mul(1_000_003).wrapping_add(x as u64 + 1))
}

/// Decomposes every nonzero color class (identity components included;
/// the all-identity class is kept as a constant).
pub fn ham_cut_decompose(h: &LocalHamiltonian, eps: f64, seed: u64, opts: &FkOptions) -> Result<HamiltonianCutDecomposition> {
    let pd = pauli_decompose(h);
    ham_cut_decompose_pd(&pd, eps, seed, opts)
}

pub fn ham_cut_decompose_pd(pd: &PauliDecomposition, eps: f64, seed: u64, opts: &FkOptions) -> Result<HamiltonianCutDecomposition> {
    if pd.k > MAX_CUT_K {
        return Err(Error::size("cut decomposition locality k", pd.k, MAX_CUT_K));
    }
    let classes: Vec<(Color, f64)> = pd.color_classes();
    let classes = classes
        .into_par_iter()
        .map(|(color, weight)| {
            let m = pd.color_tensor(&color);
            let s = derive_seed(seed, &[color_tag(&color)]);
            let mut decomposition = if pd.k == 2 {
                fk_decompose(&m, eps, s, opts)?
            } else {
                tensor_fk_decompose(&m, eps, s, opts)?
            };
            for p in &mut decomposition.pieces {
                p.color = color.clone();
            }
            Ok(ClassCut {
                color,
                weight,
                decomposition,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HamiltonianCutDecomposition {
        n: pd.n,
        d: pd.d,
        k: pd.k,
        eps,
        constant: pd.constant(),
        classes,
    })
}

fn component(s: &ProductState, c: usize, u: usize) -> f64 {
    if c == 0 {
        1.0
    } else {
        s.alphas[u][c - 1]
    }
}

/// Sum of `Π α` over index tuples in `S_1 × ... × S_k` with all indices
/// distinct.
pub fn distinct_block_sum(sides: &[Vec<usize>], color: &[usize], s: &ProductState) -> f64 {
    match sides.len() {
        1 => sides[0].iter().map(|&u| component(s, color[0], u)).sum(),
        2 => {
            let mut in_t = vec![false; s.n()];
            for &v in &sides[1] {
                in_t[v] = true;
            }
            let r: f64 = sides[0].iter().map(|&u| component(s, color[0], u)).sum();
            let c: f64 = sides[1].iter().map(|&v| component(s, color[1], v)).sum();
            let diag: f64 = sides[0]
                .iter()
                .filter(|&&u| in_t[u])
                .map(|&u| component(s, color[0], u) * component(s, color[1], u))
                .sum();
            r * c - diag
        }
        _ => {
            let mut total = 0.0;
            for &a in &sides[0] {
                for &b in &sides[1] {
                    if a == b {
                        continue;
                    }
                    for &e in &sides[2] {
                        if e != a && e != b {
                            total += component(s, color[0], a) * component(s, color[1], b) * component(s, color[2], e);
                        }
                    }
                }
            }
            total
        }
    }
}

impl HamiltonianCutDecomposition {
    /// Product-state energy of the cut approximation `H_D` (repeated indices
    /// dropped).
    pub fn hd_energy(&self, s: &ProductState) -> f64 {
        self.constant
            + self
                .classes
                .iter()
                .map(|cc| {
                    cc.weight
                        * cc
                            .decomposition
                            .pieces
                            .iter()
                            .map(|p| p.coeff * distinct_block_sum(&p.sides, &cc.color, s))
                            .sum::<f64>()
                })
                .sum::<f64>()
    }

    /// Rigorous bound on `|Tr[(H − H_D)ρ]|` over product states.
    pub fn residual_bound(&self) -> f64 {
        self.classes.iter().map(|c| c.weight * c.residual_bound()).sum()
    }

    pub fn total_width(&self) -> usize {
        self.classes.iter().map(|c| c.decomposition.width()).sum()
    }

    /// Every distinct cut side, sorted.
    pub fn sides(&self) -> Vec<Vec<usize>> {
        let mut v: Vec<Vec<usize>> = self
            .classes
            .iter()
            .flat_map(|c| c.decomposition.pieces.iter().flat_map(|p| p.sides.iter().cloned()))
            .collect();
        v.sort();
        v.dedup();
        v
    }
}
