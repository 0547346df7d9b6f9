//! Generalized Pauli basis for qudits of dimension `d = 2^m`.
//!
//! A single-qudit color `c` in `0..d*d` is read as `m` base-4 digits
//! (most significant digit on the first qubit of the qudit), with digit
//! meaning `0 = I, 1 = X, 2 = Y, 3 = Z`. Multi-qudit strings are tensor
//! products in support order, first position most significant.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Number of qubits per qudit, or an error when `d` is not a power of two.
pub fn qubits_per_qudit(d: usize) -> Result<usize> {
    if d < 2 || !d.is_power_of_two() {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(d.trailing_zeros() as usize)
}

/// A Pauli string stored as `i^ny X^x Z^z` over a register of qubits.
///
/// Basis index bit `nbits-1-j` belongs to qubit `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliString {
    pub nbits: usize,
    pub x: usize,
    pub z: usize,
    pub ny: u32,
}

impl PauliString {
    /// Builds the string for a tuple of qudit colors.
    pub fn from_colors(colors: &[usize], d: usize) -> Self {
        let m = d.trailing_zeros() as usize;
        let nbits = colors.len() * m;
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (p, &c) in colors.iter().enumerate() {
            for j in 0..m {
                let digit = (c >> (2 * (m - 1 - j))) & 3;
                let bit = 1usize << (nbits - 1 - (p * m + j));
                match digit {
                    1 => x |= bit,
                    2 => {
                        x |= bit;
                        z |= bit;
                        ny += 1;
                    }
                    3 => z |= bit,
                    _ => {}
                }
            }
        }
        PauliString { nbits, x, z, ny }
    }

    pub fn dim(&self) -> usize {
        1 << self.nbits
    }

    /// Phase with which basis state `j` is mapped to `j ^ x`.
    #[inline]
    pub fn phase(&self, j: usize) -> C64 {
        let sign = if (j & self.z).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        match self.ny % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }

    /// `Tr[h P]` for a dense matrix `h` of matching dimension.
    pub fn trace_with(&self, h: &DMatrix<C64>) -> C64 {
        (0..self.dim())
            .map(|j| h[(j, j ^ self.x)] * self.phase(j))
            .sum()
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            m[(j ^ self.x, j)] = self.phase(j);
        }
        m
    }

    /// Adds `coeff * P` into `m`.
    pub fn accumulate(&self, coeff: f64, m: &mut DMatrix<C64>) {
        for j in 0..self.dim() {
            m[(j ^ self.x, j)] += self.phase(j) * coeff;
        }
    }
}

/// The `d*d` single-qudit basis matrices, identity first.
pub fn single_qudit_basis(d: usize) -> Vec<DMatrix<C64>> {
    (0..d * d)
        .map(|c| PauliString::from_colors(&[c], d).to_matrix())
        .collect()
}

/// Decodes a flat color index over `k` qudits into a tuple (first position
/// most significant).
pub fn color_tuple(mut flat: usize, k: usize, d: usize) -> Vec<usize> {
    let dd = d * d;
    let mut out = vec![0; k];
    for p in (0..k).rev() {
        out[p] = flat % dd;
        flat /= dd;
    }
    out
}
