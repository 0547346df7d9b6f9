//! Maximum weighted entropy over a magnetization constraint set.
//!
//! Solved through the Lagrange dual: for multipliers `μ` the inner maximum
//! decouples per atom into a Gibbs state of the induced field, and the dual
//! value bounds the optimum from above. A feasible primal point is recovered
//! by moving the Gibbs point toward a known feasible witness just far enough
//! to satisfy every row; the gap between the two values certifies accuracy.

use nalgebra::DMatrix;
use serde::Serialize;

use super::constraints::ConstraintSet;
use super::ellipsoid::check_feasible_with_hint;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, log_sum_exp};
use crate::pauli::{single_qudit_basis, C64};
use crate::state::bloch_entropy;

/// Row tolerance accepted for the recovered primal point.
pub const ROW_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 5000;
/// Smallest atom weight used in the dual (zero-size atoms carry no entropy).
const MIN_WEIGHT: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct MaxEntropy {
    /// Entropy of the returned feasible witness (a lower bound on the optimum).
    pub entropy: f64,
    /// Dual value (an upper bound on the optimum).
    pub upper: f64,
    pub witness: Vec<Vec<f64>>,
    pub iterations: usize,
}

impl MaxEntropy {
    pub fn gap(&self) -> f64 {
        (self.upper - self.entropy).max(0.0)
    }
}

struct Dual<'a> {
    cs: &'a ConstraintSet,
    basis: Vec<DMatrix<C64>>,
    weights: Vec<f64>,
}

impl Dual<'_> {
    fn rows(&self) -> usize {
        self.cs.rows.len()
    }

    /// Dual value, gradient and the Gibbs point for `lam = [λ⁻; λ⁺]`.
    fn eval(&self, lam: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
        let cs = self.cs;
        let m = self.rows();
        let comps = cs.components();
        let mut field = vec![vec![0.0; comps]; cs.num_atoms];
        let mut value = 0.0;
        for (r, row) in cs.rows.iter().enumerate() {
            let mu = lam[r] - lam[m + r];
            for &(a, c, w) in &row.terms {
                field[a][c - 1] += mu * w;
            }
            value += lam[m + r] * row.hi - lam[r] * row.lo;
        }
        let mut x = Vec::with_capacity(cs.num_atoms);
        for (a, v) in field.iter().enumerate() {
            let (phi, alpha) = self.gibbs(v, self.weights[a]);
            value += phi;
            x.push(alpha);
        }
        let mut grad = vec![0.0; 2 * m];
        for (r, row) in cs.rows.iter().enumerate() {
            let v = row.eval(&x);
            grad[r] = v - row.lo;
            grad[m + r] = row.hi - v;
        }
        (value, grad, x)
    }

    /// `max_ρ w·S(ρ) + Σ v_i Tr[ρ σ_i]` and its maximizer.
    fn gibbs(&self, v: &[f64], w: f64) -> (f64, Vec<f64>) {
        let d = self.cs.d;
        if d == 2 {
            let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let t = r / w;
            let phi = w * (t + (-2.0 * t).exp().ln_1p());
            let alpha = if r > 0.0 { v.iter().map(|x| t.tanh() * x / r).collect() } else { vec![0.0; 3] };
            return (phi, alpha);
        }
        let mut h = DMatrix::<C64>::zeros(d, d);
        for (i, &x) in v.iter().enumerate() {
            if x != 0.0 {
                h += &self.basis[i + 1] * C64::new(x / w, 0.0);
            }
        }
        let (vals, vecs) = hermitian_eigen(&h);
        let lse = log_sum_exp(vals.iter().copied());
        let mut rho = DMatrix::<C64>::zeros(d, d);
        for (j, &l) in vals.iter().enumerate() {
            let p = (l - lse).exp();
            let col = vecs.column(j);
            rho += (&col * col.adjoint()) * C64::new(p, 0.0);
        }
        let alpha = self.basis[1..].iter().map(|s| (&rho * s).trace().re).collect();
        (w * lse, alpha)
    }
}

/// Moves `x` toward the feasible point `anchor` by the smallest fraction that
/// satisfies every row within [`ROW_TOL`].
fn recover(cs: &ConstraintSet, x: &[Vec<f64>], anchor: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut theta: f64 = 0.0;
    for row in &cs.rows {
        let v0 = row.eval(x);
        let v1 = row.eval(anchor);
        let need = if v0 > row.hi + ROW_TOL {
            (v0 - row.hi - ROW_TOL) / (v0 - v1)
        } else if v0 < row.lo - ROW_TOL {
            (row.lo - ROW_TOL - v0) / (v1 - v0)
        } else {
            0.0
        };
        theta = theta.max(need);
    }
    let theta = theta.clamp(0.0, 1.0);
    if theta == 0.0 {
        return x.to_vec();
    }
    x.iter()
        .zip(anchor)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (1.0 - theta) * p + theta * q).collect())
        .collect()
}

fn weighted_entropy(cs: &ConstraintSet, x: &[Vec<f64>]) -> f64 {
    x.iter().zip(&cs.weights).map(|(a, &w)| w * bloch_entropy(a, cs.d)).sum()
}

/// Maximizes `Σ_a w_a S(ρ_a)` over the constraint set to within
/// `tol · Σ w_a` (certified by the duality gap) or until the iteration cap,
/// whichever comes first. `hint` is an optional known feasible point.
pub fn max_entropy(cs: &ConstraintSet, tol: f64, hint: Option<&[Vec<f64>]>) -> Result<MaxEntropy> {
    let feas = check_feasible_with_hint(cs, ROW_TOL, hint);
    let anchor = feas.witness.ok_or(Error::Infeasible)?;
    let dual = Dual {
        cs,
        basis: if cs.d > 2 { single_qudit_basis(cs.d) } else { Vec::new() },
        weights: cs.weights.iter().map(|&w| w.max(MIN_WEIGHT)).collect(),
    };
    let target = tol * cs.weights.iter().sum::<f64>().max(1.0);
    let m2 = 2 * dual.rows();

    let mut best_x = anchor.clone();
    let mut best_entropy = weighted_entropy(cs, &anchor);
    let mut upper = f64::INFINITY;

    let mut lam = vec![0.0; m2];
    let (mut f_lam, _, _) = dual.eval(&lam);
    let mut y = lam.clone();
    let mut t: f64 = 1.0;
    let mut lip = 1.0;
    let mut iterations = 0;
    while iterations < MAX_ITERS {
        iterations += 1;
        let (f_y, g_y, _) = dual.eval(&y);
        let (next, f_next, x_next) = loop {
            let cand: Vec<f64> = y.iter().zip(&g_y).map(|(a, g)| (a - g / lip).max(0.0)).collect();
            let (f_c, _, x_c) = dual.eval(&cand);
            let diff: f64 = cand.iter().zip(&y).zip(&g_y).map(|((c, a), g)| g * (c - a)).sum();
            let sq: f64 = cand.iter().zip(&y).map(|(c, a)| (c - a) * (c - a)).sum();
            if f_c <= f_y + diff + 0.5 * lip * sq + 1e-12 * f_y.abs().max(1.0) || lip > 1e15 {
                break (cand, f_c, x_c);
            }
            lip *= 2.0;
        };
        upper = upper.min(f_next);
        let x = recover(cs, &x_next, &anchor);
        let e = weighted_entropy(cs, &x);
        if e > best_entropy && cs.satisfied_by(&x, ROW_TOL * 10.0) {
            best_entropy = e;
            best_x = x;
        }
        if upper - best_entropy <= target {
            break;
        }
        if f_next > f_lam {
            // restart momentum
            t = 1.0;
            y = next.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = next.iter().zip(&lam).map(|(a, b)| a + (t - 1.0) / t_next * (a - b)).collect();
            t = t_next;
        }
        lam = next;
        f_lam = f_next;
        lip *= 0.9;
    }
    Ok(MaxEntropy {
        entropy: best_entropy,
        upper: upper.max(best_entropy),
        witness: best_x,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::shannon_entropy;
    use crate::relax::constraints::AffineRow;

    fn row(terms: Vec<(usize, usize, f64)>, lo: f64, hi: f64) -> AffineRow {
        AffineRow { terms, lo, hi }
    }

    #[test]
    fn unconstrained_qubit_is_maximally_mixed() {
        let cs = ConstraintSet::new(1, 2, vec![row(vec![(0, 3, 1.0)], -2.0, 2.0)], 0.01);
        let r = max_entropy(&cs, 1e-9, None).unwrap();
        assert!((r.entropy - 2f64.ln()).abs() < 1e-9);
        assert!(r.witness[0].iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn pinned_magnetization_gives_binary_entropy() {
        let cs = ConstraintSet::new(1, 2, vec![row(vec![(0, 3, 1.0)], 0.5, 0.5)], 0.01);
        let r = max_entropy(&cs, 1e-9, None).unwrap();
        let expect = shannon_entropy(&[0.75, 0.25]);
        assert!((expect - 0.562335).abs() < 1e-6);
        assert!((r.entropy - expect).abs() < 1e-8, "{}", r.entropy);
    }

    #[test]
    fn active_bound_is_met_with_certified_gap() {
        // weighted atoms, lower bound on the sum forces magnetization
        let rows = vec![row(vec![(0, 3, 2.0), (1, 3, 1.0)], 1.5, 3.0), row(vec![(1, 1, 1.0)], -1.0, -0.2)];
        let cs = ConstraintSet::new(2, 2, rows, 0.01).with_weights(vec![2.0, 1.0]);
        let r = max_entropy(&cs, 1e-7, None).unwrap();
        assert!(cs.satisfied_by(&r.witness, 1e-7));
        assert!(r.gap() <= 1e-7 * 3.0 + 1e-12, "gap {}", r.gap());
        // brute force over z0, z1, x1 on a grid never beats the certified value
        let mut best: f64 = 0.0;
        for i in 0..=100 {
            for j in 0..=100 {
                let z0: f64 = -1.0 + 0.02 * i as f64;
                let z1: f64 = -1.0 + 0.02 * j as f64;
                let x1: f64 = -0.2;
                if 2.0 * z0 + z1 < 1.5 || z1 * z1 + x1 * x1 > 1.0 {
                    continue;
                }
                let s = 2.0 * bloch_entropy(&[0.0, 0.0, z0], 2) + bloch_entropy(&[x1, 0.0, z1], 2);
                best = best.max(s);
            }
        }
        assert!(best <= r.upper + 1e-9);
        assert!(r.entropy >= best - 0.05);
    }

    #[test]
    fn symmetric_constraints_give_symmetric_witness() {
        let rows = vec![row(vec![(0, 3, 1.0)], 0.3, 1.0), row(vec![(1, 3, 1.0)], 0.3, 1.0)];
        let cs = ConstraintSet::new(2, 2, rows, 0.01);
        let r = max_entropy(&cs, 1e-10, None).unwrap();
        for c in 0..3 {
            assert!((r.witness[0][c] - r.witness[1][c]).abs() < 1e-9);
        }
        assert!((r.witness[0][2] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn ququart_pinned_component() {
        // ⟨Z⊗Z⟩ = 0.5 alone: optimum splits weight evenly inside each parity sector
        let cs = ConstraintSet::new(1, 4, vec![row(vec![(0, 15, 1.0)], 0.5, 0.5)], 0.01);
        let r = max_entropy(&cs, 1e-9, None).unwrap();
        let expect = shannon_entropy(&[0.375, 0.375, 0.125, 0.125]);
        assert!((r.entropy - expect).abs() < 1e-7, "{} vs {expect}", r.entropy);
    }

    #[test]
    fn infeasible_set_is_an_error() {
        let rows = vec![row(vec![(0, 3, 1.0)], 0.9, 1.0), row(vec![(0, 1, 1.0)], 0.9, 1.0)];
        assert!(matches!(max_entropy(&ConstraintSet::new(1, 2, rows, 1e-3), 1e-6, None), Err(Error::Infeasible)));
    }
}
