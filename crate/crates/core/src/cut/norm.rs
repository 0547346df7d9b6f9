//! Cut norm and ∞→1 norm of matrices and 3-tensors, exhaustive and
//! heuristic.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::decomposition::ColorTensor;
use crate::error::{Error, Result};
use crate::rng::child_rng;

/// Largest row count for exhaustive enumeration.
pub const EXACT_MAX_N: usize = 20;

/// A maximizing subset pair with the signed sum over it.
#[derive(Clone, Debug, PartialEq)]
pub struct CutValue {
    /// `|Σ_{S×T} M|`.
    pub value: f64,
    /// `Σ_{S×T} M`.
    pub signed: f64,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

fn mask_to_vec(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Tie order on subset tuples: smaller total size first, then lexicographic.
pub(crate) fn tie_less(a: &[Vec<usize>], b: &[Vec<usize>]) -> bool {
    let sa: usize = a.iter().map(Vec::len).sum();
    let sb: usize = b.iter().map(Vec::len).sum();
    if sa != sb {
        return sa < sb;
    }
    a < b
}

fn better(val: f64, sides: &[Vec<usize>], best_val: f64, best_sides: &[Vec<usize>]) -> bool {
    if same(val, best_val) {
        tie_less(sides, best_sides)
    } else {
        val > best_val
    }
}

/// Exhaustive cut norm `max_{S,T} |Σ_{S×T} M|` via Gray-code enumeration of
/// row subsets; the best column set for fixed rows is read off the signs of
/// the column sums.
pub fn cut_norm_exact(m: &DMatrix<f64>) -> Result<CutValue> {
    let (rows, cols) = m.shape();
    if rows > EXACT_MAX_N {
        return Err(Error::size("exact cut norm rows (use the heuristic)", rows, EXACT_MAX_N));
    }
    let mut best = CutValue {
        value: 0.0,
        signed: 0.0,
        s: Vec::new(),
        t: Vec::new(),
    };
    let mut colsum = vec![0.0; cols];
    let mut mask: u64 = 0;
    for step in 1u64..(1u64 << rows) {
        let flip = step.trailing_zeros() as usize;
        mask ^= 1 << flip;
        let sign = if mask >> flip & 1 == 1 { 1.0 } else { -1.0 };
        for (j, c) in colsum.iter_mut().enumerate() {
            *c += sign * m[(flip, j)];
        }
        for positive in [true, false] {
            let mut val = 0.0;
            for &c in &colsum {
                if (positive && c > 0.0) || (!positive && c < 0.0) {
                    val += c.abs();
                }
            }
            if val == 0.0 || val + 1e-12 * (1.0 + best.value) < best.value {
                continue;
            }
            let s = mask_to_vec(mask, rows);
            let t: Vec<usize> = (0..cols)
                .filter(|&j| if positive { colsum[j] > 0.0 } else { colsum[j] < 0.0 })
                .collect();
            let sides = [s, t];
            if better(val, &sides, best.value, &[best.s.clone(), best.t.clone()]) {
                let [s, t] = sides;
                best = CutValue {
                    value: val,
                    signed: if positive { val } else { -val },
                    s,
                    t,
                };
            }
        }
    }
    Ok(best)
}

fn subset_sum(m: &DMatrix<f64>, s: &[usize], t: &[usize]) -> f64 {
    s.iter().map(|&i| t.iter().map(|&j| m[(i, j)]).sum::<f64>()).sum()
}

/// Lower bound on the cut norm by alternating maximization from random row
/// subsets, for both signs. The returned value is the exact sum over the
/// returned pair.
pub fn cut_norm_heuristic(m: &DMatrix<f64>, restarts: usize, seed: u64) -> CutValue {
    let (rows, cols) = m.shape();
    let mut best = CutValue {
        value: 0.0,
        signed: 0.0,
        s: Vec::new(),
        t: Vec::new(),
    };
    for r in 0..restarts.max(1) {
        let mut rng = child_rng(seed, &[r as u64]);
        for positive in [true, false] {
            let sgn = if positive { 1.0 } else { -1.0 };
            let mut s: Vec<usize> = (0..rows).filter(|_| rng.random_bool(0.5)).collect();
            if s.is_empty() && rows > 0 {
                s.push(rng.random_range(0..rows));
            }
            let mut val = f64::NEG_INFINITY;
            let mut t: Vec<usize> = Vec::new();
            for _ in 0..100 {
                t = (0..cols)
                    .filter(|&j| sgn * s.iter().map(|&i| m[(i, j)]).sum::<f64>() > 0.0)
                    .collect();
                let s_new: Vec<usize> = (0..rows)
                    .filter(|&i| sgn * t.iter().map(|&j| m[(i, j)]).sum::<f64>() > 0.0)
                    .collect();
                let v = sgn * subset_sum(m, &s_new, &t);
                let improved = v > val + 1e-15 * (1.0 + v.abs());
                s = s_new;
                if !improved {
                    break;
                }
                val = v;
            }
            let signed = subset_sum(m, &s, &t);
            let v = signed.abs();
            if v > 0.0 && better(v, &[s.clone(), t.clone()], best.value, &[best.s.clone(), best.t.clone()]) {
                best = CutValue { value: v, signed, s, t };
            }
        }
    }
    best
}

/// Cut norm with the exact path for small matrices. Returns whether the
/// value is exact.
pub fn cut_norm(m: &DMatrix<f64>, restarts: usize, seed: u64) -> (CutValue, bool) {
    if m.nrows() <= EXACT_MAX_N {
        (cut_norm_exact(m).expect("size checked"), true)
    } else {
        (cut_norm_heuristic(m, restarts, seed), false)
    }
}

/// Maximizing sign vectors of a multilinear form.
#[derive(Clone, Debug, PartialEq)]
pub struct InfOneValue {
    pub value: f64,
    pub signs: Vec<Vec<f64>>,
}

fn gray_inf_one_matrix(b: &[f64], rows: usize, cols: usize) -> (f64, u64) {
    // b is row-major rows×cols; x_0 fixed to +1 by symmetry
    let mut r: Vec<f64> = (0..cols).map(|j| (0..rows).map(|i| b[i * cols + j]).sum()).collect();
    let value = |r: &[f64]| r.iter().map(|x| x.abs()).sum::<f64>();
    let mut best = (value(&r), 0u64);
    let mut mask: u64 = 0; // bit i set means x_{i} = -1, for i >= 1
    if rows <= 1 {
        return best;
    }
    for step in 1u64..(1u64 << (rows - 1)) {
        let flip = step.trailing_zeros() as usize + 1;
        mask ^= 1 << flip;
        let sign = if mask >> flip & 1 == 1 { -2.0 } else { 2.0 };
        for (j, rj) in r.iter_mut().enumerate() {
            *rj += sign * b[flip * cols + j];
        }
        let v = value(&r);
        if v > best.0 + 1e-12 * (1.0 + best.0) {
            best = (v, mask);
        }
    }
    best
}

fn signs_from_mask(mask: u64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

fn column_signs(b: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..cols)
        .map(|j| {
            let s: f64 = (0..rows).map(|i| x[i] * b[i * cols + j]).sum();
            if s < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

/// Exact `‖W‖_{∞→1} = max_{x_j ∈ {±1}^n} Σ W Π x` for `k ∈ {1, 2, 3}`.
/// Cost is `2^{(k-1)n}` multilinear evaluations.
pub fn inf_to_one_exact(w: &ColorTensor) -> Result<InfOneValue> {
    let n = w.n;
    if w.k == 1 {
        return Ok(InfOneValue {
            value: w.data.iter().map(|x| x.abs()).sum(),
            signs: vec![w.data.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect()],
        });
    }
    if w.k == 0 || w.k > 3 || (w.k - 1) * n > EXACT_MAX_N {
        return Err(Error::size(
            format!("exact inf-to-one norm (k={})", w.k),
            (w.k.max(1) - 1) * n,
            EXACT_MAX_N,
        ));
    }
    if n == 0 {
        return Ok(InfOneValue {
            value: 0.0,
            signs: vec![Vec::new(); w.k],
        });
    }
    if w.k == 2 {
        let (value, mask) = gray_inf_one_matrix(&w.data, n, n);
        let x = signs_from_mask(mask, n);
        let y = column_signs(&w.data, n, n, &x);
        return Ok(InfOneValue { value, signs: vec![x, y] });
    }
    // k = 3: Gray code over the first mode, exhaustive matrix norm inside.
    let nn = n * n;
    let mut b: Vec<f64> = (0..nn).map(|jl| (0..n).map(|i| w.data[i * nn + jl]).sum()).collect();
    let mut best = (f64::NEG_INFINITY, 0u64, 0u64);
    let mut mask: u64 = 0;
    let (v0, m0) = gray_inf_one_matrix(&b, n, n);
    best = if v0 > best.0 { (v0, 0, m0) } else { best };
    for step in 1u64..(1u64 << n) {
        let flip = step.trailing_zeros() as usize;
        mask ^= 1 << flip;
        let sign = if mask >> flip & 1 == 1 { -2.0 } else { 2.0 };
        for (jl, bj) in b.iter_mut().enumerate() {
            *bj += sign * w.data[flip * nn + jl];
        }
        let (v, m) = gray_inf_one_matrix(&b, n, n);
        if v > best.0 + 1e-12 * (1.0 + best.0.abs()) {
            best = (v, mask, m);
        }
    }
    let x = signs_from_mask(best.1, n);
    let y = signs_from_mask(best.2, n);
    let bx: Vec<f64> = (0..nn).map(|jl| (0..n).map(|i| x[i] * w.data[i * nn + jl]).sum()).collect();
    let z = column_signs(&bx, n, n, &y);
    Ok(InfOneValue {
        value: best.0,
        signs: vec![x, y, z],
    })
}

/// Evaluates `Σ W Π x_j` for sign (or general) vectors.
pub fn multilinear(w: &ColorTensor, xs: &[Vec<f64>]) -> f64 {
    let n = w.n;
    match w.k {
        1 => (0..n).map(|i| w.data[i] * xs[0][i]).sum(),
        2 => (0..n)
            .map(|i| xs[0][i] * (0..n).map(|j| w.data[i * n + j] * xs[1][j]).sum::<f64>())
            .sum(),
        3 => (0..n)
            .map(|i| {
                xs[0][i]
                    * (0..n)
                        .map(|j| xs[1][j] * (0..n).map(|l| w.data[(i * n + j) * n + l] * xs[2][l]).sum::<f64>())
                        .sum::<f64>()
            })
            .sum(),
        _ => panic!("multilinear supports k in {{1, 2, 3}}"),
    }
}

/// Mode-`p` best response: signs of the partial contraction.
fn best_response(w: &ColorTensor, xs: &[Vec<f64>], p: usize) -> Vec<f64> {
    let n = w.n;
    let mut g = vec![0.0; n];
    match w.k {
        1 => g.copy_from_slice(&w.data),
        2 => {
            for i in 0..n {
                for j in 0..n {
                    let v = w.data[i * n + j];
                    if p == 0 {
                        g[i] += v * xs[1][j];
                    } else {
                        g[j] += v * xs[0][i];
                    }
                }
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let v = w.data[(i * n + j) * n + l];
                        match p {
                            0 => g[i] += v * xs[1][j] * xs[2][l],
                            1 => g[j] += v * xs[0][i] * xs[2][l],
                            _ => g[l] += v * xs[0][i] * xs[1][j],
                        }
                    }
                }
            }
        }
    }
    g.into_iter().map(|x| if x < 0.0 { -1.0 } else { 1.0 }).collect()
}

/// Lower bound on `‖W‖_{∞→1}` by alternating sign updates from random
/// starts.
pub fn inf_to_one_heuristic(w: &ColorTensor, restarts: usize, seed: u64) -> InfOneValue {
    let mut best = InfOneValue {
        value: f64::NEG_INFINITY,
        signs: vec![vec![1.0; w.n]; w.k],
    };
    for r in 0..restarts.max(1) {
        let mut rng = child_rng(seed, &[r as u64]);
        let mut xs: Vec<Vec<f64>> = (0..w.k)
            .map(|_| (0..w.n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect())
            .collect();
        let mut val = multilinear(w, &xs);
        for _ in 0..200 {
            for p in 0..w.k {
                xs[p] = best_response(w, &xs, p);
            }
            let v = multilinear(w, &xs);
            if v <= val + 1e-14 * (1.0 + v.abs()) {
                val = val.max(v);
                break;
            }
            val = v;
        }
        let val = multilinear(w, &xs);
        if val > best.value {
            best = InfOneValue { value: val, signs: xs };
        }
    }
    best
}

/// Rigorous upper bound on `‖W‖_{∞→1}` without enumeration:
/// `√N · ‖W‖_F` with `N = n^k`.
pub fn inf_to_one_upper_bound(w: &ColorTensor) -> f64 {
    (w.data.len() as f64).sqrt() * w.frobenius()
}

/// `‖W‖_{∞→1}` exactly when affordable, else a heuristic lower bound
/// together with a rigorous upper bound. Returns `(lower, upper, exact)`.
pub fn inf_to_one(w: &ColorTensor, restarts: usize, seed: u64) -> (InfOneValue, f64, bool) {
    if w.k <= 1 || (w.k - 1) * w.n <= EXACT_MAX_N {
        let v = inf_to_one_exact(w).expect("size checked");
        let up = v.value;
        (v, up, true)
    } else {
        let v = inf_to_one_heuristic(w, restarts, seed);
        (v, inf_to_one_upper_bound(w), false)
    }
}
