//! Greedy cut decompositions: repeatedly subtract the best constant block of
//! the residual until the residual is small in cut norm.

use serde::Serialize;

use super::norm::{cut_norm, inf_to_one, tie_less, InfOneValue};
use crate::decomposition::{Color, ColorTensor};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Options shared by the matrix and tensor decompositions.
#[derive(Clone, Debug)]
pub struct FkOptions {
    /// Width cap is `ceil(width_const / eps^2)` (matrices) or
    /// `ceil(width_const / eps^(2k-2))` (k-tensors).
    pub width_const: f64,
    /// Restarts of the heuristic cut finders.
    pub restarts: usize,
}

impl Default for FkOptions {
    fn default() -> Self {
        FkOptions {
            width_const: 8.0,
            restarts: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutPiece {
    pub color: Color,
    pub sides: Vec<Vec<usize>>,
    pub coeff: f64,
}

impl CutPiece {
    /// Number of index tuples in `S_1 × ... × S_k`.
    pub fn volume(&self) -> f64 {
        self.sides.iter().map(|s| s.len() as f64).product()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResidualStats {
    pub input_frobenius: f64,
    pub frobenius: f64,
    /// Largest detected cut of the residual (matrices) at termination.
    pub cut_value: f64,
    pub cut_exact: bool,
    /// `‖W‖_{∞→1}`: exact when `inf_to_one_exact`, otherwise `inf_to_one`
    /// is a rigorous upper bound and `inf_to_one_lower` a witnessed value.
    pub inf_to_one: f64,
    pub inf_to_one_lower: f64,
    pub inf_to_one_exact: bool,
    /// Largest `|W_{v..v}|` on the full diagonal.
    pub max_diag: f64,
    /// `Σ |W_e|` over index tuples with a repeated index.
    pub repeated_index_mass: f64,
    /// `‖W‖_F` after each iteration, starting with the input.
    pub frobenius_history: Vec<f64>,
    pub target: f64,
    pub target_met: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CutDecomposition {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub width_cap: usize,
    pub pieces: Vec<CutPiece>,
    pub stats: ResidualStats,
}

impl CutDecomposition {
    pub fn width(&self) -> usize {
        self.pieces.len()
    }

    pub fn coeff_sq_sum(&self) -> f64 {
        self.pieces.iter().map(|p| p.coeff * p.coeff).sum()
    }

    /// Materializes `W = M − Σ pieces`.
    pub fn residual(&self, m: &ColorTensor) -> ColorTensor {
        let mut w = m.clone();
        for p in &self.pieces {
            subtract_block(&mut w, &p.sides, p.coeff);
        }
        w
    }
}

fn for_each_tuple(sides: &[Vec<usize>], mut f: impl FnMut(&[usize])) {
    let k = sides.len();
    if sides.iter().any(Vec::is_empty) {
        return;
    }
    let mut pos = vec![0usize; k];
    let mut idx: Vec<usize> = sides.iter().map(|s| s[0]).collect();
    loop {
        f(&idx);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            pos[p] += 1;
            if pos[p] < sides[p].len() {
                idx[p] = sides[p][pos[p]];
                break;
            }
            pos[p] = 0;
            idx[p] = sides[p][0];
        }
    }
}

pub(crate) fn block_sum(w: &ColorTensor, sides: &[Vec<usize>]) -> f64 {
    let mut s = 0.0;
    for_each_tuple(sides, |idx| s += w.get(idx));
    s
}

fn subtract_block(w: &mut ColorTensor, sides: &[Vec<usize>], c: f64) {
    let n = w.n;
    for_each_tuple(sides, |idx| {
        let off = idx.iter().fold(0, |a, &i| a * n + i);
        w.data[off] -= c;
    });
}

/// Diagonal and repeated-index statistics of a residual.
pub(crate) fn diagonal_stats(w: &ColorTensor) -> (f64, f64) {
    let n = w.n;
    let mut max_diag: f64 = 0.0;
    let mut repeated = 0.0;
    for (off, &v) in w.data.iter().enumerate() {
        let mut idx = vec![0; w.k];
        let mut r = off;
        for p in (0..w.k).rev() {
            idx[p] = r % n;
            r /= n;
        }
        let all_same = idx.iter().all(|&i| i == idx[0]);
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        let has_repeat = sorted.windows(2).any(|p| p[0] == p[1]);
        if all_same && w.k > 1 {
            max_diag = max_diag.max(v.abs());
        }
        if has_repeat {
            repeated += v.abs();
        }
    }
    (max_diag, repeated)
}

fn finish_stats(w: &ColorTensor, stats: &mut ResidualStats, opts: &FkOptions, seed: u64) {
    let (lower, upper, exact) = inf_to_one(w, opts.restarts, derive_seed(seed, &[0xfeed]));
    stats.inf_to_one = upper;
    stats.inf_to_one_lower = lower.value.max(0.0);
    stats.inf_to_one_exact = exact;
    let (max_diag, repeated) = diagonal_stats(w);
    stats.max_diag = max_diag;
    stats.repeated_index_mass = repeated;
    stats.frobenius = w.frobenius();
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// Matrix decomposition. Cuts are found exactly for `n ≤ 20` and by the
/// alternating heuristic otherwise. Stops when the detected residual cut is
/// at most `eps·n·‖M‖_F` or the width cap is reached (`target_met = false`).
pub fn fk_decompose(m: &ColorTensor, eps: f64, seed: u64, opts: &FkOptions) -> Result<CutDecomposition> {
    check_eps(eps)?;
    if m.k != 2 {
        return Err(Error::DimensionMismatch("fk_decompose expects a matrix".into()));
    }
    let n = m.n;
    let frob = m.frobenius();
    let target = eps * n as f64 * frob;
    let width_cap = (opts.width_const / (eps * eps)).ceil() as usize;
    let mut w = m.clone();
    let mut pieces = Vec::new();
    let mut stats = ResidualStats {
        input_frobenius: frob,
        frobenius_history: vec![frob],
        target,
        ..Default::default()
    };
    loop {
        let (cut, exact) = cut_norm(&w.to_matrix(), opts.restarts, derive_seed(seed, &[pieces.len() as u64]));
        stats.cut_value = cut.value;
        stats.cut_exact = exact;
        if cut.value <= target {
            stats.target_met = true;
            break;
        }
        if pieces.len() >= width_cap {
            break;
        }
        let sides = vec![cut.s, cut.t];
        let coeff = block_sum(&w, &sides) / (sides[0].len() * sides[1].len()) as f64;
        subtract_block(&mut w, &sides, coeff);
        stats.frobenius_history.push(w.frobenius());
        pieces.push(CutPiece {
            color: Vec::new(),
            sides,
            coeff,
        });
    }
    finish_stats(&w, &mut stats, opts, seed);
    Ok(CutDecomposition {
        n,
        k: 2,
        eps,
        width_cap,
        pieces,
        stats,
    })
}

/// Best subset tuple among the sign classes of an ∞→1 maximizer.
fn cut_from_signs(w: &ColorTensor, v: &InfOneValue) -> (Vec<Vec<usize>>, f64) {
    let k = w.k;
    let mut best: Option<(Vec<Vec<usize>>, f64)> = None;
    for pattern in 0..(1usize << k) {
        let sides: Vec<Vec<usize>> = (0..k)
            .map(|p| {
                let want = if pattern >> p & 1 == 0 { 1.0 } else { -1.0 };
                (0..w.n).filter(|&i| v.signs[p][i] == want).collect()
            })
            .collect();
        if sides.iter().any(Vec::is_empty) {
            continue;
        }
        let s = block_sum(w, &sides);
        let replace = match &best {
            None => true,
            Some((bs, bv)) => {
                let (a, b) = (s.abs(), bv.abs());
                if (a - b).abs() <= 1e-12 * (1.0 + a.max(b)) {
                    tie_less(&sides, bs)
                } else {
                    a > b
                }
            }
        };
        if replace {
            best = Some((sides, s));
        }
    }
    best.unwrap_or((vec![Vec::new(); k], 0.0))
}

/// Partial sums `g_i = Σ W` over the block with position `p` set to `i`.
fn mode_sums(w: &ColorTensor, sides: &[Vec<usize>], p: usize) -> Vec<f64> {
    let mut g = vec![0.0; w.n];
    let mut full = sides.to_vec();
    full[p] = (0..w.n).collect();
    for_each_tuple(&full, |idx| g[idx[p]] += w.get(idx));
    g
}

/// Alternating best response on the sides of a block, keeping the sign of
/// its sum. Never decreases `|sum|` and drops indices contributing nothing.
fn refine_block(w: &ColorTensor, mut sides: Vec<Vec<usize>>, mut sum: f64) -> (Vec<Vec<usize>>, f64) {
    if sum == 0.0 {
        return (sides, sum);
    }
    let sgn = sum.signum();
    for _ in 0..50 {
        let mut changed = false;
        for p in 0..sides.len() {
            let g = mode_sums(w, &sides, p);
            let side: Vec<usize> = (0..w.n).filter(|&i| sgn * g[i] > 0.0).collect();
            if side.is_empty() {
                return (sides, sum);
            }
            let new_sum: f64 = side.iter().map(|&i| g[i]).sum();
            if side != sides[p] && sgn * new_sum >= sgn * sum - 1e-12 * (1.0 + sum.abs()) {
                sides[p] = side;
                sum = new_sum;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (sides, sum)
}

/// k-tensor decomposition (`k ∈ {1, 2, 3}`) driven by the ∞→1 norm: stops once
/// the residual's ∞→1 value is at most `eps·√N·‖M‖_F`, `N = n^k`.
pub fn tensor_fk_decompose(m: &ColorTensor, eps: f64, seed: u64, opts: &FkOptions) -> Result<CutDecomposition> {
    check_eps(eps)?;
    if !(1..=3).contains(&m.k) {
        return Err(Error::Parameter(format!("tensor order {} not supported (k must be 1, 2 or 3)", m.k)));
    }
    let (n, k) = (m.n, m.k);
    let frob = m.frobenius();
    let target = eps * (m.data.len() as f64).sqrt() * frob;
    let width_cap = (opts.width_const / eps.powi(2 * k as i32 - 2)).ceil() as usize;
    let mut w = m.clone();
    let mut pieces = Vec::new();
    let mut stats = ResidualStats {
        input_frobenius: frob,
        frobenius_history: vec![frob],
        target,
        ..Default::default()
    };
    loop {
        let (lower, upper, exact) = inf_to_one(&w, opts.restarts, derive_seed(seed, &[pieces.len() as u64]));
        stats.cut_value = if exact { upper } else { lower.value };
        stats.cut_exact = exact;
        if stats.cut_value <= target {
            stats.target_met = true;
            break;
        }
        if pieces.len() >= width_cap {
            break;
        }
        let (sides, sum) = cut_from_signs(&w, &lower);
        let (sides, sum) = refine_block(&w, sides, sum);
        if sum == 0.0 {
            break;
        }
        let vol: f64 = sides.iter().map(|s| s.len() as f64).product();
        let coeff = sum / vol;
        subtract_block(&mut w, &sides, coeff);
        stats.frobenius_history.push(w.frobenius());
        pieces.push(CutPiece {
            color: Vec::new(),
            sides,
            coeff,
        });
    }
    finish_stats(&w, &mut stats, opts, seed);
    Ok(CutDecomposition {
        n,
        k,
        eps,
        width_cap,
        pieces,
        stats,
    })
}
