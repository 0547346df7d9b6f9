//! Deep-cut ellipsoid search for a point of a magnetization constraint set.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::constraints::ConstraintSet;
use crate::linalg::hermitian_eigen;
use crate::pauli::{single_qudit_basis, C64};
use crate::state::density_from_bloch;

/// Tolerance a returned witness is verified against.
pub const WITNESS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    /// The search ellipsoid shrank below the inner radius without finding a
    /// point.
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// One Bloch vector per atom.
    pub witness: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
}

impl FeasibilityResult {
    fn infeasible(iterations: usize) -> Self {
        FeasibilityResult {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            iterations,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }
}

/// Searched variables: `(atom, component)` pairs, grouped by atom.
struct Vars {
    list: Vec<(usize, usize)>,
    /// Index ranges into `list` per referenced atom.
    groups: Vec<(usize, std::ops::Range<usize>)>,
    index: Vec<Vec<Option<usize>>>,
}

fn collect_vars(cs: &ConstraintSet) -> Vars {
    let comps = cs.components();
    let mut used = vec![vec![false; comps]; cs.num_atoms];
    for row in &cs.rows {
        for &(a, c, w) in &row.terms {
            if w != 0.0 {
                used[a][c - 1] = true;
            }
        }
    }
    let mut list = Vec::new();
    let mut groups = Vec::new();
    let mut index = vec![vec![None; comps]; cs.num_atoms];
    for (a, u) in used.iter().enumerate() {
        if !u.iter().any(|&b| b) {
            continue;
        }
        let start = list.len();
        for c in 0..comps {
            // unreferenced qubit components can sit at zero; other dimensions
            // keep the whole vector since the PSD set does not factor
            if u[c] || cs.d > 2 {
                index[a][c] = Some(list.len());
                list.push((a, c));
            }
        }
        groups.push((a, start..list.len()));
    }
    Vars { list, groups, index }
}

/// Searches for a point satisfying every row within `tol` and every PSD
/// constraint. `Infeasible` is only reported with a certificate (a cut that
/// excludes the whole current ellipsoid, or an empty interval).
pub fn check_feasible(cs: &ConstraintSet, tol: f64) -> FeasibilityResult {
    check_feasible_with_hint(cs, tol, None)
}

/// As [`check_feasible`], returning `hint` directly when it already
/// satisfies the set.
pub fn check_feasible_with_hint(cs: &ConstraintSet, tol: f64, hint: Option<&[Vec<f64>]>) -> FeasibilityResult {
    if let Some(h) = hint {
        if cs.satisfied_by(h, tol) {
            return FeasibilityResult {
                status: FeasibilityStatus::Feasible,
                witness: Some(h.to_vec()),
                iterations: 0,
            };
        }
    }
    if cs.rows.iter().any(|r| r.lo > r.hi + tol) || !range_precheck(cs, tol) {
        return FeasibilityResult::infeasible(0);
    }
    let vars = collect_vars(cs);
    let result = match vars.list.len() {
        0 => FeasibilityResult {
            status: FeasibilityStatus::Feasible,
            witness: Some(vec![vec![0.0; cs.components()]; cs.num_atoms]),
            iterations: 0,
        },
        1 => interval_search(cs, &vars, tol),
        _ => ellipsoid_search(cs, &vars, tol),
    };
    if let Some(w) = &result.witness {
        if !cs.satisfied_by(w, WITNESS_TOL) {
            warn!("feasibility witness failed verification; treating as undecided");
            return FeasibilityResult {
                status: FeasibilityStatus::Undecided,
                witness: None,
                iterations: result.iterations,
            };
        }
    }
    result
}

/// Each row's attainable range over independent Bloch vectors.
fn range_precheck(cs: &ConstraintSet, tol: f64) -> bool {
    cs.rows.iter().all(|row| {
        let mut per_atom: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for &(a, _, w) in &row.terms {
            per_atom.entry(a).or_default().push(w);
        }
        let reach: f64 = per_atom
            .values()
            .map(|ws| {
                if cs.d == 2 {
                    ws.iter().map(|w| w * w).sum::<f64>().sqrt()
                } else {
                    ws.iter().map(|w| w.abs()).sum::<f64>()
                }
            })
            .sum();
        row.lo <= reach + tol && row.hi >= -reach - tol
    })
}

fn embed(cs: &ConstraintSet, vars: &Vars, x: &DVector<f64>) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; cs.components()]; cs.num_atoms];
    for (i, &(a, c)) in vars.list.iter().enumerate() {
        w[a][c] = x[i];
    }
    w
}

fn interval_search(cs: &ConstraintSet, vars: &Vars, tol: f64) -> FeasibilityResult {
    let (atom, comp) = vars.list[0];
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for row in &cs.rows {
        let w: f64 = row.terms.iter().filter(|t| t.0 == atom && t.1 - 1 == comp).map(|t| t.2).sum();
        if w == 0.0 {
            if row.lo > tol || row.hi < -tol {
                return FeasibilityResult::infeasible(0);
            }
            continue;
        }
        let (a, b) = (row.lo / w, row.hi / w);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if lo > hi + tol {
        return FeasibilityResult::infeasible(1);
    }
    let x = DVector::from_element(1, (0.5 * (lo + hi)).clamp(-1.0, 1.0));
    FeasibilityResult {
        status: FeasibilityStatus::Feasible,
        witness: Some(embed(cs, vars, &x)),
        iterations: 1,
    }
}

/// Most violated constraint at `x`, scaled by the ellipsoid width along it.
fn separate(cs: &ConstraintSet, vars: &Vars, basis: &[DMatrix<C64>], x: &DVector<f64>, p: &DMatrix<f64>, tol: f64) -> Option<(DVector<f64>, f64)> {
    let m = vars.list.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut consider = |g: DVector<f64>, h: f64| {
        let width = (g.dot(&(p * &g))).max(0.0).sqrt();
        let depth = if width > 0.0 { (g.dot(x) - h) / width } else { f64::INFINITY };
        if best.as_ref().is_none_or(|(_, d)| depth > *d) {
            best = Some((g, depth));
        }
    };
    for row in &cs.rows {
        let mut g = DVector::zeros(m);
        for &(a, c, w) in &row.terms {
            if let Some(i) = vars.index[a][c - 1] {
                g[i] += w;
            }
        }
        let v = g.dot(x);
        if v > row.hi + tol {
            consider(g, row.hi);
        } else if v < row.lo - tol {
            consider(-g, -row.lo);
        }
    }
    for (_, range) in &vars.groups {
        let alpha: Vec<f64> = range.clone().map(|i| x[i]).collect();
        if cs.d == 2 {
            let nrm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nrm > 1.0 + tol {
                let mut g = DVector::zeros(m);
                for (j, i) in range.clone().enumerate() {
                    g[i] = alpha[j] / nrm;
                }
                consider(g, 1.0);
            }
        } else {
            let (vals, vecs) = hermitian_eigen(&density_from_bloch(&alpha, cs.d));
            if vals[0] < -tol {
                let psi = vecs.column(0);
                let mut g = DVector::zeros(m);
                for (j, i) in range.clone().enumerate() {
                    let e = (psi.adjoint() * &basis[j + 1] * psi)[(0, 0)].re;
                    g[i] = -e;
                }
                consider(g, 1.0);
            }
        }
    }
    best
}

fn clean_psd(cs: &ConstraintSet, w: &mut [Vec<f64>]) {
    for a in w.iter_mut() {
        if cs.d == 2 {
            let nrm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nrm > 1.0 {
                a.iter_mut().for_each(|x| *x /= nrm);
            }
        } else {
            let min = crate::linalg::hermitian_eigenvalues(&density_from_bloch(a, cs.d))[0];
            if min < 0.0 {
                // mix toward the maximally mixed state until PSD
                let s = 1.0 / (1.0 - cs.d as f64 * min);
                a.iter_mut().for_each(|x| *x *= s);
            }
        }
    }
}

fn ellipsoid_search(cs: &ConstraintSet, vars: &Vars, tol: f64) -> FeasibilityResult {
    let m = vars.list.len();
    let mf = m as f64;
    let radius = cs.d as f64 * (vars.groups.len() as f64).sqrt();
    let r_in = cs.inner_radius.max(1e-12);
    let basis = if cs.d > 2 { single_qudit_basis(cs.d) } else { Vec::new() };
    let mut x = DVector::zeros(m);
    let mut p = DMatrix::identity(m, m) * (radius * radius);
    let mut log_det = 2.0 * mf * radius.ln();
    let floor = 2.0 * mf * r_in.ln();
    // each deep cut shrinks the log-determinant by at least 1/(m+1)
    let max_iter = ((mf + 1.0) * (log_det - floor)).ceil() as usize + 100;
    for it in 0..max_iter {
        let Some((g, depth)) = separate(cs, vars, &basis, &x, &p, tol) else {
            let mut w = embed(cs, vars, &x);
            clean_psd(cs, &mut w);
            return FeasibilityResult {
                status: FeasibilityStatus::Feasible,
                witness: Some(w),
                iterations: it,
            };
        };
        if depth >= 1.0 {
            return FeasibilityResult::infeasible(it + 1);
        }
        let pg = &p * &g;
        let width = g.dot(&pg).sqrt();
        if !(width > 0.0 && width.is_finite()) {
            break;
        }
        let a = depth.max(-1.0 / mf);
        let b = pg / width;
        let step = (1.0 + mf * a) / (mf + 1.0);
        x -= &b * step;
        let shrink = 2.0 * (1.0 + mf * a) / ((mf + 1.0) * (1.0 + a));
        let scale = mf * mf / (mf * mf - 1.0) * (1.0 - a * a);
        p = (p - (&b * b.transpose()) * shrink) * scale;
        p = (&p + p.transpose()) * 0.5;
        log_det += mf * scale.ln() + (1.0 - shrink).ln();
        if log_det < floor {
            return FeasibilityResult {
                status: FeasibilityStatus::Undecided,
                witness: None,
                iterations: it + 1,
            };
        }
    }
    FeasibilityResult {
        status: FeasibilityStatus::Undecided,
        witness: None,
        iterations: max_iter,
    }
}
