//! Vertex subsampling: solve the instance induced on a random vertex subset
//! and rescale.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::Serialize;

use crate::cut::{ham_cut_decompose_pd, inf_to_one, FkOptions};
use crate::decomposition::{pauli_decompose, ColorTensor};
use crate::error::{Error, Result};
use crate::exact::exact_ground;
use crate::hamiltonian::LocalHamiltonian;
use crate::relax::{gs_direct, gs_estimate, EstimatorOptions};
use crate::rng::{child_rng, derive_seed};

/// Sorted uniform `q`-subset of `0..n`.
pub fn sample_sites(n: usize, q: usize, seed: u64) -> Result<Vec<usize>> {
    if q == 0 || q > n {
        return Err(Error::Parameter(format!("sample size {q} must lie in 1..={n}")));
    }
    let mut sites = sample(&mut child_rng(seed, &[0x5a]), n, q).into_vec();
    sites.sort_unstable();
    Ok(sites)
}

/// Instance induced on a uniform `q`-subset, relabelled in order.
pub fn subsample(h: &LocalHamiltonian, q: usize, seed: u64) -> Result<(Vec<usize>, LocalHamiltonian)> {
    let sites = sample_sites(h.n(), q, seed)?;
    let hq = h.induced(&sites);
    Ok((sites, hq))
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Solver {
    /// Ground energy by diagonalization.
    Exact,
    /// `v_hat` of the guess-grid estimator.
    Relaxation { eps: f64, gamma: f64 },
    /// Multi-start product-state minimization.
    Direct { restarts: usize, iters: usize },
}

impl Solver {
    fn solve(&self, h: &LocalHamiltonian, seed: u64) -> Result<f64> {
        match *self {
            Solver::Exact => Ok(exact_ground(h)?.0),
            Solver::Relaxation { eps, gamma } => Ok(gs_estimate(h, eps, gamma, seed, &EstimatorOptions::default())?.v_hat),
            Solver::Direct { restarts, iters } => Ok(gs_direct(h, restarts, iters, seed).0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsampleReport {
    pub q: usize,
    pub trials: usize,
    pub scale: f64,
    /// `scale · value(H_Q)` per trial.
    pub estimates: Vec<f64>,
    /// Solver value on the full instance.
    pub reference: f64,
    pub mean: f64,
    /// Sample standard deviation (zero for one trial).
    pub sd: f64,
    pub max_dev: f64,
    /// Relaxation solver only: `Σ_c w_c ‖W_c‖_{∞→1}` of the full residual,
    /// and `scale · Σ_c w_c ‖W_c[Q]‖_{∞→1}` per trial.
    pub full_residual: Option<f64>,
    pub sampled_residuals: Option<Vec<f64>>,
    pub seed: u64,
}

fn restrict(w: &ColorTensor, sites: &[usize]) -> ColorTensor {
    let q = sites.len();
    let mut out = ColorTensor::zeros(q, w.k);
    let mut idx = vec![0usize; w.k];
    for (flat, x) in out.data.iter_mut().enumerate() {
        let mut r = flat;
        for slot in idx.iter_mut().rev() {
            *slot = sites[r % q];
            r /= q;
        }
        *x = w.get(&idx);
    }
    out
}

/// Residual tensors of the full decomposition with their class weights.
fn residuals(h: &LocalHamiltonian, eps: f64, seed: u64) -> Result<Vec<(f64, ColorTensor)>> {
    let pd = pauli_decompose(h);
    let hcd = ham_cut_decompose_pd(&pd, eps, seed, &FkOptions::default())?;
    Ok(hcd
        .classes
        .iter()
        .map(|c| (c.weight, c.decomposition.residual(&pd.color_tensor(&c.color))))
        .collect())
}

fn weighted_inf_to_one(ws: &[(f64, ColorTensor)], seed: u64) -> f64 {
    ws.iter()
        .enumerate()
        .map(|(i, (w, t))| w * inf_to_one(t, 16, derive_seed(seed, &[i as u64])).1)
        .sum()
}

/// Scaled subsample estimates over independent trials.
pub fn vsc_experiment(h: &LocalHamiltonian, q: usize, trials: usize, solver: &Solver, seed: u64) -> Result<SubsampleReport> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    sample_sites(h.n(), q, seed)?;
    let scale = (h.n() as f64 / q as f64).powi(h.k() as i32);
    let reference = solver.solve(h, derive_seed(seed, &[0]))?;
    let full = match solver {
        Solver::Relaxation { eps, .. } => Some(residuals(h, *eps, derive_seed(seed, &[0]))?),
        _ => None,
    };
    let per_trial: Vec<(f64, Option<f64>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, &[1, t as u64]);
            let (sites, hq) = subsample(h, q, trial_seed)?;
            let v = scale * solver.solve(&hq, trial_seed)?;
            let r = full.as_ref().map(|ws| {
                let sub: Vec<(f64, ColorTensor)> = ws.iter().map(|(w, t)| (*w, restrict(t, &sites))).collect();
                scale * weighted_inf_to_one(&sub, trial_seed)
            });
            Ok((v, r))
        })
        .collect::<Result<_>>()?;
    let estimates: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
    let m = trials as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let sd = if trials > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    let max_dev = estimates.iter().map(|e| (e - reference).abs()).fold(0.0, f64::max);
    Ok(SubsampleReport {
        q,
        trials,
        scale,
        estimates,
        reference,
        mean,
        sd,
        max_dev,
        full_residual: full.as_ref().map(|ws| weighted_inf_to_one(ws, derive_seed(seed, &[2]))),
        sampled_residuals: full.map(|_| per_trial.iter().map(|p| p.1.unwrap_or(0.0)).collect()),
        seed,
    })
}
