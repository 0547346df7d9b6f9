//! Ground-state and free-energy estimators over the guess grid.

use std::time::Instant;

use log::warn;
use serde::Serialize;

use super::direct::{expand_witness, fe_direct, gs_direct_pd, mean_field_sweeps, round_to_pure};
use super::model::GuessModel;
use super::search::{search_from, Objective, SearchOptions, SearchOutcome};
use crate::cut::{estimate_atom_sizes, ham_cut_decompose_pd, AtomSizes, FkOptions, HamiltonianCutDecomposition, RefinementAtlas, MAX_ATLAS_SIDES};
use crate::decomposition::{pauli_decompose, product_energy, PauliDecomposition};
use crate::error::{Error, Result};
use crate::exact::product_free_energy;
use crate::hamiltonian::LocalHamiltonian;
use crate::rng::derive_seed;
use crate::state::ProductState;

#[derive(Clone, Debug)]
pub struct EstimatorOptions {
    pub fk: FkOptions,
    pub search: SearchOptions,
    /// Inner radius of the feasibility search is `inner_const · γ`.
    pub inner_const: f64,
    pub max_sides: usize,
    /// Sample atom sizes even when exact counting is cheap.
    pub force_sampling: bool,
    /// Relative additive error and failure probability of sampled sizes.
    pub size_error: f64,
    pub size_delta: f64,
    /// Fall back to the direct minimizer when the guess search is too large.
    pub direct_fallback: bool,
    pub direct_restarts: usize,
    pub direct_iters: usize,
    /// Entropy solver tolerance (relative to the total atom weight).
    pub entropy_tol: f64,
    pub mean_field_sweeps: usize,
    /// Start the guess search from the grid cell of a direct-mode optimum.
    /// Only affects running time.
    pub seed_incumbent: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            fk: FkOptions::default(),
            search: SearchOptions::default(),
            inner_const: 0.1,
            max_sides: MAX_ATLAS_SIDES,
            force_sampling: false,
            size_error: 0.01,
            size_delta: 0.01,
            direct_fallback: false,
            direct_restarts: 16,
            direct_iters: 500,
            entropy_tol: 1e-6,
            mean_field_sweeps: 100,
            seed_incumbent: true,
        }
    }
}

/// Rigorous bound on `|v_hat − min over product states|`, by source.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyBudget {
    /// `Σ_c w_c (‖W_c‖_{∞→1} + repeated-index mass)` of the residuals.
    pub regularity: f64,
    /// Repeated-index tuples counted by the cut polynomial.
    pub diagonal: f64,
    /// Grid rounding, evaluated on the actual cut sides.
    pub grid_measured: f64,
    /// Grid rounding in the closed form with constant 8 (2-local only).
    pub grid_analytic: Option<f64>,
    pub grid: f64,
    pub total: f64,
    /// `(γ/ε) n^{k/2} Σ_c w_c ‖M_c‖_F` with unit constant, for comparison.
    pub nominal_grid: f64,
    pub nominal_tighter: bool,
}

impl EnergyBudget {
    pub fn new(hcd: &HamiltonianCutDecomposition, model: &GuessModel, gamma: f64) -> Self {
        let regularity = hcd.residual_bound();
        let diagonal = model.diagonal_term();
        let grid_measured = model.grid_term();
        let n = hcd.n as f64;
        let grid_analytic = (hcd.k == 2).then(|| {
            hcd.classes
                .iter()
                .map(|c| {
                    let coeffs = c.decomposition.pieces.iter().map(|p| p.coeff * p.coeff).sum::<f64>().sqrt();
                    let s = c.decomposition.width() as f64;
                    c.weight * 8.0 * coeffs * n * n * gamma * s.sqrt()
                })
                .sum::<f64>()
        });
        let grid = grid_analytic.map_or(grid_measured, |l| l.max(grid_measured));
        let frob: f64 = hcd.classes.iter().map(|c| c.weight * c.decomposition.stats.input_frobenius).sum();
        let nominal_grid = gamma / hcd.eps * n.powf(hcd.k as f64 / 2.0) * frob;
        EnergyBudget {
            regularity,
            diagonal,
            grid_measured,
            grid_analytic,
            grid,
            total: regularity + diagonal + grid,
            nominal_grid,
            nominal_tighter: nominal_grid < grid,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeInfo {
    pub exact: bool,
    pub error_bound: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchStats {
    pub coords: usize,
    pub nodes: u64,
    pub feasible_leaves: u64,
    pub undecided: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub eps: f64,
    pub gamma: f64,
    pub seed: u64,
    pub classes: usize,
    pub width: usize,
    pub sides: Option<usize>,
    pub atoms: Option<usize>,
    pub sizes: Option<SizeInfo>,
    pub search: Option<SearchStats>,
    pub direct_mode: bool,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GsEstimate {
    pub v_hat: f64,
    pub witness_energy: f64,
    pub witness: ProductState,
    /// Absent in direct mode.
    pub budget: Option<EnergyBudget>,
    pub info: RunInfo,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeBudget {
    pub energy: EnergyBudget,
    /// Largest entropy duality gap over evaluated guesses.
    pub entropy_gap: f64,
    /// `entropy_gap / β`.
    pub thermal: f64,
    /// Entropy misweighting from sampled atom sizes, over `β`.
    pub size_entropy: f64,
    /// Bound on `f_hat − min over product states of the free energy`.
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeEstimate {
    /// Product free energy of the returned witness (never below the true
    /// free energy).
    pub f_hat: f64,
    /// Cut polynomial minus maximum entropy over `β` at the winning guess.
    pub guess_value: Option<f64>,
    pub beta: f64,
    pub witness: ProductState,
    pub budget: Option<FeBudget>,
    pub info: RunInfo,
}

struct Prepared {
    hcd: HamiltonianCutDecomposition,
    model: GuessModel,
    sizes: AtomSizes,
}

fn check_params(eps: f64, gamma: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

fn base_info(pd: &PauliDecomposition, eps: f64, gamma: f64, seed: u64) -> RunInfo {
    RunInfo {
        n: pd.n,
        d: pd.d,
        k: pd.k,
        eps,
        gamma,
        seed,
        classes: 0,
        width: 0,
        sides: None,
        atoms: None,
        sizes: None,
        search: None,
        direct_mode: false,
        warnings: Vec::new(),
        wall_time_s: 0.0,
    }
}

/// Decomposition, atlas and model. A failed atlas (too many sides) is
/// returned as the error so the caller can fall back.
fn prepare(pd: &PauliDecomposition, eps: f64, gamma: f64, seed: u64, opts: &EstimatorOptions, info: &mut RunInfo) -> Result<Prepared> {
    let hcd = ham_cut_decompose_pd(pd, eps, seed, &opts.fk)?;
    info.classes = hcd.classes.len();
    info.width = hcd.total_width();
    let sides = hcd.sides();
    info.sides = Some(sides.len());
    let atlas = RefinementAtlas::build(pd.n, &sides, opts.max_sides)?;
    info.atoms = Some(atlas.num_atoms());
    let sizes = estimate_atom_sizes(&atlas, opts.size_error, opts.size_delta, derive_seed(seed, &[1]), opts.force_sampling)?;
    info.sizes = Some(SizeInfo {
        exact: sizes.exact,
        error_bound: sizes.error_bound,
        samples: sizes.samples,
    });
    let model = GuessModel::from_hamiltonian(&hcd, atlas, &sizes, gamma, opts.inner_const)?;
    Ok(Prepared { hcd, model, sizes })
}

fn incumbent(model: &GuessModel, s: &ProductState) -> Vec<i64> {
    model.round_to_grid(&model.magnetizations(s))
}

fn too_large(e: &Error) -> bool {
    matches!(e, Error::EnumerationCap { .. } | Error::SizeLimit { .. })
}

fn stats(model: &GuessModel, out: &SearchOutcome) -> SearchStats {
    SearchStats {
        coords: model.num_coords(),
        nodes: out.nodes,
        feasible_leaves: out.feasible_leaves,
        undecided: out.undecided,
    }
}

/// Ground-state product energy estimate `v_hat` with a rounded pure witness.
pub fn gs_estimate(h: &LocalHamiltonian, eps: f64, gamma: f64, seed: u64, opts: &EstimatorOptions) -> Result<GsEstimate> {
    check_params(eps, gamma)?;
    let start = Instant::now();
    let pd = pauli_decompose(h);
    let mut info = base_info(&pd, eps, gamma, seed);
    let attempt = prepare(&pd, eps, gamma, seed, opts, &mut info).and_then(|p| {
        let hint = opts
            .seed_incumbent
            .then(|| incumbent(&p.model, &gs_direct_pd(&pd, opts.direct_restarts, opts.direct_iters, derive_seed(seed, &[3])).1));
        let out = search_from(&p.model, Objective::Energy, &opts.search, hint.as_deref())?;
        Ok((p, out))
    });
    let mut result = match attempt {
        Ok((p, out)) => {
            info.search = Some(stats(&p.model, &out));
            if out.undecided > 0 {
                info.warnings.push(format!("{} partial guesses had undecided feasibility", out.undecided));
            }
            let expanded = expand_witness(&p.model.atlas, &out.witness, pd.d);
            let witness = round_to_pure(&expanded, &pd);
            let witness_energy = product_energy(&pd, &witness)?;
            GsEstimate {
                v_hat: out.model_value,
                witness_energy,
                witness,
                budget: Some(EnergyBudget::new(&p.hcd, &p.model, gamma)),
                info,
            }
        }
        Err(e) if opts.direct_fallback && too_large(&e) => {
            let msg = format!("guess search skipped ({e}); direct mode");
            warn!("{msg}");
            info.warnings.push(msg);
            info.direct_mode = true;
            let (v, s) = gs_direct_pd(&pd, opts.direct_restarts, opts.direct_iters, derive_seed(seed, &[2]));
            GsEstimate {
                v_hat: v,
                witness_energy: v,
                witness: s,
                budget: None,
                info,
            }
        }
        Err(e) => return Err(e),
    };
    result.info.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Free-energy estimate over product states. `f_hat` is the product free
/// energy of the mean-field-polished witness of the winning guess.
pub fn fe_estimate(h: &LocalHamiltonian, beta: f64, eps: f64, gamma: f64, seed: u64, opts: &EstimatorOptions) -> Result<FeEstimate> {
    check_params(eps, gamma)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    let start = Instant::now();
    let pd = pauli_decompose(h);
    let mut info = base_info(&pd, eps, gamma, seed);
    let objective = Objective::FreeEnergy {
        beta,
        entropy_tol: opts.entropy_tol,
    };
    let attempt = prepare(&pd, eps, gamma, seed, opts, &mut info).and_then(|p| {
        let hint = opts.seed_incumbent.then(|| {
            let (_, s) = fe_direct(&pd, beta, opts.direct_restarts, opts.mean_field_sweeps, derive_seed(seed, &[3]));
            incumbent(&p.model, &s)
        });
        let out = search_from(&p.model, objective, &opts.search, hint.as_deref())?;
        Ok((p, out))
    });
    let mut result = match attempt {
        Ok((p, out)) => {
            info.search = Some(stats(&p.model, &out));
            let expanded = expand_witness(&p.model.atlas, &out.witness, pd.d);
            let (f_hat, witness) = mean_field_sweeps(&pd, expanded, beta, opts.mean_field_sweeps);
            let energy = EnergyBudget::new(&p.hcd, &p.model, gamma);
            let ln_d = (pd.d as f64).ln();
            let size_entropy = 2.0 * p.sizes.error_bound * p.model.atlas.num_atoms() as f64 * ln_d / beta;
            let thermal = out.max_entropy_gap / beta;
            let budget = FeBudget {
                total: 2.0 * energy.total + thermal + size_entropy,
                energy,
                entropy_gap: out.max_entropy_gap,
                thermal,
                size_entropy,
            };
            FeEstimate {
                f_hat,
                guess_value: Some(out.objective),
                beta,
                witness,
                budget: Some(budget),
                info,
            }
        }
        Err(e) if opts.direct_fallback && too_large(&e) => {
            let msg = format!("guess search skipped ({e}); direct mode");
            warn!("{msg}");
            info.warnings.push(msg);
            info.direct_mode = true;
            let (f, s) = fe_direct(&pd, beta, opts.direct_restarts, opts.mean_field_sweeps, derive_seed(seed, &[2]));
            FeEstimate {
                f_hat: f,
                guess_value: None,
                beta,
                witness: s,
                budget: None,
                info,
            }
        }
        Err(e) => return Err(e),
    };
    debug_assert!((product_free_energy(&pd, &result.witness, beta)? - result.f_hat).abs() < 1e-9);
    result.info.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}
