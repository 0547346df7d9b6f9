//! Threshold rank of weighted graphs, degree-weighted cut decompositions and
//! the Quantum Max-Cut estimator built on them.

use std::path::Path;
use std::time::Instant;

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cut::{cut_norm, inf_to_one, RefinementAtlas, MAX_ATLAS_SIDES};
use crate::decomposition::{pauli_decompose, product_energy, ColorTensor};
use crate::error::{Error, Result};
use crate::hamiltonian::{LocalHamiltonian, LocalTerm};
use crate::linalg::symmetric_eigen;
use crate::pauli::PauliString;
use crate::relax::{expand_witness, gs_direct_pd, round_to_pure, search_from, GuessModel, Objective, PieceSpec, SearchOptions};
use crate::rng::derive_seed;
use crate::state::ProductState;

/// Undirected weighted graph; JSON form `{"n": .., "edges": [[u, v, w], ..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let g = WeightedGraph { n, edges };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for &(u, v, w) in &self.edges {
            if u >= self.n || v >= self.n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) outside 0..{}", self.n)));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at {u}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) has weight {w}")));
            }
        }
        let deg = self.degrees();
        if let Some(&(u, v, _)) = self.edges.iter().find(|&&(u, v, _)| deg[u] == 0.0 || deg[v] == 0.0) {
            return Err(Error::InvalidInput(format!("edge ({u}, {v}) touches a vertex of zero degree")));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let g: WeightedGraph = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("graph serializes")
    }

    /// Symmetric weight matrix; parallel edges add up.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            j[(u, v)] += w;
            j[(v, u)] += w;
        }
        j
    }

    /// `d_u = Σ_v |J_uv|`.
    pub fn degrees(&self) -> Vec<f64> {
        let j = self.weight_matrix();
        (0..self.n).map(|u| j.row(u).iter().map(|x| x.abs()).sum()).collect()
    }

    /// `Σ_{u,v} |J_uv|` (each edge counted twice).
    pub fn l1_norm(&self) -> f64 {
        self.weight_matrix().iter().map(|x| x.abs()).sum()
    }

    /// Vertices with nonzero degree.
    pub fn active(&self) -> Vec<usize> {
        let d = self.degrees();
        (0..self.n).filter(|&u| d[u] > 0.0).collect()
    }

    /// `H = ½ Σ_e w_e (I − XX − YY − ZZ)`.
    pub fn qmc_hamiltonian(&self) -> Result<LocalHamiltonian> {
        self.heisenberg_terms(0.5)
    }

    fn heisenberg_terms(&self, sign: f64) -> Result<LocalHamiltonian> {
        let id = PauliString::from_colors(&[0, 0], 2).to_matrix();
        let swap_part = [1, 2, 3]
            .iter()
            .map(|&c| PauliString::from_colors(&[c, c], 2).to_matrix())
            .fold(id.clone() * crate::pauli::C64::new(0.0, 0.0), |a, b| a + b);
        let base = (id - swap_part) * crate::pauli::C64::new(sign, 0.0);
        let terms = self
            .edges
            .iter()
            .map(|&(u, v, w)| LocalTerm::new(vec![u, v], base.clone() * crate::pauli::C64::new(w, 0.0)))
            .collect();
        LocalHamiltonian::new(self.n, 2, 2, terms)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdProfile {
    /// Vertices kept (nonzero degree).
    pub active: Vec<usize>,
    /// Eigenvalues of `D^{-1/2} J D^{-1/2}` on the active vertices, ascending.
    pub eigenvalues: Vec<f64>,
    /// `(δ, t_δ)` with `t_δ = Σ_{|λ| ≥ δ} λ²`.
    pub thresholds: Vec<(f64, f64)>,
}

impl ThresholdProfile {
    pub fn rank(&self, delta: f64) -> f64 {
        threshold_sum(&self.eigenvalues, delta)
    }
}

fn threshold_sum(eigenvalues: &[f64], delta: f64) -> f64 {
    eigenvalues.iter().filter(|l| l.abs() >= delta).map(|l| l * l).sum()
}

fn abs_row_sums(j: &DMatrix<f64>) -> Vec<f64> {
    (0..j.nrows()).map(|u| j.row(u).iter().map(|x| x.abs()).sum()).collect()
}

/// Normalized weight matrix on the active vertices.
fn normalized(j: &DMatrix<f64>) -> (Vec<usize>, DMatrix<f64>) {
    let d = abs_row_sums(j);
    let active: Vec<usize> = (0..j.nrows()).filter(|&u| d[u] > 0.0).collect();
    let m = active.len();
    let jd = DMatrix::from_fn(m, m, |a, b| {
        let (u, v) = (active[a], active[b]);
        j[(u, v)] / (d[u] * d[v]).sqrt()
    });
    (active, jd)
}

pub fn threshold_profile(g: &WeightedGraph, deltas: &[f64]) -> Result<ThresholdProfile> {
    g.validate()?;
    if let Some(&d) = deltas.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::Parameter(format!("threshold must be non-negative, got {d}")));
    }
    let (active, jd) = normalized(&g.weight_matrix());
    let eigenvalues = if active.is_empty() { Vec::new() } else { symmetric_eigen(&jd).0 };
    let thresholds = deltas.iter().map(|&d| (d, threshold_sum(&eigenvalues, d))).collect();
    Ok(ThresholdProfile {
        active,
        eigenvalues,
        thresholds,
    })
}

pub fn threshold_rank(g: &WeightedGraph, delta: f64) -> Result<ThresholdProfile> {
    threshold_profile(g, &[delta])
}

/// One degree-weighted cut `coeff · d_S d_Tᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeCut {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub coeff: f64,
}

#[derive(Clone, Debug)]
pub struct ThresholdOptions {
    /// Width cap is `ceil(width_const · t / eps²)`.
    pub width_const: f64,
    /// Grid pitch is `delta_const · eps³ / t^{3/2} · |J|_1`.
    pub delta_const: f64,
    pub restarts: usize,
    pub search: SearchOptions,
    /// Inner radius of the feasibility search, relative to the pitch over
    /// the total degree.
    pub inner_const: f64,
    pub max_sides: usize,
    pub direct_fallback: bool,
    pub direct_restarts: usize,
    pub direct_iters: usize,
    pub seed_incumbent: bool,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            width_const: 1.0,
            delta_const: 1.0,
            restarts: 32,
            search: SearchOptions::default(),
            inner_const: 0.1,
            max_sides: MAX_ATLAS_SIDES,
            direct_fallback: true,
            direct_restarts: 16,
            direct_iters: 500,
            seed_incumbent: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdDecomposition {
    pub n: usize,
    pub eps: f64,
    /// `t_{eps/2}`.
    pub rank: f64,
    pub width_cap: usize,
    pub pieces: Vec<DegreeCut>,
    pub degrees: Vec<f64>,
    pub l1: f64,
    /// `‖J − Σ cuts‖_{∞→1}`: exact when `residual_exact`, else a rigorous
    /// upper bound with `residual_lower` witnessed.
    pub residual: f64,
    pub residual_lower: f64,
    pub residual_exact: bool,
    /// `eps · |J|_1`.
    pub target: f64,
    pub target_met: bool,
}

impl ThresholdDecomposition {
    pub fn approximation(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut a = DMatrix::zeros(n, n);
        for p in &self.pieces {
            for &u in &p.s {
                for &v in &p.t {
                    a[(u, v)] += p.coeff * self.degrees[u] * self.degrees[v];
                }
            }
        }
        a
    }
}

/// `(lower, upper, exact)` for `‖W‖_{∞→1}` of a square matrix.
fn matrix_inf_to_one(w: &DMatrix<f64>, restarts: usize, seed: u64) -> (f64, f64, bool) {
    let (lo, up, exact) = inf_to_one(&ColorTensor::from_matrix(w), restarts, seed);
    if exact {
        return (lo.value, up, true);
    }
    let entry_sum: f64 = w.iter().map(|x| x.abs()).sum();
    let spectral = w.nrows() as f64 * w.clone().singular_values().max();
    (lo.value, up.min(entry_sum).min(spectral), false)
}

/// Degree-weighted cut decomposition of the spectral truncation of `J`.
pub fn threshold_cut_decompose(g: &WeightedGraph, eps: f64, seed: u64, opts: &ThresholdOptions) -> Result<ThresholdDecomposition> {
    g.validate()?;
    decompose_weight_matrix(&g.weight_matrix(), eps, seed, opts)
}

/// As [`threshold_cut_decompose`] for any symmetric matrix (the diagonal
/// is allowed).
pub fn decompose_weight_matrix(j: &DMatrix<f64>, eps: f64, seed: u64, opts: &ThresholdOptions) -> Result<ThresholdDecomposition> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    if !j.is_square() || (j - j.transpose()).abs().max() > 1e-12 * (1.0 + j.abs().max()) {
        return Err(Error::InvalidInput("weight matrix must be square and symmetric".into()));
    }
    let n = j.nrows();
    let degrees = abs_row_sums(j);
    let l1: f64 = degrees.iter().sum();
    let (active, jd) = normalized(j);
    let (vals, vecs) = if active.is_empty() {
        (Vec::new(), DMatrix::zeros(0, 0))
    } else {
        symmetric_eigen(&jd)
    };
    let rank = threshold_sum(&vals, eps / 2.0);
    let mut proj = DMatrix::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        if l.abs() < eps / 2.0 {
            continue;
        }
        for (a, &u) in active.iter().enumerate() {
            for (b, &v) in active.iter().enumerate() {
                proj[(u, v)] += l * vecs[(a, i)] * vecs[(b, i)] * (degrees[u] * degrees[v]).sqrt();
            }
        }
    }
    let width_cap = (opts.width_const * rank / (eps * eps)).ceil() as usize;
    let target = eps * l1;
    let mut pieces: Vec<DegreeCut> = Vec::new();
    let mut residual = j.clone_owned();
    let measure = |r: &DMatrix<f64>, it: usize| matrix_inf_to_one(r, opts.restarts, derive_seed(seed, &[0, it as u64]));
    let (mut lower, mut upper, mut exact) = measure(&residual, 0);
    while upper > target && pieces.len() < width_cap {
        let (cut, _) = cut_norm(&proj, opts.restarts, derive_seed(seed, &[1, pieces.len() as u64]));
        if cut.value <= 1e-12 * l1.max(1e-300) {
            break;
        }
        let ds: f64 = cut.s.iter().map(|&u| degrees[u]).sum();
        let dt: f64 = cut.t.iter().map(|&u| degrees[u]).sum();
        let coeff = cut.signed / (ds * dt);
        for &u in &cut.s {
            for &v in &cut.t {
                let c = coeff * degrees[u] * degrees[v];
                proj[(u, v)] -= c;
                residual[(u, v)] -= c;
            }
        }
        pieces.push(DegreeCut {
            s: cut.s,
            t: cut.t,
            coeff,
        });
        (lower, upper, exact) = measure(&residual, pieces.len());
    }
    let target_met = upper <= target;
    if !target_met {
        warn!("degree-weighted decomposition stopped at residual {upper:.4} above target {target:.4}");
    }
    Ok(ThresholdDecomposition {
        n,
        eps,
        rank,
        width_cap,
        pieces,
        degrees,
        l1,
        residual: upper,
        residual_lower: lower,
        residual_exact: exact,
        target,
        target_met,
    })
}

/// Bound on `|estimate − best product value|`.
#[derive(Clone, Debug, Serialize)]
pub struct QmcBudget {
    /// `¾ ‖W‖_{∞→1}` of the decomposition residual (one bilinear form per
    /// Pauli color).
    pub regularity: f64,
    pub grid: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QmcEstimate {
    /// Estimate of the best product-state energy.
    pub value: f64,
    /// Energy of the rounded pure witness.
    pub witness_value: f64,
    pub witness: ProductState,
    pub budget: Option<QmcBudget>,
    pub decomposition: ThresholdDecomposition,
    /// `δ` and the grid pitch `δ |J|_1`.
    pub delta: f64,
    pub pitch: f64,
    pub coords: usize,
    pub nodes: u64,
    pub undecided: u64,
    pub direct_mode: bool,
    pub warnings: Vec<String>,
    pub seed: u64,
    pub wall_time_s: f64,
}

/// The guess model of the negated QMC energy: one shared cut structure for
/// the three Pauli colors, magnetizations weighted by degree.
pub fn qmc_model(g: &WeightedGraph, dec: &ThresholdDecomposition, pitch: f64, opts: &ThresholdOptions) -> Result<GuessModel> {
    let mut sides: Vec<Vec<usize>> = Vec::new();
    for p in &dec.pieces {
        sides.push(p.s.clone());
        sides.push(p.t.clone());
    }
    let atlas = RefinementAtlas::build(g.n, &sides, opts.max_sides)?;
    let atom_weights = atlas.members.iter().map(|m| m.iter().map(|&u| dec.degrees[u]).sum()).collect();
    let mut specs = Vec::new();
    for p in &dec.pieces {
        let s = atlas.side_index(&p.s).ok_or_else(|| Error::Internal("cut side missing from atlas".into()))?;
        let t = atlas.side_index(&p.t).ok_or_else(|| Error::Internal("cut side missing from atlas".into()))?;
        for c in 1..=3 {
            specs.push(PieceSpec {
                coeff: 0.25 * p.coeff,
                sides: vec![s, t],
                components: vec![c, c],
            });
        }
    }
    let reach = dec.l1.max(pitch);
    let grid_max = (reach / pitch).ceil() as i64 + 1;
    let inner = opts.inner_const * pitch / dec.l1.max(1e-300);
    GuessModel::new(2, atlas, dec.degrees.clone(), atom_weights, 0.0, &specs, -0.25 * dec.l1, pitch, grid_max, inner)
}

/// Product-state Quantum Max-Cut estimate. Requires non-negative weights.
pub fn qmc_estimate(g: &WeightedGraph, eps: f64, seed: u64, opts: &ThresholdOptions) -> Result<QmcEstimate> {
    let start = Instant::now();
    if let Some(&(u, v, w)) = g.edges.iter().find(|e| e.2 < 0.0) {
        return Err(Error::InvalidInput(format!("edge ({u}, {v}) has negative weight {w}")));
    }
    let dec = threshold_cut_decompose(g, eps, seed, opts)?;
    let h = g.qmc_hamiltonian()?;
    let pd = pauli_decompose(&h);
    let neg = pauli_decompose(&g.heisenberg_terms(-0.5)?);
    let mut warnings = Vec::new();
    if !dec.target_met {
        warnings.push(format!("decomposition residual {:.4} above target {:.4}", dec.residual, dec.target));
    }
    let delta = if dec.rank > 0.0 {
        opts.delta_const * eps.powi(3) / dec.rank.powf(1.5)
    } else {
        1.0
    };
    let pitch = if dec.l1 > 0.0 { delta * dec.l1 } else { 1.0 };
    let direct = |seed_tag: u64| gs_direct_pd(&neg, opts.direct_restarts, opts.direct_iters, derive_seed(seed, &[seed_tag]));
    let attempt = qmc_model(g, &dec, pitch, opts).and_then(|model| {
        let hint = opts
            .seed_incumbent
            .then(|| model.round_to_grid(&model.magnetizations(&direct(3).1)));
        let out = search_from(&model, Objective::Energy, &opts.search, hint.as_deref())?;
        Ok((model, out))
    });
    let mut est = match attempt {
        Ok((model, out)) => {
            if out.undecided > 0 {
                warnings.push(format!("{} partial guesses had undecided feasibility", out.undecided));
            }
            let expanded = expand_witness(&model.atlas, &out.witness, 2);
            let witness = round_to_pure(&expanded, &neg);
            let regularity = 0.75 * dec.residual;
            let grid = model.grid_term();
            QmcEstimate {
                value: -out.model_value,
                witness_value: product_energy(&pd, &witness)?,
                witness,
                budget: Some(QmcBudget {
                    regularity,
                    grid,
                    total: regularity + grid,
                }),
                delta,
                pitch,
                coords: model.num_coords(),
                nodes: out.nodes,
                undecided: out.undecided,
                decomposition: dec,
                direct_mode: false,
                warnings,
                seed,
                wall_time_s: 0.0,
            }
        }
        Err(e) if opts.direct_fallback && matches!(e, Error::EnumerationCap { .. } | Error::SizeLimit { .. }) => {
            let msg = format!("guess search skipped ({e}); direct mode");
            warn!("{msg}");
            warnings.push(msg);
            let (v, s) = direct(2);
            QmcEstimate {
                value: -v,
                witness_value: product_energy(&pd, &s)?,
                witness: s,
                budget: None,
                delta,
                pitch,
                coords: 0,
                nodes: 0,
                undecided: 0,
                decomposition: dec,
                direct_mode: true,
                warnings,
                seed,
                wall_time_s: 0.0,
            }
        }
        Err(e) => return Err(e),
    };
    est.wall_time_s = start.elapsed().as_secs_f64();
    Ok(est)
}
